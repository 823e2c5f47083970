#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace r2write {

// Base of every error the library raises. kind() is the stable name written
// into per-item error records.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual std::string_view kind() const noexcept { return "Error"; }
};

#define R2WRITE_DEFINE_ERROR(Name, Base)                                          \
    class Name : public Base {                                                    \
    public:                                                                       \
        using Base::Base;                                                         \
        [[nodiscard]] std::string_view kind() const noexcept override { return #Name; } \
    };

R2WRITE_DEFINE_ERROR(UsageError, Error)
R2WRITE_DEFINE_ERROR(SchemaError, Error)
R2WRITE_DEFINE_ERROR(IoError, Error)
R2WRITE_DEFINE_ERROR(CheckpointMismatch, Error)

// backend
R2WRITE_DEFINE_ERROR(BackendError, Error)
R2WRITE_DEFINE_ERROR(AuthError, BackendError)
R2WRITE_DEFINE_ERROR(MalformedResponse, BackendError)
R2WRITE_DEFINE_ERROR(RequestRejected, BackendError)
R2WRITE_DEFINE_ERROR(ScriptExhausted, BackendError)
R2WRITE_DEFINE_ERROR(PromptMismatch, BackendError)
R2WRITE_DEFINE_ERROR(NoJsonFound, Error)
R2WRITE_DEFINE_ERROR(JsonSyntax, Error)

// Transient transport failure (429, 5xx, timeouts). Retried by Backend.
class TransientError : public BackendError {
public:
    TransientError(const std::string& what, int status = 0) : BackendError(what), status_(status) {}
    [[nodiscard]] std::string_view kind() const noexcept override { return "TransientError"; }
    [[nodiscard]] int status() const noexcept { return status_; }

private:
    int status_;
};

class ExhaustedRetries : public BackendError {
public:
    ExhaustedRetries(const std::string& last_error, int attempts)
        : BackendError("gave up after " + std::to_string(attempts) + " attempt(s): " + last_error),
          last_error_(last_error),
          attempts_(attempts) {}
    [[nodiscard]] std::string_view kind() const noexcept override { return "ExhaustedRetries"; }
    [[nodiscard]] const std::string& last_error() const noexcept { return last_error_; }
    [[nodiscard]] int attempts() const noexcept { return attempts_; }

private:
    std::string last_error_;
    int attempts_;
};

// rubric
R2WRITE_DEFINE_ERROR(MalformedRubrics, Error)
R2WRITE_DEFINE_ERROR(ScoreParseFailure, Error)

// synthesis
R2WRITE_DEFINE_ERROR(EmptyDraft, Error)
R2WRITE_DEFINE_ERROR(NoAcceptedTurns, Error)
R2WRITE_DEFINE_ERROR(JudgeFailure, Error)

// reward
R2WRITE_DEFINE_ERROR(VerdictParseFailure, Error)
R2WRITE_DEFINE_ERROR(ExtractionParseFailure, Error)
R2WRITE_DEFINE_ERROR(JudgmentParseFailure, Error)
R2WRITE_DEFINE_ERROR(CountMismatch, Error)
R2WRITE_DEFINE_ERROR(EmptyJudgments, Error)
R2WRITE_DEFINE_ERROR(SampleParseFailure, Error)

// patterns
R2WRITE_DEFINE_ERROR(PatternParseFailure, Error)
R2WRITE_DEFINE_ERROR(UnknownContribution, Error)
R2WRITE_DEFINE_ERROR(RevisionParseFailure, Error)

#undef R2WRITE_DEFINE_ERROR

}  // namespace r2write
