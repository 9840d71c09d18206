#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdeval {

enum class Errc {
    MissingFile,
    ParseError,
    UnknownTicker,
    DuplicateRecord,
    NonPositiveBasis,
    EmptyDay,
    ExtractorUnavailable,
    MissingTranscript,
    EmptyCandidates,
    KindMismatch,
    DateMismatch,
    BackendTimeout,
    BackendFailure,
    EmptyCompletion,
    BudgetExceeded,
    UnparseableReply,
    DateOutOfRange,
    DanglingDigestReference,
    UnknownAnnotator,
    UnknownTask,
    DuplicateSubmission,
    InvalidDecision,
    InvalidConfig,
    InvalidRates,
};

std::string_view errc_name(Errc code);

// Process exit code for an error category: 1 validation, 2 backend, 3 data.
int exit_code_for(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), message_(message) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }
    // Message without the category prefix.
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    Errc code_;
    std::string message_;
};

}  // namespace mdeval
