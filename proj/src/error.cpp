#include "mdeval/error.hpp"

namespace mdeval {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::ParseError: return "ParseError";
        case Errc::UnknownTicker: return "UnknownTicker";
        case Errc::DuplicateRecord: return "DuplicateRecord";
        case Errc::NonPositiveBasis: return "NonPositiveBasis";
        case Errc::EmptyDay: return "EmptyDay";
        case Errc::ExtractorUnavailable: return "ExtractorUnavailable";
        case Errc::MissingTranscript: return "MissingTranscript";
        case Errc::EmptyCandidates: return "EmptyCandidates";
        case Errc::KindMismatch: return "KindMismatch";
        case Errc::DateMismatch: return "DateMismatch";
        case Errc::BackendTimeout: return "BackendTimeout";
        case Errc::BackendFailure: return "BackendFailure";
        case Errc::EmptyCompletion: return "EmptyCompletion";
        case Errc::BudgetExceeded: return "BudgetExceeded";
        case Errc::UnparseableReply: return "UnparseableReply";
        case Errc::DateOutOfRange: return "DateOutOfRange";
        case Errc::DanglingDigestReference: return "DanglingDigestReference";
        case Errc::UnknownAnnotator: return "UnknownAnnotator";
        case Errc::UnknownTask: return "UnknownTask";
        case Errc::DuplicateSubmission: return "DuplicateSubmission";
        case Errc::InvalidDecision: return "InvalidDecision";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::InvalidRates: return "InvalidRates";
    }
    return "Unknown";
}

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::BackendTimeout:
        case Errc::BackendFailure:
        case Errc::EmptyCompletion:
        case Errc::ExtractorUnavailable:
        case Errc::UnparseableReply:
        case Errc::BudgetExceeded:
            return 2;
        case Errc::MissingFile:
        case Errc::ParseError:
        case Errc::UnknownTicker:
        case Errc::DuplicateRecord:
        case Errc::NonPositiveBasis:
        case Errc::EmptyDay:
        case Errc::MissingTranscript:
        case Errc::DateOutOfRange:
        case Errc::DanglingDigestReference:
            return 3;
        default:
            return 1;
    }
}

}  // namespace mdeval
