#include "mdeval/types.hpp"

namespace mdeval {

std::string_view to_string(DigestKind kind) { return kind == DigestKind::MorningBrief ? "morning" : "closing"; }

std::optional<DigestKind> parse_digest_kind(std::string_view text) {
    if (text == "morning") return DigestKind::MorningBrief;
    if (text == "closing") return DigestKind::ClosingBell;
    return std::nullopt;
}

std::string_view to_string(Pipeline pipeline) {
    switch (pipeline) {
        case Pipeline::Journalist: return "journalist";
        case Pipeline::PerformanceBased: return "performance-based";
        case Pipeline::ProfessionalInsight: return "professional-insight";
    }
    return "";
}

std::optional<Pipeline> parse_pipeline(std::string_view text) {
    if (text == "journalist") return Pipeline::Journalist;
    if (text == "performance-based") return Pipeline::PerformanceBased;
    if (text == "professional-insight") return Pipeline::ProfessionalInsight;
    return std::nullopt;
}

std::string_view display_name(Pipeline pipeline) {
    switch (pipeline) {
        case Pipeline::Journalist: return "Journalist";
        case Pipeline::PerformanceBased: return "Performance-Based";
        case Pipeline::ProfessionalInsight: return "Professional-Insight";
    }
    return "";
}

}  // namespace mdeval
