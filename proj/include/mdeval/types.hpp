#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mdeval {

enum class DigestKind { MorningBrief, ClosingBell };

enum class Pipeline { Journalist, PerformanceBased, ProfessionalInsight };

// Wire names: "morning" / "closing".
std::string_view to_string(DigestKind kind);
std::optional<DigestKind> parse_digest_kind(std::string_view text);

// Wire names: "journalist" / "performance-based" / "professional-insight".
std::string_view to_string(Pipeline pipeline);
std::optional<Pipeline> parse_pipeline(std::string_view text);

// Column headings: "Journalist" / "Performance-Based" / "Professional-Insight".
std::string_view display_name(Pipeline pipeline);

}  // namespace mdeval
