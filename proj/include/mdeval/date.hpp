#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace mdeval {

// Calendar date; ordering is chronological.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    // Strict `YYYY-MM-DD`; rejects impossible days (Feb 30 etc.).
    static std::optional<Date> parse(std::string_view text);

    [[nodiscard]] std::string iso() const;

    // Days since 1970-01-01.
    [[nodiscard]] long days_since_epoch() const;
    static Date from_days_since_epoch(long days);

    // Monday=0 .. Sunday=6.
    [[nodiscard]] int weekday() const;
};

}  // namespace mdeval
