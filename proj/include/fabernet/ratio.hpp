#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fabernet {

/// Positive rational number used for exact floor(beta * j) evaluation.
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    /// Parses "2", "2.3", "7/3". Throws InvalidParameter on malformed or non-positive input.
    static Ratio parse(std::string_view text);

    /// Recovers the short fraction a double was most likely written as (2.3 -> 23/10).
    /// Falls back to the exact binary value when no fraction with a small denominator
    /// lies within a few ulps.
    static Ratio from_double(double value);

    double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    /// floor(num * j / den), exact.
    std::int64_t floor_times(std::int64_t j) const;

    std::string str() const;

    friend bool operator==(const Ratio& a, const Ratio& b) = default;
};

} // namespace fabernet
