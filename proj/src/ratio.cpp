#include "fabernet/ratio.hpp"

#include "fabernet/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace fabernet {

namespace {

Ratio reduced(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num <= 0)
        throw InvalidParameter("ratio must be positive");
    const std::int64_t g = std::gcd(num, den);
    return Ratio{num / g, den / g};
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw InvalidParameter("malformed number '" + std::string(s) + "'");
    return v;
}

} // namespace

Ratio Ratio::parse(std::string_view text) {
    if (text.empty())
        throw InvalidParameter("empty number");
    if (auto slash = text.find('/'); slash != std::string_view::npos)
        return reduced(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));

    const auto dot = text.find('.');
    if (dot == std::string_view::npos)
        return reduced(parse_int(text), 1);

    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 17)
        throw InvalidParameter("too many decimals in '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i)
        den *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    return reduced(w * den + f, den);
}

Ratio Ratio::from_double(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw InvalidParameter("ratio must be positive and finite");

    // Continued-fraction convergents; accept the first within 4 ulps.
    const double tol = 4.0 * (std::nextafter(value, std::numeric_limits<double>::infinity()) - value);
    long double x = value;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    for (int iter = 0; iter < 64; ++iter) {
        const long double a = std::floor(x);
        if (a > 1e15L)
            break;
        const auto ai = static_cast<std::int64_t>(a);
        const std::int64_t h2 = ai * h1 + h0;
        const std::int64_t k2 = ai * k1 + k0;
        if (k2 > 1'000'000'000)
            break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - value) <= tol)
            return reduced(h1, k1);
        const long double rem = x - a;
        if (rem == 0.0L)
            break;
        x = 1.0L / rem;
    }

    // Exact binary value m * 2^e.
    int exp = 0;
    const double mant = std::frexp(value, &exp);
    auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    while (exp < 0 && (m % 2) == 0) {
        m /= 2;
        ++exp;
    }
    if (exp >= 0)
        return reduced(m << exp, 1);
    if (-exp > 62)
        throw InvalidParameter("ratio not representable");
    return reduced(m, std::int64_t{1} << (-exp));
}

std::int64_t Ratio::floor_times(std::int64_t j) const {
    const __int128 p = static_cast<__int128>(num) * j;
    __int128 q = p / den;
    if (p % den != 0 && p < 0)
        --q;
    return static_cast<std::int64_t>(q);
}

std::string Ratio::str() const {
    if (den == 1)
        return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

} // namespace fabernet
