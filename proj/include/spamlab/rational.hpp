#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spamlab {

/// Exact non-negative-denominator fraction, always stored in lowest terms.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        normalize();
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Fixed-point decimal, rounded half away from zero.
    std::string to_decimal(int places) const;

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }

private:
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline std::string Rational::to_decimal(int places) const {
    std::int64_t scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const bool negative = num_ < 0;
    const __int128 magnitude = negative ? -static_cast<__int128>(num_) : num_;
    const __int128 scaled = (magnitude * scale * 2 + den_) / (2 * static_cast<__int128>(den_));
    const auto whole = static_cast<std::int64_t>(scaled / scale);
    const auto frac = static_cast<std::int64_t>(scaled % scale);
    std::string out = (negative && scaled != 0 ? "-" : "") + std::to_string(whole);
    if (places > 0) {
        std::string digits = std::to_string(frac);
        out += '.' + std::string(static_cast<std::size_t>(places) - digits.size(), '0') + digits;
    }
    return out;
}

}  // namespace spamlab
