#pragma once

#include <cmath>
#include <compare>
#include <stdexcept>
#include <string>

namespace qprobe {

/// Spin magnitudes and magnetic labels stored as twice their value, so that
/// N odd (half-integer labels) never goes through floating point.
class HalfInteger {
public:
    constexpr HalfInteger() = default;

    static constexpr HalfInteger from_twice(int twice) { return HalfInteger(twice); }
    static constexpr HalfInteger from_int(int value) { return HalfInteger(2 * value); }

    /// Accepts only exact multiples of 1/2.
    static HalfInteger from_double(double value) {
        const double twice = 2.0 * value;
        const double rounded = std::round(twice);
        if (!std::isfinite(value) || std::abs(twice - rounded) > 1e-12)
            throw std::invalid_argument("not a half-integer: " + std::to_string(value));
        return HalfInteger(static_cast<int>(rounded));
    }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }

    constexpr HalfInteger operator-() const { return HalfInteger(-twice_); }
    constexpr HalfInteger operator+(HalfInteger o) const { return HalfInteger(twice_ + o.twice_); }
    constexpr HalfInteger operator-(HalfInteger o) const { return HalfInteger(twice_ - o.twice_); }
    constexpr HalfInteger operator+(int k) const { return HalfInteger(twice_ + 2 * k); }
    constexpr HalfInteger operator-(int k) const { return HalfInteger(twice_ - 2 * k); }

    constexpr auto operator<=>(const HalfInteger&) const = default;

    std::string to_string() const {
        if (is_integer()) return std::to_string(twice_ / 2);
        return std::to_string(twice_) + "/2";
    }

private:
    constexpr explicit HalfInteger(int twice) : twice_(twice) {}
    int twice_ = 0;
};

}  // namespace qprobe
