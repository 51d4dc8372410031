#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "pinning/error.hpp"

namespace pinning {

/// Integer extended by a distinguished minus-infinity element.
///
/// Obstacle strengths live in Z ∪ {−∞}. The infinite element is a separate
/// state, never an encoded large negative number, so it cannot leak into
/// integer arithmetic: adding a finite offset keeps it infinite, and
/// `value()` refuses to return it.
class ExtInt {
 public:
  constexpr ExtInt() = default;
  constexpr ExtInt(std::int64_t v) : value_(v) {}  // NOLINT(implicit)

  static constexpr ExtInt minus_infinity() {
    ExtInt e;
    e.finite_ = false;
    return e;
  }

  constexpr bool is_finite() const { return finite_; }
  constexpr bool is_minus_infinity() const { return !finite_; }

  std::int64_t value() const {
    if (!finite_) fail(ErrorCode::Unsupported, "ExtInt: value() of minus infinity");
    return value_;
  }

  constexpr ExtInt operator+(std::int64_t d) const {
    return finite_ ? ExtInt(value_ + d) : *this;
  }
  constexpr ExtInt operator-(std::int64_t d) const {
    return finite_ ? ExtInt(value_ - d) : *this;
  }

  constexpr bool operator==(const ExtInt& o) const {
    return finite_ == o.finite_ && (!finite_ || value_ == o.value_);
  }
  constexpr std::strong_ordering operator<=>(const ExtInt& o) const {
    if (!finite_ || !o.finite_) {
      return static_cast<int>(finite_) <=> static_cast<int>(o.finite_);
    }
    return value_ <=> o.value_;
  }

  std::string to_string() const {
    return finite_ ? std::to_string(value_) : std::string("minus_inf");
  }

 private:
  std::int64_t value_ = 0;
  bool finite_ = true;
};

/// Floor division rounding toward −∞ (C++ `/` truncates toward zero).
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace pinning
