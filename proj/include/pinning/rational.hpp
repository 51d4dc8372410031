#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pinning {

// Exact non-overflowing (checked) rational with 64-bit numerator and
// denominator. Used for distribution probabilities so that "sums to one"
// is an exact statement.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den);
  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  // Accepts "0.25", "1", "3/8", "-0.5". Decimal strings are converted exactly.
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator<(const Rational& o) const;
  bool operator<=(const Rational& o) const { return !(o < *this); }

  bool is_zero() const { return num_ == 0; }
  long double to_long_double() const {
    return static_cast<long double>(num_) / static_cast<long double>(den_);
  }
  double to_double() const { return static_cast<double>(to_long_double()); }
  std::string to_string() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace pinning
