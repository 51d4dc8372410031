#include "pinning/rational.hpp"

#include <cctype>
#include <limits>
#include <numeric>

#include "pinning/error.hpp"

namespace pinning {

namespace {

using i128 = __int128;

Rational from_wide(i128 num, i128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();
  if (num > kMax || num < -kMax || den > kMax) {
    fail(ErrorCode::InvalidArgument, "rational arithmetic overflow");
  }
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  if (s.empty()) fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(whole) + "'");
  i128 v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(whole) + "'");
    }
    v = v * 10 + (c - '0');
    if (v > std::numeric_limits<std::int64_t>::max()) {
      fail(ErrorCode::InvalidArgument, "number out of range '" + std::string(whole) + "'");
    }
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) fail(ErrorCode::InvalidArgument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

Rational Rational::parse(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::int64_t n = parse_int(s.substr(0, slash), text);
    std::int64_t d = parse_int(s.substr(slash + 1), text);
    return Rational(negative ? -n : n, d);
  }
  auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (int_part.empty() && frac_part.empty()) {
    fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(text) + "'");
  }
  if (frac_part.size() > 18) {
    fail(ErrorCode::InvalidArgument, "too many decimal digits in '" + std::string(text) + "'");
  }
  i128 whole = int_part.empty() ? 0 : parse_int(int_part, text);
  i128 frac = frac_part.empty() ? 0 : parse_int(frac_part, text);
  i128 scale = 1;
  for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
  i128 num = whole * scale + frac;
  return from_wide(negative ? -num : num, scale);
}

Rational Rational::operator+(const Rational& o) const {
  return from_wide(static_cast<i128>(num_) * o.den_ + static_cast<i128>(o.num_) * den_,
                   static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return from_wide(static_cast<i128>(num_) * o.den_ - static_cast<i128>(o.num_) * den_,
                   static_cast<i128>(den_) * o.den_);
}

bool Rational::operator<(const Rational& o) const {
  return static_cast<i128>(num_) * o.den_ < static_cast<i128>(o.num_) * den_;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Divergent: return "divergent";
    case ErrorCode::BudgetExceeded: return "budget exceeded";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Unsupported: return "unsupported input";
    case ErrorCode::Io: return "i/o failure";
    case ErrorCode::Config: return "invalid configuration";
  }
  return "unknown";
}

}  // namespace pinning
