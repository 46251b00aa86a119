#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace streamsim {

/// Exact rational over int64, normalized (den > 0, gcd(num, den) = 1).
/// Used wherever the model calls for exact arithmetic: throughput
/// requirements, implied workloads and the truncated time debts. All
/// intermediates go through __int128 and overflow past int64 throws, but the
/// quantities in this codebase keep denominators dividing the lcm of a few
/// configured decimals, so reduced values stay small.
class Ratio {
 public:
  constexpr Ratio() = default;
  constexpr Ratio(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design
  Ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::invalid_argument("Ratio: zero denominator");
    *this = make(num, den);
  }

  /// Accepts "7", "-3/16" and exact decimals like "0.1875".
  static Ratio parse(std::string_view text);

  /// Nearest rational with the given denominator; used only where an
  /// estimated (inexact) quantity has to enter exact-debt arithmetic.
  static Ratio from_double(double x, std::int64_t denominator = 1 << 20);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  bool is_zero() const { return num_ == 0; }
  bool positive() const { return num_ > 0; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  /// "3/8", or just "3" when integral.
  std::string str() const {
    std::string s = std::to_string(num_);
    if (den_ != 1) s += "/" + std::to_string(den_);
    return s;
  }

  friend Ratio operator+(const Ratio& a, const Ratio& b) {
    return make(W(a.num_) * b.den_ + W(b.num_) * a.den_, W(a.den_) * b.den_);
  }
  friend Ratio operator-(const Ratio& a, const Ratio& b) {
    return make(W(a.num_) * b.den_ - W(b.num_) * a.den_, W(a.den_) * b.den_);
  }
  friend Ratio operator*(const Ratio& a, const Ratio& b) {
    return make(W(a.num_) * b.num_, W(a.den_) * b.den_);
  }
  friend Ratio operator/(const Ratio& a, const Ratio& b) {
    if (b.num_ == 0) throw std::domain_error("Ratio: division by zero");
    return make(W(a.num_) * b.den_, W(a.den_) * b.num_);
  }
  Ratio& operator+=(const Ratio& o) { return *this = *this + o; }
  Ratio& operator-=(const Ratio& o) { return *this = *this - o; }
  Ratio& operator*=(const Ratio& o) { return *this = *this * o; }
  Ratio& operator/=(const Ratio& o) { return *this = *this / o; }
  Ratio operator-() const {
    Ratio r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Ratio& a, const Ratio& b) { return !(a == b); }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return W(a.num_) * b.den_ < W(b.num_) * a.den_;
  }
  friend bool operator>(const Ratio& a, const Ratio& b) { return b < a; }
  friend bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }
  friend bool operator>=(const Ratio& a, const Ratio& b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, const Ratio& r) {
    return os << r.str();
  }

 private:
  using W = __int128;

  static Ratio make(W num, W den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    W g = gcd128(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    constexpr W kMax = std::numeric_limits<std::int64_t>::max();
    constexpr W kMin = std::numeric_limits<std::int64_t>::min();
    if (num > kMax || num < kMin || den > kMax) {
      throw std::overflow_error("Ratio: value exceeds 64-bit range");
    }
    Ratio r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  static W gcd128(W a, W b) {
    while (b != 0) {
      W t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Ratio Ratio::parse(std::string_view text) {
  auto fail = [&] {
    throw std::invalid_argument("Ratio: cannot parse '" + std::string(text) + "'");
  };
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  auto digits = [&](std::int64_t& out, int* count = nullptr) {
    int n = 0;
    out = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (out > (std::numeric_limits<std::int64_t>::max() - 9) / 10) fail();
      out = out * 10 + (text[pos] - '0');
      ++pos;
      ++n;
    }
    if (count) *count = n;
    return n;
  };
  std::int64_t whole = 0;
  if (digits(whole) == 0) fail();
  if (pos == text.size()) return negative ? Ratio(-whole) : Ratio(whole);
  if (text[pos] == '/') {
    ++pos;
    std::int64_t den = 0;
    if (digits(den) == 0 || pos != text.size() || den == 0) fail();
    return Ratio(negative ? -whole : whole, den);
  }
  if (text[pos] != '.') fail();
  ++pos;
  std::int64_t frac = 0;
  int frac_digits = 0;
  digits(frac, &frac_digits);
  if (pos != text.size() || frac_digits > 18) fail();
  std::int64_t scale = 1;
  for (int i = 0; i < frac_digits; ++i) scale *= 10;
  Ratio r = Ratio(whole) + Ratio(frac, scale);
  return negative ? -r : r;
}

inline Ratio Ratio::from_double(double x, std::int64_t denominator) {
  if (!(x == x) || x > 9.0e18 || x < -9.0e18) {
    throw std::invalid_argument("Ratio::from_double: value not finite");
  }
  double scaled = x * static_cast<double>(denominator);
  auto num = static_cast<std::int64_t>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
  return Ratio(num, denominator);
}

}  // namespace streamsim
