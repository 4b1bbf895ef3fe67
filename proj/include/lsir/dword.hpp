#pragma once

// Double-word ("double-double") arithmetic built from error-free
// transformations. The represented value is the unevaluated sum hi + lo with
// |lo| <= ulp(hi)/2. Relative accuracy of the basic operations is a small
// multiple of 2^-106.
//
// Requires strict IEEE binary64 evaluation: no -ffast-math, no FMA
// contraction (the build passes -ffp-contract=off).

#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

#if defined(__FAST_MATH__)
#error "double-word arithmetic is incompatible with -ffast-math"
#endif

namespace lsir {

struct TwoTerm {
  double hi;
  double lo;
};

/// Knuth's branch-free TwoSum: hi + lo == a + b exactly.
constexpr TwoTerm two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double e = (a - (s - bb)) + (b - bb);
  return {s, e};
}

/// Dekker's Fast2Sum, exact when |a| >= |b| (or a == 0).
constexpr TwoTerm fast_two_sum(double a, double b) {
  const double s = a + b;
  const double e = b - (s - a);
  return {s, e};
}

/// Veltkamp split of a into two 26-bit halves.
constexpr TwoTerm split(double a) {
  constexpr double kSplitter = 134217729.0;  // 2^27 + 1
  const double c = kSplitter * a;
  const double hi = c - (c - a);
  return {hi, a - hi};
}

/// Dekker's TwoProd without FMA: hi + lo == a * b exactly (barring
/// overflow/underflow).
constexpr TwoTerm two_prod(double a, double b) {
  const double p = a * b;
  const auto [ah, al] = split(a);
  const auto [bh, bl] = split(b);
  const double e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
  return {p, e};
}

class dword {
 public:
  constexpr dword() = default;
  constexpr dword(double x) : hi_(x), lo_(0.0) {}  // NOLINT: implicit widening
  constexpr dword(float x) : hi_(x), lo_(0.0) {}   // NOLINT
  constexpr dword(int x) : hi_(x), lo_(0.0) {}     // NOLINT

  /// Caller guarantees hi + lo is normalized.
  static constexpr dword from_parts(double hi, double lo) {
    dword d;
    d.hi_ = hi;
    d.lo_ = lo;
    return d;
  }
  static constexpr dword normalized(double hi, double lo) {
    const auto t = fast_two_sum(hi, lo);
    return from_parts(t.hi, t.lo);
  }

  constexpr double hi() const { return hi_; }
  constexpr double lo() const { return lo_; }

  explicit constexpr operator double() const { return hi_; }
  explicit operator float() const;

  friend constexpr dword operator-(dword x) { return from_parts(-x.hi_, -x.lo_); }

  // AccurateDWPlusDW (Joldes, Muller & Popescu 2017).
  friend constexpr dword operator+(dword x, dword y) {
    const auto s = two_sum(x.hi_, y.hi_);
    const auto t = two_sum(x.lo_, y.lo_);
    const double c = s.lo + t.hi;
    const auto v = fast_two_sum(s.hi, c);
    const double w = t.lo + v.lo;
    const auto z = fast_two_sum(v.hi, w);
    return from_parts(z.hi, z.lo);
  }
  friend constexpr dword operator-(dword x, dword y) { return x + (-y); }

  // DWTimesDW without FMA; the lo*lo term is below the error bound.
  friend constexpr dword operator*(dword x, dword y) {
    const auto c = two_prod(x.hi_, y.hi_);
    const double tl1 = x.hi_ * y.lo_;
    const double tl2 = x.lo_ * y.hi_;
    const double cl3 = c.lo + (tl1 + tl2);
    const auto z = fast_two_sum(c.hi, cl3);
    return from_parts(z.hi, z.lo);
  }

  // DWDivDW2.
  friend constexpr dword operator/(dword x, dword y) {
    const double th = x.hi_ / y.hi_;
    const dword r = y * dword(th);
    const auto pi = two_sum(x.hi_, -r.hi_);
    const double dh = pi.lo - r.lo_;
    const double dl = dh + x.lo_;
    const double d = pi.hi + dl;
    const double tl = d / y.hi_;
    const auto z = fast_two_sum(th, tl);
    return from_parts(z.hi, z.lo);
  }

  constexpr dword& operator+=(dword y) { return *this = *this + y; }
  constexpr dword& operator-=(dword y) { return *this = *this - y; }
  constexpr dword& operator*=(dword y) { return *this = *this * y; }
  constexpr dword& operator/=(dword y) { return *this = *this / y; }

  friend constexpr bool operator==(dword x, dword y) {
    return x.hi_ == y.hi_ && x.lo_ == y.lo_;
  }
  friend constexpr std::partial_ordering operator<=>(dword x, dword y) {
    if (auto c = x.hi_ <=> y.hi_; c != 0) return c;
    return x.lo_ <=> y.lo_;
  }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

inline dword abs(dword x) { return x.hi() < 0.0 || (x.hi() == 0.0 && x.lo() < 0.0) ? -x : x; }

inline dword sqrt(dword x) {
  if (x.hi() <= 0.0) return dword(std::sqrt(x.hi()));
  const double s = std::sqrt(x.hi());
  const auto p = two_prod(s, s);
  const double r = ((x.hi() - p.hi) - p.lo + x.lo()) / (2.0 * s);
  return dword::normalized(s, r);
}

inline bool isfinite(dword x) { return std::isfinite(x.hi()) && std::isfinite(x.lo()); }

inline dword::operator float() const {
  // Correctly rounded hi + lo -> binary32. hi - f is exact (f is hi rounded
  // to 24 bits); (d, e) = TwoSum(hi - f, lo) is the exact remainder, so a
  // tie on d is broken by the sign of e.
  const float f = static_cast<float>(hi_);
  if (!std::isfinite(f) || lo_ == 0.0) return f;
  const auto t = two_sum(hi_ - static_cast<double>(f), lo_);
  if (t.hi == 0.0) return f;
  const bool up = t.hi > 0.0;
  const float toward = std::nextafter(f, up ? std::numeric_limits<float>::infinity()
                                            : -std::numeric_limits<float>::infinity());
  const double half_gap = 0.5 * std::fabs(static_cast<double>(toward) - static_cast<double>(f));
  const double d = std::fabs(t.hi);
  if (d > half_gap) return toward;
  if (d < half_gap) return f;
  const double beyond = up ? t.lo : -t.lo;  // > 0 pushes past the midpoint
  if (beyond > 0.0) return toward;
  if (beyond < 0.0) return f;
  return (std::bit_cast<std::uint32_t>(f) & 1u) ? toward : f;
}

}  // namespace lsir

template <>
class std::numeric_limits<lsir::dword> {
 public:
  static constexpr bool is_specialized = true;
  static constexpr int digits = 106;
  static constexpr lsir::dword epsilon() { return lsir::dword(0x1p-104); }
  static constexpr lsir::dword min() { return lsir::dword(0x1p-969); }
  static constexpr lsir::dword max() { return lsir::dword(std::numeric_limits<double>::max()); }
  static constexpr lsir::dword infinity() { return lsir::dword(std::numeric_limits<double>::infinity()); }
  static constexpr lsir::dword quiet_NaN() { return lsir::dword(std::numeric_limits<double>::quiet_NaN()); }
};
