#pragma once

// Exact rational arithmetic for checking compensated kernels.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>

#include "lsir/dword.hpp"

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

/// Every finite double is m * 2^e with integer m, so it converts exactly.
inline Rational exact(double v) {
  if (v == 0.0) return Rational(0);
  int e = 0;
  const double frac = std::frexp(v, &e);
  const auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
  Rational r(mant);
  const int shift = e - 53;
  boost::multiprecision::cpp_int p = 1;
  if (shift >= 0) {
    p <<= shift;
    return r * Rational(p);
  }
  p <<= -shift;
  return r / Rational(p);
}

inline Rational exact(const lsir::dword& v) { return exact(v.hi()) + exact(v.lo()); }

/// |a - b| / |b| as a double (b != 0).
inline double rel_diff(const Rational& a, const Rational& b) {
  const Rational d = (a - b) / b;
  return std::fabs(d.convert_to<double>());
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace oracle
