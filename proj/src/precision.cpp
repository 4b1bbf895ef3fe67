#include "lsir/precision.hpp"

#include <stdexcept>
#include <vector>

namespace lsir {

double unit_roundoff(Format f) {
  switch (f) {
    case Format::binary32: return unit_roundoff_v<float>;
    case Format::binary64: return unit_roundoff_v<double>;
    case Format::dword: return unit_roundoff_v<dword>;
  }
  throw ConfigError("unknown floating-point format");
}

std::string_view format_name(Format f) {
  switch (f) {
    case Format::binary32: return "single";
    case Format::binary64: return "double";
    case Format::dword: return "dword";
  }
  throw ConfigError("unknown floating-point format");
}

Format parse_format(std::string_view s) {
  if (s == "single" || s == "binary32" || s == "fp32") return Format::binary32;
  if (s == "double" || s == "binary64" || s == "fp64") return Format::binary64;
  if (s == "dword" || s == "quad" || s == "extended") return Format::dword;
  throw ConfigError("unknown precision '" + std::string(s) + "'");
}

bool PrecisionPair::valid() const {
  return working != Format::dword && u_r() <= u();
}

std::string PrecisionPair::label() const {
  return std::string(format_name(residual)) + "," + std::string(format_name(working));
}

PrecisionPair PrecisionPair::parse(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos)
    throw ConfigError("precision pair must be 'residual,working', got '" + std::string(s) + "'");
  PrecisionPair p{parse_format(s.substr(comma + 1)), parse_format(s.substr(0, comma))};
  if (!p.valid()) throw ConfigError("invalid precision pair '" + std::string(s) + "'");
  return p;
}

namespace {

// One cascaded TwoSum sweep: the running sum moves to the last slot and the
// rounding errors stay behind, so the exact total is unchanged.
void vec_sum(std::span<double> p) {
  for (std::size_t i = 1; i < p.size(); ++i) {
    const auto t = two_sum(p[i], p[i - 1]);
    p[i] = t.hi;
    p[i - 1] = t.lo;
  }
}

}  // namespace

dword accurate_sum(std::span<double> terms) {
  const std::size_t n = terms.size();
  if (n == 0) return dword(0.0);
  if (n == 1) return dword(terms[0]);
  for (int k = 0; k < 3; ++k) vec_sum(terms);
  const double hi = terms[n - 1];
  auto tail = terms.first(n - 1);
  for (int k = 0; k < 3; ++k) vec_sum(tail);
  double rest = 0.0;
  for (std::size_t i = 0; i + 1 < tail.size(); ++i) rest += tail[i];
  const double lo = tail.back() + rest;
  const auto s = two_sum(hi, lo);
  return dword::normalized(s.hi, s.lo);
}

dword compensated_dot(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "compensated_dot: length mismatch");
  std::vector<double> terms;
  terms.reserve(2 * a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto p = two_prod(a[k], b[k]);
    terms.push_back(p.hi);
    terms.push_back(p.lo);
  }
  return accurate_sum(terms);
}

Vector<dword> accurate_residual(const Matrix<double>& A, std::span<const dword> x,
                                std::span<const dword> b, std::span<const dword> s) {
  require_dims(A.cols() == x.size() && A.rows() == b.size(), "accurate_residual: dimension mismatch");
  require_dims(s.empty() || s.size() == b.size(), "accurate_residual: dimension mismatch");
  const std::size_t m = A.rows(), n = A.cols();
  Vector<dword> r(m);
  std::vector<double> terms;
  terms.reserve(4 * n + 4);
  for (std::size_t i = 0; i < m; ++i) {
    terms.clear();
    terms.push_back(b[i].hi());
    terms.push_back(b[i].lo());
    if (!s.empty()) {
      terms.push_back(-s[i].hi());
      terms.push_back(-s[i].lo());
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double a = -A(i, j);
      const auto p1 = two_prod(a, x[j].hi());
      const auto p2 = two_prod(a, x[j].lo());
      terms.insert(terms.end(), {p1.hi, p1.lo, p2.hi, p2.lo});
    }
    r[i] = accurate_sum(terms);
  }
  return r;
}

Vector<dword> accurate_matvec_t(const Matrix<double>& A, std::span<const dword> v) {
  require_dims(A.rows() == v.size(), "accurate_matvec_t: dimension mismatch");
  const std::size_t m = A.rows(), n = A.cols();
  Vector<dword> y(n);
  std::vector<double> terms;
  terms.reserve(4 * m);
  for (std::size_t j = 0; j < n; ++j) {
    terms.clear();
    auto a = A.col(j);
    for (std::size_t i = 0; i < m; ++i) {
      const auto p1 = two_prod(a[i], v[i].hi());
      const auto p2 = two_prod(a[i], v[i].lo());
      terms.insert(terms.end(), {p1.hi, p1.lo, p2.hi, p2.lo});
    }
    y[j] = accurate_sum(terms);
  }
  return y;
}

}  // namespace lsir
