#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "ksupp/errors.hpp"

// Under C++20 rewritten comparisons, boost 1.74's mixed `rational == int`
// template picks its own reversed form and recurses forever. Exact-match
// overloads keep int comparisons on the member operator.
namespace boost {
inline bool operator==(const rational<std::int64_t>& a, std::int64_t b) {
  return a.denominator() == 1 && a.numerator() == b;
}
inline bool operator==(std::int64_t b, const rational<std::int64_t>& a) { return a == b; }
inline bool operator==(const rational<std::int64_t>& a, int b) { return a == static_cast<std::int64_t>(b); }
inline bool operator==(int b, const rational<std::int64_t>& a) { return a == static_cast<std::int64_t>(b); }
inline bool operator!=(const rational<std::int64_t>& a, std::int64_t b) { return !(a == b); }
inline bool operator!=(std::int64_t b, const rational<std::int64_t>& a) { return !(a == b); }
inline bool operator!=(const rational<std::int64_t>& a, int b) { return !(a == b); }
inline bool operator!=(int b, const rational<std::int64_t>& a) { return !(a == b); }
}  // namespace boost

namespace ksupp {

using Rational = boost::rational<std::int64_t>;
using RVec = std::vector<Rational>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline bool is_integer(const Rational& r) { return r.denominator() == 1; }

/// "p/q", or "p" when q == 1.
inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    if (s.empty()) raise(ErrorKind::InvalidInput, "empty integer in rational '" + std::string(text) + "'");
    std::size_t pos = 0;
    std::int64_t value = 0;
    try {
      value = std::stoll(std::string(s), &pos);
    } catch (const std::exception&) {
      raise(ErrorKind::InvalidInput, "not a rational: '" + std::string(text) + "'");
    }
    if (pos != s.size()) raise(ErrorKind::InvalidInput, "not a rational: '" + std::string(text) + "'");
    return value;
  };
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0) raise(ErrorKind::InvalidInput, "zero denominator in '" + std::string(text) + "'");
  return Rational(parse_int(text.substr(0, slash)), den);
}

inline Rational dot(const RVec& a, const RVec& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline RVec operator+(RVec a, const RVec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline RVec operator-(RVec a, const RVec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline RVec operator*(const Rational& s, RVec a) {
  for (auto& x : a) x *= s;
  return a;
}

inline bool is_zero(const RVec& v) {
  for (const auto& x : v)
    if (x != 0) return false;
  return true;
}

/// Dense row-major rational matrix.
struct RMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Rational> data;

  RMat() = default;
  RMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Rational(0)) {}

  static RMat identity(std::size_t n) {
    RMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  Rational& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  RVec row(std::size_t i) const { return RVec(data.begin() + i * cols, data.begin() + (i + 1) * cols); }
  RVec col(std::size_t j) const {
    RVec c(rows);
    for (std::size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }

  RMat transpose() const {
    RMat t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool operator==(const RMat&) const = default;
  bool operator<(const RMat& o) const {
    if (rows != o.rows) return rows < o.rows;
    if (cols != o.cols) return cols < o.cols;
    return data < o.data;
  }
};

inline RVec operator*(const RMat& m, const RVec& v) {
  if (m.cols != v.size()) raise(ErrorKind::ShapeMismatch, "matrix/vector shape mismatch");
  RVec out(m.rows, Rational(0));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      if (m(i, j) != 0) out[i] += m(i, j) * v[j];
  return out;
}

inline RMat operator*(const RMat& a, const RMat& b) {
  if (a.cols != b.rows) raise(ErrorKind::ShapeMismatch, "matrix/matrix shape mismatch");
  RMat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += a(i, k) * b(k, j);
    }
  return out;
}

/// Rank and a basis of the null space {x : m x = 0}, by exact Gauss-Jordan.
inline std::vector<RVec> null_space(RMat m) {
  std::vector<std::size_t> pivot_cols;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
    std::size_t p = r;
    while (p < m.rows && m(p, c) == 0) ++p;
    if (p == m.rows) continue;
    for (std::size_t j = 0; j < m.cols; ++j) std::swap(m(p, j), m(r, j));
    Rational inv = Rational(1) / m(r, c);
    for (std::size_t j = 0; j < m.cols; ++j) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (i == r || m(i, c) == 0) continue;
      Rational f = m(i, c);
      for (std::size_t j = 0; j < m.cols; ++j) m(i, j) -= f * m(r, j);
    }
    pivot_cols.push_back(c);
    ++r;
  }
  std::vector<RVec> basis;
  std::vector<bool> is_pivot(m.cols, false);
  for (auto c : pivot_cols) is_pivot[c] = true;
  for (std::size_t free = 0; free < m.cols; ++free) {
    if (is_pivot[free]) continue;
    RVec v(m.cols, Rational(0));
    v[free] = 1;
    for (std::size_t k = 0; k < pivot_cols.size(); ++k) v[pivot_cols[k]] = -m(k, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

inline std::size_t rank(const RMat& m) { return m.cols - null_space(m).size(); }

}  // namespace ksupp
