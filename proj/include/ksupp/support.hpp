#pragma once

// Finitely presented K-supports: a finite union of shifted, finitely generated
// weight monoids, each with a polynomial multiplicity rule in the generator
// exponents. This is the model of supp_K(pi) and m_K(.:pi) used throughout.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "ksupp/errors.hpp"
#include "ksupp/rational.hpp"
#include "ksupp/rootsys.hpp"

namespace ksupp {

struct Monomial {
  std::int64_t coef = 1;
  std::vector<int> exponents;  // one per generator; empty means all zero
};

/// Integer polynomial in the generator exponents n_1..n_g.
struct MultiplicityPolynomial {
  std::vector<Monomial> terms{{1, {}}};

  static MultiplicityPolynomial constant(std::int64_t c) { return {{{c, {}}}}; }

  std::int64_t operator()(const std::vector<std::int64_t>& n) const {
    std::int64_t total = 0;
    for (const auto& t : terms) {
      std::int64_t v = t.coef;
      for (std::size_t i = 0; i < t.exponents.size(); ++i)
        for (int p = 0; p < t.exponents[i]; ++p) v *= (i < n.size() ? n[i] : 0);
      total += v;
    }
    return total;
  }

  MultiplicityPolynomial scaled(std::int64_t c) const {
    auto out = *this;
    for (auto& t : out.terms) t.coef *= c;
    return out;
  }
};

struct SupportComponent {
  Weight base;
  std::vector<Weight> generators;
  MultiplicityPolynomial multiplicity;
};

struct SupportSpec {
  std::vector<SupportComponent> components;

  bool empty() const { return components.empty(); }
  bool finite() const {
    for (const auto& c : components)
      if (!c.generators.empty()) return false;
    return true;
  }
};

using SupportPoint = std::pair<Weight, std::int64_t>;

namespace detail {

inline double norm_sq(const RootSystem& rs, const RVec& v) { return to_double(inner_product(rs, v, v)); }

/// Linear functional that is positive on every generator (sum of normalized
/// generators); its existence certifies that the monoid is pointed, so the
/// enumeration below is finite.
inline std::vector<double> positive_functional(const RootSystem& rs, const SupportComponent& c) {
  std::vector<double> s(rs.rank(), 0.0);
  for (const auto& g : c.generators) {
    const double n = std::sqrt(norm_sq(rs, g.coords));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += to_double(g[i]) / n;
  }
  return s;
}

inline double pair_with(const RootSystem& rs, const std::vector<double>& s, const RVec& v) {
  double acc = 0;
  for (std::size_t i = 0; i < rs.rank(); ++i)
    for (std::size_t j = 0; j < rs.rank(); ++j) acc += to_double(v[i]) * to_double(rs.gram(i, j)) * s[j];
  return acc;
}

}  // namespace detail

/// Throws InvalidInput unless the spec is well formed for rs: dominant integral
/// bases and generators, nonzero generators, pointed generator cones and
/// nonnegative multiplicities on the sample grid.
inline void validate(const RootSystem& rs, const SupportSpec& spec) {
  for (std::size_t ci = 0; ci < spec.components.size(); ++ci) {
    const auto& c = spec.components[ci];
    const std::string where = "support component " + std::to_string(ci);
    auto check_weight = [&](const Weight& w, const std::string& what) {
      if (w.size() != rs.rank()) raise(ErrorKind::ShapeMismatch, where + ": " + what + " has wrong length");
      if (!is_dominant(rs, w)) raise(ErrorKind::NotDominant, where + ": " + what + " " + to_string(w) + " is not dominant");
      if (!is_integral(rs, w)) raise(ErrorKind::InvalidInput, where + ": " + what + " " + to_string(w) + " is not integral");
    };
    check_weight(c.base, "base");
    for (const auto& g : c.generators) {
      check_weight(g, "generator");
      if (is_zero(g.coords)) raise(ErrorKind::InvalidInput, where + ": zero generator");
    }
    for (const auto& t : c.multiplicity.terms)
      if (t.exponents.size() > c.generators.size())
        raise(ErrorKind::InvalidInput, where + ": multiplicity monomial has more exponents than generators");
    if (!c.generators.empty()) {
      auto s = detail::positive_functional(rs, c);
      for (const auto& g : c.generators)
        if (detail::pair_with(rs, s, g.coords) <= 1e-12)
          raise(ErrorKind::InvalidInput, where + ": generator cone is not pointed");
    }
    // Nonnegativity on the grid 0..8 per exponent (bounded to 4096 points).
    const std::size_t g = c.generators.size();
    const int side = g == 0 ? 1 : std::max(2, static_cast<int>(std::pow(4096.0, 1.0 / static_cast<double>(g))));
    std::vector<std::int64_t> n(g, 0);
    std::function<void(std::size_t)> walk = [&](std::size_t k) {
      if (k == g) {
        if (c.multiplicity(n) < 0) raise(ErrorKind::InvalidInput, where + ": multiplicity polynomial takes a negative value");
        return;
      }
      for (int v = 0; v < std::min(side, 9); ++v) {
        n[k] = v;
        walk(k + 1);
      }
      n[k] = 0;
    };
    walk(0);
  }
}

/// Every support point of norm <= radius with its multiplicity; collisions
/// (across components, or from dependent generators) add up. Points with
/// multiplicity zero are dropped. Sorted by coordinates.
inline std::vector<SupportPoint> members_up_to(const RootSystem& rs, const SupportSpec& spec, double radius) {
  std::map<Weight, std::int64_t> acc;
  const double r2 = radius * radius + 1e-9;
  for (const auto& c : spec.components) {
    const std::size_t g = c.generators.size();
    if (g == 0) {
      if (detail::norm_sq(rs, c.base.coords) <= r2) acc[c.base] += c.multiplicity({});
      continue;
    }
    auto s = detail::positive_functional(rs, c);
    double s_norm = 0;
    for (std::size_t i = 0; i < rs.rank(); ++i)
      for (std::size_t j = 0; j < rs.rank(); ++j) s_norm += s[i] * to_double(rs.gram(i, j)) * s[j];
    s_norm = std::sqrt(s_norm);
    const double bound = s_norm * radius + 1e-9;
    std::vector<double> step(g);
    for (std::size_t i = 0; i < g; ++i) step[i] = detail::pair_with(rs, s, c.generators[i].coords);

    std::vector<std::int64_t> n(g, 0);
    std::function<void(std::size_t, const RVec&, double)> walk = [&](std::size_t k, const RVec& point, double ell) {
      if (k == g) {
        if (detail::norm_sq(rs, point) <= r2) acc[Weight(point)] += c.multiplicity(n);
        return;
      }
      RVec p = point;
      double e = ell;
      for (std::int64_t v = 0; e <= bound; ++v) {
        n[k] = v;
        walk(k + 1, p, e);
        p = p + c.generators[k].coords;
        e += step[k];
      }
      n[k] = 0;
    };
    walk(0, c.base.coords, detail::pair_with(rs, s, c.base.coords));
  }
  std::vector<SupportPoint> out;
  for (auto& [w, m] : acc)
    if (m != 0) out.emplace_back(w, m);
  return out;
}

}  // namespace ksupp
