#pragma once

// Finite-dimensional representations: Weyl dimensions, Casimir eigenvalues,
// Freudenthal weight multiplicities, characters on the maximal torus, and
// branching to a subgroup given by its torus restriction matrix.

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "ksupp/errors.hpp"
#include "ksupp/rational.hpp"
#include "ksupp/rootsys.hpp"
#include "ksupp/support.hpp"

namespace ksupp {

/// Highest weight of an irreducible representation.
class IrrepLabel {
 public:
  IrrepLabel(const RootSystem& rs, Weight highest_weight) : weight_(std::move(highest_weight)) {
    check_shape(rs, weight_);
    if (!is_dominant(rs, weight_)) raise(ErrorKind::NotDominant, to_string(weight_) + " is not dominant");
    if (!is_integral(rs, weight_)) raise(ErrorKind::InvalidInput, to_string(weight_) + " is not a lattice weight");
  }

  const Weight& weight() const { return weight_; }

 private:
  Weight weight_;
};

using WeightMultiset = std::map<Weight, std::int64_t>;
using BranchResult = std::map<Weight, std::int64_t>;

inline constexpr std::uint64_t kDefaultDimensionCap = 1'000'000;

namespace detail {

inline void require_dominant(const RootSystem& rs, const Weight& lambda) {
  check_shape(rs, lambda);
  if (!is_dominant(rs, lambda)) raise(ErrorKind::NotDominant, to_string(lambda) + " is not dominant");
}

}  // namespace detail

/// Weyl dimension formula prod_{alpha>0} <lambda+rho, alpha> / <rho, alpha>.
inline std::uint64_t dimension(const RootSystem& rs, const Weight& lambda) {
  detail::require_dominant(rs, lambda);
  using boost::multiprecision::cpp_int;
  cpp_int num = 1, den = 1;
  const auto shifted = lambda.coords + rs.rho;
  for (const auto& a : rs.positive_roots) {
    Rational p = inner_product(rs, shifted, a);
    Rational q = inner_product(rs, rs.rho, a);
    num *= cpp_int(p.numerator()) * cpp_int(q.denominator());
    den *= cpp_int(p.denominator()) * cpp_int(q.numerator());
  }
  if (num % den != 0) raise(ErrorKind::InvalidInput, "non-integral Weyl dimension for " + to_string(lambda));
  cpp_int d = num / den;
  if (d > std::numeric_limits<std::uint64_t>::max()) raise(ErrorKind::DimensionCapExceeded, "dimension overflows 64 bits");
  return d.convert_to<std::uint64_t>();
}

/// |lambda + rho|^2 - |rho|^2.
inline Rational casimir_eigenvalue(const RootSystem& rs, const Weight& lambda) {
  detail::require_dominant(rs, lambda);
  const auto shifted = lambda.coords + rs.rho;
  return inner_product(rs, shifted, shifted) - inner_product(rs, rs.rho, rs.rho);
}

namespace detail {

using IVec = std::vector<std::int64_t>;

/// Integer model of the semisimple part: Dynkin labels and the gram matrix
/// scaled by the lcm of its denominators.
struct IntegerRoots {
  std::size_t r = 0;
  std::int64_t scale = 1;
  std::vector<IVec> gram;
  std::vector<IVec> simple;
  std::vector<IVec> positive;

  explicit IntegerRoots(const RootSystem& rs) : r(rs.semisimple_rank()) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        scale = std::lcm(scale, rs.gram(rs.simple_coord[i], rs.simple_coord[j]).denominator());
    gram.assign(r, IVec(r, 0));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        Rational g = rs.gram(rs.simple_coord[i], rs.simple_coord[j]) * scale;
        gram[i][j] = g.numerator();
      }
    auto restrict = [&](const RVec& v) {
      IVec out(r);
      for (std::size_t i = 0; i < r; ++i) out[i] = v[rs.simple_coord[i]].numerator();
      return out;
    };
    for (const auto& a : rs.simple_roots) simple.push_back(restrict(a));
    for (const auto& a : rs.positive_roots) positive.push_back(restrict(a));
  }

  std::int64_t ip(const IVec& a, const IVec& b) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < r; ++i) {
      if (a[i] == 0) continue;
      for (std::size_t j = 0; j < r; ++j) s += a[i] * gram[i][j] * b[j];
    }
    return s;
  }

  IVec reflect(std::size_t i, IVec v) const {
    const auto k = v[i];
    if (k != 0)
      for (std::size_t j = 0; j < r; ++j) v[j] -= k * simple[i][j];
    return v;
  }

  IVec dominant(IVec v) const {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < r; ++i)
        if (v[i] < 0) {
          v = reflect(i, std::move(v));
          changed = true;
          break;
        }
    }
    return v;
  }
};

inline IVec add(IVec a, const IVec& b, std::int64_t k = 1) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += k * b[i];
  return a;
}

}  // namespace detail

/// Multiplicities of all weights of the irreducible representation with highest
/// weight lambda (Freudenthal's recursion on dominant weights, extended by Weyl
/// orbits).
inline WeightMultiset weight_multiplicities(const RootSystem& rs, const Weight& lambda,
                                            std::uint64_t cap = kDefaultDimensionCap) {
  detail::require_dominant(rs, lambda);
  if (!is_integral(rs, lambda)) raise(ErrorKind::InvalidInput, to_string(lambda) + " is not a lattice weight");
  const auto dim = dimension(rs, lambda);
  if (dim > cap)
    raise(ErrorKind::DimensionCapExceeded,
          "dimension " + std::to_string(dim) + " of " + to_string(lambda) + " exceeds cap " + std::to_string(cap));

  using detail::IVec;
  const detail::IntegerRoots ir(rs);
  IVec top(ir.r);
  for (std::size_t i = 0; i < ir.r; ++i) top[i] = lambda[rs.simple_coord[i]].numerator();
  const IVec rho(ir.r, 1);

  // Dominant weights below lambda: every one is reachable by subtracting
  // positive roots while staying dominant (Stembridge).
  std::vector<IVec> dominant{top};
  std::set<IVec> seen{top};
  for (std::size_t head = 0; head < dominant.size(); ++head)
    for (const auto& a : ir.positive) {
      IVec mu = detail::add(dominant[head], a, -1);
      bool dom = true;
      for (auto x : mu) dom = dom && x >= 0;
      if (dom && seen.insert(mu).second) dominant.push_back(mu);
    }
  std::sort(dominant.begin(), dominant.end(),
            [&](const IVec& a, const IVec& b) { return ir.ip(a, rho) > ir.ip(b, rho); });

  std::map<IVec, std::int64_t> mult;
  const auto top_shift = detail::add(top, rho);
  const auto top_norm = ir.ip(top_shift, top_shift);
  for (const auto& mu : dominant) {
    if (mu == top) {
      mult[mu] = 1;
      continue;
    }
    std::int64_t num = 0;
    for (const auto& a : ir.positive) {
      for (std::int64_t k = 1;; ++k) {
        IVec nu = detail::add(mu, a, k);
        auto it = mult.find(ir.dominant(nu));
        if (it == mult.end()) break;
        num += it->second * ir.ip(nu, a);
      }
    }
    num *= 2;
    const auto mu_shift = detail::add(mu, rho);
    const auto den = top_norm - ir.ip(mu_shift, mu_shift);
    if (den <= 0 || num % den != 0)
      raise(ErrorKind::InvalidInput, "Freudenthal recursion failed at a weight of " + to_string(lambda));
    if (num != 0) mult[mu] = num / den;
  }

  WeightMultiset out;
  for (const auto& [mu, m] : mult) {
    Weight w = lambda;
    for (std::size_t i = 0; i < ir.r; ++i) w[rs.simple_coord[i]] = mu[i];
    for (auto& v : weyl_orbit(rs, w)) out.emplace(std::move(v), m);
  }
  return out;
}

/// sum_mu m(mu) exp(i <mu, t>) with the gram pairing; t is an angle vector in
/// weight coordinates. For SU(2), t = theta gives chi_omega = 2 cos(theta/2).
inline std::complex<double> character_eval(const RootSystem& rs, const WeightMultiset& weights,
                                           std::span<const double> t) {
  if (t.size() != rs.rank()) raise(ErrorKind::ShapeMismatch, "torus point has wrong length");
  std::vector<double> gt(rs.rank(), 0.0);
  for (std::size_t i = 0; i < rs.rank(); ++i)
    for (std::size_t j = 0; j < rs.rank(); ++j) gt[i] += to_double(rs.gram(i, j)) * t[j];
  std::complex<double> acc = 0;
  for (const auto& [mu, m] : weights) {
    double phase = 0;
    for (std::size_t i = 0; i < rs.rank(); ++i) phase += to_double(mu[i]) * gt[i];
    acc += static_cast<double>(m) * std::polar(1.0, phase);
  }
  return acc;
}

inline std::complex<double> character_eval(const RootSystem& rs, const Weight& lambda, std::span<const double> t) {
  return character_eval(rs, weight_multiplicities(rs, lambda), t);
}

/// Restriction of weights from K to a subgroup M whose maximal torus sits in
/// K's: a rational matrix from K weight coordinates to M weight coordinates.
struct TorusEmbedding {
  RMat matrix;  // rank(M) x rank(K)
  GroupDescriptor k;
  GroupDescriptor m;
};

inline Weight restriction_map(const TorusEmbedding& emb, const Weight& mu_k) {
  if (mu_k.size() != emb.matrix.cols)
    raise(ErrorKind::ShapeMismatch, "weight of length " + std::to_string(mu_k.size()) + " vs embedding with " +
                                        std::to_string(emb.matrix.cols) + " columns");
  return Weight(emb.matrix * mu_k.coords);
}

/// Checks the TorusEmbedding invariants against the two root systems.
inline void validate(const TorusEmbedding& emb, const RootSystem& rs_k, const RootSystem& rs_m) {
  if (emb.matrix.rows != rs_m.rank() || emb.matrix.cols != rs_k.rank())
    raise(ErrorKind::ShapeMismatch, "restriction matrix must be rank(M) x rank(K)");
  if (rank(emb.matrix) != rs_m.rank()) raise(ErrorKind::InvalidInput, "restriction matrix must have full rank rank(M)");
  // Lattice compatibility: fundamental weights of K restrict to M-lattice
  // points on M's semisimple coordinates.
  for (std::size_t j = 0; j < rs_k.rank(); ++j) {
    if (!rs_k.is_semisimple_coord(j)) continue;
    for (auto c : rs_m.simple_coord)
      if (!is_integer(emb.matrix(c, j)))
        raise(ErrorKind::InvalidInput, "restriction matrix does not map the K lattice into the M lattice");
  }
}

enum class TieBreak { LexLargest, LexSmallest };

/// Branching multiplicities of lambda|M: restrict the weight multiset through
/// the embedding, then repeatedly peel off the character of a maximal
/// remaining weight (by <., rho_M>, ties broken lexicographically).
inline BranchResult branch(const RootSystem& rs_k, const RootSystem& rs_m, const TorusEmbedding& emb,
                           const Weight& lambda, TieBreak tie = TieBreak::LexLargest,
                           std::uint64_t cap = kDefaultDimensionCap) {
  const auto weights = weight_multiplicities(rs_k, lambda, cap);

  struct Key {
    Rational height;
    Weight w;
  };
  auto less = [tie](const Key& a, const Key& b) {
    if (a.height != b.height) return a.height < b.height;
    return tie == TieBreak::LexLargest ? a.w < b.w : b.w < a.w;
  };
  std::map<Key, std::int64_t, decltype(less)> remaining(less);
  auto key_of = [&](const Weight& w) { return Key{inner_product(rs_m, w.coords, rs_m.rho), w}; };
  for (const auto& [mu, m] : weights) remaining[key_of(restriction_map(emb, mu))] += m;

  std::map<Weight, WeightMultiset> memo;
  BranchResult result;
  while (!remaining.empty()) {
    auto top = std::prev(remaining.end());
    if (top->second == 0) {
      remaining.erase(top);
      continue;
    }
    const Weight mu = top->first.w;
    const std::int64_t c = top->second;
    if (c < 0 || !is_dominant(rs_m, mu) || !is_integral(rs_m, mu))
      raise(ErrorKind::NotDominantRemainder,
            "maximal remaining weight " + to_string(mu) + " (multiplicity " + std::to_string(c) +
                ") is not an M highest weight; check the restriction matrix");
    result[mu] += c;
    auto it = memo.find(mu);
    if (it == memo.end()) it = memo.emplace(mu, weight_multiplicities(rs_m, mu, cap)).first;
    for (const auto& [nu, m] : it->second) {
      auto k = key_of(nu);
      auto pos = remaining.find(k);
      if (pos == remaining.end())
        remaining.emplace(std::move(k), -c * m);
      else if ((pos->second -= c * m) == 0)
        remaining.erase(pos);
    }
  }
  return result;
}

struct FrobeniusValue {
  std::int64_t multiplicity = 0;
  bool truncated = false;  // some lambda in the outer band (R - band, R] contributed
};

/// sum over lambda in supp_K(pi), |lambda| <= R, of m_K(lambda:pi) m_M(mu:lambda|M).
inline FrobeniusValue frobenius_multiplicity(const RootSystem& rs_k, const RootSystem& rs_m, const TorusEmbedding& emb,
                                             const SupportSpec& spec, const Weight& mu, double radius, double band) {
  if (radius <= 0) raise(ErrorKind::InvalidInput, "radius must be positive");
  FrobeniusValue out;
  for (const auto& [lambda, m] : members_up_to(rs_k, spec, radius)) {
    const auto b = branch(rs_k, rs_m, emb, lambda);
    auto it = b.find(mu);
    if (it == b.end()) continue;
    out.multiplicity += m * it->second;
    if (norm(rs_k, lambda) > radius - band) out.truncated = true;
  }
  return out;
}

}  // namespace ksupp
