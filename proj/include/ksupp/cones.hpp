#pragma once

// Closed cones in the dual Cartan subalgebra, in weight coordinates with the
// gram-induced angular metric. Two representations:
//   Exact   - a union of convex cones, each given by rational generators;
//   Sampled - a point cloud of unit directions with an angular tolerance.
// Directions of Ad*(K)-saturated sets are never convex in general, so those
// are always Sampled and disjointness is certified against a margin.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ksupp/errors.hpp"
#include "ksupp/lie.hpp"
#include "ksupp/rational.hpp"
#include "ksupp/repr.hpp"
#include "ksupp/rootsys.hpp"
#include "ksupp/support.hpp"

namespace ksupp {

/// Gram matrix plus its Cholesky factor U (gram = U^T U); U v are orthonormal
/// coordinates of v.
struct Metric {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd upper;

  Metric() = default;
  explicit Metric(const Eigen::MatrixXd& g) : gram(g) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) raise(ErrorKind::InvalidInput, "gram matrix is not positive definite");
    upper = llt.matrixU();
  }
  explicit Metric(const RootSystem& rs) : Metric(to_eigen(rs.gram)) {}

  Eigen::Index dim() const { return gram.rows(); }
  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return a.dot(gram * b); }
  double norm(const Eigen::VectorXd& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }
  Eigen::VectorXd orthonormal(const Eigen::VectorXd& v) const { return upper * v; }
  Eigen::VectorXd from_orthonormal(const Eigen::VectorXd& u) const {
    return upper.triangularView<Eigen::Upper>().solve(u);
  }
  Eigen::VectorXd normalized(const Eigen::VectorXd& v) const { return v / norm(v); }
  double angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const double c = inner(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
  }
};

struct ExactCone {
  std::vector<std::vector<RVec>> components;  // union of convex cones
};

struct SampledCone {
  std::vector<Eigen::VectorXd> directions;  // unit vectors (gram norm) in weight coordinates
  double tolerance = 5e-3;
  std::size_t sample_count = 0;
  std::optional<std::uint64_t> seed;
  std::vector<Eigen::VectorXd> dropped;  // directions lost in a projection (report only)
};

struct Cone {
  Metric metric;
  std::variant<ExactCone, SampledCone> body;

  bool is_exact() const { return std::holds_alternative<ExactCone>(body); }
  const ExactCone& exact() const { return std::get<ExactCone>(body); }
  const SampledCone& sampled() const { return std::get<SampledCone>(body); }
  ExactCone& exact() { return std::get<ExactCone>(body); }
  SampledCone& sampled() { return std::get<SampledCone>(body); }

  bool empty() const {
    if (is_exact()) return exact().components.empty();
    return sampled().directions.empty();
  }
};

inline Cone make_exact(const Metric& metric, std::vector<std::vector<RVec>> components) {
  ExactCone e;
  for (auto& c : components) {
    std::vector<RVec> gens;
    for (auto& g : c) {
      if (is_zero(g)) raise(ErrorKind::InvalidInput, "exact cone generators must be nonzero");
      gens.push_back(std::move(g));
    }
    if (!gens.empty()) e.components.push_back(std::move(gens));
  }
  return {metric, std::move(e)};
}

inline Cone make_sampled(const Metric& metric, std::vector<Eigen::VectorXd> directions, double tolerance,
                         std::size_t sample_count = 0, std::optional<std::uint64_t> seed = std::nullopt) {
  if (!(tolerance > 0 && tolerance < M_PI / 4)) raise(ErrorKind::InvalidInput, "sampled tolerance must lie in (0, pi/4)");
  SampledCone s;
  s.tolerance = tolerance;
  s.sample_count = sample_count;
  s.seed = seed;
  for (auto& d : directions) s.directions.push_back(metric.normalized(d));
  return {metric, std::move(s)};
}

namespace detail {

/// Greedy angular deduplication with a hash grid on orthonormal coordinates:
/// keeps a direction iff no kept direction lies within `resolution`.
class DirectionGrid {
 public:
  DirectionGrid(const Metric& metric, double resolution) : metric_(metric), res_(resolution) {}

  /// Nearest stored direction within `radius` (radius <= resolution), if any.
  std::optional<std::size_t> near(const Eigen::VectorXd& unit_weight_coords, double radius) const {
    const Eigen::VectorXd u = metric_.orthonormal(unit_weight_coords);
    const auto base = cell_of(u);
    const auto d = static_cast<std::size_t>(u.size());
    std::vector<long> offs(d, -1);
    const double cos_r = std::cos(radius);
    for (;;) {
      std::vector<long> c = base;
      for (std::size_t i = 0; i < d; ++i) c[i] += offs[i];
      auto it = cells_.find(key(c));
      if (it != cells_.end())
        for (auto idx : it->second)
          if (u.dot(ortho_[idx]) >= cos_r) return idx;
      std::size_t i = 0;
      while (i < d && offs[i] == 1) offs[i++] = -1;
      if (i == d) break;
      ++offs[i];
    }
    return std::nullopt;
  }

  std::size_t insert(const Eigen::VectorXd& unit_weight_coords) {
    const Eigen::VectorXd u = metric_.orthonormal(unit_weight_coords);
    ortho_.push_back(u);
    items_.push_back(unit_weight_coords);
    cells_[key(cell_of(u))].push_back(items_.size() - 1);
    return items_.size() - 1;
  }

  const std::vector<Eigen::VectorXd>& items() const { return items_; }

 private:
  std::vector<long> cell_of(const Eigen::VectorXd& u) const {
    std::vector<long> c(static_cast<std::size_t>(u.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) c[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(u(i) / res_));
    return c;
  }
  static std::uint64_t key(const std::vector<long>& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (long x : c) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 1099511628211ull;
    }
    return h;
  }

  const Metric& metric_;
  double res_;
  std::vector<Eigen::VectorXd> ortho_;
  std::vector<Eigen::VectorXd> items_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

inline std::vector<Eigen::VectorXd> dedup(const Metric& metric, const std::vector<Eigen::VectorXd>& unit_dirs,
                                          double resolution) {
  DirectionGrid grid(metric, resolution);
  for (const auto& d : unit_dirs)
    if (!grid.near(d, resolution)) grid.insert(d);
  return grid.items();
}

/// Euclidean projection of u onto the convex cone spanned by the columns of
/// gens (orthonormal coordinates), by enumerating faces.
inline Eigen::VectorXd project_onto_cone(const Eigen::MatrixXd& gens, const Eigen::VectorXd& u) {
  const auto g = static_cast<int>(gens.cols());
  const auto dim = gens.rows();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(dim);
  double best_res = u.squaredNorm();
  for (std::uint32_t mask = 1; mask < (1u << g); ++mask) {
    std::vector<int> cols;
    for (int i = 0; i < g; ++i)
      if (mask & (1u << i)) cols.push_back(i);
    if (static_cast<Eigen::Index>(cols.size()) > dim) continue;
    Eigen::MatrixXd a(dim, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = gens.col(cols[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < static_cast<Eigen::Index>(cols.size())) continue;
    const Eigen::VectorXd coef = qr.solve(u);
    if ((coef.array() < -1e-12).any()) continue;
    const Eigen::VectorXd p = a * coef;
    const double res = (u - p).squaredNorm();
    if (res < best_res - 1e-15) {
      best_res = res;
      best = p;
    }
  }
  return best;
}

inline Eigen::MatrixXd orthonormal_generators(const Metric& metric, const std::vector<RVec>& gens) {
  Eigen::MatrixXd m(metric.dim(), static_cast<Eigen::Index>(gens.size()));
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const Eigen::VectorXd u = metric.orthonormal(to_eigen(gens[i]));
    m.col(static_cast<Eigen::Index>(i)) = u / u.norm();
  }
  return m;
}

/// Angle between a direction (orthonormal coordinates, unit) and a convex cone.
inline double angle_to_convex(const Eigen::MatrixXd& gens, const Eigen::VectorXd& u) {
  const Eigen::VectorXd p = project_onto_cone(gens, u);
  const double pn = p.norm();
  if (pn < 1e-14) {
    double best = -1;
    for (Eigen::Index i = 0; i < gens.cols(); ++i) best = std::max(best, u.dot(gens.col(i)));
    return std::max(M_PI / 2, std::acos(std::clamp(best, -1.0, 1.0)));
  }
  return std::atan2((u - p).norm(), pn);
}

/// Minimal angle between two convex cones: alternating projections started at
/// every generator (and the barycentres), which converge to a closest pair.
inline std::pair<double, std::pair<Eigen::VectorXd, Eigen::VectorXd>> convex_cone_gap(const Eigen::MatrixXd& a,
                                                                                     const Eigen::MatrixXd& b) {
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd wa, wb;
  std::vector<Eigen::VectorXd> starts;
  for (Eigen::Index i = 0; i < a.cols(); ++i) starts.push_back(a.col(i));
  starts.push_back(a.rowwise().sum().normalized());
  for (Eigen::Index i = 0; i < b.cols(); ++i) {
    Eigen::VectorXd p = project_onto_cone(a, b.col(i));
    if (p.norm() > 1e-14) starts.push_back(p.normalized());
  }
  for (auto x : starts) {
    for (int it = 0; it < 2000; ++it) {
      Eigen::VectorXd y = project_onto_cone(b, x);
      if (y.norm() < 1e-14) {
        const double ang = angle_to_convex(b, x);
        if (ang < best) best = ang, wa = x, wb = b.col(0);
        break;
      }
      y.normalize();
      const double ang = std::acos(std::clamp(x.dot(y), -1.0, 1.0));
      if (ang < best) best = ang, wa = x, wb = y;
      Eigen::VectorXd nx = project_onto_cone(a, y);
      if (nx.norm() < 1e-14) break;
      nx.normalize();
      if ((nx - x).norm() < 1e-13) break;
      x = nx;
    }
  }
  return {best, {wa, wb}};
}

}  // namespace detail

/// Angle from a direction (weight coordinates) to a cone; +inf for an empty cone.
inline double angle_to_cone(const Cone& c, const Eigen::VectorXd& direction) {
  double best = std::numeric_limits<double>::infinity();
  if (c.is_exact()) {
    const Eigen::VectorXd u = c.metric.orthonormal(direction).normalized();
    for (const auto& comp : c.exact().components)
      best = std::min(best, detail::angle_to_convex(detail::orthonormal_generators(c.metric, comp), u));
  } else {
    for (const auto& d : c.sampled().directions) best = std::min(best, c.metric.angle(direction, d));
  }
  return best;
}

/// Membership: exact cones test angle ~ 0, sampled cones test the tolerance.
inline bool contains(const Cone& c, const Eigen::VectorXd& direction, double slack = 1e-9) {
  const double a = angle_to_cone(c, direction);
  return c.is_exact() ? a <= slack : a <= c.sampled().tolerance + slack;
}

/// All directions of a cone usable for pairwise angle tests: sampled points,
/// or exact generators.
inline std::vector<Eigen::VectorXd> representative_directions(const Cone& c) {
  if (!c.is_exact()) return c.sampled().directions;
  std::vector<Eigen::VectorXd> out;
  for (const auto& comp : c.exact().components)
    for (const auto& g : comp) out.push_back(c.metric.normalized(to_eigen(g)));
  return out;
}

struct Disjoint {
  double min_angle = 0;
};
struct Intersecting {
  double min_angle = 0;
  Eigen::VectorXd witness_first;
  Eigen::VectorXd witness_second;
};
using DisjointnessVerdict = std::variant<Disjoint, Intersecting>;

struct ConeGap {
  double min_angle = std::numeric_limits<double>::infinity();
  Eigen::VectorXd first, second;
};

/// Minimal angle between two cones with an achieving pair (inf if either is empty).
inline ConeGap cone_gap(const Cone& c1, const Cone& c2) {
  ConeGap gap;
  if (c1.empty() || c2.empty()) return gap;
  if (c1.is_exact() && c2.is_exact()) {
    for (const auto& a : c1.exact().components)
      for (const auto& b : c2.exact().components) {
        auto [ang, pair] = detail::convex_cone_gap(detail::orthonormal_generators(c1.metric, a),
                                                   detail::orthonormal_generators(c2.metric, b));
        if (ang < gap.min_angle) {
          gap.min_angle = ang;
          gap.first = c1.metric.from_orthonormal(pair.first);
          gap.second = c1.metric.from_orthonormal(pair.second);
        }
      }
    return gap;
  }
  // One side sampled: scan its directions against the other cone.
  const bool first_sampled = !c1.is_exact();
  const Cone& s = first_sampled ? c1 : c2;
  const Cone& o = first_sampled ? c2 : c1;
  for (const auto& d : s.sampled().directions) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd partner;
    if (o.is_exact()) {
      best = angle_to_cone(o, d);
      const Eigen::VectorXd u = o.metric.orthonormal(d).normalized();
      Eigen::VectorXd p = Eigen::VectorXd::Zero(u.size());
      for (const auto& comp : o.exact().components) {
        Eigen::VectorXd q = detail::project_onto_cone(detail::orthonormal_generators(o.metric, comp), u);
        if (q.norm() > p.norm() || p.norm() == 0) p = q;
      }
      partner = p.norm() > 0 ? o.metric.from_orthonormal(p.normalized()) : o.metric.normalized(to_eigen(o.exact().components[0][0]));
    } else {
      for (const auto& e : o.sampled().directions) {
        const double a = s.metric.angle(d, e);
        if (a < best) best = a, partner = e;
      }
    }
    if (best < gap.min_angle) {
      gap.min_angle = best;
      gap.first = first_sampled ? d : partner;
      gap.second = first_sampled ? partner : d;
    }
  }
  return gap;
}

inline double max_sampled_tolerance(const Cone& c1, const Cone& c2) {
  double t = 0;
  if (!c1.is_exact()) t = std::max(t, c1.sampled().tolerance);
  if (!c2.is_exact()) t = std::max(t, c2.sampled().tolerance);
  return t;
}

/// Disjoint iff the minimal angle between the cones exceeds the margin.
inline DisjointnessVerdict cones_disjoint(const Cone& c1, const Cone& c2, double margin) {
  if (margin <= max_sampled_tolerance(c1, c2))
    raise(ErrorKind::MarginTooSmall, "margin " + std::to_string(margin) + " must exceed the sampled tolerance " +
                                         std::to_string(max_sampled_tolerance(c1, c2)));
  const auto gap = cone_gap(c1, c2);
  if (gap.min_angle > margin) return Disjoint{gap.min_angle};
  return Intersecting{gap.min_angle, gap.first, gap.second};
}

/// Image of a cone under a linear map (target coordinates, target metric).
/// Exact generators mapping to zero are dropped; sampled directions whose
/// image norm falls below the tolerance are dropped and reported.
inline Cone project_cone(const Cone& c, const RMat& map, const Metric& target) {
  if (map.cols != static_cast<std::size_t>(c.metric.dim()) || map.rows != static_cast<std::size_t>(target.dim()))
    raise(ErrorKind::ShapeMismatch, "projection map shape does not match the cone and target");
  if (c.is_exact()) {
    std::vector<std::vector<RVec>> comps;
    for (const auto& comp : c.exact().components) {
      std::vector<RVec> img;
      for (const auto& g : comp) {
        RVec v = map * g;
        if (!is_zero(v)) img.push_back(std::move(v));
      }
      if (!img.empty()) comps.push_back(std::move(img));
    }
    return make_exact(target, std::move(comps));
  }
  const Eigen::MatrixXd m = to_eigen(map);
  const auto& s = c.sampled();
  std::vector<Eigen::VectorXd> kept;
  SampledCone out;
  out.tolerance = s.tolerance;
  out.sample_count = s.sample_count;
  out.seed = s.seed;
  for (const auto& d : s.directions) {
    Eigen::VectorXd v = m * d;
    if (target.norm(v) < s.tolerance)
      out.dropped.push_back(d);
    else
      kept.push_back(target.normalized(v));
  }
  out.directions = detail::dedup(target, kept, s.tolerance);
  return {target, std::move(out)};
}

/// S-infinity of a finitely presented support: the union over components of
/// the convex cones spanned by the generators.
inline Cone asymptotic_cone(const RootSystem& rs, const SupportSpec& spec) {
  std::vector<std::vector<RVec>> comps;
  for (const auto& c : spec.components) {
    if (c.generators.empty()) continue;
    std::vector<RVec> gens;
    for (const auto& g : c.generators) gens.push_back(g.coords);
    std::sort(gens.begin(), gens.end());
    if (std::find(comps.begin(), comps.end(), gens) == comps.end()) comps.push_back(std::move(gens));
  }
  return make_exact(Metric(rs), std::move(comps));
}

/// Independent S-infinity estimate from lattice points: a direction d is kept
/// iff its conic neighbourhood of half-angle `opening` holds at least
/// `threshold` points of norm > R/2. Candidates are the far points' own
/// directions, thinned at resolution opening/2.
inline Cone asymptotic_cone_bruteforce(const RootSystem& rs, const std::vector<Weight>& points, double radius,
                                       double opening, std::size_t threshold) {
  const Metric metric(rs);
  if (points.size() <= threshold)
    raise(ErrorKind::InsufficientData, std::to_string(points.size()) + " points do not exceed threshold " +
                                           std::to_string(threshold));
  std::vector<Eigen::VectorXd> far;
  for (const auto& p : points) {
    const Eigen::VectorXd v = to_eigen(p.coords);
    const double n = metric.norm(v);
    if (n > radius / 2 && n <= radius + 1e-9) far.push_back(v / n);
  }
  detail::DirectionGrid all(metric, opening);
  for (const auto& d : far) all.insert(d);
  std::vector<Eigen::VectorXd> kept;
  const double cos_open = std::cos(opening);
  for (const auto& cand : detail::dedup(metric, far, opening / 2)) {
    // Count far points within the opening (grid cells have side `opening`).
    const Eigen::VectorXd u = metric.orthonormal(cand);
    std::size_t count = 0;
    for (const auto& d : far)
      if (u.dot(metric.orthonormal(d)) >= cos_open) ++count;
    if (count >= threshold) kept.push_back(cand);
  }
  return make_sampled(metric, std::move(kept), opening, points.size());
}

/// Greatest angle from a direction of `a` to the cone `b` (one-sided Hausdorff).
inline double max_excess_angle(const Cone& a, const Cone& b) {
  double worst = 0;
  for (const auto& d : representative_directions(a)) worst = std::max(worst, angle_to_cone(b, d));
  return worst;
}

/// Random unit vector of span(basis) under the invariant form of k.
template <class Rng>
Eigen::VectorXd random_unit_in_span(const Eigen::MatrixXd& orthonormal_basis_coords, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd c(orthonormal_basis_coords.cols());
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = gauss(rng);
  c.normalize();
  return orthonormal_basis_coords * c;
}

/// Columns: a B-orthonormal basis (k coordinates) of span(vectors).
inline Eigen::MatrixXd orthonormalize(const GroupDescriptor& g, const std::vector<RVec>& vectors) {
  const Eigen::MatrixXd gram = to_eigen(algebra_gram(g));
  std::vector<Eigen::VectorXd> basis;
  for (const auto& v : vectors) {
    Eigen::VectorXd x = to_eigen(v);
    for (const auto& b : basis) x -= b.dot(gram * x) * b;
    const double n = std::sqrt(std::max(0.0, x.dot(gram * x)));
    if (n > 1e-10) basis.push_back(x / n);
  }
  Eigen::MatrixXd out(g.algebra_dim(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = basis[i];
  return out;
}

inline void require_sampling_support(const GroupDescriptor& g) {
  for (const auto& f : g.factors)
    if (f.kind != FactorKind::SU && f.kind != FactorKind::U1)
      raise(ErrorKind::UnsupportedGroupForSampling, "no Ad-sampling routine for " + f.label());
}

inline constexpr std::size_t kDefaultSamples = 20000;
inline constexpr double kDefaultTolerance = 5e-3;
inline constexpr double kDefaultMargin = 2e-2;

/// Dominant chamber directions of Ad(k)X for random k in K and random unit X
/// in span(m-perp), deduplicated at the tolerance. Deterministic in the seed
/// (one sequential stream).
inline Cone orbit_cone(const RootSystem& rs_k, const std::vector<RVec>& mperp_basis, std::size_t n_samples,
                       std::uint64_t seed, double tolerance = kDefaultTolerance) {
  require_sampling_support(rs_k.descriptor);
  const Metric metric(rs_k);
  const Eigen::MatrixXd basis = orthonormalize(rs_k.descriptor, mperp_basis);
  if (basis.cols() == 0) return make_sampled(metric, {}, tolerance, 0, seed);
  std::mt19937_64 rng(seed);
  detail::DirectionGrid grid(metric, tolerance);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const GroupElement k = haar_element(rs_k.descriptor, rng);
    const Eigen::VectorXd x = random_unit_in_span(basis, rng);
    const AlgebraElement y = adjoint(k, element_from_coords(rs_k.descriptor, x));
    const Eigen::VectorXd w = dominant_weight_of(rs_k, y);
    const double n = metric.norm(w);
    if (n < 1e-12) continue;
    const Eigen::VectorXd d = w / n;
    if (!grid.near(d, tolerance)) grid.insert(d);
  }
  return make_sampled(metric, grid.items(), tolerance, n_samples, seed);
}

/// Element of m whose B_M-pairing reproduces xi o phi, for xi in k (coords).
inline Eigen::VectorXd project_to_subalgebra(const GroupDescriptor& gk, const GroupDescriptor& gm, const RMat& phi,
                                             const Eigen::VectorXd& x) {
  const Eigen::MatrixXd gram_k = to_eigen(algebra_gram(gk));
  const Eigen::MatrixXd gram_m = to_eigen(algebra_gram(gm));
  const Eigen::MatrixXd p = to_eigen(phi);
  return gram_m.ldlt().solve(p.transpose() * (gram_k * x));
}

/// A random unit direction of a cone (uniform over sampled points; random
/// nonnegative combination within a random exact component).
template <class Rng>
Eigen::VectorXd random_direction(const Cone& c, Rng& rng) {
  if (!c.is_exact()) {
    std::uniform_int_distribution<std::size_t> pick(0, c.sampled().directions.size() - 1);
    return c.sampled().directions[pick(rng)];
  }
  const auto& comps = c.exact().components;
  std::uniform_int_distribution<std::size_t> pick(0, comps.size() - 1);
  const auto& comp = comps[pick(rng)];
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(c.metric.dim());
  for (const auto& g : comp) v += expo(rng) * c.metric.normalized(to_eigen(g));
  return c.metric.normalized(v);
}

/// Weight (doubles) -> torus element i diag(eps) of k, as basis coordinates.
inline Eigen::VectorXd weight_to_algebra(const RootSystem& rs, const Eigen::VectorXd& w) {
  // torus_coords is linear; evaluate it on the unit vectors once.
  Eigen::MatrixXd t(rs.descriptor.algebra_dim(), static_cast<Eigen::Index>(rs.rank()));
  for (std::size_t i = 0; i < rs.rank(); ++i) {
    RVec e(rs.rank(), Rational(0));
    e[i] = 1;
    t.col(static_cast<Eigen::Index>(i)) = to_eigen(torus_coords(rs, e));
  }
  return t * w;
}

/// Torus projections of Ad*(k)lambda (in weight coordinates) for random k.
/// These lie in conv(W lambda) by Kostant's convexity theorem.
inline std::vector<Eigen::VectorXd> torus_projections(const RootSystem& rs, const Weight& lambda, std::size_t n,
                                                      std::uint64_t seed) {
  require_sampling_support(rs.descriptor);
  const RootSystem torus = build_root_system(subgroup_group(rs.descriptor, "torus"));
  const Subgroup t = preset_subgroup(rs, torus, "torus");
  // Torus charges are Dynkin/2 (identity on U(1)); undo that scaling.
  Eigen::MatrixXd back = to_eigen(t.torus.matrix).inverse();
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd x = weight_to_algebra(rs, to_eigen(lambda.coords));
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const GroupElement k = haar_element(rs.descriptor, rng);
    const AlgebraElement y = adjoint(k, element_from_coords(rs.descriptor, x));
    const Eigen::VectorXd z = project_to_subalgebra(rs.descriptor, torus.descriptor, *t.algebra_map,
                                                    coords_from_element(rs.descriptor, y));
    out.push_back(back * z);
  }
  return out;
}

/// M-chamber directions of the projections to m* of Ad*(k)lambda, lambda
/// sampled from the directions of as_k and k Haar-random in K.
/// Without an algebra map the target is the Kostant superset
/// R(conv(W_K lambda)) folded into M's chamber.
inline Cone orbit_project_cone(const RootSystem& rs_k, const RootSystem& rs_m, const Cone& as_k, const Subgroup& sub,
                               std::size_t n_samples, std::uint64_t seed, double tolerance = kDefaultTolerance) {
  require_sampling_support(rs_k.descriptor);
  const Metric metric_m(rs_m);
  if (as_k.empty()) return make_sampled(metric_m, {}, tolerance, 0, seed);
  std::mt19937_64 rng(seed);
  detail::DirectionGrid grid(metric_m, tolerance);
  const Eigen::MatrixXd r = to_eigen(sub.torus.matrix);
  std::size_t dropped = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd lambda = random_direction(as_k, rng);
    const GroupElement k = haar_element(rs_k.descriptor, rng);
    Eigen::VectorXd w;
    if (sub.algebra_map) {
      const AlgebraElement y =
          adjoint(k, element_from_coords(rs_k.descriptor, weight_to_algebra(rs_k, lambda)));
      const Eigen::VectorXd z = project_to_subalgebra(rs_k.descriptor, rs_m.descriptor, *sub.algebra_map,
                                                      coords_from_element(rs_k.descriptor, y));
      w = dominant_weight_of(rs_m, element_from_coords(rs_m.descriptor, z));
    } else {
      // Torus projection of Ad*(k)lambda, then restriction and M-dominance.
      const RootSystem torus = build_root_system(subgroup_group(rs_k.descriptor, "torus"));
      const Subgroup t = preset_subgroup(rs_k, torus, "torus");
      const AlgebraElement y =
          adjoint(k, element_from_coords(rs_k.descriptor, weight_to_algebra(rs_k, lambda)));
      const Eigen::VectorXd z = project_to_subalgebra(rs_k.descriptor, torus.descriptor, *t.algebra_map,
                                                      coords_from_element(rs_k.descriptor, y));
      const Eigen::VectorXd tk = to_eigen(t.torus.matrix).inverse() * z;
      w = dominant_weight_of(rs_m, element_from_coords(rs_m.descriptor, weight_to_algebra(rs_m, r * tk)));
    }
    const double n = metric_m.norm(w);
    if (n < tolerance) {
      ++dropped;
      continue;
    }
    const Eigen::VectorXd d = w / n;
    if (!grid.near(d, tolerance)) grid.insert(d);
  }
  Cone out = make_sampled(metric_m, grid.items(), tolerance, n_samples, seed);
  out.sampled().dropped.resize(dropped, Eigen::VectorXd::Zero(metric_m.dim()));
  return out;
}

}  // namespace ksupp
