#pragma once

// Fourier coefficient series of distributions on K, stored as the norms
// |u_lambda| on dominant weights up to a truncation radius.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ksupp/cones.hpp"
#include "ksupp/errors.hpp"
#include "ksupp/repr.hpp"
#include "ksupp/rootsys.hpp"

namespace ksupp {

enum class ProvenanceKind { Synthetic, Quadrature };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Synthetic;
  std::string rule;
  std::map<std::string, double> params;
};

struct CoefficientSeries {
  GroupDescriptor group;
  double radius = 0;
  std::map<Weight, double> entries;
  Provenance provenance;
};

/// Calls fn(lambda, |lambda|) for every dominant lattice weight with norm <= radius,
/// in lexicographic coordinate order. U(1) charges run over the integers.
inline void for_each_dominant_weight(const RootSystem& rs, double radius,
                                     const std::function<void(const Weight&, double)>& fn) {
  const auto r = rs.rank();
  const Eigen::MatrixXd g = to_eigen(rs.gram);
  const Eigen::MatrixXd ginv = g.inverse();
  std::vector<std::int64_t> lo(r), hi(r);
  for (std::size_t i = 0; i < r; ++i) {
    // |lambda_i| <= R sqrt((G^-1)_ii) for |lambda| <= R.
    const auto ii = static_cast<Eigen::Index>(i);
    const auto b = static_cast<std::int64_t>(std::floor(radius * std::sqrt(ginv(ii, ii)) + 1e-9));
    hi[i] = b;
    lo[i] = rs.is_semisimple_coord(i) ? 0 : -b;
  }
  const double r2 = radius * radius + 1e-9;
  std::vector<std::int64_t> c(lo);
  Eigen::VectorXd v(static_cast<Eigen::Index>(r));
  for (;;) {
    for (std::size_t i = 0; i < r; ++i) v(static_cast<Eigen::Index>(i)) = static_cast<double>(c[i]);
    const double n2 = v.dot(g * v);
    if (n2 <= r2) {
      Weight w;
      w.coords.reserve(r);
      for (auto x : c) w.coords.emplace_back(x);
      fn(w, std::sqrt(std::max(0.0, n2)));
    }
    std::size_t i = r;
    while (i > 0) {
      --i;
      if (c[i] < hi[i]) {
        ++c[i];
        break;
      }
      c[i] = lo[i];
      if (i == 0) return;
    }
    if (r == 0) return;
  }
}

inline std::vector<Weight> dominant_weights_up_to(const RootSystem& rs, double radius) {
  std::vector<Weight> out;
  for_each_dominant_weight(rs, radius, [&](const Weight& w, double) { out.push_back(w); });
  return out;
}

/// delta = sum d_lambda chi_lambda, so |delta_lambda| = d_lambda.
inline CoefficientSeries series_delta(const RootSystem& rs, double radius) {
  CoefficientSeries s{rs.descriptor, radius, {}, {ProvenanceKind::Synthetic, "delta", {}}};
  for_each_dominant_weight(rs, radius,
                           [&](const Weight& w, double) { s.entries.emplace(w, static_cast<double>(dimension(rs, w))); });
  return s;
}

/// delta_S: the delta series restricted to nonzero lambda with direction in s_cone.
inline CoefficientSeries series_delta_S(const RootSystem& rs, double radius, const Cone& s_cone) {
  CoefficientSeries s{rs.descriptor, radius, {}, {ProvenanceKind::Synthetic, "delta_S", {}}};
  if (s_cone.empty()) return s;
  for_each_dominant_weight(rs, radius, [&](const Weight& w, double n) {
    if (n == 0) return;
    if (contains(s_cone, to_eigen(w.coords))) s.entries.emplace(w, static_cast<double>(dimension(rs, w)));
  });
  return s;
}

enum class SyntheticRule { Smooth, ExpGrowth, RayDecay, PlantedCone };

struct SyntheticSpec {
  SyntheticRule rule = SyntheticRule::Smooth;
  double p = 0;               // exponent for RayDecay and PlantedCone
  std::optional<Cone> cone = std::nullopt;  // PlantedCone only
};

inline std::string to_string(SyntheticRule r) {
  switch (r) {
    case SyntheticRule::Smooth: return "smooth";
    case SyntheticRule::ExpGrowth: return "exp_growth";
    case SyntheticRule::RayDecay: return "ray_decay";
    case SyntheticRule::PlantedCone: return "planted_cone";
  }
  return "?";
}

/// Test-data generators:
///   smooth       d_lambda e^{-|lambda|}
///   exp_growth   e^{|lambda|}
///   ray_decay    (1+|lambda|)^{-p}
///   planted_cone (1+|lambda|)^p for nonzero lambda in the cone, d_lambda e^{-|lambda|} elsewhere
inline CoefficientSeries series_synthetic(const RootSystem& rs, double radius, const SyntheticSpec& spec) {
  if (spec.rule == SyntheticRule::PlantedCone && !spec.cone)
    raise(ErrorKind::InvalidInput, "planted_cone needs a cone");
  CoefficientSeries s{rs.descriptor, radius, {}, {ProvenanceKind::Synthetic, to_string(spec.rule), {}}};
  if (spec.rule == SyntheticRule::RayDecay || spec.rule == SyntheticRule::PlantedCone) s.provenance.params["p"] = spec.p;
  for_each_dominant_weight(rs, radius, [&](const Weight& w, double n) {
    const auto smooth = [&] { return static_cast<double>(dimension(rs, w)) * std::exp(-n); };
    double v = 0;
    switch (spec.rule) {
      case SyntheticRule::Smooth: v = smooth(); break;
      case SyntheticRule::ExpGrowth: v = std::exp(n); break;
      case SyntheticRule::RayDecay: v = std::pow(1 + n, -spec.p); break;
      case SyntheticRule::PlantedCone:
        v = (n > 0 && !spec.cone->empty() && contains(*spec.cone, to_eigen(w.coords))) ? std::pow(1 + n, spec.p)
                                                                                       : smooth();
        break;
    }
    s.entries.emplace(w, v);
  });
  return s;
}

// ---------------------------------------------------------------------------
// Quadrature on the maximal torus (Weyl integration formula).
//
// Torus points are parametrized by s = G t, where t is the angle vector of
// character_eval; then chi(t) = sum m(mu) e^{i mu.s} with integral mu.s, and
// every axis has period 2 pi. The Weyl density is prod_{alpha>0} (2 - 2 cos(alpha.s))
// normalized by 1 / (|W| (2 pi)^rank).

using ClassFunction = std::function<std::complex<double>(std::span<const double> t)>;

namespace detail {

inline double weyl_density(const RootSystem& rs, std::span<const double> s) {
  double d = 1;
  for (const auto& a : rs.positive_roots) {
    double phase = 0;
    for (std::size_t i = 0; i < s.size(); ++i) phase += to_double(a[i]) * s[i];
    d *= 2 - 2 * std::cos(phase);
  }
  return d;
}

/// Contracts axis `axis` (length n) of a flattened tensor with table (L x n).
inline std::vector<std::complex<double>> contract_axis(const std::vector<std::complex<double>>& in,
                                                       const std::vector<std::size_t>& dims, std::size_t axis,
                                                       const std::vector<std::vector<std::complex<double>>>& table) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= dims[a];
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  const std::size_t n = dims[axis];
  const std::size_t l = table.size();
  std::vector<std::complex<double>> out(outer * l * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t li = 0; li < l; ++li) {
      const auto& row = table[li];
      for (std::size_t k = 0; k < n; ++k) {
        const auto c = row[k];
        if (c == 0.0) continue;
        const auto* src = &in[(o * n + k) * inner];
        auto* dst = &out[(o * l + li) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += c * src[i];
      }
    }
  return out;
}

struct AxisLabels {
  std::vector<std::int64_t> labels;  // Dynkin label (SU(2)) or charge (U(1))
  bool su2 = false;
};

/// (f | chi_lambda) for every lambda on the label grid, trapezoidal rule with
/// n nodes per axis. Only products of SU(2) and U(1) factors.
inline std::map<Weight, std::complex<double>> class_function_coefficients(const RootSystem& rs, const ClassFunction& f,
                                                                          const std::vector<AxisLabels>& axes,
                                                                          std::size_t n) {
  const std::size_t r = rs.rank();
  std::vector<std::size_t> dims(r, n);
  std::size_t total = 1;
  for (std::size_t a = 0; a < r; ++a) total *= n;
  const double two_pi = 2 * std::numbers::pi;

  // Integrand with the per-axis weights Delta_a(s_a) / (|W_a| n).
  std::vector<std::complex<double>> tensor(total);
  std::vector<std::size_t> idx(r, 0);
  std::vector<double> t(r);
  const Eigen::MatrixXd ginv = to_eigen(rs.gram).inverse();
  Eigen::VectorXd s(static_cast<Eigen::Index>(r));
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1;
    for (std::size_t a = 0; a < r; ++a) {
      const double sa = two_pi * static_cast<double>(idx[a]) / static_cast<double>(n);
      s(static_cast<Eigen::Index>(a)) = sa;
      w *= axes[a].su2 ? (2 - 2 * std::cos(2 * sa)) / (2.0 * static_cast<double>(n)) : 1.0 / static_cast<double>(n);
    }
    const Eigen::VectorXd tv = ginv * s;
    for (std::size_t a = 0; a < r; ++a) t[a] = tv(static_cast<Eigen::Index>(a));
    tensor[flat] = w * f(t);
    for (std::size_t a = r; a-- > 0;) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  for (std::size_t a = 0; a < r; ++a) {
    std::vector<std::vector<std::complex<double>>> table;
    for (auto lab : axes[a].labels) {
      std::vector<std::complex<double>> row(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double sa = two_pi * static_cast<double>(k) / static_cast<double>(n);
        if (axes[a].su2) {
          std::complex<double> acc = 0;
          for (std::int64_t m = -lab; m <= lab; m += 2) acc += std::polar(1.0, -static_cast<double>(m) * sa);
          row[k] = acc;
        } else {
          row[k] = std::polar(1.0, -static_cast<double>(lab) * sa);
        }
      }
      table.push_back(std::move(row));
    }
    tensor = contract_axis(tensor, dims, a, table);
    dims[a] = axes[a].labels.size();
  }
  std::map<Weight, std::complex<double>> out;
  std::vector<std::size_t> li(r, 0);
  for (std::size_t flat = 0; flat < tensor.size(); ++flat) {
    Weight w;
    for (std::size_t a = 0; a < r; ++a) w.coords.emplace_back(axes[a].labels[li[a]]);
    out.emplace(std::move(w), tensor[flat]);
    for (std::size_t a = r; a-- > 0;) {
      if (++li[a] < dims[a]) break;
      li[a] = 0;
    }
  }
  return out;
}

}  // namespace detail

inline constexpr double kQuadratureTolerance = 1e-6;

/// |(f | chi_lambda)| for dominant lambda with |lambda| <= radius, on products of
/// SU(2) and U(1). Computed at n_quad and 2 n_quad nodes per axis; the finer
/// values are kept and the change is reported as the Richardson error.
/// Coefficients below drop_below are omitted.
inline CoefficientSeries series_quadrature_class_function(const RootSystem& rs, const ClassFunction& f, double radius,
                                                          std::size_t n_quad, double drop_below = 1e-12) {
  for (const auto& fac : rs.descriptor.factors)
    if (!(fac.kind == FactorKind::U1 || fac.n == 2))
      raise(ErrorKind::InvalidInput, "class-function quadrature supports products of SU(2) and U(1), not " + fac.label());
  if (n_quad < 4) raise(ErrorKind::InvalidInput, "n_quad must be at least 4");
  double nodes = 1;
  for (std::size_t a = 0; a < rs.rank(); ++a) nodes *= 2.0 * static_cast<double>(n_quad);
  if (nodes > static_cast<double>(1 << 24)) raise(ErrorKind::InvalidInput, "quadrature grid too large for this rank");

  std::vector<detail::AxisLabels> axes;
  for (const auto& fac : rs.descriptor.factors) {
    detail::AxisLabels ax;
    ax.su2 = fac.kind == FactorKind::SU;
    // |n w| = n / sqrt 2 on SU(2); |c| on U(1).
    const auto top = static_cast<std::int64_t>(std::floor(radius * (ax.su2 ? std::sqrt(2.0) : 1.0) + 1e-9));
    for (std::int64_t l = ax.su2 ? 0 : -top; l <= top; ++l) ax.labels.push_back(l);
    axes.push_back(std::move(ax));
  }
  const auto coarse = detail::class_function_coefficients(rs, f, axes, n_quad);
  const auto fine = detail::class_function_coefficients(rs, f, axes, 2 * n_quad);
  double err = 0;
  CoefficientSeries s{rs.descriptor, radius, {}, {ProvenanceKind::Quadrature, "class_function", {}}};
  for (const auto& [w, c] : fine) {
    if (norm(rs, w) > radius + 1e-9) continue;
    err = std::max(err, std::abs(c - coarse.at(w)));
    if (std::abs(c) >= drop_below) s.entries.emplace(w, std::abs(c));
  }
  s.provenance.params = {{"n_quad", static_cast<double>(n_quad)}, {"richardson_error", err}, {"drop_below", drop_below}};
  if (err > kQuadratureTolerance)
    raise(ErrorKind::QuadratureNotConverged,
          "doubling n_quad changed a coefficient by " + std::to_string(err) + " > " + std::to_string(kQuadratureTolerance));
  return s;
}

/// Class function sum_mu m(mu) chi over a weight multiset, in the angle convention.
inline ClassFunction character_function(const RootSystem& rs, const Weight& lambda) {
  auto weights = weight_multiplicities(rs, lambda);
  return [rs, weights](std::span<const double> t) { return character_eval(rs, weights, t); };
}

/// Multiplicity of the M-irrep mu in a class function given by its weight
/// multiset on M's torus, by Weyl integration. The integral factorizes over
/// the simple and U(1) factors of M; each factor integral uses the trapezoidal
/// rule on a grid fine enough to be exact for the occurring frequencies.
inline double weyl_integral_multiplicity(const RootSystem& rs_m, const WeightMultiset& restricted, const Weight& mu) {
  const auto& gm = rs_m.descriptor;
  const double two_pi = 2 * std::numbers::pi;
  double total = 0;
  std::vector<std::map<RVec, std::complex<double>>> memo(gm.factors.size());

  // Per factor: local root system, frequency scale per axis, grid size, and
  // the tabulated conj(chi_mu_f) * Delta_f / |W_f| on the grid.
  struct FactorGrid {
    std::size_t off = 0, rank = 0, n = 0;
    std::vector<std::int64_t> scale;
    std::vector<std::complex<double>> weight_table;  // flattened n^rank
  };
  std::vector<FactorGrid> grids;
  for (std::size_t fi = 0; fi < gm.factors.size(); ++fi) {
    const auto& fac = gm.factors[fi];
    FactorGrid fg;
    fg.off = rs_m.factor_offset[fi];
    fg.rank = static_cast<std::size_t>(fac.rank());
    const RootSystem local = build_root_system(GroupDescriptor::parse(fac.label()));
    Weight mu_f;
    for (std::size_t a = 0; a < fg.rank; ++a) mu_f.coords.push_back(mu[fg.off + a]);
    const WeightMultiset chi = weight_multiplicities(local, mu_f);
    // Common denominators make all frequencies integral (U(1) charges may be rational).
    fg.scale.assign(fg.rank, 1);
    auto absorb = [&](const RVec& c) {
      for (std::size_t a = 0; a < fg.rank; ++a) fg.scale[a] = std::lcm(fg.scale[a], c[fg.off + a].denominator());
    };
    for (const auto& [nu, m] : restricted) absorb(nu.coords);
    absorb(mu.coords);
    auto freq = [&](const RVec& c, std::size_t base) {
      std::int64_t f = 0;
      for (std::size_t a = 0; a < fg.rank; ++a) {
        const Rational v = c[base + a] * fg.scale[a];
        f = std::max(f, std::abs(v.numerator()));
      }
      return f;
    };
    std::int64_t nu_max = 0, kappa_max = 0;
    for (const auto& [nu, m] : restricted) nu_max = std::max(nu_max, freq(nu.coords, fg.off));
    for (const auto& [kappa, m] : chi) kappa_max = std::max(kappa_max, freq(kappa.coords, 0));
    const std::int64_t maxfreq = nu_max + kappa_max + 4 * static_cast<std::int64_t>(local.positive_roots.size());
    fg.n = static_cast<std::size_t>(maxfreq + 1);
    std::size_t total_nodes = 1;
    for (std::size_t a = 0; a < fg.rank; ++a) total_nodes *= fg.n;
    fg.weight_table.resize(total_nodes);
    const double w_order = static_cast<double>(local.descriptor.factors[0].weyl_order());
    std::vector<std::size_t> idx(fg.rank, 0);
    std::vector<double> s(fg.rank);
    for (std::size_t flat = 0; flat < total_nodes; ++flat) {
      // sigma is the scaled angle; the true angle is s = sigma * scale.
      for (std::size_t a = 0; a < fg.rank; ++a)
        s[a] = two_pi * static_cast<double>(idx[a]) / static_cast<double>(fg.n) * static_cast<double>(fg.scale[a]);
      std::complex<double> c = 0;
      for (const auto& [kappa, m] : chi) {
        double ph = 0;
        for (std::size_t a = 0; a < fg.rank; ++a) ph += to_double(kappa[a]) * s[a];
        c += static_cast<double>(m) * std::polar(1.0, -ph);
      }
      fg.weight_table[flat] = c * detail::weyl_density(local, s) / (w_order * static_cast<double>(total_nodes));
      for (std::size_t a = fg.rank; a-- > 0;) {
        if (++idx[a] < fg.n) break;
        idx[a] = 0;
      }
    }
    grids.push_back(std::move(fg));
  }
  for (const auto& [nu, m] : restricted) {
    std::complex<double> prod = 1;
    for (std::size_t fi = 0; fi < grids.size(); ++fi) {
      const auto& fg = grids[fi];
      RVec key(nu.coords.begin() + static_cast<std::ptrdiff_t>(fg.off),
               nu.coords.begin() + static_cast<std::ptrdiff_t>(fg.off + fg.rank));
      auto it = memo[fi].find(key);
      if (it == memo[fi].end()) {
        std::complex<double> acc = 0;
        std::vector<std::size_t> idx(fg.rank, 0);
        for (std::size_t flat = 0; flat < fg.weight_table.size(); ++flat) {
          double ph = 0;
          for (std::size_t a = 0; a < fg.rank; ++a)
            ph += to_double(key[a] * fg.scale[a]) * two_pi * static_cast<double>(idx[a]) / static_cast<double>(fg.n);
          acc += std::polar(1.0, ph) * fg.weight_table[flat];
          for (std::size_t a = fg.rank; a-- > 0;) {
            if (++idx[a] < fg.n) break;
            idx[a] = 0;
          }
        }
        it = memo[fi].emplace(std::move(key), acc).first;
      }
      prod *= it->second;
    }
    total += static_cast<double>(m) * prod.real();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Averaging identity on SU(2): Av w_n = chi_n / (n+1) for the highest weight
// matrix coefficient w_n(x) = (x e1, e1)^n = x_11^n.

namespace detail {

/// int_{SU(2)} (y x y^-1)_11^n dy. Haar coordinates: y = [[a, -conj b], [b, conj a]]
/// with a = sqrt(1-u) e^{i xi1}, b = sqrt(u) e^{i xi2}, u uniform on [0,1].
/// Composite Simpson in u (n_quad intervals), trapezoid in xi1, xi2 (exact).
inline std::complex<double> average_highest_weight_coefficient(int n, const Eigen::Matrix2cd& x, std::size_t n_quad) {
  const std::size_t m = static_cast<std::size_t>(2 * n + 4);
  const double two_pi = 2 * std::numbers::pi;
  std::vector<std::complex<double>> e(m);
  for (std::size_t k = 0; k < m; ++k) e[k] = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(m));
  std::complex<double> total = 0;
  for (std::size_t j = 0; j <= n_quad; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(n_quad);
    const double wu = (j == 0 || j == n_quad) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    const double ra = std::sqrt(1 - u), rb = std::sqrt(u);
    std::complex<double> inner = 0;
    for (std::size_t k1 = 0; k1 < m; ++k1)
      for (std::size_t k2 = 0; k2 < m; ++k2) {
        const std::complex<double> a = ra * e[k1], b = rb * e[k2];
        // (y x y^*)_11 = [a, -conj b] x [conj a, -b]^T
        const std::complex<double> v =
            a * (x(0, 0) * std::conj(a) - x(0, 1) * b) - std::conj(b) * (x(1, 0) * std::conj(a) - x(1, 1) * b);
        inner += std::pow(v, n);
      }
    total += wu * inner / static_cast<double>(m * m);
  }
  return total / (3.0 * static_cast<double>(n_quad));
}

/// Deterministic sample points g diag(e^{i phi}, e^{-i phi}) g^-1.
inline std::vector<std::pair<Eigen::Matrix2cd, double>> averaging_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phi(0.0, std::numbers::pi);
  std::vector<std::pair<Eigen::Matrix2cd, double>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::MatrixXcd g = haar_special_unitary(2, rng);
    const double p = phi(rng);
    Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
    d(0, 0) = std::polar(1.0, p);
    d(1, 1) = std::polar(1.0, -p);
    out.emplace_back(g * d * g.adjoint(), p);
  }
  return out;
}

}  // namespace detail

struct AveragingResult {
  double deviation = 0;         // max |Av w - chi/d| at n_quad
  double doubled_deviation = 0;  // same at 2 n_quad
  double change = 0;             // max change of Av w under doubling
};

/// max over sample points x of |Av w_lambda(x) - chi_lambda(x) / d_lambda| on SU(2),
/// without the convergence check.
inline AveragingResult averaging_identity_deviation(const Weight& lambda, std::size_t n_quad, std::size_t points = 6,
                                                    std::uint64_t seed = 1) {
  const RootSystem rs = build_root_system(GroupDescriptor::parse("SU(2)"));
  detail::require_dominant(rs, lambda);
  if (n_quad < 2 || n_quad % 2) raise(ErrorKind::InvalidInput, "n_quad must be even and positive");
  const int n = static_cast<int>(lambda[0].numerator());
  const auto weights = weight_multiplicities(rs, lambda);
  const double d = static_cast<double>(n + 1);
  AveragingResult res;
  for (const auto& [x, phi] : detail::averaging_points(points, seed)) {
    // eigenvalues e^{+-i phi} correspond to t = 2 phi
    const double t = 2 * phi;
    const auto target = character_eval(rs, weights, std::span<const double>(&t, 1)) / d;
    const auto a = detail::average_highest_weight_coefficient(n, x, n_quad);
    const auto b = detail::average_highest_weight_coefficient(n, x, 2 * n_quad);
    res.deviation = std::max(res.deviation, std::abs(a - target));
    res.doubled_deviation = std::max(res.doubled_deviation, std::abs(b - target));
    res.change = std::max(res.change, std::abs(b - a));
  }
  return res;
}

/// As averaging_identity_deviation; throws QuadratureNotConverged when
/// doubling n_quad moves the average by more than 1e-6.
inline AveragingResult averaging_identity_check(const Weight& lambda, std::size_t n_quad, std::size_t points = 6,
                                                std::uint64_t seed = 1) {
  auto res = averaging_identity_deviation(lambda, n_quad, points, seed);
  if (res.change > kQuadratureTolerance)
    raise(ErrorKind::QuadratureNotConverged, "averaging quadrature changed by " + std::to_string(res.change));
  return res;
}

// ---------------------------------------------------------------------------
// Convergence classes and afsupp.

struct ShellStat {
  int k = 0;          // shell [2^k, 2^{k+1})
  double r = 0;       // norm at the shell maximum
  double max = 0;
  std::size_t count = 0;
};

/// Dyadic shells of norms >= 1 with their maxima, ascending in k.
inline std::vector<ShellStat> shell_maxima(const std::vector<std::pair<double, double>>& norm_value) {
  std::map<int, ShellStat> shells;
  for (const auto& [n, v] : norm_value) {
    if (n < 1) continue;
    const int k = static_cast<int>(std::floor(std::log2(n) + 1e-12));
    auto& s = shells[k];
    s.k = k;
    ++s.count;
    if (s.count == 1 || v > s.max || (v == s.max && n > s.r)) {
      s.max = v;
      s.r = n;
    }
  }
  std::vector<ShellStat> out;
  for (auto& [k, s] : shells) out.push_back(s);
  return out;
}

inline double shell_slope(const ShellStat& a, const ShellStat& b) {
  if (a.max <= 0 || b.max <= 0) return b.max <= 0 ? -std::numeric_limits<double>::infinity()
                                                  : std::numeric_limits<double>::infinity();
  return (std::log(b.max) - std::log(a.max)) / (std::log1p(b.r) - std::log1p(a.r));
}

/// Least-squares slope of log max against log(1+r) over shells with positive maxima.
inline std::pair<double, double> fit_loglog(const std::vector<ShellStat>& shells) {
  std::vector<double> x, y;
  for (const auto& s : shells)
    if (s.max > 0) {
      x.push_back(std::log1p(s.r));
      y.push_back(std::log(s.max));
    }
  if (x.size() < 2) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (my + slope * (x[i] - mx));
    res += e * e;
  }
  return {slope, std::sqrt(res / static_cast<double>(x.size()))};
}

enum class ConvergenceKind { Smooth, Distributional, Divergent };

inline std::string to_string(ConvergenceKind k) {
  switch (k) {
    case ConvergenceKind::Smooth: return "Smooth";
    case ConvergenceKind::Distributional: return "Distributional";
    case ConvergenceKind::Divergent: return "Divergent";
  }
  return "?";
}

struct ConvergenceClass {
  ConvergenceKind kind = ConvergenceKind::Smooth;
  double decay_rate = 0;       // Smooth: minus the last shell slope
  double growth_exponent = 0;  // Distributional: fitted polynomial growth p
  int min_N = 0;               // Distributional: least N with sum (1+|l|)^{-2N} |u_l|^2 finite
  struct Diagnostics {
    std::vector<ShellStat> shells;
    std::vector<double> slopes;  // between consecutive shells
    double fit_slope = 0;
    double residual = 0;
    double q = 8;
  } diagnostics;
};

inline constexpr std::size_t kMinSeriesEntries = 20;
inline constexpr std::size_t kMinShells = 3;
inline constexpr double kDefaultSlopeThreshold = 8;

/// Classification from the shell maxima:
///   Smooth         last slope <= -q, or the outer shell vanishes;
///   Divergent      last slope >= q and the outer maximum grew by at least 1.5x;
///   Distributional otherwise, with p = max(last slope, 0) and N = floor(p + rank/2) + 1.
/// Quadrature series cover the whole ball, so their dropped coefficients count as zeros.
inline ConvergenceClass convergence_class(const RootSystem& rs, const CoefficientSeries& series,
                                          double q = kDefaultSlopeThreshold) {
  std::vector<std::pair<double, double>> nv;
  if (series.provenance.kind == ProvenanceKind::Quadrature) {
    for_each_dominant_weight(rs, series.radius, [&](const Weight& w, double n) {
      auto it = series.entries.find(w);
      nv.emplace_back(n, it == series.entries.end() ? 0.0 : it->second);
    });
  } else {
    for (const auto& [w, v] : series.entries) nv.emplace_back(norm(rs, w), v);
  }
  if (nv.size() < kMinSeriesEntries)
    raise(ErrorKind::InsufficientData,
          "series has " + std::to_string(nv.size()) + " entries, need " + std::to_string(kMinSeriesEntries));
  ConvergenceClass cc;
  cc.diagnostics.q = q;
  cc.diagnostics.shells = shell_maxima(nv);
  const auto& sh = cc.diagnostics.shells;
  if (sh.size() < kMinShells)
    raise(ErrorKind::InsufficientData,
          "series spans " + std::to_string(sh.size()) + " dyadic shells, need " + std::to_string(kMinShells));
  for (std::size_t i = 1; i < sh.size(); ++i) cc.diagnostics.slopes.push_back(shell_slope(sh[i - 1], sh[i]));
  std::tie(cc.diagnostics.fit_slope, cc.diagnostics.residual) =
      fit_loglog(std::vector<ShellStat>(sh.end() - static_cast<std::ptrdiff_t>(kMinShells), sh.end()));
  const auto& top = sh.back();
  const auto& prev = sh[sh.size() - 2];
  const double last = cc.diagnostics.slopes.back();
  if (top.max == 0 || last <= -q) {
    cc.kind = ConvergenceKind::Smooth;
    cc.decay_rate = top.max == 0 ? std::numeric_limits<double>::infinity() : -last;
  } else if (last >= q && top.max >= 1.5 * prev.max) {
    cc.kind = ConvergenceKind::Divergent;
  } else {
    cc.kind = ConvergenceKind::Distributional;
    cc.growth_exponent = std::max(last, 0.0);
    cc.min_N = static_cast<int>(std::floor(cc.growth_exponent + static_cast<double>(rs.rank()) / 2)) + 1;
  }
  return cc;
}

inline constexpr double kDefaultOpening = 0.08;
inline constexpr std::size_t kDefaultShells = 3;

/// Directions where |u_lambda| is not rapidly decreasing. Candidates are the
/// entry directions, snapped to a fixed grid (directions of all dominant
/// weights up to the radius, thinned at opening/2) so that the candidate set
/// only grows with the entry set. A candidate is excluded iff, in its conic
/// neighbourhood of half-angle `opening`, the outermost of the top `shells`
/// dyadic shells holds no nonzero value or the log-log slope of the shell
/// maxima is <= -q.
inline Cone estimate_afsupp(const RootSystem& rs, const CoefficientSeries& series, double opening = kDefaultOpening,
                            std::size_t shells = kDefaultShells, double q = kDefaultSlopeThreshold) {
  const Metric metric(rs);
  if (!(opening > 0 && opening < std::numbers::pi / 4)) raise(ErrorKind::InvalidInput, "opening must lie in (0, pi/4)");
  if (shells < 2) raise(ErrorKind::InvalidInput, "need at least two shells");
  struct Entry {
    Eigen::VectorXd u;  // orthonormal coordinates of the unit direction
    double n, v;
    int k;
  };
  std::vector<Entry> entries;
  std::set<int> shell_ids;
  for (const auto& [w, v] : series.entries) {
    const Eigen::VectorXd x = to_eigen(w.coords);
    const double n = metric.norm(x);
    if (n < 1) continue;
    const int k = static_cast<int>(std::floor(std::log2(n) + 1e-12));
    shell_ids.insert(k);
    entries.push_back({metric.orthonormal(x / n), n, v, k});
  }
  if (shell_ids.size() < shells)
    raise(ErrorKind::InsufficientData, "series spans " + std::to_string(shell_ids.size()) + " dyadic shells, need " +
                                           std::to_string(shells));
  const int k_top = *shell_ids.rbegin();
  const int k_low = k_top - static_cast<int>(shells) + 1;

  // Fixed candidate grid.
  std::vector<Eigen::VectorXd> pool;
  for_each_dominant_weight(rs, series.radius, [&](const Weight& w, double n) {
    if (n > 0) pool.push_back(to_eigen(w.coords) / n);
  });
  detail::DirectionGrid grid(metric, opening / 2);
  for (const auto& d : pool)
    if (!grid.near(d, opening / 2)) grid.insert(d);
  std::vector<bool> active(grid.items().size(), false);
  for (const auto& e : entries) {
    const Eigen::VectorXd d = metric.from_orthonormal(e.u);
    auto hit = grid.near(d, opening / 2);
    if (!hit) {
      hit = grid.insert(d);
      active.push_back(false);
    }
    active[*hit] = true;
  }

  const double cos_open = std::cos(opening);
  std::vector<Eigen::VectorXd> kept;
  for (std::size_t c = 0; c < grid.items().size(); ++c) {
    if (!active[c]) continue;
    const Eigen::VectorXd u = metric.orthonormal(grid.items()[c]);
    std::vector<ShellStat> local(shells);
    for (std::size_t i = 0; i < shells; ++i) local[i].k = k_low + static_cast<int>(i);
    for (const auto& e : entries) {
      if (e.k < k_low || u.dot(e.u) < cos_open) continue;
      auto& s = local[static_cast<std::size_t>(e.k - k_low)];
      ++s.count;
      if (s.count == 1 || e.v > s.max || (e.v == s.max && e.n > s.r)) {
        s.max = e.v;
        s.r = e.n;
      }
    }
    if (local.back().max <= 0) continue;
    const double slope = fit_loglog(local).first;
    if (std::isnan(slope) || slope > -q) kept.push_back(grid.items()[c]);
  }
  return make_sampled(metric, std::move(kept), opening, series.entries.size());
}

// ---------------------------------------------------------------------------

struct CasimirCheck {
  bool holds = true;
  double fitted_C = 0;
  std::size_t checked = 0;
};

/// With A = 1 + Casimir, mu(lambda) = 1 + |lambda+rho|^2 - |rho|^2. Checks
/// exactly that this equals 1 + <lambda,lambda> + sum_{alpha>0} <lambda,alpha>
/// (the lower bound, attained), and fits the least C with mu <= C (1+|lambda|)^2.
inline CasimirCheck casimir_bound_check(const RootSystem& rs, double radius) {
  if (radius <= 0) raise(ErrorKind::InvalidInput, "radius must be positive");
  CasimirCheck out;
  RVec two_rho(rs.rank(), Rational(0));
  for (const auto& a : rs.positive_roots) two_rho = two_rho + a;
  for_each_dominant_weight(rs, radius, [&](const Weight& w, double n) {
    const Rational mu = 1 + casimir_eigenvalue(rs, w);
    const Rational lower = 1 + inner_product(rs, w.coords, w.coords) + inner_product(rs, w.coords, two_rho);
    if (mu != lower) out.holds = false;
    out.fitted_C = std::max(out.fitted_C, to_double(mu) / ((1 + n) * (1 + n)));
    ++out.checked;
  });
  return out;
}

/// CSV: lambda_1..lambda_r, norm_lambda, value; rows in lexicographic coordinate order.
inline void write_csv(std::ostream& os, const RootSystem& rs, const CoefficientSeries& series) {
  for (std::size_t i = 0; i < rs.rank(); ++i) os << "lambda_" << (i + 1) << ",";
  os << "norm_lambda,value\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& [w, v] : series.entries) {
    line.str("");
    for (std::size_t i = 0; i < w.size(); ++i) line << to_string(w[i]) << ",";
    line << norm(rs, w) << "," << v << "\n";
    os << line.str();
  }
}

}  // namespace ksupp
