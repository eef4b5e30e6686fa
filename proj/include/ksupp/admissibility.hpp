#pragma once

// Restriction of a K-representation, known through (supp_K, m_K), to a closed
// subgroup M: the disjointness condition between AS_K and the coadjoint trace
// of the conormal space, restricted multiplicities via Frobenius sums,
// polynomial boundedness, and the AS_M containment.

#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ksupp/cones.hpp"
#include "ksupp/errors.hpp"
#include "ksupp/fourier.hpp"
#include "ksupp/lie.hpp"
#include "ksupp/repr.hpp"
#include "ksupp/support.hpp"

namespace ksupp {

struct PipelineParams {
  double radius = 20;
  std::size_t n_samples = kDefaultSamples;
  std::uint64_t seed = 0;
  double margin = kDefaultMargin;
  double tolerance = kDefaultTolerance;
  double opening = kDefaultOpening;
  double q = kDefaultSlopeThreshold;
  std::size_t shells = kDefaultShells;
  std::size_t threshold = 5;
  double band_fraction = 0.5;  // completeness band (R - band_fraction R, R]
};

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    raise(e.kind(), std::string("[") + stage + "] " + e.what());
  }
}

}  // namespace detail

/// Sampling seeds derived from the config seed, one per stage.
inline std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stage + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

struct AfsuppCrossCheck {
  bool performed = false;
  std::string note;
  double exact_to_estimate = 0;  // max angle from as_k to the estimate
  double estimate_to_exact = 0;  // max angle from the estimate to as_k
  bool agrees = true;            // both within opening + 0.1
};

struct AsK {
  Cone cone;
  AfsuppCrossCheck check;
};

/// The K-character series: |Theta_lambda| = m_K(lambda:pi) |chi_lambda| = m_K(lambda:pi).
inline CoefficientSeries k_character_series(const RootSystem& rs, const SupportSpec& spec, double radius) {
  CoefficientSeries s{rs.descriptor, radius, {}, {ProvenanceKind::Synthetic, "k_character", {}}};
  for (const auto& [w, m] : members_up_to(rs, spec, radius)) s.entries.emplace(w, static_cast<double>(m));
  return s;
}

/// AS_K(pi) = S-infinity of the support, cross-checked against afsupp of the
/// K-character series.
inline AsK as_k_of(const RootSystem& rs, const SupportSpec& spec, const PipelineParams& p) {
  AsK out{asymptotic_cone(rs, spec), {}};
  if (spec.finite()) {
    out.check.note = "finite support: K-finite, afsupp empty";
    return out;
  }
  try {
    const auto est = estimate_afsupp(rs, k_character_series(rs, spec, p.radius), p.opening, p.shells, p.q);
    out.check.performed = true;
    out.check.exact_to_estimate = max_excess_angle(out.cone, est);
    out.check.estimate_to_exact = max_excess_angle(est, out.cone);
    out.check.agrees = out.check.exact_to_estimate <= p.opening + 0.1 && out.check.estimate_to_exact <= p.opening + 0.1;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
    out.check.note = std::string("skipped: ") + e.what();
  }
  return out;
}

enum class ConditionKind { Certified, Failed, Inconclusive };

inline std::string to_string(ConditionKind k) {
  switch (k) {
    case ConditionKind::Certified: return "Certified";
    case ConditionKind::Failed: return "Failed";
    case ConditionKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct ConditionVerdict {
  ConditionKind kind = ConditionKind::Certified;
  double min_angle = std::numeric_limits<double>::infinity();
  double margin = 0;
  double tolerance = 0;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> witness;
  std::string reason;
};

struct ConditionResult {
  AsK as_k;
  Cone orbit;
  ConditionVerdict verdict;
};

/// Certified iff the minimal angle between AS_K and the orbit cone exceeds the
/// margin; Failed iff it is within the sampled tolerance; Inconclusive between.
inline ConditionResult check_condition(const RootSystem& rs_k, const SupportSpec& spec, const std::vector<RVec>& mperp,
                                       const PipelineParams& p) {
  ConditionResult out{as_k_of(rs_k, spec, p), orbit_cone(rs_k, mperp, p.n_samples, stage_seed(p.seed, 1), p.tolerance),
                      {}};
  auto& v = out.verdict;
  v.margin = p.margin;
  v.tolerance = p.tolerance;
  if (out.as_k.cone.empty() || out.orbit.empty()) {
    v.kind = ConditionKind::Certified;
    v.reason = out.as_k.cone.empty() ? "AS_K is empty" : "orbit cone is empty (m-perp = 0)";
    return out;
  }
  const auto disjoint = cones_disjoint(out.as_k.cone, out.orbit, p.margin);
  if (const auto* d = std::get_if<Disjoint>(&disjoint)) {
    v.kind = ConditionKind::Certified;
    v.min_angle = d->min_angle;
    return out;
  }
  const auto& hit = std::get<Intersecting>(disjoint);
  v.min_angle = hit.min_angle;
  v.witness = std::make_pair(hit.witness_first, hit.witness_second);
  if (hit.min_angle <= p.tolerance) {
    v.kind = ConditionKind::Failed;
    v.reason = "AS_K meets the orbit cone within the sampling tolerance";
  } else {
    v.kind = ConditionKind::Inconclusive;
    v.reason = "minimal angle lies between the sampling tolerance and the margin";
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SpectrumEntry {
  std::int64_t multiplicity = 0;
  std::int64_t inner_multiplicity = 0;  // contributions from |lambda| <= R - band
  bool complete = false;
};

struct RestrictedSpectrum {
  double radius = 0;
  double band = 0;
  double op_norm = 0;  // restriction map, K gram norm to M gram norm
  std::map<Weight, SpectrumEntry> entries;
  std::size_t lambda_count = 0;

  /// mu whose truncated multiplicity still grows inside the band.
  std::vector<Weight> growing() const {
    std::vector<Weight> out;
    for (const auto& [mu, e] : entries)
      if (!e.complete && e.multiplicity > e.inner_multiplicity) out.push_back(mu);
    return out;
  }
};

inline std::string completeness_criterion() {
  return "mu is complete at radius R iff it receives no contribution from lambda with |lambda| in (R - band, R]";
}

/// sup |R v|_M / |v|_K over the weight space.
inline double restriction_op_norm(const RootSystem& rs_k, const RootSystem& rs_m, const TorusEmbedding& emb) {
  const Eigen::MatrixXd r = to_eigen(emb.matrix);
  const Eigen::MatrixXd a = r.transpose() * to_eigen(rs_m.gram) * r;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, to_eigen(rs_k.gram), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// c_mu = sum over lambda in supp_K, |lambda| <= R, of m_K(lambda) m_M(mu : lambda|M).
/// Branching runs on worker threads; the merge is in lambda order.
inline RestrictedSpectrum restricted_spectrum(const RootSystem& rs_k, const RootSystem& rs_m, const TorusEmbedding& emb,
                                              const SupportSpec& spec, double radius, double band_fraction = 0.5,
                                              unsigned threads = 0) {
  if (radius <= 0) raise(ErrorKind::InvalidInput, "radius must be positive");
  RestrictedSpectrum out;
  out.radius = radius;
  out.band = band_fraction * radius;
  out.op_norm = restriction_op_norm(rs_k, rs_m, emb);
  const auto members = members_up_to(rs_k, spec, radius);
  std::vector<BranchResult> branches(members.size());
  std::vector<std::exception_ptr> errors(members.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(members.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < members.size(); i += threads) {
          try {
            branches[i] = branch(rs_k, rs_m, emb, members[i].first);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::map<Weight, bool> touched_by_band;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& [lambda, m] = members[i];
    ++out.lambda_count;
    const bool in_band = norm(rs_k, lambda) > radius - out.band;
    for (const auto& [mu, c] : branches[i]) {
      auto& e = out.entries[mu];
      e.multiplicity += m * c;
      if (!in_band) e.inner_multiplicity += m * c;
      touched_by_band[mu] = touched_by_band[mu] || in_band;
    }
  }
  for (auto& [mu, e] : out.entries) e.complete = !touched_by_band[mu];
  return out;
}

enum class FitStatus { Fitted, Vacuous, Insufficient };

inline std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Fitted: return "fitted";
    case FitStatus::Vacuous: return "vacuous";
    case FitStatus::Insufficient: return "insufficient";
  }
  return "?";
}

struct PolyFit {
  FitStatus status = FitStatus::Fitted;
  bool bounded_evidence = false;
  double degree = 0;
  double degree_without_outer = 0;
  double residual = 0;
  std::vector<ShellStat> shells;
  std::string note;
};

inline constexpr double kDegreeStability = 0.5;

/// Log-log fit of dyadic-shell maxima of the complete multiplicities.
/// bounded_evidence iff the fitted degree moves by < 0.5 when the outer shell
/// is dropped. Throws InsufficientData below three shells.
inline PolyFit poly_boundedness_fit(const RootSystem& rs_m, const std::map<Weight, std::int64_t>& complete) {
  std::vector<std::pair<double, double>> nv;
  for (const auto& [mu, m] : complete)
    if (m > 0) nv.emplace_back(norm(rs_m, mu), static_cast<double>(m));
  PolyFit fit;
  fit.shells = shell_maxima(nv);
  if (fit.shells.size() < kMinShells)
    raise(ErrorKind::InsufficientData, "complete multiplicities span " + std::to_string(fit.shells.size()) +
                                           " dyadic shells, need " + std::to_string(kMinShells));
  std::tie(fit.degree, fit.residual) = fit_loglog(fit.shells);
  fit.degree_without_outer = fit_loglog(std::vector<ShellStat>(fit.shells.begin(), fit.shells.end() - 1)).first;
  fit.bounded_evidence = std::abs(fit.degree - fit.degree_without_outer) < kDegreeStability;
  return fit;
}

/// Pipeline form: a finite spectrum that is entirely complete is bounded
/// (vacuous); missing shells leave bounded_evidence false with a note.
inline PolyFit poly_fit_of(const RootSystem& rs_m, const RestrictedSpectrum& rsp, bool spec_finite) {
  std::map<Weight, std::int64_t> complete;
  bool all_complete = true;
  for (const auto& [mu, e] : rsp.entries) {
    if (e.complete)
      complete.emplace(mu, e.multiplicity);
    else
      all_complete = false;
  }
  PolyFit fit;
  if (spec_finite && all_complete) {
    fit.status = FitStatus::Vacuous;
    fit.bounded_evidence = true;
    fit.note = "finite restricted spectrum, fully complete";
    return fit;
  }
  try {
    return poly_boundedness_fit(rs_m, complete);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
    fit.status = FitStatus::Insufficient;
    fit.bounded_evidence = false;
    fit.note = e.what();
    return fit;
  }
}

struct Containment {
  bool verified = true;
  double max_excess = 0;
  double threshold = 0;
  std::optional<Eigen::VectorXd> witness;
  std::string note;
};

/// Verified iff every direction of `as_m` lies within `threshold` of `target`
/// (an empty target counts as angle pi).
inline Containment check_containment(const Cone& as_m, const Cone& target, double threshold, std::string note = {}) {
  Containment c;
  c.threshold = threshold;
  c.note = std::move(note);
  for (const auto& d : representative_directions(as_m)) {
    const double a = target.empty() ? M_PI : angle_to_cone(target, d);
    if (!c.witness || a > c.max_excess) {
      c.max_excess = a;
      c.witness = d;
    }
  }
  c.verified = c.max_excess < c.threshold;
  if (c.verified) c.witness.reset();
  return c;
}

struct AsMResult {
  Cone as_m;
  Cone target;
  Containment containment;
};

/// as_m: bruteforce asymptotic cone of the complete restricted support;
/// target: projected coadjoint orbits of AS_K. Verified iff every as_m
/// direction lies within margin + tolerance of the target. Too few complete
/// points throw InsufficientData, unless `advisory`, where the containment is
/// reported unverified instead.
inline AsMResult verify_as_m(const RootSystem& rs_k, const RootSystem& rs_m, const Subgroup& sub, const Cone& as_k,
                             const RestrictedSpectrum& rsp, bool spec_finite, const PipelineParams& p,
                             bool advisory = false) {
  const Metric metric_m(rs_m);
  AsMResult out{make_sampled(metric_m, {}, p.opening), make_sampled(metric_m, {}, p.tolerance), {}};
  out.target = orbit_project_cone(rs_k, rs_m, as_k, sub, p.n_samples, stage_seed(p.seed, 2), p.tolerance);
  auto& c = out.containment;
  c.threshold = p.margin + p.tolerance;
  if (spec_finite) {
    out.containment.note = "finite support: AS_M empty";
  } else {
    std::vector<Weight> pts;
    double r_m = 0;
    for (const auto& [mu, e] : rsp.entries)
      if (e.complete && e.multiplicity > 0) {
        pts.push_back(mu);
        r_m = std::max(r_m, norm(rs_m, mu));
      }
    try {
      out.as_m = asymptotic_cone_bruteforce(rs_m, pts, r_m, p.opening, p.threshold);
    } catch (const Error& e) {
      if (!advisory || e.kind() != ErrorKind::InsufficientData) throw;
      c.verified = false;
      c.max_excess = std::numeric_limits<double>::quiet_NaN();
      c.note = std::string("unverified: ") + e.what();
      return out;
    }
  }
  c = check_containment(out.as_m, out.target, c.threshold, c.note);
  return out;
}

// ---------------------------------------------------------------------------

struct AdmissibilityReport {
  std::string group;
  std::string subgroup;
  std::string subgroup_group;
  PipelineParams params;
  ConditionResult condition;
  RestrictedSpectrum spectrum;
  PolyFit poly_fit;
  AsMResult as_m;
  bool advisory = false;  // condition not Certified: conclusions are not claimed

  int exit_code() const {
    if (condition.verdict.kind == ConditionKind::Failed || !as_m.containment.verified) return 1;
    if (condition.verdict.kind == ConditionKind::Inconclusive) return 4;
    return 0;
  }
};

inline void validate(const PipelineParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) raise(ErrorKind::InvalidInput, std::string(name) + " must be positive");
  };
  positive(p.radius, "radius");
  positive(static_cast<double>(p.n_samples), "n_samples");
  positive(p.margin, "margin");
  positive(p.tolerance, "tolerance");
  positive(p.opening, "opening");
  positive(p.q, "q");
  positive(static_cast<double>(p.threshold), "threshold");
  if (p.shells < 2) raise(ErrorKind::InvalidInput, "shells must be at least 2");
  if (!(p.band_fraction > 0 && p.band_fraction < 1)) raise(ErrorKind::InvalidInput, "band_fraction must lie in (0, 1)");
  if (p.margin <= p.tolerance)
    raise(ErrorKind::MarginTooSmall, "margin " + std::to_string(p.margin) + " must exceed the sampling tolerance " +
                                         std::to_string(p.tolerance));
}

inline AdmissibilityReport run_pipeline(const RootSystem& rs_k, const RootSystem& rs_m, const Subgroup& sub,
                                        const SupportSpec& spec, const PipelineParams& p) {
  detail::staged("params", [&] { validate(p); });
  detail::staged("support", [&] { validate(rs_k, spec); });
  detail::staged("subgroup", [&] { validate(sub.torus, rs_k, rs_m); });
  AdmissibilityReport r;
  r.group = rs_k.descriptor.canonical();
  r.subgroup = sub.label;
  r.subgroup_group = rs_m.descriptor.canonical();
  r.params = p;
  r.condition = detail::staged("condition", [&] { return check_condition(rs_k, spec, sub.mperp, p); });
  r.advisory = r.condition.verdict.kind != ConditionKind::Certified;
  r.spectrum = detail::staged("restricted_spectrum",
                              [&] { return restricted_spectrum(rs_k, rs_m, sub.torus, spec, p.radius, p.band_fraction); });
  r.poly_fit = detail::staged("poly_fit", [&] { return poly_fit_of(rs_m, r.spectrum, spec.finite()); });
  r.as_m = detail::staged("as_m", [&] {
    return verify_as_m(rs_k, rs_m, sub, r.condition.as_k.cone, r.spectrum, spec.finite(), p, r.advisory);
  });
  return r;
}

}  // namespace ksupp
