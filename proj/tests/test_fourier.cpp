#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ksupp/fourier.hpp"

using namespace ksupp;

namespace {

RootSystem rs_of(const char* g) { return build_root_system(GroupDescriptor::parse(g)); }

RVec rv(std::initializer_list<std::int64_t> xs) {
  RVec v;
  for (auto x : xs) v.emplace_back(x);
  return v;
}

Cone quadrant(const RootSystem& rs) { return make_exact(Metric(rs), {{rv({1, 0}), rv({0, 1})}}); }

}  // namespace

TEST(Series, DeltaSU2) {
  auto rs = rs_of("SU(2)");
  auto s = series_delta(rs, 10 / std::sqrt(2.0));
  ASSERT_EQ(s.entries.size(), 11u);
  for (int n = 0; n <= 10; ++n) EXPECT_EQ(s.entries.at(Weight{n}), n + 1);
}

TEST(Series, DeltaProduct) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto s = series_delta(rs, 5);
  for (const auto& [w, v] : s.entries)
    EXPECT_EQ(v, to_double((w[0] + 1) * (w[1] + 1)));
}

TEST(Series, DeltaS) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto full = series_delta_S(rs, 8, quadrant(rs));
  auto delta = series_delta(rs, 8);
  delta.entries.erase(Weight{0, 0});
  EXPECT_EQ(full.entries, delta.entries);
  EXPECT_TRUE(series_delta_S(rs, 8, make_exact(Metric(rs), {})).entries.empty());
  auto ray = series_delta_S(rs, 8, make_exact(Metric(rs), {{rv({1, 0})}}));
  for (const auto& [w, v] : ray.entries) EXPECT_EQ(w[1], 0);
  EXPECT_EQ(ray.entries.size(), 11u);
}

TEST(Series, SyntheticRules) {
  auto su2 = rs_of("SU(2)");
  auto smooth = series_synthetic(su2, 5, {SyntheticRule::Smooth});
  for (const auto& [w, v] : smooth.entries) {
    const double n = to_double(w[0]);
    EXPECT_NEAR(v, (n + 1) * std::exp(-n / std::sqrt(2.0)), 1e-12);
  }
  auto rs = rs_of("SU(2)xSU(2)");
  auto ray = make_exact(Metric(rs), {{rv({1, 0})}});
  auto planted = series_synthetic(rs, 10, {SyntheticRule::PlantedCone, 2, ray});
  EXPECT_NEAR(planted.entries.at(Weight{4, 0}), std::pow(1 + norm(rs, Weight{4, 0}), 2), 1e-9);
  EXPECT_NEAR(planted.entries.at(Weight{4, 1}), 10 * std::exp(-norm(rs, Weight{4, 1})), 1e-9);
  auto empty = series_synthetic(rs, 10, {SyntheticRule::PlantedCone, 2, make_exact(Metric(rs), {})});
  EXPECT_EQ(empty.entries, series_synthetic(rs, 10, {SyntheticRule::Smooth}).entries);
}

TEST(Quadrature, CharacterIsIndicator) {
  auto rs = rs_of("SU(2)");
  auto s = series_quadrature_class_function(rs, character_function(rs, Weight{3}), 15, 512, 0.0);
  for (const auto& [w, v] : s.entries) EXPECT_NEAR(v, w == Weight{3} ? 1.0 : 0.0, 1e-8) << to_string(w);
  auto one = series_quadrature_class_function(rs, [](std::span<const double>) { return std::complex<double>(1); }, 15, 64);
  ASSERT_EQ(one.entries.size(), 1u);
  EXPECT_NEAR(one.entries.at(Weight{0}), 1.0, 1e-12);
}

TEST(Quadrature, Orthonormality) {
  auto rs = rs_of("SU(2)");
  for (int m = 0; m <= 14; ++m) {
    auto s = series_quadrature_class_function(rs, character_function(rs, Weight{m}), 10, 512, 0.0);
    for (const auto& [w, v] : s.entries) EXPECT_LT(std::abs(v - (w == Weight{m} ? 1.0 : 0.0)), 1e-8);
  }
}

TEST(Quadrature, TruncatedDelta) {
  auto rs = rs_of("SU(2)");
  auto f = [&](std::span<const double> t) {
    std::complex<double> acc = 0;
    for (int n = 0; n <= 20; ++n) acc += static_cast<double>(n + 1) * character_eval(rs, Weight{n}, t);
    return acc;
  };
  auto s = series_quadrature_class_function(rs, f, 20, 128);
  for (int n = 0; n <= 20; ++n) EXPECT_NEAR(s.entries.at(Weight{n}), n + 1, 1e-9);
  EXPECT_EQ(s.entries.size(), 21u);
}

TEST(Quadrature, ProductAndTorus) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto s = series_quadrature_class_function(rs, character_function(rs, Weight{2, 1}), 4, 64);
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_NEAR(s.entries.at(Weight{2, 1}), 1.0, 1e-12);
  auto t = rs_of("U(1)xU(1)");
  auto c = series_quadrature_class_function(t, character_function(t, Weight{-2, 3}), 5, 32);
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_NEAR(c.entries.at(Weight{-2, 3}), 1.0, 1e-12);
}

TEST(Quadrature, NotConvergedAndUnsupported) {
  auto rs = rs_of("SU(2)");
  auto rough = [](std::span<const double> t) { return std::complex<double>(std::abs(std::sin(t[0] / 2)) < 0.3 ? 1 : 0); };
  try {
    series_quadrature_class_function(rs, rough, 5, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::QuadratureNotConverged);
  }
  auto su3 = rs_of("SU(3)");
  EXPECT_THROW(series_quadrature_class_function(su3, character_function(su3, Weight{1, 0}), 3, 16), Error);
}

TEST(Quadrature, BranchCrossCheck) {
  auto k = rs_of("SU(3)");
  auto m = rs_of("SU(2)xU(1)");
  auto sub = preset_subgroup(k, m, "su2xu1");
  Weight lambda{2, 1};
  WeightMultiset restricted;
  for (const auto& [w, c] : weight_multiplicities(k, lambda)) restricted[restriction_map(sub.torus, w)] += c;
  auto b = branch(k, m, sub.torus, lambda);
  for (const auto& [mu, c] : b) EXPECT_NEAR(weyl_integral_multiplicity(m, restricted, mu), c, 1e-9);
  EXPECT_NEAR(weyl_integral_multiplicity(m, restricted, Weight{5, 0}), 0, 1e-9);
  auto t = build_root_system(subgroup_group(k.descriptor, "torus"));
  auto ts = preset_subgroup(k, t, "torus");
  WeightMultiset rt;
  for (const auto& [w, c] : weight_multiplicities(k, lambda)) rt[restriction_map(ts.torus, w)] += c;
  for (const auto& [mu, c] : branch(k, t, ts.torus, lambda)) EXPECT_NEAR(weyl_integral_multiplicity(t, rt, mu), c, 1e-9);
  auto id = preset_subgroup(k, k, "identity");
  auto wm = weight_multiplicities(k, lambda);
  EXPECT_NEAR(weyl_integral_multiplicity(k, wm, lambda), 1, 1e-9);
  EXPECT_NEAR(weyl_integral_multiplicity(k, wm, Weight{1, 1}), 0, 1e-9);
}

TEST(Averaging, Identity) {
  EXPECT_LT(averaging_identity_check(Weight{0}, 16).deviation, 1e-14);
  EXPECT_LT(averaging_identity_check(Weight{1}, 256).deviation, 1e-6);
  EXPECT_LT(averaging_identity_check(Weight{4}, 256).deviation, 1e-5);
  auto a = averaging_identity_deviation(Weight{4}, 8);
  EXPECT_GT(a.deviation, 1e-10);
  EXPECT_GE(a.deviation / a.doubled_deviation, 4.0);
}

TEST(Convergence, Trichotomy) {
  for (auto g : {"SU(2)", "SU(2)xSU(2)", "SU(3)", "U(1)", "SU(2)xU(1)"}) {
    auto rs = rs_of(g);
    EXPECT_EQ(convergence_class(rs, series_delta(rs, 40)).kind, ConvergenceKind::Distributional) << g;
    EXPECT_EQ(convergence_class(rs, series_synthetic(rs, 40, {SyntheticRule::Smooth})).kind, ConvergenceKind::Smooth) << g;
    EXPECT_EQ(convergence_class(rs, series_synthetic(rs, 40, {SyntheticRule::ExpGrowth})).kind, ConvergenceKind::Divergent) << g;
  }
  auto su2 = rs_of("SU(2)");
  auto cc = convergence_class(su2, series_delta(su2, 40));
  EXPECT_EQ(cc.min_N, 2);
  EXPECT_FALSE(cc.diagnostics.shells.empty());
}

TEST(Convergence, InsufficientData) {
  auto rs = rs_of("SU(2)");
  try {
    convergence_class(rs, series_delta(rs, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Afsupp, SmoothDeltaPlanted) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto q = quadrant(rs);
  EXPECT_TRUE(estimate_afsupp(rs, series_synthetic(rs, 40, {SyntheticRule::Smooth})).empty());
  auto full = estimate_afsupp(rs, series_delta(rs, 40));
  EXPECT_LT(max_excess_angle(full, q), 1e-12);
  EXPECT_LT(max_excess_angle(q, full), 0.1);
  auto ray = make_exact(Metric(rs), {{rv({1, 0})}});
  for (double p : {0.0, 2.0, 5.0}) {
    auto est = estimate_afsupp(rs, series_synthetic(rs, 40, {SyntheticRule::PlantedCone, p, ray}));
    EXPECT_LT(max_excess_angle(est, ray), 0.1) << p;
    EXPECT_LT(max_excess_angle(ray, est), 0.1) << p;
  }
}

TEST(Afsupp, DeltaSRecoversCone) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto cone = make_exact(Metric(rs), {{rv({1, 1})}});
  auto est = estimate_afsupp(rs, series_delta_S(rs, 40, cone));
  EXPECT_LT(max_excess_angle(est, cone), kDefaultOpening + 5e-3);
  EXPECT_LT(max_excess_angle(cone, est), kDefaultOpening + 5e-3);
}

TEST(Afsupp, MonotoneUnderAddedEntries) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto ray = make_exact(Metric(rs), {{rv({1, 0})}});
  auto s = series_synthetic(rs, 40, {SyntheticRule::PlantedCone, 2, ray});
  auto before = estimate_afsupp(rs, s);
  for (auto& [w, v] : s.entries)
    if (norm(rs, w) > 32 && w[1] == w[0]) v = 1e3;
  auto after = estimate_afsupp(rs, s);
  EXPECT_GT(after.sampled().directions.size(), before.sampled().directions.size());
  for (const auto& d : before.sampled().directions) EXPECT_LT(angle_to_cone(after, d), 1e-12);
}

TEST(Afsupp, InsufficientShells) {
  auto rs = rs_of("SU(2)xSU(2)");
  EXPECT_THROW(estimate_afsupp(rs, series_delta(rs, 1.5)), Error);
}

TEST(Casimir, BoundCheck) {
  auto su2 = rs_of("SU(2)");
  auto c = casimir_bound_check(su2, 100 / std::sqrt(2.0));
  EXPECT_TRUE(c.holds);
  EXPECT_EQ(c.checked, 101u);
  double expect = 0;
  for (int n = 0; n <= 100; ++n) {
    const double r = n / std::sqrt(2.0);
    expect = std::max(expect, (1 + n * n / 2.0 + n) / ((1 + r) * (1 + r)));
  }
  EXPECT_NEAR(c.fitted_C, expect, 1e-12);
  auto prod = casimir_bound_check(rs_of("SU(2)xSU(3)xU(1)"), 12);
  EXPECT_TRUE(prod.holds);
  EXPECT_GE(prod.fitted_C, 1.0);
}

TEST(Csv, Format) {
  auto rs = rs_of("SU(2)xSU(2)");
  auto s = series_delta(rs, 1);
  std::ostringstream os;
  write_csv(os, rs, s);
  const std::string expect =
      "lambda_1,lambda_2,norm_lambda,value\n"
      "0,0,0,1\n"
      "0,1,0.70710678118654757,2\n"
      "1,0,0.70710678118654757,2\n"
      "1,1,1,4\n";
  EXPECT_EQ(os.str(), expect);
}
