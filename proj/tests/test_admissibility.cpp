#include <gtest/gtest.h>

#include <cmath>

#include "ksupp/admissibility.hpp"

using namespace ksupp;

namespace {

struct Setup {
  RootSystem k;
  RootSystem m;
  Subgroup sub;
};

Setup setup(const char* group, const char* preset) {
  auto k = build_root_system(GroupDescriptor::parse(group));
  auto m = build_root_system(subgroup_group(k.descriptor, preset));
  auto sub = preset_subgroup(k, m, preset);
  return {std::move(k), std::move(m), std::move(sub)};
}

SupportSpec monoid(Weight base, std::vector<Weight> gens, std::int64_t mult = 1) {
  return {{SupportComponent{std::move(base), std::move(gens), MultiplicityPolynomial::constant(mult)}}};
}

PipelineParams params(double radius) {
  PipelineParams p;
  p.radius = radius;
  p.n_samples = 5000;
  p.seed = 7;
  return p;
}

}  // namespace

TEST(Pipeline, DiagonalRayIsCertifiedAndVerified) {
  auto s = setup("SU(2)xSU(2)", "diag");
  const auto r = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}}), params(40));
  EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Certified);
  EXPECT_NEAR(r.condition.verdict.min_angle, M_PI / 4, 0.02);
  EXPECT_TRUE(r.condition.as_k.check.performed);
  EXPECT_TRUE(r.condition.as_k.check.agrees);
  std::size_t complete = 0;
  for (const auto& [mu, e] : r.spectrum.entries) {
    EXPECT_EQ(e.multiplicity, 1) << to_string(mu);
    complete += e.complete;
  }
  EXPECT_GT(complete, 10u);
  EXPECT_EQ(r.poly_fit.status, FitStatus::Fitted);
  EXPECT_TRUE(r.poly_fit.bounded_evidence);
  EXPECT_NEAR(r.poly_fit.degree, 0.0, 1e-9);
  EXPECT_TRUE(r.as_m.containment.verified);
  EXPECT_FALSE(r.advisory);
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Pipeline, TwoGeneratorMonoidOnDiagonal) {
  auto s = setup("SU(2)xSU(2)", "diag");
  const auto r = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}, Weight{2, 1}}), params(40));
  EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Certified);
  EXPECT_TRUE(r.poly_fit.bounded_evidence);
  EXPECT_GT(r.poly_fit.degree, 0.5);
  EXPECT_LT(r.poly_fit.degree, 2.5);
  EXPECT_TRUE(r.as_m.containment.verified);
}

TEST(Pipeline, TorusOfSU2IsNegativeControl) {
  auto s = setup("SU(2)", "torus");
  for (double R : {20.0, 40.0}) {
    const auto r = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0}, {Weight{1}}), params(R));
    EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Failed);
    EXPECT_TRUE(r.advisory);
    EXPECT_EQ(r.exit_code(), 1);
    EXPECT_FALSE(r.poly_fit.bounded_evidence);
    const Weight zero{0};
    ASSERT_TRUE(r.spectrum.entries.count(zero));
    const auto& e = r.spectrum.entries.at(zero);
    EXPECT_FALSE(e.complete);
    EXPECT_EQ(e.multiplicity, static_cast<std::int64_t>(std::floor(R / std::sqrt(2.0))) + 1);
    const auto g = r.spectrum.growing();
    EXPECT_NE(std::find(g.begin(), g.end(), zero), g.end());
  }
}

TEST(Pipeline, FiniteSupportMatchesBranching) {
  auto s = setup("SU(3)", "su2xu1");
  const Weight lambda{2, 1};
  const auto r = run_pipeline(s.k, s.m, s.sub, monoid(lambda, {}), params(10));
  EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Certified);
  EXPECT_TRUE(r.as_m.as_m.empty());
  EXPECT_TRUE(r.as_m.containment.verified);
  EXPECT_EQ(r.poly_fit.status, FitStatus::Vacuous);
  const auto b = branch(s.k, s.m, s.sub.torus, lambda);
  ASSERT_EQ(r.spectrum.entries.size(), b.size());
  for (const auto& [mu, c] : b) {
    EXPECT_EQ(r.spectrum.entries.at(mu).multiplicity, c);
    EXPECT_TRUE(r.spectrum.entries.at(mu).complete);
  }
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Pipeline, MultiplicityScalingLeavesVerdictsUnchanged) {
  auto s = setup("SU(2)xSU(2)", "diag");
  const auto a = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}}), params(30));
  const auto b = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}}, 3), params(30));
  EXPECT_EQ(a.condition.verdict.kind, b.condition.verdict.kind);
  EXPECT_DOUBLE_EQ(a.condition.verdict.min_angle, b.condition.verdict.min_angle);
  EXPECT_EQ(a.poly_fit.bounded_evidence, b.poly_fit.bounded_evidence);
  EXPECT_NEAR(a.poly_fit.degree, b.poly_fit.degree, 1e-9);
  EXPECT_EQ(a.as_m.containment.verified, b.as_m.containment.verified);
  for (const auto& [mu, e] : a.spectrum.entries) EXPECT_EQ(b.spectrum.entries.at(mu).multiplicity, 3 * e.multiplicity);
}

TEST(Spectrum, CompleteEntriesAreStableUnderDoubling) {
  auto s = setup("SU(2)xSU(2)", "diag");
  const auto spec = monoid(Weight{0, 0}, {Weight{1, 0}, Weight{2, 1}});
  const auto lo = restricted_spectrum(s.k, s.m, s.sub.torus, spec, 16);
  const auto hi = restricted_spectrum(s.k, s.m, s.sub.torus, spec, 32);
  std::size_t checked = 0;
  for (const auto& [mu, e] : lo.entries) {
    if (!e.complete) continue;
    ++checked;
    EXPECT_EQ(hi.entries.at(mu).multiplicity, e.multiplicity) << to_string(mu);
    EXPECT_TRUE(hi.entries.at(mu).complete);
  }
  EXPECT_GT(checked, 3u);
}

TEST(Spectrum, SU3RayIntoSU2xU1) {
  auto s = setup("SU(3)", "su2xu1");
  const auto r = run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}}), params(24));
  EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Certified);
  for (const auto& [mu, e] : r.spectrum.entries) EXPECT_EQ(e.multiplicity, 1);
  EXPECT_TRUE(r.poly_fit.bounded_evidence);
  EXPECT_TRUE(r.as_m.containment.verified);
}

TEST(PolyFit, NeedsThreeShells) {
  auto rs = build_root_system(GroupDescriptor::parse("SU(2)"));
  std::map<Weight, std::int64_t> few{{Weight{2}, 1}, {Weight{3}, 1}};
  EXPECT_THROW(poly_boundedness_fit(rs, few), Error);
  std::map<Weight, std::int64_t> quad;
  for (int n = 0; n <= 60; ++n) quad[Weight{n}] = (n + 1) * (n + 1);
  const auto fit = poly_boundedness_fit(rs, quad);
  EXPECT_TRUE(fit.bounded_evidence);
  EXPECT_NEAR(fit.degree, 2.0, 0.35);
}

TEST(PolyFit, LinearGrowthOnU1) {
  auto rs = build_root_system(GroupDescriptor::parse("U(1)"));
  std::map<Weight, std::int64_t> lin;
  for (int k = 0; k <= 64; ++k) lin[Weight{k}] = k + 1;
  const auto fit = poly_boundedness_fit(rs, lin);
  EXPECT_TRUE(fit.bounded_evidence);
  EXPECT_NEAR(fit.degree, 1.0, 0.2);
}

TEST(Containment, ZeroTargetIsViolated) {
  auto s = setup("SU(2)xSU(2)", "diag");
  auto p = params(40);
  const auto spec = monoid(Weight{0, 0}, {Weight{1, 0}});
  const auto rsp = restricted_spectrum(s.k, s.m, s.sub.torus, spec, p.radius);
  const auto good = verify_as_m(s.k, s.m, s.sub, asymptotic_cone(s.k, spec), rsp, false, p);
  ASSERT_FALSE(good.as_m.empty());
  // Test double: the target shrunk to nothing.
  const auto shrunk = make_sampled(Metric(s.m), {}, p.tolerance);
  const auto c = check_containment(good.as_m, shrunk, p.margin + p.tolerance);
  EXPECT_FALSE(c.verified);
  ASSERT_TRUE(c.witness.has_value());
  EXPECT_GT(c.witness->norm(), 0);
}

TEST(Spectrum, ParallelMergeMatchesSerial) {
  auto s = setup("SU(3)", "su2xu1");
  const auto spec = monoid(Weight{0, 0}, {Weight{1, 0}, Weight{0, 1}});
  const auto a = restricted_spectrum(s.k, s.m, s.sub.torus, spec, 8, 0.5, 1);
  const auto b = restricted_spectrum(s.k, s.m, s.sub.torus, spec, 8, 0.5, 4);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (const auto& [mu, e] : a.entries) {
    EXPECT_EQ(b.entries.at(mu).multiplicity, e.multiplicity);
    EXPECT_EQ(b.entries.at(mu).complete, e.complete);
  }
  EXPECT_NEAR(a.op_norm, b.op_norm, 0);
  EXPECT_GT(a.op_norm, 0);
}

TEST(Pipeline, EmptySpecIsVacuous) {
  auto s = setup("SU(2)xSU(2)", "diag");
  const auto r = run_pipeline(s.k, s.m, s.sub, SupportSpec{}, params(10));
  EXPECT_EQ(r.condition.verdict.kind, ConditionKind::Certified);
  EXPECT_TRUE(r.spectrum.entries.empty());
  EXPECT_EQ(r.poly_fit.status, FitStatus::Vacuous);
  EXPECT_TRUE(r.as_m.containment.verified);
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Pipeline, StageLabelsAndMargin) {
  auto s = setup("SU(2)xSU(2)", "diag");
  auto p = params(20);
  p.margin = p.tolerance / 2;
  try {
    run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{1, 0}}), p);
    FAIL() << "expected MarginTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MarginTooSmall);
    EXPECT_NE(std::string(e.what()).find("[params]"), std::string::npos);
  }
  try {
    run_pipeline(s.k, s.m, s.sub, monoid(Weight{0, 0}, {Weight{-1, 0}}), params(20));
    FAIL() << "expected an invalid support";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("[support]"), std::string::npos);
  }
}

TEST(Pipeline, DeterministicForSeed) {
  auto s = setup("SU(2)xSU(2)xSU(2)", "diag");
  const auto spec = monoid(Weight{0, 0, 0}, {Weight{1, 0, 0}});
  const auto a = run_pipeline(s.k, s.m, s.sub, spec, params(16));
  const auto b = run_pipeline(s.k, s.m, s.sub, spec, params(16));
  EXPECT_EQ(a.condition.verdict.min_angle, b.condition.verdict.min_angle);
  EXPECT_EQ(a.as_m.containment.max_excess, b.as_m.containment.max_excess);
  EXPECT_EQ(a.condition.verdict.kind, ConditionKind::Certified);
}
