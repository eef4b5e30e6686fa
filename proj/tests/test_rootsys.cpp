#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ksupp/rootsys.hpp"

using namespace ksupp;

namespace {

RootSystem rs_of(const char* g) { return build_root_system(GroupDescriptor::parse(g)); }

}  // namespace

TEST(Descriptor, ParsesProducts) {
  auto g = GroupDescriptor::parse(" su(2) x SU(2)xU(1) ");
  ASSERT_EQ(g.factors.size(), 3u);
  EXPECT_EQ(g.canonical(), "SU(2)xSU(2)xU(1)");
  EXPECT_EQ(g.rank(), 3);
}

TEST(Descriptor, RejectsBadInput) {
  EXPECT_THROW(GroupDescriptor::parse("SU(1)"), Error);
  EXPECT_THROW(GroupDescriptor::parse(""), Error);
  try {
    GroupDescriptor::parse("SO(5)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedType);
  }
}

TEST(RootSystem, SU2Data) {
  auto rs = rs_of("SU(2)");
  ASSERT_EQ(rs.simple_roots.size(), 1u);
  EXPECT_EQ(inner_product(rs, rs.simple_roots[0], rs.simple_roots[0]), Rational(2));
  EXPECT_EQ(inner_product(rs, Weight{1}, Weight{1}), Rational(1, 2));
  EXPECT_EQ(rs.rho, (RVec{Rational(1)}));
  EXPECT_EQ(rs.simple_roots[0], (RVec{Rational(2)}));
}

TEST(RootSystem, U1) {
  auto rs = rs_of("U(1)");
  EXPECT_TRUE(rs.simple_roots.empty());
  EXPECT_TRUE(rs.positive_roots.empty());
  EXPECT_EQ(rs.rho, (RVec{Rational(0)}));
  EXPECT_EQ(rs.gram(0, 0), Rational(1));
}

TEST(RootSystem, SU2Squared) {
  auto rs = rs_of("SU(2)xSU(2)");
  EXPECT_EQ(rs.positive_roots.size(), 2u);
  EXPECT_EQ(rs.rho, (RVec{Rational(1), Rational(1)}));
  EXPECT_EQ(rs.gram(0, 1), Rational(0));
}

TEST(RootSystem, SU3Gram) {
  auto rs = rs_of("SU(3)");
  EXPECT_EQ(rs.gram(0, 0), Rational(2, 3));
  EXPECT_EQ(rs.gram(0, 1), Rational(1, 3));
  EXPECT_EQ(rs.positive_roots.size(), 3u);
  for (const auto& a : rs.positive_roots) EXPECT_EQ(inner_product(rs, a, a), Rational(2));
}

TEST(RootSystem, RhoPairsToOneWithSimpleCoroots) {
  for (auto g : {"SU(2)", "SU(3)", "SU(4)", "SU(2)xSU(3)xU(1)"}) {
    auto rs = rs_of(g);
    EXPECT_TRUE(is_dominant(rs, Weight(rs.rho)));
    for (const auto& a : rs.simple_roots) EXPECT_EQ(2 * inner_product(rs, rs.rho, a) / inner_product(rs, a, a), Rational(1));
    RVec half(rs.rank(), Rational(0));
    for (const auto& a : rs.positive_roots) half = half + Rational(1, 2) * a;
    EXPECT_EQ(half, rs.rho) << g;
  }
}

TEST(Weyl, Orders) {
  EXPECT_EQ(enumerate_weyl_group(rs_of("SU(2)")).size(), 2u);
  EXPECT_EQ(enumerate_weyl_group(rs_of("SU(3)")).size(), 6u);
  EXPECT_EQ(enumerate_weyl_group(rs_of("SU(2)xSU(2)")).size(), 4u);
  EXPECT_EQ(enumerate_weyl_group(rs_of("SU(4)")).size(), 24u);
  EXPECT_EQ(weyl_group_order(rs_of("SU(2)xSU(3)")), 12u);
}

TEST(Weyl, CapExceeded) {
  try {
    enumerate_weyl_group(rs_of("SU(4)"), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WeylGroupTooLarge);
  }
}

TEST(Weyl, DominantRepresentativeSU2) {
  auto rs = rs_of("SU(2)");
  auto [w, g] = dominant_representative(rs, Weight{-3});
  EXPECT_EQ(w, (Weight{3}));
  EXPECT_EQ(g.word.size(), 1u);
  auto [w2, g2] = dominant_representative(rs, Weight{5});
  EXPECT_EQ(w2, (Weight{5}));
  EXPECT_TRUE(g2.word.empty());
}

TEST(Weyl, DominantRepresentativeSU3MatchesBruteForce) {
  auto rs = rs_of("SU(3)");
  Weight v{-1, 2};
  auto [w, g] = dominant_representative(rs, v);
  EXPECT_TRUE(is_dominant(rs, w));
  EXPECT_EQ(apply(g, v), w);
  int dominant_images = 0;
  for (const auto& e : enumerate_weyl_group(rs)) {
    auto img = apply(e, v);
    if (is_dominant(rs, img)) {
      ++dominant_images;
      EXPECT_EQ(img, w);
    }
  }
  EXPECT_GE(dominant_images, 1);
  EXPECT_EQ(w, (Weight{1, 1}));
}

TEST(Weyl, InvariantUnderGroupAction) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(-6, 6);
  for (auto g : {"SU(3)", "SU(4)", "SU(2)xSU(2)xSU(2)", "SU(2)xU(1)"}) {
    auto rs = rs_of(g);
    auto group = enumerate_weyl_group(rs);
    for (int trial = 0; trial < 10; ++trial) {
      RVec c;
      for (std::size_t i = 0; i < rs.rank(); ++i) c.emplace_back(d(rng), 1 + (trial % 3));
      Weight v(c);
      auto dom = dominant_representative(rs, v).first;
      for (const auto& e : group) EXPECT_EQ(dominant_representative(rs, apply(e, v)).first, dom);
      auto orbit = weyl_orbit(rs, v);
      EXPECT_EQ(group.size() % orbit.size(), 0u);
    }
  }
}

TEST(Weyl, GramInvariance) {
  for (auto g : {"SU(3)", "SU(4)", "SU(2)xSU(3)"}) {
    auto rs = rs_of(g);
    for (const auto& e : enumerate_weyl_group(rs))
      for (std::size_t i = 0; i < rs.rank(); ++i)
        for (std::size_t j = 0; j < rs.rank(); ++j) {
          RVec a(rs.rank(), Rational(0)), b(rs.rank(), Rational(0));
          a[i] = 1;
          b[j] = 1;
          EXPECT_EQ(inner_product(rs, e.matrix * a, e.matrix * b), rs.gram(i, j));
        }
  }
}

TEST(Weight, ShapeMismatch) {
  auto rs = rs_of("SU(3)");
  try {
    inner_product(rs, Weight{1}, Weight{1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Weight, EpsilonCoordinates) {
  auto rs = rs_of("SU(3)");
  auto e = epsilon_coords(rs, 0, RVec{Rational(1), Rational(0)});
  EXPECT_EQ(e, (RVec{Rational(2, 3), Rational(-1, 3), Rational(-1, 3)}));
}
