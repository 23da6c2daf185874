#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sft/graded_linear.hpp"

using namespace sft;

TEST(Rational, ParsesAndCanonicalizes) {
  EXPECT_EQ(parse_rational("6/4"), make_rational(3, 2));
  EXPECT_EQ(parse_rational("-3"), make_rational(-3));
  EXPECT_THROW(parse_rational("1/0"), InvalidInput);
  EXPECT_THROW(parse_rational("abc"), InvalidInput);
  EXPECT_THROW(parse_rational("1/-2"), InvalidInput);
  EXPECT_THROW(make_rational(1, 0), InvalidInput);
  EXPECT_EQ(to_string(parse_rational("4/8")), "1/2");
}

TEST(KoszulSign, BasicCases) {
  EXPECT_EQ(koszul_sign({0, 1, 2}, {1, 1, 1}), 1);
  EXPECT_EQ(koszul_sign({1, 0}, {1, 1}), -1);
  EXPECT_EQ(koszul_sign({1, 0}, {1, 0}), 1);
  EXPECT_EQ(koszul_sign({2, 1, 0}, {1, 1, 1}), -1);
  EXPECT_THROW(koszul_sign({0, 1}, {1}), InvalidInput);
  EXPECT_THROW(koszul_sign({0, 0}, {1, 1}), InvalidInput);
}

TEST(KoszulSign, HomomorphismUnderRandomComposition) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    int n = std::uniform_int_distribution<int>(0, 8)(rng);
    std::vector<int> par(n), p(n), q(n);
    for (auto& x : par) x = std::uniform_int_distribution<int>(0, 1)(rng);
    std::iota(p.begin(), p.end(), 0);
    std::iota(q.begin(), q.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(q.begin(), q.end(), rng);
    std::vector<int> r(n), par_after_p(n);
    for (int i = 0; i < n; ++i) r[i] = p[q[i]], par_after_p[i] = par[p[i]];
    EXPECT_EQ(koszul_sign(r, par), koszul_sign(p, par) * koszul_sign(q, par_after_p));
  }
}

TEST(KoszulSign, SortSignMatchesDirectSwaps) {
  std::vector<int> keys{3, 1, 2};
  int s = sort_sign(keys, {1, 1, 0});
  EXPECT_EQ(keys, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(s, -1);
}

TEST(Matrix, RankKernelSolveInverse) {
  Matrix a(2, 3);
  a(0, 0) = 1, a(0, 1) = 2, a(0, 2) = 3;
  a(1, 0) = 2, a(1, 1) = 4, a(1, 2) = 6;
  EXPECT_EQ(rank(a), 1u);
  Matrix k = kernel(a);
  EXPECT_EQ(k.cols(), 2u);
  EXPECT_TRUE((a * k).is_zero());
  auto x = solve(a, {Rational(1), Rational(2)});
  ASSERT_TRUE(x);
  EXPECT_EQ(a.apply(*x), (std::vector<Rational>{1, 2}));
  EXPECT_FALSE(solve(a, {Rational(1), Rational(3)}));
  std::mt19937_64 rng(3);
  Matrix u = oracle::random_unimodular(5, rng);
  auto inv = inverse(u);
  ASSERT_TRUE(inv);
  EXPECT_EQ(u * *inv, Matrix::identity(5));
}

TEST(ChainComplex, RejectsNonzeroSquare) {
  Matrix d1(1, 1), d2(1, 1);
  d1(0, 0) = 1;
  d2(0, 0) = 1;
  EXPECT_THROW(ChainComplex::from_dims(0, {1, 1, 1}, {Matrix(0, 1), d1, d2}), InvalidInput);
  EXPECT_THROW(ChainComplex::from_dims(0, {1, 2}, {Matrix(0, 1), Matrix(1, 1)}), InvalidInput);
}

TEST(Homology, ZeroDifferentialKeepsDimensions) {
  auto c = ChainComplex::from_dims(0, {2, 3}, {Matrix(0, 2), Matrix(2, 3)});
  auto h = homology_dimensions(c);
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[1], 3u);
}

TEST(Homology, IdentityDifferentialIsAcyclic) {
  auto c = ChainComplex::from_dims(0, {1, 1}, {Matrix(0, 1), Matrix::identity(1)});
  auto h = homology_dimensions(c);
  EXPECT_EQ(h[0], 0u);
  EXPECT_EQ(h[1], 0u);
}

TEST(Homology, MatchesIndependentRankOracleAndEuler) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    auto dims = oracle::random_dims(4, 3, rng);
    auto c = oracle::random_complex(-1, dims, rng);
    auto h = homology_dimensions(c);
    long chi = 0;
    for (int k = c.lo(); k <= c.hi(); ++k) {
      size_t expected = c.dim(k) - oracle::rational_rank(c.d(k)) - oracle::rational_rank(c.d(k + 1));
      EXPECT_EQ(h[k], expected);
      chi += (k % 2 == 0 ? 1 : -1) * static_cast<long>(h[k]);
    }
    EXPECT_EQ(chi, euler_characteristic(c));
  }
}

TEST(MappingCylinder, IdentityMapHasHomologyOfSource) {
  std::mt19937_64 rng(5);
  auto c = oracle::random_complex(0, {2, 3, 1}, rng);
  auto cyl = mapping_cylinder(ChainMap::identity(c));
  EXPECT_TRUE(is_quasi_isomorphism(cyl.projection));
  auto hc = homology_dimensions(c), hy = homology_dimensions(cyl.complex);
  for (auto [k, v] : hc) EXPECT_EQ(hy[k], v);
  EXPECT_TRUE(compose(cyl.projection, cyl.inclusion).equals(ChainMap::identity(c)));
}

TEST(MappingCylinder, ZeroMapToZeroComplexIsAcyclic) {
  std::mt19937_64 rng(6);
  auto c = oracle::random_complex(0, {2, 2}, rng);
  ChainComplex zero;
  auto cyl = mapping_cylinder(ChainMap::zero(c, zero));
  EXPECT_TRUE(is_acyclic(cyl.complex));
}

TEST(MappingCylinder, RandomMapsProjectQuasiIsomorphically) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    auto A = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto B = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto f = oracle::random_chain_map(A, B, rng);
    auto cyl = mapping_cylinder(f);
    auto hb = homology_dimensions(B), hy = homology_dimensions(cyl.complex);
    for (int k = std::min(B.lo(), cyl.complex.lo()); k <= std::max(B.hi(), cyl.complex.hi()); ++k)
      EXPECT_EQ(hy.count(k) ? hy[k] : 0, hb.count(k) ? hb[k] : 0);
    for (int k = cyl.complex.lo(); k <= cyl.complex.hi(); ++k) EXPECT_EQ(rank(cyl.projection.at(k)), B.dim(k));
    EXPECT_TRUE(compose(cyl.projection, cyl.inclusion).equals(f));
    EXPECT_TRUE(is_quasi_isomorphism(cyl.projection));
  }
}

TEST(Lift, IsomorphismGivesTopTimesInverse) {
  std::mt19937_64 rng(12);
  auto A = oracle::random_complex(0, {2, 2}, rng);
  // i: A -> A' an isomorphism obtained by a basis change in each degree.
  std::vector<Matrix> d2{Matrix(0, 2)};
  Matrix P0 = oracle::random_unimodular(2, rng), P1 = oracle::random_unimodular(2, rng);
  d2.push_back(P0 * A.d(1) * *inverse(P1));
  auto B = ChainComplex::from_dims(0, {2, 2}, d2);
  ChainMap i(A, B, {{0, P0}, {1, P1}});
  ChainMap iinv_map(B, A, {{0, *inverse(P0)}, {1, *inverse(P1)}});
  auto X = mapping_cone(ChainMap::identity(oracle::random_complex(0, {1, 2}, rng)));
  ChainComplex Y;
  auto top = oracle::random_chain_map(A, X, rng);
  auto L = lift_against_acyclic_fibration(i, ChainMap::zero(X, Y), top, ChainMap::zero(B, Y));
  EXPECT_TRUE(L.equals(compose(top, iinv_map)));
}

TEST(Lift, RejectsBrokenHypotheses) {
  auto A = ChainComplex::from_dims(0, {1}, {Matrix(0, 1)});
  auto X = ChainComplex::from_dims(0, {1}, {Matrix(0, 1)});
  ChainComplex Y;
  auto top = ChainMap::identity(A);
  // p onto zero with non-acyclic kernel.
  try {
    lift_against_acyclic_fibration(ChainMap::identity(A), ChainMap::zero(X, Y), top, ChainMap::zero(A, Y));
    FAIL();
  } catch (const HypothesisViolation& e) {
    EXPECT_NE(std::string(e.what()).find("ker p acyclic"), std::string::npos);
  }
  // p not surjective.
  try {
    lift_against_acyclic_fibration(ChainMap::identity(A), ChainMap::zero(X, A), top, ChainMap::identity(A));
    FAIL();
  } catch (const HypothesisViolation& e) {
    EXPECT_NE(std::string(e.what()).find("p surjective"), std::string::npos);
  }
  // square does not commute.
  auto two = ChainMap(A, A, {{0, Matrix::identity(1).scaled(2)}});
  try {
    lift_against_acyclic_fibration(ChainMap::identity(A), ChainMap::identity(A), top, two);
    FAIL();
  } catch (const HypothesisViolation& e) {
    EXPECT_NE(std::string(e.what()).find("square commutes"), std::string::npos);
  }
}

TEST(Lift, RandomInstancesSatisfyBothTriangles) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto A = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto Z = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto g = oracle::random_chain_map(A, Z, rng);
    auto cylB = mapping_cylinder(g);
    auto i = cylB.inclusion;
    auto Y = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto W = oracle::random_complex(0, oracle::random_dims(3, 2, rng), rng);
    auto h = oracle::random_chain_map(W, Y, rng);
    auto cylX = mapping_cylinder(h);
    auto p = cylX.projection;
    auto bottom = oracle::random_chain_map(cylB.complex, Y, rng);
    auto r = oracle::random_chain_map(A, cylX.complex, rng);
    auto s = cylX.section;
    auto sb = compose(s, compose(bottom, i));
    auto idX = ChainMap::identity(cylX.complex);
    std::map<int, Matrix> topm;
    for (int k = std::min(A.lo(), cylX.complex.lo()); k <= std::max(A.hi(), cylX.complex.hi()); ++k)
      topm[k] = sb.at(k) + (idX.at(k) - s.at(k) * p.at(k)) * r.at(k);
    ChainMap top(A, cylX.complex, topm);
    auto L = lift_against_acyclic_fibration(i, p, top, bottom);
    EXPECT_TRUE(compose(L, i).equals(top));
    EXPECT_TRUE(compose(p, L).equals(bottom));
  }
}
