#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "tree_gen.hpp"
#include "sft/trees.hpp"

using namespace sft;

namespace {

SimpleOrbitSeed seed(const std::string& name, int parity, long cz, long action = 1) {
  SimpleOrbitSeed s;
  s.name = name;
  s.parity = parity;
  s.cz = cz;
  s.action = action;
  return s;
}

Edge edge(int src, int dst, int orbit, int level = 0) {
  Edge e;
  e.src = src;
  e.dst = dst;
  e.orbit = orbit;
  e.level = level;
  return e;
}

// Brute force over vertex permutations; parallel edges with identical labels contribute factorials.
long brute_force_tree_auts(const DecoratedTree& t) {
  std::vector<int> perm(t.nv());
  std::iota(perm.begin(), perm.end(), 0);
  long total = 0;
  auto fact = [](long n) {
    long f = 1;
    for (long i = 2; i <= n; ++i) f *= i;
    return f;
  };
  do {
    bool ok = true;
    for (int v = 0; v < t.nv() && ok; ++v) ok = t.vertices[v] == t.vertices[perm[v]];
    if (!ok) continue;
    std::map<std::tuple<int, int, int, int>, int> a, b;
    for (auto& e : t.edges) {
      a[{e.src, e.dst, e.orbit, e.level}]++;
      b[{e.src < 0 ? -1 : perm[e.src], e.dst < 0 ? -1 : perm[e.dst], e.orbit, e.level}]++;
    }
    if (a != b) continue;
    long ways = 1;
    for (auto& [k, c] : a) ways *= fact(c);
    total += ways;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

bool connected_subset(const DecoratedTree& t, unsigned mask) {
  std::vector<int> vs;
  for (int v = 0; v < t.nv(); ++v)
    if (mask >> v & 1) vs.push_back(v);
  if (vs.empty()) return false;
  std::set<int> reached{vs[0]};
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto& e : t.edges)
      if (e.src >= 0 && e.dst >= 0 && (mask >> e.src & 1) && (mask >> e.dst & 1) &&
          (reached.count(e.src) != reached.count(e.dst))) {
        reached.insert(e.src);
        reached.insert(e.dst);
        grew = true;
      }
  }
  return reached.size() == vs.size();
}

// Key of a morphism out of a fixed tree: contracted edges and the labels every source vertex lands on.
std::string morphism_key(const TreeMorphism& f) {
  std::string k;
  for (size_t e = 0; e < f.edge_map.size(); ++e) k += f.edge_map[e] < 0 ? 'c' : '.';
  k += "|";
  for (size_t v = 0; v < f.vertex_map.size(); ++v) {
    const auto& w = f.target.vertices[f.vertex_map[v]];
    k += std::to_string(f.vertex_map[v]) + ":" + std::to_string(w.lp) + std::to_string(w.lm) + ",";
  }
  return k + s_name(f.target.s);
}

}  // namespace

TEST(Validate, OneVertexFlavorITreeIsValid) {
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 1), edge(0, -1, 2)};
  EXPECT_TRUE(validate(t).empty());
}

TEST(Validate, FlavorIIInteriorEdgeLevelMustMatchUpperVertex) {
  DecoratedTree t;
  t.flavor = Flavor::II;
  t.vertices = {Vertex{{}, 0, 1}, Vertex{{}, 0, 1}};
  t.edges = {edge(-1, 0, 0, 0), edge(0, 1, 0, 0), edge(1, -1, 0, 1)};
  auto v = validate(t);
  EXPECT_NE(std::find(v.begin(), v.end(), "outgoing_level:0"), v.end());
}

TEST(Validate, FlavorIVZeroLabelForbidsLevelOneVertices) {
  DecoratedTree t;
  t.flavor = Flavor::IV;
  t.s = SLabel::Zero;
  t.vertices = {Vertex{{}, 0, 1}};
  t.edges = {edge(-1, 0, 0, 0)};
  auto v = validate(t);
  EXPECT_NE(std::find(v.begin(), v.end(), "vertex_type_for_s:0"), v.end());
}

TEST(Validate, StructuralViolations) {
  DecoratedTree t;
  t.vertices = {Vertex{}, Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(-1, 0, 0), edge(-1, -1, 0)};
  auto v = validate(t);
  EXPECT_NE(std::find(v.begin(), v.end(), "bare_edge:2"), v.end());
  EXPECT_NE(std::find(v.begin(), v.end(), "vertex_incoming_count:0"), v.end());
  EXPECT_NE(std::find(v.begin(), v.end(), "vertex_incoming_count:1"), v.end());
  DecoratedTree cyc;
  cyc.vertices = {Vertex{}, Vertex{}};
  cyc.edges = {edge(0, 1, 0), edge(1, 0, 0)};
  v = validate(cyc);
  EXPECT_NE(std::find(v.begin(), v.end(), "cycle:0"), v.end());
  DecoratedTree two;
  two.vertices = {Vertex{}, Vertex{}};
  two.edges = {edge(-1, 0, 0), edge(-1, 1, 0)};
  v = validate(two);
  EXPECT_NE(std::find(v.begin(), v.end(), "disconnected"), v.end());
  two.flavor = Flavor::III;
  two.s = SLabel::ZeroOne;
  two.vertices = {Vertex{{}, 0, 1}, Vertex{{}, 0, 1}};
  EXPECT_TRUE(validate(two).empty());
}

TEST(Contract, EmptySetIsIdentity) {
  DecoratedTree t;
  t.vertices = {Vertex{{1}}, Vertex{{2}}};
  t.edges = {edge(-1, 0, 0), edge(0, 1, 1), edge(1, -1, 2)};
  auto f = contract(t, {});
  EXPECT_EQ(f.target, t);
  EXPECT_TRUE(is_isomorphism(f));
}

TEST(Contract, MergesHomotopyClassesAdditively) {
  DecoratedTree t;
  t.vertices = {Vertex{{1, -2}}, Vertex{{3, 5}}};
  t.edges = {edge(-1, 0, 0), edge(0, 1, 1), edge(1, -1, 2)};
  auto f = contract(t, {1});
  ASSERT_EQ(f.target.nv(), 1);
  EXPECT_EQ(f.target.vertices[0].beta, (std::vector<long>{4, 3}));
  EXPECT_EQ(f.edge_map[1], -1);
  EXPECT_EQ(f.target.ne(), 2);
}

TEST(Contract, InconsistentLevelsAreRejected) {
  // A 00 vertex over two 01 vertices; contracting only one of the two edges mixes levels 0 and 1.
  DecoratedTree t;
  t.flavor = Flavor::II;
  t.vertices = {Vertex{{}, 0, 0}, Vertex{{}, 0, 1}, Vertex{{}, 0, 1}};
  t.edges = {edge(-1, 0, 0, 0), edge(0, 1, 0, 0), edge(0, 2, 0, 0), edge(1, -1, 0, 1), edge(2, -1, 0, 1)};
  ASSERT_TRUE(validate(t).empty());
  EXPECT_THROW(contract(t, {1}), NoConsistentLabeling);
  auto f = contract(t, {1, 2});
  EXPECT_EQ(f.target.vertices[0].lp, 0);
  EXPECT_EQ(f.target.vertices[0].lm, 1);
}

TEST(Contract, RelabelsVertexWithoutOutgoingEdges) {
  DecoratedTree t;
  t.flavor = Flavor::II;
  t.vertices = {Vertex{{}, 0, 0}};
  t.edges = {edge(-1, 0, 0, 0)};
  auto f = contract(t, {}, {{0, 1}});
  EXPECT_EQ(f.target.vertices[0].lm, 1);
  EXPECT_FALSE(is_isomorphism(f));
  EXPECT_THROW(contract(t, {}, {{0, 2}}), NoConsistentLabeling);
}

TEST(Compose, IdentitiesAndMismatch) {
  std::mt19937_64 rng(1);
  auto u = gen::graded_universe(3, rng);
  auto ctx = gen::context_for(u);
  DecoratedTree t;
  t.vertices = {Vertex{{0}}, Vertex{{1}}, Vertex{{0}}};
  t.edges = {edge(-1, 0, 0), edge(0, 1, 1), edge(1, 2, 2), edge(2, -1, 0)};
  auto g = contract(t, {1});
  auto id = identity_morphism(t);
  auto a = compose(id, g, &ctx);
  EXPECT_EQ(a.target, g.target);
  EXPECT_EQ(a.vertex_map, g.vertex_map);
  EXPECT_EQ(a.edge_map, g.edge_map);
  auto b = compose(g, identity_morphism(g.target), &ctx);
  EXPECT_EQ(b.edge_map, g.edge_map);
  EXPECT_THROW(compose(g, g, &ctx), InvalidComposition);
}

TEST(Compose, ThreeStepChainIsAssociative) {
  std::mt19937_64 rng(2);
  auto u = gen::graded_universe(3, rng);
  auto ctx = gen::context_for(u);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = gen::random_tree({Flavor::I, 6, 1}, 3, rng);
    auto inner = t.interior();
    if (inner.size() < 3) continue;
    std::shuffle(inner.begin(), inner.end(), rng);
    auto f = contract(t, {inner[0]});
    auto g = contract(f.target, {f.edge_map[inner[1]]});
    int e3 = g.edge_map[f.edge_map[inner[2]]];
    auto h = contract(g.target, {e3});
    auto left = compose(compose(f, g, &ctx), h, &ctx);
    auto right = compose(f, compose(g, h, &ctx), &ctx);
    EXPECT_EQ(left.target, right.target);
    EXPECT_EQ(left.vertex_map, right.vertex_map);
    EXPECT_EQ(left.edge_map, right.edge_map);
    EXPECT_EQ(left.basepoint_paths, right.basepoint_paths);
    auto direct = contract(t, {inner[0], inner[1], inner[2]});
    EXPECT_TRUE(isomorphic(direct.target, left.target));
  }
}

TEST(Concatenate, SinglePartIsItself) {
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 1)};
  Concatenation c;
  c.parts = {t};
  EXPECT_EQ(concatenate(c), t);
}

TEST(Concatenate, TwoVerticesAlongMatchingEdge) {
  DecoratedTree a, b;
  a.vertices = {Vertex{}};
  a.edges = {edge(-1, 0, 0), edge(0, -1, 1)};
  b.vertices = {Vertex{}};
  b.edges = {edge(-1, 0, 1), edge(0, -1, 2)};
  Concatenation c;
  c.parts = {a, b};
  c.junctions = {Junction{0, 1, 1, 0, 0}};
  auto r = concatenate(c);
  EXPECT_EQ(r.nv(), 2);
  EXPECT_EQ(r.interior().size(), 1u);
  EXPECT_TRUE(validate(r).empty());
  b.edges[0].orbit = 2;
  c.parts = {a, b};
  EXPECT_THROW(concatenate(c), OrbitMismatch);
  c.junctions.clear();
  c.parts = {a, a};
  EXPECT_THROW(concatenate(c), DisconnectedResult);
}

TEST(Concatenate, BracketingsAgree) {
  DecoratedTree a, b, d;
  a.vertices = {Vertex{{1}}};
  a.edges = {edge(-1, 0, 0), edge(0, -1, 1)};
  b.vertices = {Vertex{{2}}};
  b.edges = {edge(-1, 0, 1), edge(0, -1, 2)};
  d.vertices = {Vertex{{3}}};
  d.edges = {edge(-1, 0, 2), edge(0, -1, 0)};
  Concatenation flat;
  flat.parts = {a, b, d};
  flat.junctions = {Junction{0, 1, 1, 0, 0}, Junction{1, 1, 2, 0, 0}};
  Concatenation inner;
  inner.parts = {a, b};
  inner.junctions = {Junction{0, 1, 1, 0, 0}};
  auto ab = concatenate(inner);
  Concatenation outer;
  outer.parts = {ab, d};
  int ab_out = ab.outputs().front();
  outer.junctions = {Junction{0, ab_out, 1, 0, 0}};
  EXPECT_EQ(concatenate(flat), concatenate(outer));
}

TEST(Automorphisms, DistinctSimpleEndsGiveOne) {
  std::vector<ReebOrbit> os{make_orbit(seed("a", 0, 1)), make_orbit(seed("b", 0, 1)), make_orbit(seed("c", 0, 1))};
  OrbitUniverse u(os, 2);
  auto ctx = gen::context_for(u, 0);
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 1), edge(0, -1, 2)};
  EXPECT_EQ(automorphism_order(t, ctx), 1);
}

TEST(Automorphisms, RepeatedCoveredEndsMatchBruteForce) {
  auto s3 = seed("a", 0, 1);
  auto s2 = seed("b", 0, 1);
  OrbitUniverse u({make_orbit(s3, 3, "a3"), make_orbit(s2, 2, "b2")}, 2);
  auto ctx = gen::context_for(u, 0);
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 1), edge(0, -1, 1)};
  EXPECT_EQ(automorphism_order(t, ctx), 24);
  long rotations = 3 * 2 * 2;
  EXPECT_EQ(brute_force_tree_auts(t) * rotations, 24);
}

TEST(Automorphisms, RandomTreesMatchBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = std::vector<Flavor>{Flavor::I, Flavor::II, Flavor::III, Flavor::IV}[trial % 4];
    auto t = gen::random_tree({f, 5, 1}, 2, rng);
    EXPECT_EQ(tree_automorphisms(t), brute_force_tree_auts(t));
  }
}

TEST(Automorphisms, JunctionProduct) {
  OrbitUniverse u({make_orbit(seed("a", 0, 1), 5, "a5")}, 2);
  auto ctx = gen::context_for(u, 0);
  DecoratedTree a, b;
  a.vertices = {Vertex{}};
  a.edges = {edge(-1, 0, 0), edge(0, -1, 0)};
  b = a;
  Concatenation c;
  c.parts = {a, b};
  c.junctions = {Junction{0, 1, 1, 0, 0}};
  EXPECT_EQ(aut_concat(c, ctx), 5);
}

TEST(Automorphisms, RelativeToOneVertexTreeOnlySwapsLeaflessSubtrees) {
  DecoratedTree t;
  t.vertices = {Vertex{}, Vertex{}, Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, 1, 1), edge(0, 2, 1)};
  auto f = contract(t, {1, 2});
  EXPECT_EQ(aut_relative(f), 2);
  t.edges.push_back(edge(1, -1, 0));
  t.edges.push_back(edge(2, -1, 0));
  f = contract(t, {1, 2});
  EXPECT_EQ(aut_relative(f), 1);
  EXPECT_EQ(tree_automorphisms(t), 2);
}

TEST(Index, TrivialCylinderHasIndexZero) {
  OrbitUniverse u({make_orbit(seed("a", 1, 2))}, 2);
  auto ctx = gen::context_for(u, 0);
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 0)};
  EXPECT_EQ(index(t, ctx), 0);
}

TEST(Index, ConleyZehnderFormula) {
  OrbitUniverse u({make_orbit(seed("a", 1, 2)), make_orbit(seed("b", 0, 1))}, 2);
  auto ctx = gen::context_for(u, 0);
  DecoratedTree t;
  t.vertices = {Vertex{}};
  t.edges = {edge(-1, 0, 0), edge(0, -1, 1)};
  EXPECT_EQ(index(t, ctx), 1);
  EXPECT_EQ(codim(t), 1);
  EXPECT_EQ(vdim(t, ctx), 0);
  TreeContext no_n = ctx;
  no_n.n.reset();
  EXPECT_THROW(index(t, no_n), MissingData);
  OrbitUniverse v({make_orbit(seed("a", 1, 2), 2, "a2")}, 2);
  auto cv = gen::context_for(v, 0);
  DecoratedTree s;
  s.vertices = {Vertex{}};
  s.edges = {edge(-1, 0, 0)};
  EXPECT_THROW(index(s, cv), MissingData);
}

TEST(Codim, IntervalLabelLowersCodimension) {
  DecoratedTree t;
  t.flavor = Flavor::III;
  t.s = SLabel::ZeroOne;
  t.vertices = {Vertex{{}, 0, 1}};
  t.edges = {edge(-1, 0, 0, 0), edge(0, -1, 0, 1)};
  EXPECT_EQ(codim(t), -1);
}

TEST(Subtrees, SmallShapes) {
  DecoratedTree one;
  one.vertices = {Vertex{}};
  one.edges = {edge(-1, 0, 0)};
  EXPECT_EQ(enumerate_subtrees(one).size(), 1u);
  DecoratedTree path;
  path.vertices = {Vertex{}, Vertex{}};
  path.edges = {edge(-1, 0, 0), edge(0, 1, 0)};
  EXPECT_EQ(enumerate_subtrees(path).size(), 3u);
  DecoratedTree branch;
  branch.vertices = {Vertex{}, Vertex{}, Vertex{}};
  branch.edges = {edge(-1, 0, 0), edge(0, 1, 0), edge(0, 2, 0)};
  auto subs = enumerate_subtrees(branch);
  EXPECT_EQ(subs.size(), 6u);
  for (auto& s : subs) EXPECT_TRUE(validate(s).empty());
}

TEST(Properties, RandomTreeLaws) {
  std::mt19937_64 rng(4);
  auto u = gen::graded_universe(4, rng);
  auto ctx = gen::context_for(u);
  int decomposed = 0, factor_checks = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto f = std::vector<Flavor>{Flavor::I, Flavor::II, Flavor::III, Flavor::IV}[trial % 4];
    auto t = gen::random_tree({f, 6, 1}, 4, rng);
    ASSERT_TRUE(validate(t, &ctx).empty()) << validate(t, &ctx).front();
    long mu = index(t, ctx);
    // Parity law, per component.
    auto comp = component_ids(t);
    for (int c = 0; c < num_components(t); ++c) {
      std::vector<int> keep;
      for (int v = 0; v < t.nv(); ++v)
        if (comp[v] == c) keep.push_back(v);
      auto part = induced_subtree(t, keep);
      EXPECT_EQ(((index(part, ctx) % 2) + 2) % 2, index_parity(part, ctx));
    }
    // Subtree count against vertex-subset brute force.
    if (t.nv() <= 10) {
      size_t brute = 0;
      for (unsigned m = 1; m < (1u << t.nv()); ++m) brute += connected_subset(t, m);
      EXPECT_EQ(enumerate_subtrees(t).size(), brute);
    }
    // Invariance under every morphism; codim strictly drops unless the morphism is an isomorphism.
    auto outs = enumerate_contractions(t);
    std::set<std::string> keys;
    for (auto& m : outs) keys.insert(morphism_key(m));
    for (auto& m : outs) {
      EXPECT_EQ(index(m.target, ctx), mu);
      int dc = codim(t) - codim(m.target);
      EXPECT_GE(dc, 0);
      EXPECT_EQ(dc == 0, is_isomorphism(m));
      // codim(T/T') > 1 iff the morphism factors through some T'' nontrivially.
      bool factors = false;
      for (auto& g : outs) {
        if (is_isomorphism(g) || factors) continue;
        for (auto& h : enumerate_contractions(g.target)) {
          if (is_isomorphism(h)) continue;
          if (morphism_key(compose(g, h)) == morphism_key(m)) {
            factors = true;
            break;
          }
        }
      }
      EXPECT_EQ(dc > 1, factors);
      ++factor_checks;
    }
    // Maximality three ways.
    bool only_identity = std::all_of(outs.begin(), outs.end(), [](auto& m) { return is_isomorphism(m); });
    auto dec = find_concatenation_decomposition(t);
    EXPECT_EQ(is_maximal(t), only_identity);
    EXPECT_EQ(is_maximal(t), !dec.has_value());
    if (dec) {
      ++decomposed;
      auto glued = concatenate(*dec);
      EXPECT_TRUE(isomorphic(glued, t)) << canonical_form(glued).key << " vs " << canonical_form(t).key;
      long mu_sum = 0;
      int codim_sum = 0;
      for (size_t i = 0; i < dec->parts.size(); ++i) {
        auto p = dec->parts[i];
        if (p.flavor == Flavor::I && t.flavor != Flavor::I) p = at_level(p, dec->part_level[i]);
        mu_sum += index(p, ctx);
        codim_sum += codim(p);
      }
      EXPECT_EQ(mu_sum, mu);
      if (dec->s) codim_sum -= s_dim(*dec->s);
      EXPECT_EQ(codim_sum, codim(t));
    }
  }
  EXPECT_GT(decomposed, 50);
  EXPECT_GT(factor_checks, 300);
}
