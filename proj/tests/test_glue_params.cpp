#include <gtest/gtest.h>

#include <random>

#include "tree_gen.hpp"
#include "sft/glue_params.hpp"

using namespace sft;

namespace {

// v0 (00) -e0-> v1 (00) -e1-> v2 (01) -e2-> v3 (11), with one output under v3.
DecoratedTree chain_two() {
  DecoratedTree t;
  t.flavor = Flavor::II;
  t.vertices = {Vertex{{}, 0, 0}, Vertex{{}, 0, 0}, Vertex{{}, 0, 1}, Vertex{{}, 1, 1}};
  t.edges = {Edge{0, 1, 0, 0, 0}, Edge{1, 2, 0, 0, 0}, Edge{2, 3, 0, 1, 0}, Edge{-1, 0, 0, 0, 0}, Edge{3, -1, 0, 1, 0}};
  return t;
}

DecoratedTree path_one(int n) {
  DecoratedTree t;
  t.vertices.assign(n, Vertex{});
  t.edges.push_back(Edge{-1, 0, 0, 0, 0});
  for (int v = 0; v + 1 < n; ++v) t.edges.push_back(Edge{v, v + 1, 0, 0, 0});
  return t;
}

GluingPoint all_infinite(const DecoratedTree& t) {
  GluingPoint p;
  p.tree = t;
  auto gs = gluing_structure(t);
  for (int e : t.interior()) p.g_edges[e] = GValue::inf();
  for (int v = 0; v < t.nv(); ++v)
    if (gs.carries[v]) p.g_vertices[v] = GValue::inf();
  return p;
}

std::vector<DecoratedTree> random_trees(Flavor f, int count, std::mt19937_64& rng, SLabel only = SLabel::None) {
  std::vector<DecoratedTree> out;
  while (static_cast<int>(out.size()) < count) {
    auto t = gen::random_tree(gen::TreeShape{f, 6, 0}, 3, rng);
    if (only != SLabel::None && t.s != only) continue;
    if (validate(t).empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST(Stratify, AllInfiniteIsTheIdentity) {
  for (auto t : {path_one(4), chain_two()}) {
    auto f = stratify(all_infinite(t));
    EXPECT_TRUE(is_isomorphism(f));
    EXPECT_EQ(f.target, t);
    for (long b : f.basepoint_paths) EXPECT_EQ(b, 0);
  }
}

TEST(Stratify, AllFiniteIsTheMaximalContraction) {
  auto t = path_one(4);
  GluingPoint p = all_infinite(t);
  for (auto& [e, g] : p.g_edges) g = GValue::of(1.5);
  auto f = stratify(p);
  EXPECT_EQ(f.target.nv(), 1);
  EXPECT_EQ(stratum_dimension(f), 3);
  p.g_edges.begin()->second = GValue::inf();
  EXPECT_EQ(stratify(p).target.nv(), 2);
}

TEST(Stratify, OneFiniteEdgeContractsOneEdge) {
  auto t = path_one(3);
  GluingPoint p = all_infinite(t);
  p.g_edges[2] = GValue::of(0.25);
  auto f = stratify(p);
  EXPECT_EQ(f.target.nv(), 2);
  EXPECT_EQ(f.edge_map[2], -1);
  EXPECT_GE(f.edge_map[1], 0);
}

TEST(Stratify, FiniteVertexLengthCrossesTheCobordismLevel) {
  auto t = chain_two();
  GluingPoint p = all_infinite(t);
  // g_v1 = g_e1 finite, g_v0 = g_e0 + g_v1 finite: the top three vertices merge into one 01 vertex.
  p.g_vertices[1] = GValue::of(1);
  p.g_edges[1] = GValue::of(1);
  p.g_vertices[0] = GValue::of(3);
  p.g_edges[0] = GValue::of(2);
  ASSERT_TRUE(validate(p).empty());
  auto f = stratify(p);
  EXPECT_EQ(f.target.nv(), 2);
  EXPECT_EQ(f.target.vertices[f.vertex_map[0]].lm, 1);
  EXPECT_EQ(stratum_dimension(f), 2);
  p.g_edges[0] = GValue::of(2.5);
  EXPECT_FALSE(validate(p).empty());
}

TEST(Charts, AllInfiniteIsTheOrigin) {
  auto t = chain_two();
  auto c = to_chart(all_infinite(t));
  for (auto* m : {&c.h_top, &c.q, &c.h_edges})
    for (auto& [k, v] : *m) EXPECT_EQ(v, 0);
  EXPECT_EQ(c.h_top.size() + c.q.size() + c.h_edges.size(), 3u);
}

TEST(Charts, SingleTripleInvertsExactly) {
  auto t = chain_two();
  HPoint<Rational> h;
  h.h_edges = {{0, make_rational(3, 5)}, {1, make_rational(1, 2)}, {2, make_rational(1, 7)}};
  h.h_vertices = {{0, make_rational(3, 10)}, {1, make_rational(1, 2)}};
  auto c = chart_of(t, h);
  EXPECT_EQ(c.h_top.at(0), make_rational(3, 10));
  EXPECT_EQ(c.q.at(0), make_rational(11, 100));
  auto back = h_from_chart(t, c);
  EXPECT_EQ(back.h_edges.at(0), make_rational(3, 5));
  EXPECT_EQ(back.h_vertices.at(1), make_rational(1, 2));
  EXPECT_EQ(back.h_edges.at(1), make_rational(1, 2));
  EXPECT_EQ(back.h_edges, h.h_edges);
}

TEST(Charts, NegativeQAtZeroIsTheBoundary) {
  auto [he, hw] = split_product(-0.36, 0.0);
  EXPECT_EQ(he, 0);
  EXPECT_NEAR(hw, 0.6, 1e-15);
  auto [re, rw] = split_product(make_rational(-9, 16), Rational(0));
  EXPECT_EQ(re, 0);
  EXPECT_EQ(rw, make_rational(3, 4));
}

TEST(Charts, RationalRoundTripIsExact) {
  std::mt19937_64 rng(41);
  for (auto& t : random_trees(Flavor::II, 40, rng)) {
    auto gs = gluing_structure(t);
    // Choose h on tops, on q-edges (both ends) and on free edges; tied edges and lower vertices follow.
    HPoint<Rational> h;
    std::vector<int> order;
    for (int e : t.inputs()) order.push_back(t.edges[e].dst);
    for (size_t i = 0; i < order.size(); ++i)
      for (int e : t.outgoing(order[i]))
        if (t.edges[e].dst >= 0) order.push_back(t.edges[e].dst);
    auto pick = [&]() { return make_rational(static_cast<long>(rng() % 4), 1 + static_cast<long>(rng() % 5)); };
    for (int v : gs.tops) h.h_vertices[v] = pick();
    for (int e : gs.free_edges) h.h_edges[e] = pick();
    for (int v : order) {
      if (!gs.carries[v]) continue;
      for (int e : t.outgoing(v)) {
        int w = t.edges[e].dst;
        if (w < 0) continue;
        if (gs.carries[w]) {
          // h_v = h_e h_w: pick h_w, derive h_e (or zero both when h_v = 0).
          Rational hw = pick();
          if (h.h_vertices[v] == 0) {
            h.h_vertices[w] = rng() % 2 ? hw : Rational(0);
            h.h_edges[e] = h.h_vertices[w] == 0 ? pick() : Rational(0);
          } else {
            if (hw == 0) hw = 1;
            h.h_vertices[w] = hw;
            h.h_edges[e] = h.h_vertices[v] / hw;
          }
        } else {
          h.h_edges[e] = h.h_vertices[v];
        }
      }
    }
    auto back = h_from_chart(t, chart_of(t, h));
    EXPECT_EQ(back.h_edges, h.h_edges);
    EXPECT_EQ(back.h_vertices, h.h_vertices);
  }
}

TEST(Charts, OutOfRangeValuesAreRejected) {
  auto t = chain_two();
  auto c = to_chart(all_infinite(t));
  auto bad = c;
  bad.h_top.at(0) = -0.1;
  EXPECT_THROW(from_chart(t, bad), InvalidChart);
  bad = c;
  bad.h_edges.at(2) = std::nan("");
  EXPECT_THROW(from_chart(t, bad), InvalidChart);
  bad = c;
  bad.q.erase(0);
  EXPECT_THROW(from_chart(t, bad), InvalidChart);
  bad = c;
  bad.tau = 0.5;
  EXPECT_THROW(from_chart(t, bad), InvalidChart);
  DecoratedTree three;
  three.flavor = Flavor::III;
  three.s = SLabel::One;
  ChartPoint<double> ct;
  ct.t = 1.0;
  EXPECT_NO_THROW(from_chart(three, ct));
  ct.t = 1.5;
  EXPECT_THROW(from_chart(three, ct), InvalidChart);
}

TEST(Charts, FloatingRoundTripOnRandomTrees) {
  std::mt19937_64 rng(42);
  for (Flavor f : {Flavor::II, Flavor::IV}) {
    for (auto& t : random_trees(f, 60, rng)) {
      for (int i = 0; i < 20; ++i) {
        auto c = random_chart_point(t, rng);
        auto p = from_chart(t, c);
        EXPECT_TRUE(validate(p, false).empty());
        EXPECT_LE(chart_distance(c, to_chart(p)), 1e-12);
      }
    }
  }
}

TEST(Charts, DimensionIsTheCodimension) {
  std::mt19937_64 rng(43);
  for (auto& t : random_trees(Flavor::II, 50, rng)) EXPECT_EQ(chart_dimension(t), static_cast<size_t>(codim(t)));
  for (auto& t : random_trees(Flavor::IV, 30, rng, SLabel::Inf))
    EXPECT_EQ(chart_dimension(t), static_cast<size_t>(codim(t)) + 1);
  for (auto& t : random_trees(Flavor::I, 30, rng)) EXPECT_EQ(chart_dimension(t), t.interior().size());
}

TEST(CellLike, SampledChecksPassForAllFlavors) {
  std::mt19937_64 rng(44);
  for (Flavor f : {Flavor::I, Flavor::II, Flavor::III, Flavor::IV}) {
    for (auto& t : random_trees(f, 25, rng)) {
      auto r = verify_cell_like(t, 30, rng());
      EXPECT_TRUE(r.ok()) << flavor_name(f) << ": " << (r.failures.empty() ? "" : r.failures.front());
      EXPECT_EQ(r.top_dim, static_cast<int>(r.chart_dim));
    }
  }
}

TEST(CellLike, StratumDependsOnlyOnTheZeroPattern) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  for (Flavor f : {Flavor::II, Flavor::IV}) {
    for (auto& t : random_trees(f, 30, rng)) {
      for (int i = 0; i < 10; ++i) {
        auto c = random_chart_point(t, rng);
        auto s = stratum_data(from_chart(t, c));
        auto moved = c;
        for (auto* m : {&moved.h_top, &moved.h_edges})
          for (auto& [k, v] : *m) v *= scale(rng);
        if (moved.tau) *moved.tau *= scale(rng);
        EXPECT_EQ(stratum_data(from_chart(t, moved)), s);
      }
    }
  }
}

TEST(CellLike, ReleasingAnEdgeMovesTheStratumDown) {
  std::mt19937_64 rng(46);
  int moves = 0;
  for (auto& t : random_trees(Flavor::II, 40, rng)) {
    auto gs = gluing_structure(t);
    for (int i = 0; i < 5; ++i) {
      auto p = from_chart(t, random_chart_point(t, rng));
      for (int e : gs.free_edges) {
        if (p.g_edges.at(e).infinite) continue;
        auto q = p;
        q.g_edges[e] = GValue::inf();
        ASSERT_TRUE(validate(q, false).empty());
        EXPECT_TRUE(stratum_data(q).below(stratum_data(p)));
        EXPECT_FALSE(stratum_data(p).below(stratum_data(q)));
        ++moves;
      }
    }
  }
  EXPECT_GT(moves, 20);
}

TEST(CellLike, CsvHasOneRowPerSample) {
  auto csv = sample_csv(chain_two(), 5, 1);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.substr(0, 4), "h_v0");
}
