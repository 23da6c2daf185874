#pragma once

// Gluing-parameter spaces G_I .. G_IV over a decorated tree, their stratification by contractions, the
// (h, q) coordinates in which they are manifolds with boundary, and a sampled cell-like check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sft/errors.hpp"
#include "sft/rational.hpp"
#include "sft/trees.hpp"

namespace sft {

// A gluing length in (0, inf]; infinity is a separate token.
struct GValue {
  double value = 0;
  bool infinite = false;
  static GValue inf() { return GValue{0, true}; }
  static GValue of(double v) { return GValue{v, false}; }
  bool finite() const { return !infinite; }
  bool operator==(const GValue&) const = default;
};

inline std::string to_string(const GValue& g) {
  if (g.infinite) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << g.value;
  return os.str();
}

struct GluingPoint {
  DecoratedTree tree;
  std::map<int, GValue> g_edges;     // interior edges
  std::map<int, GValue> g_vertices;  // vertices carrying a length
  std::optional<GValue> t;           // flavors III and IV
};

// The same point after h = e^{-g}, or, for III and IV away from s = {inf}, with t kept as is.
template <class S>
struct HPoint {
  std::map<int, S> h_edges, h_vertices;
  std::optional<S> t;
};

template <class S>
struct ChartPoint {
  std::map<int, S> h_top;    // topmost vertices carrying a length
  std::map<int, S> q;        // edges into vertices carrying a length: h_e^2 - h_{v'}^2
  std::map<int, S> h_edges;  // edges whose length is unconstrained
  std::optional<S> tau;      // e^{-t} for flavor IV at s = {inf}
  std::optional<S> t;        // flavor III, and flavor IV at s = {0}, (0, inf)
};

// Which lengths a tree carries and how they are tied together.
struct GluingStructure {
  std::vector<char> carries;   // vertex has a length g_v
  std::vector<char> under_t;   // 01 vertex at s = {inf}: its level-one edges are tied to t
  std::vector<int> tops, q_edges, tied_edges, free_edges;
  int increment = 1;           // rise of the lower level when g_v becomes finite
  enum class Param { None, Interval, Tau } param = Param::None;

  bool constrained_source(int v) const { return carries[v] || under_t[v]; }
};

inline GluingStructure gluing_structure(const DecoratedTree& t) {
  GluingStructure g;
  g.carries.assign(t.nv(), 0);
  g.under_t.assign(t.nv(), 0);
  const bool at_inf = t.flavor == Flavor::IV && t.s == SLabel::Inf;
  for (int v = 0; v < t.nv(); ++v) {
    const auto& x = t.vertices[v];
    if (t.flavor == Flavor::I) continue;
    if (x.lp == 0 && x.lm == 0) g.carries[v] = 1;
    if (at_inf && x.lp == 1 && x.lm == 1) g.carries[v] = 1;
    if (at_inf && x.lp == 0 && x.lm == 1) g.under_t[v] = 1;
  }
  if (t.flavor == Flavor::IV && !at_inf) g.increment = 2;
  if (t.flavor == Flavor::III || (t.flavor == Flavor::IV && !at_inf)) g.param = GluingStructure::Param::Interval;
  if (at_inf) g.param = GluingStructure::Param::Tau;
  for (int e : t.interior()) {
    int v = t.edges[e].src, w = t.edges[e].dst;
    if (!g.constrained_source(v)) g.free_edges.push_back(e);
    else if (g.carries[w]) g.q_edges.push_back(e);
    else g.tied_edges.push_back(e);
  }
  for (int v = 0; v < t.nv(); ++v) {
    if (!g.carries[v]) continue;
    int in = t.incoming(v);
    if (!t.is_interior(in) || !g.constrained_source(t.edges[in].src)) g.tops.push_back(v);
  }
  return g;
}

inline size_t chart_dimension(const DecoratedTree& t) {
  auto g = gluing_structure(t);
  return g.tops.size() + g.q_edges.size() + g.free_edges.size() + (g.param != GluingStructure::Param::None);
}

// Range of t for flavors III and IV away from s = {inf}: (lo, hi) with closed ends flagged.
struct Interval {
  double lo = 0, hi = 0;
  bool lo_closed = false, hi_closed = false;
  bool contains(double x) const {
    return (x > lo || (lo_closed && x == lo)) && (x < hi || (hi_closed && x == hi));
  }
};

inline Interval t_range(const DecoratedTree& t) {
  const double inf = std::numeric_limits<double>::infinity();
  if (t.flavor == Flavor::III) {
    if (t.s == SLabel::Zero) return {0, 1, true, false};
    if (t.s == SLabel::One) return {0, 1, false, true};
    return {0, 1, false, false};
  }
  return {0, inf, t.s == SLabel::Zero, false};
}

// ---- validation ----

namespace detail {

inline bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

inline bool sum_holds(const GValue& lhs, const GValue& e, const GValue& below) {
  if (e.infinite || below.infinite) return lhs.infinite;
  return lhs.finite() && close(lhs.value, e.value + below.value);
}

}  // namespace detail

// Empty when p lies in G(T); `strict` enforces g > 0 rather than the relaxed h in [0, inf).
inline std::vector<std::string> validate(const GluingPoint& p, bool strict = true) {
  std::vector<std::string> bad;
  const auto& t = p.tree;
  auto gs = gluing_structure(t);
  auto inner = t.interior();
  for (int e : inner)
    if (!p.g_edges.count(e)) bad.push_back("missing_edge:" + std::to_string(e));
  for (auto& [e, g] : p.g_edges)
    if (e < 0 || e >= t.ne() || !t.is_interior(e)) bad.push_back("not_interior:" + std::to_string(e));
  for (int v = 0; v < t.nv(); ++v)
    if (gs.carries[v] != static_cast<char>(p.g_vertices.count(v))) bad.push_back("vertex_length:" + std::to_string(v));
  for (auto& [v, g] : p.g_vertices)
    if (v < 0 || v >= t.nv()) bad.push_back("vertex_length:" + std::to_string(v));
  if (!bad.empty()) return bad;
  auto check_value = [&](const std::string& what, const GValue& g) {
    if (g.finite() && (!std::isfinite(g.value) || (strict && g.value <= 0))) bad.push_back("range:" + what);
  };
  for (auto& [e, g] : p.g_edges) check_value("e" + std::to_string(e), g);
  for (auto& [v, g] : p.g_vertices) check_value("v" + std::to_string(v), g);
  if (gs.param == GluingStructure::Param::None) {
    if (p.t) bad.push_back("t_not_allowed");
  } else if (!p.t) {
    bad.push_back("t_missing");
  } else if (gs.param == GluingStructure::Param::Interval) {
    if (p.t->infinite || !t_range(t).contains(p.t->value)) bad.push_back("range:t");
  } else {
    check_value("t", *p.t);
  }
  if (!bad.empty()) return bad;
  for (int e : inner) {
    int v = t.edges[e].src, w = t.edges[e].dst;
    if (!gs.constrained_source(v)) continue;
    GValue lhs = gs.carries[v] ? p.g_vertices.at(v) : *p.t;
    GValue below = gs.carries[w] ? p.g_vertices.at(w) : GValue::of(0);
    if (!detail::sum_holds(lhs, p.g_edges.at(e), below)) bad.push_back("constraint:" + std::to_string(e));
  }
  return bad;
}

// ---- stratification ----

// Which edges a point contracts, which lower levels it raises, and whether t leaves the endpoint s(T).
struct StratumData {
  std::set<int> contracted, raised;
  bool t_moved = false;
  bool operator==(const StratumData&) const = default;
  // This stratum lies in the closure of `other`.
  bool below(const StratumData& other) const {
    return std::includes(other.contracted.begin(), other.contracted.end(), contracted.begin(), contracted.end()) &&
           std::includes(other.raised.begin(), other.raised.end(), raised.begin(), raised.end()) &&
           (!t_moved || other.t_moved);
  }
};

inline StratumData stratum_data(const GluingPoint& p) {
  StratumData s;
  for (auto& [e, g] : p.g_edges)
    if (g.finite()) s.contracted.insert(e);
  for (auto& [v, g] : p.g_vertices)
    if (g.finite()) s.raised.insert(v);
  if (p.t) {
    const auto& t = p.tree;
    if (t.flavor == Flavor::III)
      s.t_moved = (t.s == SLabel::Zero && p.t->value > 0) || (t.s == SLabel::One && p.t->value < 1);
    else if (t.s == SLabel::Zero)
      s.t_moved = p.t->value > 0;
    else if (t.s == SLabel::Inf)
      s.t_moved = p.t->finite();
  }
  return s;
}

inline TreeMorphism stratify(const DecoratedTree& t, const StratumData& s) {
  auto gs = gluing_structure(t);
  std::vector<int> group(t.nv());
  std::iota(group.begin(), group.end(), 0);
  std::function<int(int)> find = [&](int x) { return group[x] == x ? x : group[x] = find(group[x]); };
  for (int e : s.contracted) group[find(t.edges[e].src)] = find(t.edges[e].dst);
  std::map<int, int> low;
  std::map<int, bool> has_out;
  for (int v = 0; v < t.nv(); ++v) {
    int lm = t.vertices[v].lm + (s.raised.count(v) ? gs.increment : 0);
    int r = find(v);
    low[r] = std::max(low.count(r) ? low[r] : 0, lm);
    for (int e : t.outgoing(v))
      if (!s.contracted.count(e)) has_out[r] = true;
  }
  std::optional<SLabel> new_s;
  if (s.t_moved) new_s = t.flavor == Flavor::III ? SLabel::ZeroOne : SLabel::ZeroInf;
  std::map<int, int> relabel;
  for (auto& [r, lm] : low) {
    if (has_out[r] || t.flavor == Flavor::I) continue;
    relabel[r] = (new_s == SLabel::ZeroInf && t.s == SLabel::Inf && lm == 1) ? 2 : lm;
  }
  return contract(t, s.contracted, relabel, new_s);
}

inline TreeMorphism stratify(const GluingPoint& p) { return stratify(p.tree, stratum_data(p)); }

// Dimension of the stratum of T -> T': #V_s(T) - #V_s(T') + dim s(T').
inline int stratum_dimension(const TreeMorphism& f) {
  return f.source.num_symplectization() - f.target.num_symplectization() + s_dim(f.target.s);
}

// ---- coordinates ----

template <class S>
S exact_root(const S& x);

template <>
inline double exact_root<double>(const double& x) { return std::sqrt(x); }

// Square roots of rationals are only taken when they are rational.
template <>
inline Rational exact_root<Rational>(const Rational& x) {
  if (sgn(x) < 0) throw InvalidChart("negative square");
  mpz_class n = x.get_num(), d = x.get_den(), rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  if (rn * rn != n || rd * rd != d) throw InvalidChart("square root of " + x.get_str() + " is not rational");
  Rational r(rn, rd);
  r.canonicalize();
  return r;
}

// (h_e + i h_w)^2 = q + 2 i h_v with h_e, h_w >= 0.
template <class S>
std::pair<S, S> split_product(const S& q, const S& hv) {
  S r = exact_root<S>(q * q + 4 * hv * hv);
  if (q >= 0) {
    S he = exact_root<S>((r + q) / 2);
    return {he, he == 0 ? S(0) : S(hv / he)};
  }
  S hw = exact_root<S>((r - q) / 2);
  return {hw == 0 ? S(0) : S(hv / hw), hw};
}

template <class S>
ChartPoint<S> chart_of(const DecoratedTree& t, const HPoint<S>& h) {
  auto gs = gluing_structure(t);
  ChartPoint<S> c;
  for (int v : gs.tops) c.h_top[v] = h.h_vertices.at(v);
  for (int e : gs.q_edges) {
    const S& he = h.h_edges.at(e);
    const S& hw = h.h_vertices.at(t.edges[e].dst);
    c.q[e] = he * he - hw * hw;
  }
  for (int e : gs.free_edges) c.h_edges[e] = h.h_edges.at(e);
  if (gs.param == GluingStructure::Param::Tau) c.tau = h.t;
  if (gs.param == GluingStructure::Param::Interval) c.t = h.t;
  return c;
}

template <class S>
HPoint<S> h_from_chart(const DecoratedTree& t, const ChartPoint<S>& c) {
  auto gs = gluing_structure(t);
  auto need = [](const std::map<int, S>& m, int k, const char* what) -> const S& {
    auto it = m.find(k);
    if (it == m.end()) throw InvalidChart(std::string("missing chart coordinate ") + what + std::to_string(k));
    return it->second;
  };
  auto nonneg = [](const S& x, const std::string& what) {
    if (!(x >= 0)) throw InvalidChart("chart coordinate out of range: " + what);
  };
  if (c.h_top.size() != gs.tops.size() || c.q.size() != gs.q_edges.size() || c.h_edges.size() != gs.free_edges.size())
    throw InvalidChart("chart coordinates do not match the tree");
  HPoint<S> h;
  if (gs.param == GluingStructure::Param::Tau) {
    if (!c.tau || c.t) throw InvalidChart("expected tau");
    nonneg(*c.tau, "tau");
    h.t = c.tau;
  } else if (gs.param == GluingStructure::Param::Interval) {
    if (!c.t || c.tau) throw InvalidChart("expected t");
    double x;
    if constexpr (std::is_same_v<S, double>) x = *c.t;
    else x = c.t->get_d();
    if (!t_range(t).contains(x)) throw InvalidChart("t outside the range of s(T)");
    h.t = c.t;
  } else if (c.t || c.tau) {
    throw InvalidChart("this flavor has no t coordinate");
  }
  for (int v : gs.tops) {
    nonneg(need(c.h_top, v, "h_v"), "h_v" + std::to_string(v));
    h.h_vertices[v] = c.h_top.at(v);
  }
  for (int e : gs.free_edges) {
    nonneg(need(c.h_edges, e, "h_e"), "h_e" + std::to_string(e));
    h.h_edges[e] = c.h_edges.at(e);
  }
  for (auto& [e, q] : c.q) {
    if constexpr (std::is_same_v<S, double>)
      if (!std::isfinite(q)) throw InvalidChart("chart coordinate out of range: q" + std::to_string(e));
  }
  // Top-down: every constrained source has its h before its edges are resolved.
  std::vector<int> order;
  for (int e : t.inputs()) order.push_back(t.edges[e].dst);
  for (size_t i = 0; i < order.size(); ++i)
    for (int e : t.outgoing(order[i]))
      if (t.edges[e].dst >= 0) order.push_back(t.edges[e].dst);
  for (int v : order) {
    if (!gs.constrained_source(v)) continue;
    const S above = gs.carries[v] ? h.h_vertices.at(v) : *h.t;
    for (int e : t.outgoing(v)) {
      int w = t.edges[e].dst;
      if (w < 0) continue;
      if (gs.carries[w]) {
        auto [he, hw] = split_product(need(c.q, e, "q_e"), above);
        h.h_edges[e] = he;
        h.h_vertices[w] = hw;
      } else {
        h.h_edges[e] = above;
      }
    }
  }
  return h;
}

inline HPoint<double> h_of(const GluingPoint& p) {
  auto h = [](const GValue& g) { return g.infinite ? 0.0 : std::exp(-g.value); };
  HPoint<double> x;
  for (auto& [e, g] : p.g_edges) x.h_edges[e] = h(g);
  for (auto& [v, g] : p.g_vertices) x.h_vertices[v] = h(g);
  if (p.t) x.t = gluing_structure(p.tree).param == GluingStructure::Param::Tau ? h(*p.t) : p.t->value;
  return x;
}

inline GluingPoint g_of(const DecoratedTree& t, const HPoint<double>& x) {
  auto g = [](double h) { return h == 0 ? GValue::inf() : GValue::of(-std::log(h)); };
  GluingPoint p;
  p.tree = t;
  for (auto& [e, h] : x.h_edges) p.g_edges[e] = g(h);
  for (auto& [v, h] : x.h_vertices) p.g_vertices[v] = g(h);
  if (x.t) p.t = gluing_structure(t).param == GluingStructure::Param::Tau ? g(*x.t) : GValue::of(*x.t);
  return p;
}

inline ChartPoint<double> to_chart(const GluingPoint& p) {
  auto bad = validate(p, false);
  if (!bad.empty()) throw InvalidChart("point outside G(T): " + bad.front());
  return chart_of(p.tree, h_of(p));
}

inline GluingPoint from_chart(const DecoratedTree& t, const ChartPoint<double>& c) { return g_of(t, h_from_chart(t, c)); }

// ---- sampled cell-like verification ----

struct ChartCoordinate {
  enum Kind { HTop, Q, HEdge, Tau, T } kind;
  int id = -1;
};

inline std::vector<ChartCoordinate> chart_layout(const DecoratedTree& t) {
  auto gs = gluing_structure(t);
  std::vector<ChartCoordinate> l;
  for (int v : gs.tops) l.push_back({ChartCoordinate::HTop, v});
  for (int e : gs.q_edges) l.push_back({ChartCoordinate::Q, e});
  for (int e : gs.free_edges) l.push_back({ChartCoordinate::HEdge, e});
  if (gs.param == GluingStructure::Param::Tau) l.push_back({ChartCoordinate::Tau, -1});
  if (gs.param == GluingStructure::Param::Interval) l.push_back({ChartCoordinate::T, -1});
  return l;
}

inline double& coordinate(ChartPoint<double>& c, const ChartCoordinate& k) {
  switch (k.kind) {
    case ChartCoordinate::HTop: return c.h_top[k.id];
    case ChartCoordinate::Q: return c.q[k.id];
    case ChartCoordinate::HEdge: return c.h_edges[k.id];
    case ChartCoordinate::Tau: return *c.tau;
    case ChartCoordinate::T: return *c.t;
  }
  throw InvalidChart("unknown coordinate");
}

inline double chart_distance(const ChartPoint<double>& a, const ChartPoint<double>& b) {
  double d = 0;
  auto cmp = [&](const std::map<int, double>& x, const std::map<int, double>& y) {
    if (x.size() != y.size()) d = std::numeric_limits<double>::infinity();
    for (auto& [k, v] : x) {
      auto it = y.find(k);
      if (it == y.end()) d = std::numeric_limits<double>::infinity();
      else d = std::max(d, std::abs(v - it->second) / std::max(1.0, std::abs(v)));
    }
  };
  cmp(a.h_top, b.h_top);
  cmp(a.q, b.q);
  cmp(a.h_edges, b.h_edges);
  if (a.tau.has_value() != b.tau.has_value() || a.t.has_value() != b.t.has_value()) return std::numeric_limits<double>::infinity();
  if (a.tau) d = std::max(d, std::abs(*a.tau - *b.tau) / std::max(1.0, std::abs(*a.tau)));
  if (a.t) d = std::max(d, std::abs(*a.t - *b.t) / std::max(1.0, std::abs(*a.t)));
  return d;
}

// A chart point with a random zero pattern, so that every stratum is reached.
inline ChartPoint<double> random_chart_point(const DecoratedTree& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.5);
  std::uniform_int_distribution<int> coin(0, 2);
  ChartPoint<double> c;
  auto gs = gluing_structure(t);
  if (gs.param == GluingStructure::Param::Tau) c.tau = 0;
  if (gs.param == GluingStructure::Param::Interval) c.t = 0;
  auto range = gs.param == GluingStructure::Param::Interval ? t_range(t) : Interval{};
  for (auto& k : chart_layout(t)) {
    double& x = coordinate(c, k);
    bool zero = coin(rng) == 0;
    switch (k.kind) {
      case ChartCoordinate::Q: x = zero ? 0.0 : (coin(rng) ? 1 : -1) * mag(rng); break;
      case ChartCoordinate::T:
        if (zero && range.lo_closed) x = range.lo;
        else if (zero && range.hi_closed) x = range.hi;
        else x = std::isfinite(range.hi) ? std::uniform_real_distribution<double>(0.05, 0.95)(rng) : 2 * mag(rng);
        break;
      default: x = zero ? 0.0 : mag(rng);
    }
  }
  return c;
}

struct CellLikeReport {
  int samples = 0;
  size_t chart_dim = 0;
  int top_dim = 0;
  double max_roundtrip_error = 0;
  std::map<std::string, int> passed;
  std::vector<std::string> failures;  // "check_id: detail"
  std::map<int, int> by_dimension;    // stratum dimension -> samples
  bool ok() const { return failures.empty(); }
};

namespace detail {

inline bool admissible(const DecoratedTree& t, const ChartCoordinate& k, double x) {
  if (k.kind == ChartCoordinate::Q) return std::isfinite(x);
  if (k.kind == ChartCoordinate::T) return t_range(t).contains(x);
  return x >= 0;
}

inline std::optional<StratumData> stratum_at(const DecoratedTree& t, const ChartPoint<double>& c) {
  try {
    return stratum_data(from_chart(t, c));
  } catch (const InvalidChart&) {
    return std::nullopt;
  }
}

// The constraint system splits over the groups of the contraction: a constraint through a contracted edge
// stays inside one group, and one through an uncontracted edge only forces infinite lengths.
inline std::string product_failure(const GluingPoint& p, const TreeMorphism& f) {
  const auto& t = p.tree;
  auto gs = gluing_structure(t);
  for (int e : t.interior()) {
    int v = t.edges[e].src, w = t.edges[e].dst;
    if (!gs.constrained_source(v)) continue;
    const GValue& ge = p.g_edges.at(e);
    GValue lhs = gs.carries[v] ? p.g_vertices.at(v) : *p.t;
    if (ge.finite()) {
      if (f.vertex_map[v] != f.vertex_map[w]) return "edge " + std::to_string(e) + " joins two groups";
    } else if (lhs.finite()) {
      return "infinite edge " + std::to_string(e) + " below a finite length";
    }
  }
  return {};
}

}  // namespace detail

inline CellLikeReport verify_cell_like(const DecoratedTree& t, int samples, uint64_t seed) {
  CellLikeReport r;
  auto bad_tree = validate(t);
  if (!bad_tree.empty()) {
    r.failures.push_back("tree_valid: " + bad_tree.front());
    return r;
  }
  std::mt19937_64 rng(seed);
  auto layout = chart_layout(t);
  r.chart_dim = layout.size();
  auto fail = [&](const std::string& id, const std::string& what) {
    if (r.failures.size() < 50) r.failures.push_back(id + ": " + what);
  };
  auto pass = [&](const std::string& id) { ++r.passed[id]; };
  // The generic stratum is open: its dimension is the chart dimension.
  {
    ChartPoint<double> c;
    auto gs = gluing_structure(t);
    if (gs.param == GluingStructure::Param::Tau) c.tau = 0.5;
    if (gs.param == GluingStructure::Param::Interval) c.t = 0.5;
    for (auto& k : layout) {
      double& x = coordinate(c, k);
      x = k.kind == ChartCoordinate::T ? 0.5 : 0.7;
    }
    r.top_dim = stratum_dimension(stratify(from_chart(t, c)));
    if (r.top_dim == static_cast<int>(r.chart_dim)) pass("top_dimension");
    else fail("top_dimension", std::to_string(r.top_dim) + " vs chart " + std::to_string(r.chart_dim));
  }
  for (int i = 0; i < samples; ++i) {
    ++r.samples;
    auto c = random_chart_point(t, rng);
    GluingPoint p;
    try {
      p = from_chart(t, c);
    } catch (const InvalidChart& e) {
      fail("from_chart", e.what());
      continue;
    }
    auto bad = validate(p, false);
    if (bad.empty()) pass("constraints");
    else fail("constraints", bad.front());
    double err = chart_distance(c, to_chart(p));
    r.max_roundtrip_error = std::max(r.max_roundtrip_error, err);
    if (err <= 1e-12) pass("roundtrip");
    else fail("roundtrip", "error " + std::to_string(err));
    auto s = stratum_data(p);
    TreeMorphism f;
    try {
      f = stratify(t, s);
      pass("stratify");
    } catch (const Error& e) {
      fail("stratify", e.what());
      continue;
    }
    int dim = stratum_dimension(f);
    ++r.by_dimension[dim];
    // Local dimension: coordinate directions along which the stratum persists.
    int free = 0;
    for (auto& k : layout) {
      bool stays = true;
      for (double dir : {1.0, -1.0}) {
        auto moved = c;
        double& x = coordinate(moved, k);
        x += dir * 1e-3;
        auto sm = detail::admissible(t, k, x) ? detail::stratum_at(t, moved) : std::nullopt;
        stays = stays && sm && *sm == s;
      }
      free += stays;
    }
    if (free == dim) pass("dimension");
    else fail("dimension", "local " + std::to_string(free) + " vs " + std::to_string(dim));
    // Continuity: along coordinate lines into the point, nearby strata are constant and lie above it.
    for (auto& k : layout) {
      for (double dir : {1.0, -1.0}) {
        std::optional<StratumData> last;
        bool ok = true, any = false;
        for (double step : {1e-2, 1e-4, 1e-6, 1e-8}) {
          auto moved = c;
          double& x = coordinate(moved, k);
          x += dir * step;
          if (!detail::admissible(t, k, x)) break;
          auto sm = detail::stratum_at(t, moved);
          any = true;
          if (!sm || !s.below(*sm) || (last && !(*last == *sm))) ok = false;
          last = sm;
        }
        if (!any) continue;
        if (ok) pass("continuity");
        else fail("continuity", "coordinate " + std::to_string(k.kind) + ":" + std::to_string(k.id));
      }
    }
    auto why = detail::product_failure(p, f);
    if (why.empty()) pass("product");
    else fail("product", why);
  }
  return r;
}

// CSV of sampled chart points and their strata, for plotting.
inline std::string sample_csv(const DecoratedTree& t, int samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto layout = chart_layout(t);
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < layout.size(); ++i) {
    const char* names[] = {"h_v", "q_e", "h_e", "tau", "t"};
    os << names[layout[i].kind];
    if (layout[i].id >= 0) os << layout[i].id;
    os << ',';
  }
  os << "dimension\n";
  for (int i = 0; i < samples; ++i) {
    auto c = random_chart_point(t, rng);
    for (auto& k : layout) os << coordinate(c, k) << ',';
    os << stratum_dimension(stratify(from_chart(t, c))) << '\n';
  }
  return os.str();
}

}  // namespace sft
