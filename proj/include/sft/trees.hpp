#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sft/errors.hpp"
#include "sft/graded_linear.hpp"
#include "sft/orbits.hpp"

namespace sft {

enum class Flavor { I, II, III, IV };

// Parameter set s(T): a point or an open interval.
enum class SLabel { None, Zero, One, ZeroOne, Inf, ZeroInf };

inline int s_dim(SLabel s) { return (s == SLabel::ZeroOne || s == SLabel::ZeroInf) ? 1 : 0; }

inline bool s_in_closure(SLabel s, SLabel of) {
  if (s == of) return true;
  if (of == SLabel::ZeroOne) return s == SLabel::Zero || s == SLabel::One;
  if (of == SLabel::ZeroInf) return s == SLabel::Zero || s == SLabel::Inf;
  return false;
}

inline const char* flavor_name(Flavor f) {
  switch (f) {
    case Flavor::I: return "I";
    case Flavor::II: return "II";
    case Flavor::III: return "III";
    case Flavor::IV: return "IV";
  }
  return "?";
}

inline const char* s_name(SLabel s) {
  switch (s) {
    case SLabel::None: return "-";
    case SLabel::Zero: return "{0}";
    case SLabel::One: return "{1}";
    case SLabel::ZeroOne: return "(0,1)";
    case SLabel::Inf: return "{inf}";
    case SLabel::ZeroInf: return "(0,inf)";
  }
  return "?";
}

// Edges point downwards: src is the upper vertex, dst the lower one; -1 marks a half edge.
struct Edge {
  int src = -1;
  int dst = -1;
  int orbit = 0;
  int level = 0;
  long basepoint = 0;
  bool operator==(const Edge&) const = default;
};

struct Vertex {
  std::vector<long> beta;
  int lp = 0;  // level of the incoming edge
  int lm = 0;  // level of the outgoing edges
  bool operator==(const Vertex&) const = default;
};

struct DecoratedTree {
  Flavor flavor = Flavor::I;
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  SLabel s = SLabel::None;
  bool operator==(const DecoratedTree&) const = default;

  int nv() const { return static_cast<int>(vertices.size()); }
  int ne() const { return static_cast<int>(edges.size()); }
  bool is_input(int e) const { return edges[e].src < 0 && edges[e].dst >= 0; }
  bool is_output(int e) const { return edges[e].dst < 0 && edges[e].src >= 0; }
  bool is_interior(int e) const { return edges[e].src >= 0 && edges[e].dst >= 0; }

  int incoming(int v) const {
    for (int e = 0; e < ne(); ++e)
      if (edges[e].dst == v) return e;
    return -1;
  }
  std::vector<int> outgoing(int v) const {
    std::vector<int> out;
    for (int e = 0; e < ne(); ++e)
      if (edges[e].src == v) out.push_back(e);
    return out;
  }
  std::vector<int> inputs() const {
    std::vector<int> r;
    for (int e = 0; e < ne(); ++e)
      if (is_input(e)) r.push_back(e);
    return r;
  }
  std::vector<int> outputs() const {
    std::vector<int> r;
    for (int e = 0; e < ne(); ++e)
      if (is_output(e)) r.push_back(e);
    return r;
  }
  std::vector<int> interior() const {
    std::vector<int> r;
    for (int e = 0; e < ne(); ++e)
      if (is_interior(e)) r.push_back(e);
    return r;
  }
  bool symplectization(int v) const { return flavor == Flavor::I || vertices[v].lp == vertices[v].lm; }
  int num_symplectization() const {
    int c = 0;
    for (int v = 0; v < nv(); ++v) c += symplectization(v);
    return c;
  }
};

// Orbit universes indexed by edge level, plus global data.
struct TreeContext {
  std::vector<const OrbitUniverse*> levels;
  std::optional<long> n;
  int beta_rank = 0;

  const OrbitUniverse& at(int level) const {
    if (level < 0 || level >= static_cast<int>(levels.size()) || !levels[level])
      throw MissingData("no orbit universe for level " + std::to_string(level));
    return *levels[level];
  }
  const ReebOrbit& orbit(const Edge& e) const { return at(e.level)[e.orbit]; }
  int mult(const Edge& e) const { return orbit(e).k; }
  int parity(const Edge& e) const { return orbit(e).parity(); }
};

inline int max_level(Flavor f) { return f == Flavor::I ? 0 : f == Flavor::IV ? 2 : 1; }

// Connected components by vertex, via interior edges.
inline std::vector<int> component_ids(const DecoratedTree& t) {
  std::vector<int> parent(t.nv());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto& e : t.edges)
    if (e.src >= 0 && e.dst >= 0 && e.src < t.nv() && e.dst < t.nv()) parent[find(e.src)] = find(e.dst);
  std::vector<int> comp(t.nv());
  std::map<int, int> label;
  for (int v = 0; v < t.nv(); ++v) {
    int r = find(v);
    if (!label.count(r)) label[r] = static_cast<int>(label.size());
    comp[v] = label[r];
  }
  return comp;
}

inline int num_components(const DecoratedTree& t) {
  auto c = component_ids(t);
  return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
}

inline std::vector<std::string> validate(const DecoratedTree& t, const TreeContext* ctx = nullptr) {
  std::vector<std::string> bad;
  auto tag = [](const char* code, int i) { return std::string(code) + ":" + std::to_string(i); };
  const int L = max_level(t.flavor);
  bool shape_ok = true;
  for (int e = 0; e < t.ne(); ++e) {
    const auto& ed = t.edges[e];
    if (ed.src >= t.nv() || ed.dst >= t.nv() || ed.src < -1 || ed.dst < -1) {
      bad.push_back(tag("edge_endpoint_range", e));
      shape_ok = false;
    } else if (ed.src < 0 && ed.dst < 0) {
      bad.push_back(tag("bare_edge", e));
    }
    if (ed.level < 0 || ed.level > L) bad.push_back(tag("edge_level_range", e));
    if (ctx && ed.level >= 0 && ed.level <= L) {
      if (ed.level >= static_cast<int>(ctx->levels.size()) || !ctx->levels[ed.level] || ed.orbit < 0 ||
          ed.orbit >= static_cast<int>(ctx->levels[ed.level]->size()))
        bad.push_back(tag("orbit_range", e));
    }
  }
  if (!shape_ok) return bad;
  std::vector<int> in_count(t.nv(), 0);
  for (auto& e : t.edges)
    if (e.dst >= 0) ++in_count[e.dst];
  for (int v = 0; v < t.nv(); ++v)
    if (in_count[v] != 1) bad.push_back(tag("vertex_incoming_count", v));
  if (!bad.empty()) return bad;
  for (int v = 0; v < t.nv(); ++v) {
    std::set<int> seen;
    int x = v;
    while (x >= 0) {
      if (!seen.insert(x).second) {
        bad.push_back(tag("cycle", v));
        break;
      }
      x = t.edges[t.incoming(x)].src;
    }
  }
  if (!bad.empty()) return bad;
  if (t.flavor == Flavor::I || t.flavor == Flavor::II) {
    if (t.nv() == 0) bad.push_back("empty");
    else if (num_components(t) != 1) bad.push_back("disconnected");
  }
  switch (t.flavor) {
    case Flavor::I:
    case Flavor::II:
      if (t.s != SLabel::None) bad.push_back("s_label_not_allowed");
      break;
    case Flavor::III:
      if (t.s != SLabel::Zero && t.s != SLabel::One && t.s != SLabel::ZeroOne) bad.push_back("s_label_invalid");
      break;
    case Flavor::IV:
      if (t.s != SLabel::Zero && t.s != SLabel::Inf && t.s != SLabel::ZeroInf) bad.push_back("s_label_invalid");
      break;
  }
  for (int e = 0; e < t.ne(); ++e) {
    if (t.flavor == Flavor::I) continue;
    if (t.is_input(e) && t.edges[e].level != 0) bad.push_back(tag("input_level", e));
    if (t.is_output(e) && t.edges[e].level != L) bad.push_back(tag("output_level", e));
  }
  for (int v = 0; v < t.nv(); ++v) {
    const auto& x = t.vertices[v];
    if (ctx && static_cast<int>(x.beta.size()) != ctx->beta_rank) bad.push_back(tag("beta_rank", v));
    if (t.flavor == Flavor::I) {
      if (x.lp != 0 || x.lm != 0) bad.push_back(tag("vertex_level_range", v));
      continue;
    }
    if (x.lp < 0 || x.lm > L || x.lp > x.lm) bad.push_back(tag("vertex_level_order", v));
    if (t.edges[t.incoming(v)].level != x.lp) bad.push_back(tag("incoming_level", v));
    for (int e : t.outgoing(v))
      if (t.edges[e].level != x.lm) {
        bad.push_back(tag("outgoing_level", v));
        break;
      }
    if (t.flavor == Flavor::IV) {
      int ty = x.lp * 10 + x.lm;
      bool interval_or_zero = t.s == SLabel::Zero || t.s == SLabel::ZeroInf;
      bool ok = interval_or_zero ? (ty == 0 || ty == 2 || ty == 22) : (ty == 0 || ty == 1 || ty == 11 || ty == 12 || ty == 22);
      if (!ok) bad.push_back(tag("vertex_type_for_s", v));
    }
  }
  return bad;
}

inline void require_valid(const DecoratedTree& t, const TreeContext* ctx = nullptr) {
  auto v = validate(t, ctx);
  if (!v.empty()) {
    std::string msg;
    for (auto& s : v) msg += (msg.empty() ? "" : ", ") + s;
    throw InvalidInput("invalid tree: " + msg);
  }
}

struct TreeMorphism {
  DecoratedTree source, target;
  std::vector<int> vertex_map;      // source vertex -> target vertex
  std::vector<int> edge_map;        // source edge -> target edge, -1 if contracted
  std::vector<long> basepoint_paths;  // per source edge, in Z/d; zero on interior edges

  bool is_identity_shape() const {
    for (int e : edge_map)
      if (e < 0) return false;
    return source.vertices == target.vertices && source.s == target.s;
  }
};

inline std::vector<long> beta_sum(const std::vector<long>& a, const std::vector<long>& b) {
  std::vector<long> r(std::max(a.size(), b.size()), 0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

// Contracts the given interior edges. `lower_relabels` fixes *^- of merged vertices without
// outgoing edges (keyed by any source vertex of the group); `new_s` replaces s(T) when set.
inline TreeMorphism contract(const DecoratedTree& t, const std::set<int>& edges,
                             const std::map<int, int>& lower_relabels = {},
                             std::optional<SLabel> new_s = std::nullopt) {
  for (int e : edges)
    if (e < 0 || e >= t.ne() || !t.is_interior(e)) throw InvalidInput("contract: not an interior edge: " + std::to_string(e));
  std::vector<int> group(t.nv());
  std::iota(group.begin(), group.end(), 0);
  std::function<int(int)> find = [&](int x) { return group[x] == x ? x : group[x] = find(group[x]); };
  for (int e : edges) {
    int a = find(t.edges[e].src), b = find(t.edges[e].dst);
    group[std::max(a, b)] = std::min(a, b);
  }
  TreeMorphism f;
  f.source = t;
  f.vertex_map.assign(t.nv(), -1);
  std::map<int, int> root_to_new;
  for (int v = 0; v < t.nv(); ++v) {
    int r = find(v);
    if (!root_to_new.count(r)) root_to_new[r] = static_cast<int>(root_to_new.size());
    f.vertex_map[v] = root_to_new[r];
  }
  DecoratedTree out;
  out.flavor = t.flavor;
  out.s = new_s ? *new_s : t.s;
  int nnew = static_cast<int>(root_to_new.size());
  out.vertices.assign(nnew, Vertex{});
  std::vector<int> max_lm(nnew, 0);
  std::vector<char> seen(nnew, 0);
  for (int v = 0; v < t.nv(); ++v) {
    int w = f.vertex_map[v];
    out.vertices[w].beta = beta_sum(out.vertices[w].beta, t.vertices[v].beta);
    max_lm[w] = seen[w] ? std::max(max_lm[w], t.vertices[v].lm) : t.vertices[v].lm;
    seen[w] = 1;
  }
  f.edge_map.assign(t.ne(), -1);
  f.basepoint_paths.assign(t.ne(), 0);
  for (int e = 0; e < t.ne(); ++e) {
    if (edges.count(e)) continue;
    Edge ne = t.edges[e];
    if (ne.src >= 0) ne.src = f.vertex_map[ne.src];
    if (ne.dst >= 0) ne.dst = f.vertex_map[ne.dst];
    f.edge_map[e] = out.ne();
    out.edges.push_back(ne);
  }
  // Level labels of merged vertices.
  for (int w = 0; w < nnew; ++w) {
    int in = out.incoming(w);
    out.vertices[w].lp = in >= 0 ? out.edges[in].level : 0;
    std::set<int> lower;
    for (int e : out.outgoing(w)) lower.insert(out.edges[e].level);
    if (lower.size() > 1)
      throw NoConsistentLabeling("outgoing edges of merged vertex carry different levels");
    std::optional<int> relabel;
    for (auto [v, lvl] : lower_relabels)
      if (v >= 0 && v < t.nv() && f.vertex_map[v] == w) relabel = lvl;
    if (!lower.empty()) {
      out.vertices[w].lm = *lower.begin();
      if (relabel && *relabel != out.vertices[w].lm)
        throw NoConsistentLabeling("relabel conflicts with outgoing edge levels");
    } else {
      out.vertices[w].lm = relabel ? *relabel : max_lm[w];
    }
    if (t.flavor == Flavor::I) out.vertices[w].lp = out.vertices[w].lm = 0;
  }
  for (int v = 0; v < t.nv(); ++v) {
    const auto& a = t.vertices[v];
    const auto& b = out.vertices[f.vertex_map[v]];
    if (b.lp > a.lp || b.lm < a.lm) throw NoConsistentLabeling("level labels not monotone under contraction");
  }
  if (t.flavor == Flavor::III || t.flavor == Flavor::IV)
    if (!s_in_closure(t.s, out.s)) throw NoConsistentLabeling("s(T) not contained in the closure of s(T')");
  if (t.flavor != Flavor::III && t.flavor != Flavor::IV && new_s && *new_s != t.s)
    throw NoConsistentLabeling("s label only exists for flavors III and IV");
  auto v = validate(out);
  if (!v.empty()) throw NoConsistentLabeling("contracted tree is invalid: " + v.front());
  f.target = std::move(out);
  return f;
}

inline TreeMorphism identity_morphism(const DecoratedTree& t) { return contract(t, {}); }

// g after f.
inline TreeMorphism compose(const TreeMorphism& f, const TreeMorphism& g, const TreeContext* ctx = nullptr) {
  if (!(f.target == g.source)) throw InvalidComposition("target of the first morphism differs from source of the second");
  TreeMorphism h;
  h.source = f.source;
  h.target = g.target;
  h.vertex_map.resize(f.vertex_map.size());
  for (size_t v = 0; v < f.vertex_map.size(); ++v) h.vertex_map[v] = g.vertex_map[f.vertex_map[v]];
  h.edge_map.resize(f.edge_map.size());
  h.basepoint_paths.resize(f.edge_map.size());
  for (size_t e = 0; e < f.edge_map.size(); ++e) {
    int m = f.edge_map[e];
    h.edge_map[e] = m < 0 ? -1 : g.edge_map[m];
    long p = f.basepoint_paths[e] + (m < 0 ? 0 : g.basepoint_paths[m]);
    if (ctx && h.edge_map[e] >= 0) {
      long d = ctx->mult(f.source.edges[e]);
      p = ((p % d) + d) % d;
    }
    h.basepoint_paths[e] = p;
  }
  return h;
}

struct Junction {
  int upper_part = 0, upper_edge = 0;  // an output edge of the upper part
  int lower_part = 0, lower_edge = 0;  // an input edge of the lower part
  long path = 0;
};

struct Concatenation {
  Flavor flavor = Flavor::I;
  std::vector<DecoratedTree> parts;
  std::vector<int> part_level;  // for flavor-I parts inside higher flavors: their level
  std::vector<Junction> junctions;
  std::optional<SLabel> s;  // s of the result; defaults to the s of the unique III/IV part
};

// Places a flavor-I tree at a fixed level.
inline DecoratedTree at_level(DecoratedTree t, int level) {
  for (auto& e : t.edges) e.level = level;
  for (auto& v : t.vertices) v.lp = v.lm = level;
  return t;
}

inline DecoratedTree concatenate(const Concatenation& c) {
  DecoratedTree out;
  out.flavor = c.flavor;
  std::vector<int> voff, eoff;
  std::optional<SLabel> inherited;
  for (size_t i = 0; i < c.parts.size(); ++i) {
    DecoratedTree p = c.parts[i];
    if (p.flavor == Flavor::I && c.flavor != Flavor::I) {
      int lvl = i < c.part_level.size() ? c.part_level[i] : 0;
      p = at_level(p, lvl);
    }
    if ((p.flavor == Flavor::III || p.flavor == Flavor::IV) && p.flavor == c.flavor) inherited = p.s;
    voff.push_back(out.nv());
    eoff.push_back(out.ne());
    for (auto& v : p.vertices) out.vertices.push_back(v);
    for (auto e : p.edges) {
      if (e.src >= 0) e.src += voff.back();
      if (e.dst >= 0) e.dst += voff.back();
      out.edges.push_back(e);
    }
  }
  std::vector<char> drop(out.ne(), 0);
  std::set<int> used;
  for (auto& j : c.junctions) {
    if (j.upper_part < 0 || j.upper_part >= static_cast<int>(c.parts.size()) || j.lower_part < 0 ||
        j.lower_part >= static_cast<int>(c.parts.size()))
      throw InvalidInput("junction references a missing part");
    const auto& up = c.parts[j.upper_part];
    const auto& lo = c.parts[j.lower_part];
    if (j.upper_edge < 0 || j.upper_edge >= up.ne() || !up.is_output(j.upper_edge))
      throw InvalidInput("junction upper edge is not an output edge");
    if (j.lower_edge < 0 || j.lower_edge >= lo.ne() || !lo.is_input(j.lower_edge))
      throw InvalidInput("junction lower edge is not an input edge");
    int ue = eoff[j.upper_part] + j.upper_edge, le = eoff[j.lower_part] + j.lower_edge;
    if (!used.insert(ue).second || !used.insert(le).second) throw InvalidInput("edge matched twice");
    if (out.edges[ue].orbit != out.edges[le].orbit) throw OrbitMismatch("matched edges carry different orbits");
    if (out.edges[ue].level != out.edges[le].level) throw OrbitMismatch("matched edges carry different levels");
    out.edges[ue].dst = out.edges[le].dst;
    out.edges[ue].basepoint = 0;
    drop[le] = 1;
  }
  std::vector<Edge> kept;
  for (int e = 0; e < out.ne(); ++e)
    if (!drop[e]) kept.push_back(out.edges[e]);
  out.edges = std::move(kept);
  out.s = c.s ? *c.s : inherited ? *inherited : SLabel::None;
  if ((c.flavor == Flavor::I || c.flavor == Flavor::II) && (out.nv() == 0 || num_components(out) != 1))
    throw DisconnectedResult("concatenation does not produce a connected tree");
  return out;
}

inline long aut_concat(const Concatenation& c, const TreeContext& ctx) {
  long a = 1;
  for (auto& j : c.junctions) {
    DecoratedTree p = c.parts[j.upper_part];
    if (p.flavor == Flavor::I && c.flavor != Flavor::I && j.upper_part < static_cast<int>(c.part_level.size()))
      p = at_level(p, c.part_level[j.upper_part]);
    a *= ctx.mult(p.edges[j.upper_edge]);
  }
  return a;
}

// ---- canonical forms ----

inline std::string pad_id(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", id);
  return buf;
}

inline std::string beta_key(const std::vector<long>& b) {
  std::string s = "[";
  for (size_t i = 0; i < b.size(); ++i) s += (i ? "," : "") + std::to_string(b[i]);
  return s + "]";
}

struct CanonicalForm {
  std::string key;
  std::vector<int> vertex_order;  // vertices in canonical pre-order
};

// leaf_labels, when given, distinguishes output edges (by source edge index) so that only leafless subtrees can swap.
inline CanonicalForm canonical_form(const DecoratedTree& t, const std::map<int, int>* leaf_labels = nullptr) {
  std::vector<std::string> vkey(t.nv());
  std::vector<std::vector<std::pair<std::string, int>>> kids(t.nv());  // (child key, vertex or -1)
  std::function<std::string(int)> rec = [&](int v) -> std::string {
    const auto& x = t.vertices[v];
    std::vector<std::pair<std::string, int>> ch;
    for (int e : t.outgoing(v)) {
      const auto& ed = t.edges[e];
      std::string k = (ed.dst < 0 ? "o" : "e") + std::to_string(ed.level) + "." + pad_id(ed.orbit);
      if (ed.dst < 0) {
        if (leaf_labels) {
          auto it = leaf_labels->find(e);
          k += "#" + pad_id(it == leaf_labels->end() ? -1 : it->second);
        }
        ch.push_back({k, -1});
      } else {
        ch.push_back({k + rec(ed.dst), ed.dst});
      }
    }
    std::sort(ch.begin(), ch.end());
    std::string s = "(" + beta_key(x.beta) + std::to_string(x.lp) + std::to_string(x.lm);
    for (auto& c : ch) s += c.first;
    s += ")";
    kids[v] = std::move(ch);
    vkey[v] = s;
    return s;
  };
  std::vector<std::pair<std::string, int>> comps;
  for (int e : t.inputs()) {
    const auto& ed = t.edges[e];
    std::string k = "i" + std::to_string(ed.level) + "." + pad_id(ed.orbit) + rec(ed.dst);
    comps.push_back({k, ed.dst});
  }
  std::sort(comps.begin(), comps.end());
  CanonicalForm cf;
  cf.key = std::string(flavor_name(t.flavor)) + s_name(t.s) + ":";
  std::function<void(int)> order = [&](int v) {
    cf.vertex_order.push_back(v);
    for (auto& c : kids[v])
      if (c.second >= 0) order(c.second);
  };
  for (auto& c : comps) {
    cf.key += c.first;
    order(c.second);
  }
  return cf;
}

inline bool isomorphic(const DecoratedTree& a, const DecoratedTree& b) {
  return canonical_form(a).key == canonical_form(b).key;
}

// Number of decoration-preserving automorphisms of the underlying tree.
inline long tree_automorphisms(const DecoratedTree& t, const std::map<int, int>* leaf_labels = nullptr) {
  long count = 1;
  auto fact = [](long n) {
    long f = 1;
    for (long i = 2; i <= n; ++i) f *= i;
    return f;
  };
  std::function<std::string(int)> rec = [&](int v) -> std::string {
    std::vector<std::string> ch;
    for (int e : t.outgoing(v)) {
      const auto& ed = t.edges[e];
      std::string k = (ed.dst < 0 ? "o" : "e") + std::to_string(ed.level) + "." + pad_id(ed.orbit);
      if (ed.dst < 0) {
        if (leaf_labels) {
          auto it = leaf_labels->find(e);
          k += "#" + pad_id(it == leaf_labels->end() ? -1 : it->second);
        }
      } else {
        k += rec(ed.dst);
      }
      ch.push_back(k);
    }
    std::sort(ch.begin(), ch.end());
    for (size_t i = 0; i < ch.size();) {
      size_t j = i;
      while (j < ch.size() && ch[j] == ch[i]) ++j;
      count *= fact(static_cast<long>(j - i));
      i = j;
    }
    std::string s = "(" + beta_key(t.vertices[v].beta) + std::to_string(t.vertices[v].lp) + std::to_string(t.vertices[v].lm);
    for (auto& c : ch) s += c;
    return s + ")";
  };
  std::vector<std::string> comps;
  for (int e : t.inputs()) {
    const auto& ed = t.edges[e];
    comps.push_back("i" + std::to_string(ed.level) + "." + pad_id(ed.orbit) + rec(ed.dst));
  }
  std::sort(comps.begin(), comps.end());
  for (size_t i = 0; i < comps.size();) {
    size_t j = i;
    while (j < comps.size() && comps[j] == comps[i]) ++j;
    count *= fact(static_cast<long>(j - i));
    i = j;
  }
  return count;
}

// |Aut(T)| = prod over input/output edges of d, times decoration-preserving tree automorphisms.
inline long automorphism_order(const DecoratedTree& t, const TreeContext& ctx) {
  long a = tree_automorphisms(t);
  for (int e = 0; e < t.ne(); ++e)
    if (!t.is_interior(e)) a *= ctx.mult(t.edges[e]);
  return a;
}

// |Aut(T'/T)|: automorphisms of T' fixing every input/output edge (they map to fixed edges of T).
inline long aut_relative(const TreeMorphism& f) {
  std::map<int, int> labels;
  for (int e = 0; e < f.source.ne(); ++e)
    if (!f.source.is_interior(e)) labels[e] = f.edge_map[e];
  return tree_automorphisms(f.source, &labels);
}

// ---- index, codimension, virtual dimension ----

inline long index(const DecoratedTree& t, const TreeContext& ctx) {
  if (!ctx.n) throw MissingData("index needs the half-dimension n");
  long mu = 0;
  for (int e = 0; e < t.ne(); ++e) {
    if (t.is_interior(e)) continue;
    auto cz = ctx.orbit(t.edges[e]).cz_index();
    if (!cz) throw MissingData("no Conley-Zehnder index for orbit " + ctx.orbit(t.edges[e]).name);
    long g = *cz + *ctx.n - 3;
    mu += t.is_input(e) ? g : -g;
  }
  return mu;
}

inline int index_parity(const DecoratedTree& t, const TreeContext& ctx) {
  int p = 0;
  for (int e = 0; e < t.ne(); ++e)
    if (!t.is_interior(e)) p += ctx.parity(t.edges[e]);
  return p & 1;
}

inline int codim(const DecoratedTree& t) { return t.num_symplectization() - s_dim(t.s); }

inline long vdim(const DecoratedTree& t, const TreeContext& ctx) { return index(t, ctx) - codim(t); }

// A vertex without outgoing edges may still raise its lower level label.
inline bool relabelable(const DecoratedTree& t, int v) {
  return t.flavor != Flavor::I && t.outgoing(v).empty() && t.vertices[v].lm < max_level(t.flavor);
}

// The only morphism out of T is the identity.
inline bool is_maximal(const DecoratedTree& t) {
  if (t.flavor == Flavor::I) return t.nv() == 1;
  for (int v = 0; v < t.nv(); ++v)
    if (relabelable(t, v)) return false;
  if (t.flavor == Flavor::II) return t.nv() == 1;
  return t.interior().empty() && s_dim(t.s) == 1;
}

// ---- subtrees ----

// Vertex-induced subtree on `keep`, with edges to removed vertices turned into half edges.
inline DecoratedTree induced_subtree(const DecoratedTree& t, const std::vector<int>& keep) {
  std::vector<int> idx(t.nv(), -1);
  DecoratedTree s;
  s.flavor = t.flavor;
  s.s = t.s;
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  for (int v : sorted) {
    idx[v] = s.nv();
    s.vertices.push_back(t.vertices[v]);
  }
  for (auto e : t.edges) {
    int a = e.src >= 0 ? idx[e.src] : -1, b = e.dst >= 0 ? idx[e.dst] : -1;
    if (a < 0 && b < 0) continue;
    e.src = a;
    e.dst = b;
    s.edges.push_back(e);
  }
  return s;
}

// Connected non-empty vertex sets, each listed as sorted vertex indices.
inline std::vector<std::vector<int>> subtree_vertex_sets(const DecoratedTree& t) {
  std::vector<std::vector<int>> children(t.nv());
  for (auto& e : t.edges)
    if (e.src >= 0 && e.dst >= 0) children[e.src].push_back(e.dst);
  std::function<std::vector<std::vector<int>>(int)> rooted = [&](int v) {
    std::vector<std::vector<int>> acc{{v}};
    for (int c : children[v]) {
      auto sub = rooted(c);
      std::vector<std::vector<int>> next = acc;
      for (auto& a : acc)
        for (auto& s : sub) {
          auto m = a;
          m.insert(m.end(), s.begin(), s.end());
          next.push_back(std::move(m));
        }
      acc = std::move(next);
    }
    return acc;
  };
  std::vector<std::vector<int>> all;
  for (int v = 0; v < t.nv(); ++v)
    for (auto s : rooted(v)) {
      std::sort(s.begin(), s.end());
      all.push_back(std::move(s));
    }
  std::sort(all.begin(), all.end());
  return all;
}

inline std::vector<DecoratedTree> enumerate_subtrees(const DecoratedTree& t) {
  std::vector<DecoratedTree> r;
  for (auto& s : subtree_vertex_sets(t)) r.push_back(induced_subtree(t, s));
  return r;
}

// ---- morphisms out of a tree ----

// All morphisms T -> T' up to isomorphism of T' under T (contracted edges, lower relabels, s).
inline std::vector<TreeMorphism> enumerate_contractions(const DecoratedTree& t) {
  auto inner = t.interior();
  std::vector<TreeMorphism> out;
  std::vector<SLabel> s_choices{t.s};
  if (t.flavor == Flavor::III && t.s != SLabel::ZeroOne) s_choices.push_back(SLabel::ZeroOne);
  if (t.flavor == Flavor::IV && t.s != SLabel::ZeroInf) s_choices.push_back(SLabel::ZeroInf);
  const int L = max_level(t.flavor);
  for (unsigned mask = 0; mask < (1u << inner.size()); ++mask) {
    std::set<int> cut;
    for (size_t i = 0; i < inner.size(); ++i)
      if (mask >> i & 1) cut.insert(inner[i]);
    for (SLabel s : s_choices) {
      // Groups without outgoing edges may raise *^-.
      std::vector<int> reps;
      std::vector<int> lows;
      {
        std::vector<int> grp(t.nv());
        std::iota(grp.begin(), grp.end(), 0);
        std::function<int(int)> find = [&](int x) { return grp[x] == x ? x : grp[x] = find(grp[x]); };
        for (int e : cut) grp[find(t.edges[e].src)] = find(t.edges[e].dst);
        std::map<int, std::vector<int>> members;
        for (int v = 0; v < t.nv(); ++v) members[find(v)].push_back(v);
        for (auto& [r, mem] : members) {
          bool has_out = false;
          int mx = 0;
          for (int v : mem) {
            mx = std::max(mx, t.vertices[v].lm);
            for (int e : t.outgoing(v))
              if (!cut.count(e)) has_out = true;
          }
          if (!has_out && t.flavor != Flavor::I) {
            reps.push_back(mem.front());
            lows.push_back(mx);
          }
        }
      }
      std::vector<int> choice(reps.size());
      for (size_t i = 0; i < reps.size(); ++i) choice[i] = lows[i];
      while (true) {
        std::map<int, int> rel;
        for (size_t i = 0; i < reps.size(); ++i) rel[reps[i]] = choice[i];
        try {
          out.push_back(contract(t, cut, rel, s));
        } catch (const NoConsistentLabeling&) {
        }
        size_t i = 0;
        while (i < reps.size() && ++choice[i] > L) choice[i] = lows[i], ++i;
        if (i == reps.size()) break;
      }
    }
  }
  return out;
}

inline bool is_isomorphism(const TreeMorphism& f) {
  for (int e : f.edge_map)
    if (e < 0) return false;
  return f.source.vertices == f.target.vertices && f.source.s == f.target.s;
}

// ---- concatenation decompositions ----

// Pieces obtained by cutting the interior edges in `cut`, with their junctions.
inline Concatenation cut_into_pieces(const DecoratedTree& t, const std::set<int>& cut) {
  DecoratedTree stripped = t;
  for (int e : cut) stripped.edges[e].src = stripped.edges[e].dst = -2;  // marker, never visible
  std::vector<int> parent(t.nv());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int e = 0; e < t.ne(); ++e)
    if (!cut.count(e) && t.is_interior(e)) parent[find(t.edges[e].src)] = find(t.edges[e].dst);
  std::map<int, std::vector<int>> pieces;
  for (int v = 0; v < t.nv(); ++v) pieces[find(v)].push_back(v);
  Concatenation c;
  c.flavor = t.flavor;
  std::vector<int> piece_of(t.nv());
  std::vector<std::vector<int>> piece_vertices;
  for (auto& [r, mem] : pieces) {
    for (int v : mem) piece_of[v] = static_cast<int>(piece_vertices.size());
    piece_vertices.push_back(mem);
  }
  // Edge index inside each piece, following induced_subtree's ordering.
  std::vector<std::map<int, int>> edge_in_piece(piece_vertices.size());
  for (size_t p = 0; p < piece_vertices.size(); ++p) {
    std::set<int> mem(piece_vertices[p].begin(), piece_vertices[p].end());
    DecoratedTree part;
    part.flavor = t.flavor;
    part.s = t.s;
    std::map<int, int> vidx;
    for (int v : piece_vertices[p]) {
      vidx[v] = part.nv();
      part.vertices.push_back(t.vertices[v]);
    }
    for (int e = 0; e < t.ne(); ++e) {
      Edge ed = t.edges[e];
      bool s_in = ed.src >= 0 && mem.count(ed.src), d_in = ed.dst >= 0 && mem.count(ed.dst);
      if (!s_in && !d_in) continue;
      ed.src = s_in ? vidx[ed.src] : -1;
      ed.dst = d_in ? vidx[ed.dst] : -1;
      if (cut.count(e)) ed.basepoint = 0;
      edge_in_piece[p][e] = part.ne();
      part.edges.push_back(ed);
    }
    c.parts.push_back(std::move(part));
  }
  for (int e : cut) {
    Junction j;
    j.upper_part = piece_of[t.edges[e].src];
    j.lower_part = piece_of[t.edges[e].dst];
    j.upper_edge = edge_in_piece[j.upper_part][e];
    j.lower_edge = edge_in_piece[j.lower_part][e];
    c.junctions.push_back(j);
  }
  c.part_level.assign(c.parts.size(), 0);
  return c;
}

// If every vertex of the piece has type ll for one level l, that level.
inline std::optional<int> pure_level(const DecoratedTree& p) {
  if (p.flavor == Flavor::I) return 0;
  std::optional<int> l;
  for (auto& v : p.vertices) {
    if (v.lp != v.lm) return std::nullopt;
    if (l && *l != v.lp) return std::nullopt;
    l = v.lp;
  }
  return l;
}

// Searches for a nontrivial concatenation presenting T. Parts are typed: pure pieces become
// flavor-I trees at their level; the rest forms the single mixed part.
inline std::optional<Concatenation> find_concatenation_decomposition(const DecoratedTree& t) {
  auto inner = t.interior();
  if (t.flavor == Flavor::I) {
    if (inner.empty()) return std::nullopt;
    auto c = cut_into_pieces(t, {inner.front()});
    return c;
  }
  if ((t.flavor == Flavor::III || t.flavor == Flavor::IV) && s_dim(t.s) == 0) {
    // Types one and two: the components, viewed in the flavor of the endpoint.
    Concatenation c = cut_into_pieces(t, {});
    c.s = t.s;
    for (auto& p : c.parts) p.s = SLabel::None;
    return c;
  }
  for (unsigned mask = 0; mask < (1u << inner.size()); ++mask) {
    std::set<int> cut;
    for (size_t i = 0; i < inner.size(); ++i)
      if (mask >> i & 1) cut.insert(inner[i]);
    Concatenation c = cut_into_pieces(t, cut);
    // Pure pieces become flavor-I parts; mixed pieces are merged into the flavor-t part.
    std::vector<int> pure, mixed;
    for (size_t p = 0; p < c.parts.size(); ++p) {
      (pure_level(c.parts[p]) ? pure : mixed).push_back(static_cast<int>(p));
    }
    if (t.flavor == Flavor::II) {
      if (c.parts.size() < 2 && mixed.size() == 1) continue;
      for (int p : pure) {
        c.part_level[p] = *pure_level(c.parts[p]);
        c.parts[p] = at_level(c.parts[p], 0);
        c.parts[p].flavor = Flavor::I;
      }
      bool ok = true;
      for (int p : mixed)
        if (!validate(c.parts[p]).empty()) ok = false;
      if (ok) return c;
      continue;
    }
    // III / IV with an interval label: need at least one pure part, exactly one mixed part.
    if (pure.empty()) continue;
    Concatenation d;
    d.flavor = t.flavor;
    std::vector<int> new_index(c.parts.size(), -1);
    std::vector<int> edge_shift_part(c.parts.size(), 0);
    DecoratedTree merged;
    merged.flavor = t.flavor;
    merged.s = t.s;
    for (int p : mixed) {
      int voff = merged.nv();
      edge_shift_part[p] = merged.ne();
      for (auto& v : c.parts[p].vertices) merged.vertices.push_back(v);
      for (auto e : c.parts[p].edges) {
        if (e.src >= 0) e.src += voff;
        if (e.dst >= 0) e.dst += voff;
        merged.edges.push_back(e);
      }
    }
    if (!validate(merged).empty()) continue;
    d.parts.push_back(merged);
    d.part_level.push_back(0);
    for (int p : mixed) new_index[p] = 0;
    for (int p : pure) {
      new_index[p] = static_cast<int>(d.parts.size());
      DecoratedTree q = at_level(c.parts[p], 0);
      q.flavor = Flavor::I;
      q.s = SLabel::None;
      d.parts.push_back(q);
      d.part_level.push_back(*pure_level(c.parts[p]));
    }
    for (auto j : c.junctions) {
      if (new_index[j.upper_part] == 0) j.upper_edge += edge_shift_part[j.upper_part];
      if (new_index[j.lower_part] == 0) j.lower_edge += edge_shift_part[j.lower_part];
      j.upper_part = new_index[j.upper_part];
      j.lower_part = new_index[j.lower_part];
      d.junctions.push_back(j);
    }
    return d;
  }
  return std::nullopt;
}

}  // namespace sft
