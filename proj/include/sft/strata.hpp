#pragma once

// Strata over a one-vertex tree T (flavors I and II), the complex Q[S](T), and the correspondence between
// count tables and module maps Q[S] -> Q.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sft/counts.hpp"
#include "sft/errors.hpp"
#include "sft/graded_linear.hpp"
#include "sft/trees.hpp"

namespace sft {

// Vertex types by level labels: 00 and 11 are symplectization vertices, 01 is a cobordism vertex.
constexpr int kUpper = 0, kCobordism = 1, kLower = 3;

inline int vertex_type(const DecoratedTree& t, int v) {
  return t.flavor == Flavor::I ? kUpper : t.vertices[v].lp * 2 + t.vertices[v].lm;
}

inline bool symplectization_type(int type) { return type != kCobordism; }

// The counts attached to each vertex type.
struct StrataTables {
  Flavor flavor = Flavor::I;
  CountTable upper, cob, lower;

  static StrataTables one(const CountTable& t) {
    if (t.flavor != Flavor::I) throw InvalidInput("strata: expected a flavor I table");
    return StrataTables{Flavor::I, t, CountTable{}, t};
  }
  static StrataTables two(const CountTable& cob, const CountTable& plus, const CountTable& minus) {
    if (cob.flavor != Flavor::II || plus.flavor != Flavor::I || minus.flavor != Flavor::I)
      throw InvalidInput("strata: expected flavors II, I, I");
    return StrataTables{Flavor::II, plus, cob, minus};
  }

  const CountTable& table(int type) const { return type == kUpper ? upper : type == kCobordism ? cob : lower; }
  const OrbitUniverse& level(int l) const { return l == 0 ? upper.top() : lower.top(); }
  int beta_rank() const { return upper.beta_rank; }
  const CountTable& root_table() const { return flavor == Flavor::I ? upper : cob; }
};

inline CountKey vertex_key(const DecoratedTree& t, int v) {
  CountKey k;
  k.in = t.edges[t.incoming(v)].orbit;
  for (int e : t.outgoing(v)) k.outs.push_back(t.edges[e].orbit);
  std::sort(k.outs.begin(), k.outs.end());
  k.beta = t.vertices[v].beta;
  return k;
}

// ---- effective vertex triples ----

// Triples that occur as merges of trees whose vertices all carry nonzero counts.
struct EffectiveSet {
  std::map<int, std::set<CountKey>> by_type;
  std::map<std::pair<int, std::vector<int>>, std::vector<CountKey>> by_outs;

  bool contains(int type, const CountKey& k) const {
    auto it = by_type.find(type);
    return it != by_type.end() && it->second.count(k);
  }
  std::vector<CountKey> with_in(int type, int in) const {
    std::vector<CountKey> r;
    auto it = by_type.find(type);
    if (it == by_type.end()) return r;
    for (auto j = it->second.lower_bound(CountKey{in, {}, {}}); j != it->second.end() && j->in == in; ++j)
      r.push_back(*j);
    return r;
  }
  const std::vector<CountKey>& with_outs(int type, const std::vector<int>& outs) const {
    static const std::vector<CountKey> none;
    auto it = by_outs.find({type, outs});
    return it == by_outs.end() ? none : it->second;
  }
  size_t size() const {
    size_t n = 0;
    for (auto& [t, s] : by_type) n += s.size();
    return n;
  }
};

inline CountKey merge_keys(const CountKey& upper, const CountKey& lower, size_t at) {
  CountKey m{upper.in, upper.outs, beta_add(upper.beta, lower.beta)};
  m.outs.erase(m.outs.begin() + static_cast<long>(at));
  m.outs.insert(m.outs.end(), lower.outs.begin(), lower.outs.end());
  std::sort(m.outs.begin(), m.outs.end());
  return m;
}

inline EffectiveSet effective_set(const StrataTables& tabs, size_t limit = 200000) {
  EffectiveSet eff;
  auto strictly_decreasing = [&](const CountKey& k, int level) {
    const auto& u = tabs.level(level);
    Rational a = 0;
    for (int o : k.outs) a += u.action(o);
    return a < u.action(k.in);
  };
  for (auto& [k, v] : tabs.upper.entries)
    if (strictly_decreasing(k, 0)) eff.by_type[kUpper].insert(k);
  if (tabs.flavor == Flavor::II) {
    for (auto& [k, v] : tabs.lower.entries)
      if (strictly_decreasing(k, 1)) eff.by_type[kLower].insert(k);
    for (auto& [k, v] : tabs.cob.entries) eff.by_type[kCobordism].insert(k);
  }
  auto add = [&](int type, const CountKey& k, bool& changed) {
    if (eff.by_type[type].insert(k).second) changed = true;
    if (eff.size() > limit) throw NonTerminating("effective set exceeds " + std::to_string(limit) + " triples");
  };
  bool changed = true;
  while (changed) {
    changed = false;
    // Same-type merges of symplectization vertices.
    for (int type : {kUpper, kLower}) {
      auto cur = eff.by_type[type];
      for (auto& a : cur)
        for (size_t p = 0; p < a.outs.size(); ++p) {
          if (p && a.outs[p] == a.outs[p - 1]) continue;
          for (auto& b : eff.with_in(type, a.outs[p])) add(type, merge_keys(a, b, p), changed);
        }
    }
    if (tabs.flavor != Flavor::II) continue;
    auto cob = eff.by_type[kCobordism];
    // A level-minus vertex below a cobordism vertex.
    for (auto& a : cob)
      for (size_t p = 0; p < a.outs.size(); ++p) {
        if (p && a.outs[p] == a.outs[p - 1]) continue;
        for (auto& b : eff.with_in(kLower, a.outs[p])) add(kCobordism, merge_keys(a, b, p), changed);
      }
    // A level-plus vertex with a cobordism vertex under each of its outputs.
    for (auto& u : eff.by_type[kUpper]) {
      std::function<void(size_t, std::vector<int>, std::vector<long>)> rec = [&](size_t i, std::vector<int> outs,
                                                                                std::vector<long> beta) {
        if (i == u.outs.size()) {
          std::sort(outs.begin(), outs.end());
          add(kCobordism, CountKey{u.in, outs, beta}, changed);
          return;
        }
        for (auto& c : eff.with_in(kCobordism, u.outs[i])) {
          auto o = outs;
          o.insert(o.end(), c.outs.begin(), c.outs.end());
          rec(i + 1, o, beta_add(beta, c.beta));
        }
      };
      rec(0, {}, u.beta);
    }
  }
  for (auto& [type, keys] : eff.by_type)
    for (auto& k : keys) eff.by_outs[{type, k.outs}].push_back(k);
  return eff;
}

// ---- trees over the root ----

struct OverTree {
  DecoratedTree tree;
  std::map<int, int> leaves;  // output edge -> output position of the root tree
};

inline OverTree root_tree(Flavor f, const CountKey& k) {
  OverTree o;
  o.tree.flavor = f;
  int low = f == Flavor::I ? 0 : 1;
  o.tree.vertices.push_back(Vertex{k.beta, 0, low});
  o.tree.edges.push_back(Edge{-1, 0, k.in, 0, 0});
  for (size_t i = 0; i < k.outs.size(); ++i) {
    o.leaves[o.tree.ne()] = static_cast<int>(i);
    o.tree.edges.push_back(Edge{0, -1, k.outs[i], low, 0});
  }
  return o;
}

// Renumbers vertices in canonical pre-order and edges as: input edge, then per vertex its interior
// out-edges by child and its leaves by label.
struct CanonicalOverTree {
  std::string key;
  OverTree rep;
  std::vector<int> position;  // old vertex -> new vertex
};

inline CanonicalOverTree canonicalize(const OverTree& t) {
  auto cf = canonical_form(t.tree, &t.leaves);
  CanonicalOverTree c;
  c.key = cf.key;
  c.position.assign(t.tree.nv(), -1);
  for (size_t i = 0; i < cf.vertex_order.size(); ++i) c.position[cf.vertex_order[i]] = static_cast<int>(i);
  std::vector<int> edge_order;
  for (int e : t.tree.inputs()) edge_order.push_back(e);
  for (int v : cf.vertex_order) {
    std::vector<int> inner, leaf;
    for (int e : t.tree.outgoing(v)) (t.tree.edges[e].dst >= 0 ? inner : leaf).push_back(e);
    std::sort(inner.begin(), inner.end(),
              [&](int a, int b) { return c.position[t.tree.edges[a].dst] < c.position[t.tree.edges[b].dst]; });
    std::sort(leaf.begin(), leaf.end(), [&](int a, int b) { return t.leaves.at(a) < t.leaves.at(b); });
    edge_order.insert(edge_order.end(), inner.begin(), inner.end());
    edge_order.insert(edge_order.end(), leaf.begin(), leaf.end());
  }
  c.rep.tree.flavor = t.tree.flavor;
  c.rep.tree.s = t.tree.s;
  c.rep.tree.vertices.resize(t.tree.nv());
  for (int v = 0; v < t.tree.nv(); ++v) c.rep.tree.vertices[c.position[v]] = t.tree.vertices[v];
  for (int e : edge_order) {
    Edge ed = t.tree.edges[e];
    if (ed.src >= 0) ed.src = c.position[ed.src];
    if (ed.dst >= 0) ed.dst = c.position[ed.dst];
    auto it = t.leaves.find(e);
    if (it != t.leaves.end()) c.rep.leaves[c.rep.tree.ne()] = it->second;
    c.rep.tree.edges.push_back(ed);
  }
  return c;
}

inline std::vector<int> symplectization_vertices(const DecoratedTree& t) {
  std::vector<int> r;
  for (int v = 0; v < t.nv(); ++v)
    if (symplectization_type(vertex_type(t, v))) r.push_back(v);
  return r;
}

// True when some automorphism over the root reverses the orientation of Q[S]: two identical sibling subtrees
// (necessarily leafless) with an odd number of symplectization vertices each.
inline bool has_odd_symmetry(const OverTree& t) {
  std::vector<std::string> sig(t.tree.nv());
  std::vector<int> count(t.tree.nv(), 0);
  bool odd = false;
  std::function<void(int)> rec = [&](int v) {
    std::vector<std::pair<std::string, int>> ch;
    count[v] = symplectization_type(vertex_type(t.tree, v));
    for (int e : t.tree.outgoing(v)) {
      const auto& ed = t.tree.edges[e];
      std::string k = std::to_string(ed.level) + "." + pad_id(ed.orbit);
      if (ed.dst < 0) {
        ch.push_back({"o" + k + "#" + pad_id(t.leaves.at(e)), 0});
      } else {
        rec(ed.dst);
        count[v] += count[ed.dst];
        ch.push_back({"e" + k + sig[ed.dst], count[ed.dst]});
      }
    }
    std::sort(ch.begin(), ch.end());
    for (size_t i = 1; i < ch.size(); ++i)
      if (ch[i].first == ch[i - 1].first && (ch[i].second & 1)) odd = true;
    std::string s = "(" + beta_key(t.tree.vertices[v].beta) + std::to_string(t.tree.vertices[v].lp) +
                    std::to_string(t.tree.vertices[v].lm);
    for (auto& c : ch) s += c.first;
    sig[v] = s + ")";
  };
  for (int e : t.tree.inputs()) rec(t.tree.edges[e].dst);
  return odd;
}

// ---- codimension-one faces ----

struct Face {
  OverTree tree;
  std::vector<int> wedge;  // symplectization vertices in the order the splitting rule produces
  int sign = 1;
  Rational weight = 1;     // 1 / |Aut(F / T')|
};

namespace detail {

inline std::vector<int> outs_of(const DecoratedTree& t, const std::vector<int>& edges) {
  std::vector<int> o;
  for (int e : edges) o.push_back(t.edges[e].orbit);
  std::sort(o.begin(), o.end());
  return o;
}

// The face with the image of each vertex in T' recorded, so that isomorphism over T' can be tested.
inline OverTree annotate(const OverTree& f, int old_nv, int split) {
  OverTree a = f;
  for (int v = 0; v < a.tree.nv(); ++v) a.tree.vertices[v].beta.push_back(v < old_nv ? v : split);
  return a;
}

}  // namespace detail

// All faces of a canonical representative: one more symplectization vertex, every new vertex effective.
inline std::vector<Face> faces(const OverTree& t, const EffectiveSet& eff, const StrataTables& tabs) {
  const auto& tr = t.tree;
  const int nv = tr.nv();
  auto wedge = symplectization_vertices(tr);
  std::vector<std::pair<Face, int>> raw;  // face, split vertex
  auto resize = [&](std::vector<long> b) {
    b.resize(std::max<size_t>(b.size(), static_cast<size_t>(tabs.beta_rank())), 0);
    return b;
  };
  for (int v = 0; v < nv; ++v) {
    const int type = vertex_type(tr, v);
    const CountKey kv = vertex_key(tr, v);
    const auto out_edges = tr.outgoing(v);
    const int k = static_cast<int>(out_edges.size());
    // Binary splits: a symplectization vertex into two of its type, or a cobordism vertex over a level-minus vertex.
    const int lower_type = type == kCobordism ? kLower : type;
    const int level = type == kUpper ? 0 : 1;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      std::vector<int> W, rest;
      for (int i = 0; i < k; ++i) (mask >> i & 1 ? W : rest).push_back(out_edges[i]);
      for (auto& kw : eff.with_outs(lower_type, detail::outs_of(tr, W))) {
        auto uo = detail::outs_of(tr, rest);
        uo.push_back(kw.in);
        std::sort(uo.begin(), uo.end());
        CountKey ku{kv.in, uo, resize(beta_sub(kv.beta, kw.beta))};
        if (!eff.contains(type, ku)) continue;
        Face f;
        f.tree = t;
        auto& ft = f.tree.tree;
        int w = ft.nv();
        ft.vertices[v].beta = ku.beta;
        ft.vertices.push_back(Vertex{kw.beta, level, level});
        for (int e : W) ft.edges[e].src = w;
        ft.edges.push_back(Edge{v, w, kw.in, level, 0});
        if (type == kCobordism) {
          f.wedge = {w};
          f.wedge.insert(f.wedge.end(), wedge.begin(), wedge.end());
          f.sign = -1;
        } else {
          size_t pos = std::find(wedge.begin(), wedge.end(), v) - wedge.begin();
          f.wedge = wedge;
          f.wedge.insert(f.wedge.begin() + static_cast<long>(pos) + 1, w);
          f.sign = (pos & 1) ? -1 : 1;
        }
        raw.push_back({std::move(f), v});
      }
    }
    if (type != kCobordism) continue;
    // A level-plus vertex above the cobordism level, with one cobordism vertex under each of its outputs.
    for (auto& ku : eff.with_in(kUpper, kv.in)) {
      const int j = static_cast<int>(ku.outs.size());
      if (j == 0 && k > 0) continue;
      std::vector<int> assign(k, 0);
      std::function<void(int)> choose = [&](int pos) {
        if (pos < k) {
          for (int c = 0; c < j; ++c) {
            assign[pos] = c;
            choose(pos + 1);
          }
          return;
        }
        std::vector<std::vector<int>> blocks(j);
        for (int i = 0; i < k; ++i) blocks[assign[i]].push_back(out_edges[i]);
        std::vector<std::vector<long>> betas(j);
        std::function<void(int, std::vector<long>)> child = [&](int c, std::vector<long> left) {
          if (c == j) {
            if (resize(left) != resize({})) return;
            Face f;
            f.tree = t;
            auto& ft = f.tree.tree;
            ft.vertices[v].lm = 0;
            ft.vertices[v].beta = ku.beta;
            for (int i = 0; i < j; ++i) {
              int w = ft.nv();
              ft.vertices.push_back(Vertex{betas[i], 0, 1});
              for (int e : blocks[i]) ft.edges[e].src = w;
              ft.edges.push_back(Edge{v, w, ku.outs[i], 0, 0});
            }
            f.wedge = {v};
            f.wedge.insert(f.wedge.end(), wedge.begin(), wedge.end());
            raw.push_back({std::move(f), v});
            return;
          }
          auto outs = detail::outs_of(tr, blocks[c]);
          for (auto& kc : eff.with_outs(kCobordism, outs)) {
            if (kc.in != ku.outs[c]) continue;
            betas[c] = kc.beta;
            child(c + 1, beta_sub(left, kc.beta));
          }
        };
        child(0, resize(beta_sub(kv.beta, ku.beta)));
      };
      choose(0);
    }
  }
  // Faces are counted up to isomorphism over T'.
  std::vector<Face> out;
  std::set<std::string> seen;
  for (auto& [f, v] : raw) {
    auto a = detail::annotate(f.tree, nv, v);
    if (!seen.insert(canonical_form(a.tree, &a.leaves).key).second) continue;
    f.weight = Rational(1) / Rational(tree_automorphisms(a.tree, &a.leaves));
    out.push_back(std::move(f));
  }
  return out;
}

// Sign taking a face's wedge to the canonical order of its representative.
inline int wedge_sign(const std::vector<int>& wedge, const std::vector<int>& position) {
  std::vector<int> order(wedge.size());
  for (size_t i = 0; i < wedge.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return position[wedge[a]] < position[wedge[b]]; });
  return koszul_sign(order, std::vector<int>(wedge.size(), 1));
}

// ---- the module map of a count table ----

// phi(e_T') = sigma * prod_v c_v / prod_{interior e} d_e, where sigma reorders the nested tree word
// (o_in^v, r_v, outputs with each child's word in place of its edge) into (r's in canonical order, leaves).
inline Rational module_value(const OverTree& rep, const StrataTables& tabs) {
  const auto& t = rep.tree;
  Rational value = 1;
  for (int v = 0; v < t.nv(); ++v) {
    std::vector<int> outs;
    for (int e : t.outgoing(v)) outs.push_back(t.edges[e].orbit);
    const auto& tab = tabs.table(vertex_type(t, v));
    value *= tab.value(t.edges[t.incoming(v)].orbit, outs, t.vertices[v].beta);
    if (value == 0) return 0;
  }
  for (int e : t.interior()) value /= tabs.level(t.edges[e].level).mult(t.edges[e].orbit);
  std::vector<std::pair<int, int>> word;
  std::vector<int> par;
  std::function<void(int)> emit = [&](int v) {
    if (symplectization_type(vertex_type(t, v))) {
      word.push_back({0, v});
      par.push_back(1);
    }
    for (int e : t.outgoing(v)) {
      if (t.edges[e].dst >= 0) {
        emit(t.edges[e].dst);
      } else {
        word.push_back({1, rep.leaves.at(e)});
        par.push_back(tabs.level(t.edges[e].level).parity(t.edges[e].orbit));
      }
    }
  };
  for (int e : t.inputs()) emit(t.edges[e].dst);
  return value * sort_sign(word, par);
}

// phi(D e_T) for the one-vertex tree of a key: the chain-map obstruction of the module map at that key.
inline Rational qs_residual(const StrataTables& tabs, const EffectiveSet& eff, const CountKey& key) {
  auto root = canonicalize(root_tree(tabs.flavor, key)).rep;
  Rational total = 0;
  for (auto& f : faces(root, eff, tabs)) {
    auto c = canonicalize(f.tree);
    if (has_odd_symmetry(c.rep)) continue;
    total += f.weight * f.sign * wedge_sign(f.wedge, c.position) * module_value(c.rep, tabs);
  }
  return total;
}

// ---- the strata poset and Q[S](T) ----

struct Stratum {
  OverTree rep;
  std::string key;
  int codim = 0;
  long degree = 0;          // vdim when integer gradings are known, else -codim
  bool odd_symmetry = false;  // the generator vanishes in Q[S]
};

struct StrataPoset {
  Flavor flavor = Flavor::I;
  CountKey root;
  std::vector<Stratum> strata;  // strata[0] is the root
  std::map<std::string, int> index;
  std::vector<std::map<int, Rational>> boundary;  // D e_i = sum_j boundary[i][j] e_j
  std::vector<std::set<int>> faces;               // strata of codimension one more admitting a map to stratum i

  // a <= b: a maps to b over the root.
  bool leq(int a, int b) const {
    if (a == b) return true;
    std::vector<int> stack{b};
    std::set<int> seen{b};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (int y : faces[x]) {
        if (y == a) return true;
        if (seen.insert(y).second) stack.push_back(y);
      }
    }
    return false;
  }
};

inline StrataPoset enumerate_strata(const StrataTables& tabs, const CountKey& root, const EffectiveSet* given = nullptr,
                                    size_t limit = 20000) {
  for (int l = 0; l < (tabs.flavor == Flavor::I ? 1 : 2); ++l)
    for (auto& o : tabs.level(l).orbits())
      if (o.action() <= 0) throw NonTerminating("orbit with nonpositive action: " + o.name);
  EffectiveSet local;
  if (!given) local = effective_set(tabs);
  const EffectiveSet& eff = given ? *given : local;
  StrataPoset P;
  P.flavor = tabs.flavor;
  P.root = root;
  P.root.beta.resize(std::max<size_t>(root.beta.size(), static_cast<size_t>(tabs.beta_rank())), 0);
  auto mu = key_index(tabs.root_table(), P.root);
  auto add = [&](const CanonicalOverTree& c) {
    auto it = P.index.find(c.key);
    if (it != P.index.end()) return it->second;
    if (P.strata.size() >= limit) throw NonTerminating("more than " + std::to_string(limit) + " strata");
    Stratum s;
    s.rep = c.rep;
    s.key = c.key;
    s.codim = c.rep.tree.num_symplectization();
    s.degree = mu ? *mu - s.codim : -s.codim;
    s.odd_symmetry = has_odd_symmetry(c.rep);
    P.strata.push_back(std::move(s));
    P.boundary.emplace_back();
    P.faces.emplace_back();
    int id = static_cast<int>(P.strata.size()) - 1;
    P.index[c.key] = id;
    return id;
  };
  add(canonicalize(root_tree(tabs.flavor, P.root)));
  for (size_t i = 0; i < P.strata.size(); ++i) {
    auto fs = faces(P.strata[i].rep, eff, tabs);
    for (auto& f : fs) {
      auto c = canonicalize(f.tree);
      int j = add(c);
      P.faces[i].insert(j);
      if (P.strata[i].odd_symmetry || P.strata[j].odd_symmetry) continue;
      auto& b = P.boundary[i][j];
      b += f.weight * f.sign * wedge_sign(f.wedge, c.position);
      if (b == 0) P.boundary[i].erase(j);
    }
  }
  return P;
}

// The complex Q[S](T): one line per stratum without an orientation-reversing symmetry.
struct QSComplex {
  ChainComplex complex;
  std::map<int, std::vector<int>> basis;  // degree -> stratum ids in basis order
};

inline QSComplex qs_complex(const StrataPoset& P) {
  QSComplex q;
  std::map<int, int> pos;
  for (size_t i = 0; i < P.strata.size(); ++i) {
    if (P.strata[i].odd_symmetry) continue;
    auto& b = q.basis[static_cast<int>(P.strata[i].degree)];
    pos[static_cast<int>(i)] = static_cast<int>(b.size());
    b.push_back(static_cast<int>(i));
  }
  if (q.basis.empty()) return q;
  int lo = q.basis.begin()->first, hi = q.basis.rbegin()->first;
  std::vector<GradedSpace> spaces;
  std::vector<Matrix> d;
  auto dim = [&](int k) { return q.basis.count(k) ? q.basis[k].size() : size_t{0}; };
  for (int k = lo; k <= hi; ++k) {
    std::vector<BasisElement> be;
    if (q.basis.count(k))
      for (int i : q.basis[k]) be.push_back({P.strata[i].key, k & 1, 0});
    spaces.emplace_back(std::move(be));
    Matrix m(dim(k - 1), dim(k));
    if (q.basis.count(k))
      for (int i : q.basis[k])
        for (auto& [j, c] : P.boundary[i]) {
          if (P.strata[j].degree != k - 1) throw HypothesisViolation("boundary does not lower the degree by one");
          m(pos[j], pos[i]) = c;
        }
    d.push_back(std::move(m));
  }
  q.complex = ChainComplex(lo, std::move(spaces), std::move(d));
  return q;
}

// ---- counts <-> module maps ----

// A module map Q[S] -> Q, recorded by its values on the generators of one-vertex strata; the value on any
// other stratum follows from the product law.
struct ModuleMap {
  Flavor flavor = Flavor::I;
  std::vector<OrbitUniverse> levels;
  int beta_rank = 0;
  struct Generator {
    int type = kUpper;
    OverTree tree;
    Rational value;
  };
  std::map<std::string, Generator> generators;
};

inline void check_module_map(const StrataTables& tabs, const std::set<CountKey>& keys) {
  auto eff = effective_set(tabs);
  for (auto& k : keys) {
    auto r = qs_residual(tabs, eff, k);
    if (r != 0) throw NotAChainMap(key_string(tabs.root_table(), k) + " (" + to_string(r) + ")");
  }
}

inline void add_generators(ModuleMap& m, const CountTable& t, Flavor tree_flavor, int type) {
  for (auto& [k, v] : t.entries) {
    auto o = root_tree(tree_flavor, k);
    if (type == kUpper && tree_flavor == Flavor::II) o.tree.vertices[0].lm = 0;
    if (type == kLower) {
      o.tree.vertices[0].lp = 1;
      for (auto& e : o.tree.edges) e.level = 1;
    }
    auto c = canonicalize(o);
    m.generators[c.key] = ModuleMap::Generator{type, c.rep, v};
  }
}

inline ModuleMap counts_to_module_map(const CountTable& t) {
  auto bad = validate_counts(t);
  if (!bad.empty()) throw InvalidInput("count table fails validation: " + bad.front());
  auto tabs = StrataTables::one(t);
  check_module_map(tabs, residual_keys(t));
  ModuleMap m{Flavor::I, t.levels, t.beta_rank, {}};
  add_generators(m, t, Flavor::I, kUpper);
  return m;
}

inline ModuleMap counts_to_module_map(const CountTable& cob, const CountTable& plus, const CountTable& minus) {
  for (auto* t : {&cob, &plus, &minus}) {
    auto bad = validate_counts(*t);
    if (!bad.empty()) throw InvalidInput("count table fails validation: " + bad.front());
  }
  auto tabs = StrataTables::two(cob, plus, minus);
  check_module_map(StrataTables::one(plus), residual_keys(plus));
  check_module_map(StrataTables::one(minus), residual_keys(minus));
  check_module_map(tabs, residual_keys(cob, plus, minus));
  ModuleMap m{Flavor::II, cob.levels, cob.beta_rank, {}};
  add_generators(m, plus, Flavor::II, kUpper);
  add_generators(m, cob, Flavor::II, kCobordism);
  add_generators(m, minus, Flavor::II, kLower);
  return m;
}

// Reads the counts back off the one-vertex generators.
inline StrataTables module_map_to_counts(const ModuleMap& m) {
  StrataTables tabs;
  tabs.flavor = m.flavor;
  if (m.flavor == Flavor::I) {
    tabs.upper = empty_table(Flavor::I, m.levels, m.beta_rank);
  } else {
    tabs.upper = empty_table(Flavor::I, {m.levels[0]}, m.beta_rank);
    tabs.cob = empty_table(Flavor::II, m.levels, m.beta_rank);
    tabs.lower = empty_table(Flavor::I, {m.levels[1]}, m.beta_rank);
  }
  for (auto& [key, g] : m.generators) {
    if (g.tree.tree.nv() != 1) throw InvalidInput("module map generator is not a one-vertex stratum: " + key);
    auto& t = g.type == kUpper ? tabs.upper : g.type == kCobordism ? tabs.cob : tabs.lower;
    std::vector<int> outs(g.tree.leaves.size());
    for (auto& [e, pos] : g.tree.leaves) outs.at(pos) = g.tree.tree.edges[e].orbit;
    t.set(g.tree.tree.edges[g.tree.tree.incoming(0)].orbit, outs, g.tree.tree.vertices[0].beta, g.value);
  }
  if (m.flavor == Flavor::I) tabs.lower = tabs.upper;
  return tabs;
}

// The value of a module map on the generator of any stratum.
inline Rational evaluate(const ModuleMap& m, const OverTree& rep) {
  return module_value(rep, module_map_to_counts(m));
}

}  // namespace sft
