#pragma once

// Finite-scale homotopy colimits, S-modules over finite posets, cofibrancy and cofibrant replacement.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sft/errors.hpp"
#include "sft/graded_linear.hpp"
#include "sft/strata.hpp"

namespace sft {

// ---- finite categories ----

struct FiniteCategory {
  struct Morphism {
    int src = 0, tgt = 0;
    std::string name;
  };
  std::vector<std::string> objects;
  std::vector<Morphism> morphisms;
  std::vector<int> identity;                 // object -> its identity morphism
  std::map<std::pair<int, int>, int> table;  // (g, f) -> g o f, for tgt f == src g

  int size() const { return static_cast<int>(objects.size()); }
  bool is_identity(int m) const { return identity[morphisms[m].src] == m; }

  int compose(int g, int f) const {
    auto it = table.find({g, f});
    if (it == table.end())
      throw DiagramViolation("composition " + morphisms[g].name + " o " + morphisms[f].name + " is undefined");
    return it->second;
  }

  std::vector<int> hom(int a, int b) const {
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(morphisms.size()); ++m)
      if (morphisms[m].src == a && morphisms[m].tgt == b) out.push_back(m);
    return out;
  }

  std::vector<int> out_of(int a) const {
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(morphisms.size()); ++m)
      if (morphisms[m].src == a) out.push_back(m);
    return out;
  }

  // Associativity, identity laws, and no non-identity morphism composing to an identity.
  void check() const {
    int n = size(), nm = static_cast<int>(morphisms.size());
    if (static_cast<int>(identity.size()) != n) throw DiagramViolation("one identity per object required");
    for (int o = 0; o < n; ++o) {
      int i = identity[o];
      if (i < 0 || i >= nm || morphisms[i].src != o || morphisms[i].tgt != o)
        throw DiagramViolation("identity of " + objects[o] + " is not an endomorphism of it");
    }
    for (auto& m : morphisms)
      if (m.src < 0 || m.src >= n || m.tgt < 0 || m.tgt >= n) throw DiagramViolation("morphism " + m.name + " has a bad endpoint");
    for (int f = 0; f < nm; ++f)
      for (int g = 0; g < nm; ++g) {
        if (morphisms[f].tgt != morphisms[g].src) continue;
        int h = compose(g, f);
        if (morphisms[h].src != morphisms[f].src || morphisms[h].tgt != morphisms[g].tgt)
          throw DiagramViolation("composite " + morphisms[g].name + " o " + morphisms[f].name + " has wrong endpoints");
        if (is_identity(h) && !is_identity(f))
          throw DiagramViolation("non-identity " + morphisms[f].name + " is invertible; only gaunt categories are supported");
      }
    for (int f = 0; f < nm; ++f) {
      if (compose(f, identity[morphisms[f].src]) != f || compose(identity[morphisms[f].tgt], f) != f)
        throw DiagramViolation("identity law fails for " + morphisms[f].name);
      for (int g : out_of(morphisms[f].tgt))
        for (int h : out_of(morphisms[g].tgt))
          if (compose(h, compose(g, f)) != compose(compose(h, g), f))
            throw DiagramViolation("associativity fails for " + morphisms[h].name + ", " + morphisms[g].name + ", " +
                                   morphisms[f].name);
    }
  }

  // A poset with at most one arrow a -> b; leq must be a partial order.
  static FiniteCategory poset(const std::vector<std::string>& names, const std::function<bool(int, int)>& leq) {
    FiniteCategory c;
    c.objects = names;
    int n = static_cast<int>(names.size());
    std::map<std::pair<int, int>, int> arrow;
    c.identity.assign(n, -1);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (!leq(a, b)) continue;
        if (a != b && leq(b, a)) throw DiagramViolation("poset: " + names[a] + " and " + names[b] + " are equivalent");
        arrow[{a, b}] = static_cast<int>(c.morphisms.size());
        if (a == b) c.identity[a] = static_cast<int>(c.morphisms.size());
        c.morphisms.push_back({a, b, a == b ? "id_" + names[a] : names[a] + "<" + names[b]});
      }
    for (int a = 0; a < n; ++a)
      if (c.identity[a] < 0) throw DiagramViolation("poset: leq is not reflexive at " + names[a]);
    for (auto& [ab, f] : arrow)
      for (auto& [bc, g] : arrow) {
        if (ab.second != bc.first) continue;
        auto it = arrow.find({ab.first, bc.second});
        if (it == arrow.end()) throw DiagramViolation("poset: leq is not transitive");
        c.table[{g, f}] = it->second;
      }
    return c;
  }

  static FiniteCategory poset(int n, const std::function<bool(int, int)>& leq) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
    return poset(names, leq);
  }

  bool is_poset() const {
    std::set<std::pair<int, int>> seen;
    for (auto& m : morphisms)
      if (!seen.insert({m.src, m.tgt}).second) return false;
    return true;
  }

  std::optional<int> arrow(int a, int b) const {
    auto h = hom(a, b);
    if (h.size() == 1) return h[0];
    return std::nullopt;
  }

  // Final object: exactly one morphism from every object.
  std::optional<int> final_object() const {
    for (int t = 0; t < size(); ++t) {
      bool ok = true;
      for (int a = 0; a < size() && ok; ++a) ok = hom(a, t).size() == 1;
      if (ok) return t;
    }
    return std::nullopt;
  }
};

// ---- homotopy diagrams ----

// Values depend only on the total composite of a simplex. For a composable pair (f then g):
// first(f, g): A(g o f) -> A(g) forgets the first arrow, last(f, g): A(g o f) -> A(f) forgets the last.
struct HomotopyDiagram {
  FiniteCategory cat;
  std::vector<ChainComplex> value;  // per morphism
  std::map<std::pair<int, int>, ChainMap> first, last;

  void check() const {
    cat.check();
    int nm = static_cast<int>(cat.morphisms.size());
    if (static_cast<int>(value.size()) != nm) throw DiagramViolation("one complex per morphism required");
    auto same_dims = [](const ChainComplex& a, const ChainComplex& b) {
      int lo = std::min(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi());
      for (int k = lo; k <= hi; ++k)
        if (a.dim(k) != b.dim(k)) return false;
      return true;
    };
    auto get = [&](const std::map<std::pair<int, int>, ChainMap>& maps, int f, int g, const char* which) -> const ChainMap& {
      auto it = maps.find({f, g});
      if (it == maps.end())
        throw DiagramViolation(std::string(which) + " map missing for " + cat.morphisms[f].name + ", " + cat.morphisms[g].name);
      return it->second;
    };
    for (int f = 0; f < nm; ++f)
      for (int g : cat.out_of(cat.morphisms[f].tgt)) {
        int gf = cat.compose(g, f);
        auto& a = get(first, f, g, "first");
        auto& b = get(last, f, g, "last");
        std::string where = cat.morphisms[f].name + ", " + cat.morphisms[g].name;
        if (!same_dims(a.source(), value[gf]) || !same_dims(a.target(), value[g]))
          throw DiagramViolation("first map has the wrong shape at " + where);
        if (!same_dims(b.source(), value[gf]) || !same_dims(b.target(), value[f]))
          throw DiagramViolation("last map has the wrong shape at " + where);
        if (a.first_noncommuting_degree() || b.first_noncommuting_degree())
          throw DiagramViolation("structure map is not a chain map at " + where);
        // Degeneracies act by isomorphisms; normalized here to identities.
        if (cat.is_identity(f) && !a.equals(ChainMap::identity(value[g])))
          throw DiagramViolation("degenerate face is not the identity at " + where);
        if (cat.is_identity(g) && !b.equals(ChainMap::identity(value[f])))
          throw DiagramViolation("degenerate face is not the identity at " + where);
      }
    for (int f = 0; f < nm; ++f)
      for (int g : cat.out_of(cat.morphisms[f].tgt))
        for (int h : cat.out_of(cat.morphisms[g].tgt)) {
          int gf = cat.compose(g, f), hg = cat.compose(h, g);
          std::string where = cat.morphisms[f].name + ", " + cat.morphisms[g].name + ", " + cat.morphisms[h].name;
          if (!compose(get(first, g, h, "first"), get(first, f, hg, "first")).equals(get(first, gf, h, "first")))
            throw DiagramViolation("first maps are not functorial at " + where);
          if (!compose(get(last, f, g, "last"), get(last, gf, h, "last")).equals(get(last, f, hg, "last")))
            throw DiagramViolation("last maps are not functorial at " + where);
          if (!compose(get(last, g, h, "last"), get(first, f, hg, "first"))
                   .equals(compose(get(first, f, g, "first"), get(last, gf, h, "last"))))
            throw DiagramViolation("first and last maps do not commute at " + where);
        }
  }

  // A(h) = F(source h); forgetting the first arrow pushes forward along it.
  static HomotopyDiagram from_functor(const FiniteCategory& cat, const std::vector<ChainComplex>& F,
                                      const std::map<int, ChainMap>& Fmap) {
    HomotopyDiagram D;
    D.cat = cat;
    auto F_of = [&](int m) -> ChainMap {
      if (cat.is_identity(m)) return ChainMap::identity(F[cat.morphisms[m].src]);
      auto it = Fmap.find(m);
      if (it == Fmap.end()) throw DiagramViolation("functor has no value on " + cat.morphisms[m].name);
      return it->second;
    };
    for (auto& m : cat.morphisms) D.value.push_back(F[m.src]);
    int nm = static_cast<int>(cat.morphisms.size());
    for (int f = 0; f < nm; ++f)
      for (int g : cat.out_of(cat.morphisms[f].tgt)) {
        D.first.emplace(std::make_pair(f, g), F_of(f));
        D.last.emplace(std::make_pair(f, g), ChainMap::identity(F[cat.morphisms[f].src]));
      }
    return D;
  }

  static HomotopyDiagram constant(const FiniteCategory& cat, const ChainComplex& C) {
    std::vector<ChainComplex> F(cat.size(), C);
    std::map<int, ChainMap> maps;
    for (int m = 0; m < static_cast<int>(cat.morphisms.size()); ++m) maps.emplace(m, ChainMap::identity(C));
    return from_functor(cat, F, maps);
  }
};

// ---- direct sums and quotients ----

struct DirectSum {
  ChainComplex complex;
  std::vector<std::map<int, size_t>> offset;  // summand -> degree -> first basis index
};

inline DirectSum direct_sum(const std::vector<ChainComplex>& parts, const std::vector<std::string>& tags) {
  DirectSum s;
  s.offset.resize(parts.size());
  int lo = 0, hi = -1;
  bool any = false;
  for (auto& p : parts) {
    if (p.empty_window()) continue;
    lo = any ? std::min(lo, p.lo()) : p.lo();
    hi = any ? std::max(hi, p.hi()) : p.hi();
    any = true;
  }
  if (!any) return s;
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  auto dim = [&](int k) {
    size_t n = 0;
    for (auto& p : parts) n += p.dim(k);
    return n;
  };
  for (int k = lo; k <= hi; ++k) {
    std::vector<BasisElement> b;
    Matrix m(k > lo ? dim(k - 1) : 0, dim(k));
    size_t row = 0, col = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
      s.offset[i][k] = col;
      for (auto e : parts[i].space(k).basis()) b.push_back({tags[i] + ":" + e.label, e.parity, e.weight});
      if (k > lo) m.set_block(row, col, parts[i].d(k));
      row += parts[i].dim(k - 1);
      col += parts[i].dim(k);
    }
    sp.emplace_back(std::move(b));
    d.push_back(std::move(m));
  }
  s.complex = ChainComplex(lo, std::move(sp), std::move(d));
  return s;
}

struct Quotient {
  ChainComplex complex;
  std::map<int, Matrix> projection;  // V_k -> Q_k
  std::map<int, Matrix> section;     // Q_k -> V_k, standard basis vectors completing the relations
};

// V modulo the span of the columns of rel[k]; the span must be a subcomplex.
inline Quotient quotient(const ChainComplex& V, const std::map<int, Matrix>& rel) {
  Quotient q;
  if (V.empty_window()) return q;
  std::vector<GradedSpace> sp;
  std::vector<std::vector<size_t>> keep;
  for (int k = V.lo(); k <= V.hi(); ++k) {
    size_t n = V.dim(k);
    Matrix R = rel.count(k) ? rel.at(k) : Matrix(n, 0);
    Matrix aug = R.hstack(Matrix::identity(n));
    auto piv = rref(aug);
    std::vector<std::vector<Rational>> cols;
    std::vector<size_t> comp;
    for (auto p : piv) {
      if (p < R.cols()) cols.push_back(R.column(p));
      else comp.push_back(p - R.cols());
    }
    size_t r = cols.size();
    for (auto j : comp) {
      std::vector<Rational> e(n);
      e[j] = 1;
      cols.push_back(e);
    }
    auto inv = inverse(Matrix::from_columns(n, cols));
    if (!inv) throw HypothesisViolation("quotient: basis completion failed");
    q.projection[k] = inv->block(r, 0, n - r, n);
    Matrix s(n, comp.size());
    std::vector<BasisElement> b;
    for (size_t i = 0; i < comp.size(); ++i) {
      s(comp[i], i) = 1;
      b.push_back(V.space(k).basis()[comp[i]]);
    }
    q.section[k] = s;
    sp.emplace_back(std::move(b));
  }
  std::vector<Matrix> d;
  for (int k = V.lo(); k <= V.hi(); ++k) {
    if (k == V.lo()) {
      d.emplace_back(0, sp[0].dim());
      continue;
    }
    Matrix m = q.projection[k - 1] * V.d(k) * q.section[k];
    if (rel.count(k) && !(q.projection[k - 1] * V.d(k) * rel.at(k)).is_zero())
      throw HypothesisViolation("quotient: relations are not a subcomplex in degree " + std::to_string(k));
    d.push_back(std::move(m));
  }
  q.complex = ChainComplex(V.lo(), std::move(sp), std::move(d));
  return q;
}

// ---- homotopy colimit ----

struct Simplex {
  int start = 0;
  std::vector<int> arrows;  // composable non-identity morphisms
};

struct Hocolim {
  ChainComplex complex;
  std::vector<Simplex> simplices;
  std::vector<int> total;                                       // simplex -> composite morphism
  std::map<int, std::vector<std::pair<int, size_t>>> basis;     // degree -> (simplex, index in A(total))
};

inline std::vector<Simplex> nondegenerate_simplices(const FiniteCategory& cat) {
  std::vector<Simplex> out;
  std::function<void(Simplex&, int)> grow = [&](Simplex& s, int end) {
    out.push_back(s);
    for (int m : cat.out_of(end)) {
      if (cat.is_identity(m)) continue;
      s.arrows.push_back(m);
      if (s.arrows.size() > cat.morphisms.size() + 1) throw NonTerminating("nerve: category has a cycle");
      grow(s, cat.morphisms[m].tgt);
      s.arrows.pop_back();
    }
  };
  for (int o = 0; o < cat.size(); ++o) {
    Simplex s{o, {}};
    grow(s, o);
  }
  return out;
}

// Chains on the nerve with coefficients in A: D(x [s]) = dx [s] + (-1)^|x| sum_i (-1)^i face_i(x) [d_i s].
inline Hocolim hocolim(const HomotopyDiagram& D, bool check = true) {
  if (check) D.check();
  const auto& cat = D.cat;
  Hocolim H;
  H.simplices = nondegenerate_simplices(cat);
  std::map<std::pair<int, std::vector<int>>, int> index;
  auto composite = [&](const Simplex& s, size_t from, size_t to) {  // arrows[from, to)
    int m = cat.identity[from == 0 ? s.start : cat.morphisms[s.arrows[from - 1]].tgt];
    for (size_t i = from; i < to; ++i) m = cat.compose(s.arrows[i], m);
    return m;
  };
  int lo = 0, hi = -1;
  bool any = false;
  for (size_t i = 0; i < H.simplices.size(); ++i) {
    auto& s = H.simplices[i];
    index[{s.start, s.arrows}] = static_cast<int>(i);
    int t = composite(s, 0, s.arrows.size());
    H.total.push_back(t);
    auto& A = D.value[t];
    if (A.empty_window()) continue;
    int p = static_cast<int>(s.arrows.size());
    lo = any ? std::min(lo, A.lo() + p) : A.lo() + p;
    hi = any ? std::max(hi, A.hi() + p) : A.hi() + p;
    any = true;
  }
  if (!any) return H;
  std::map<int, std::map<std::pair<int, size_t>, size_t>> pos;
  for (int n = lo; n <= hi; ++n)
    for (size_t i = 0; i < H.simplices.size(); ++i) {
      int p = static_cast<int>(H.simplices[i].arrows.size());
      for (size_t j = 0; j < D.value[H.total[i]].dim(n - p); ++j) {
        pos[n][{static_cast<int>(i), j}] = H.basis[n].size();
        H.basis[n].push_back({static_cast<int>(i), j});
      }
    }
  auto name = [&](const Simplex& s) {
    std::string r = cat.objects[s.start];
    for (int m : s.arrows) r += ">" + cat.morphisms[m].name;
    return r;
  };
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  for (int n = lo; n <= hi; ++n) {
    std::vector<BasisElement> b;
    for (auto& [si, j] : H.basis[n]) {
      auto e = D.value[H.total[si]].space(n - static_cast<int>(H.simplices[si].arrows.size())).basis()[j];
      b.push_back({"[" + name(H.simplices[si]) + "]" + e.label, n & 1, e.weight});
    }
    sp.emplace_back(std::move(b));
    Matrix m(n > lo ? H.basis[n - 1].size() : 0, H.basis[n].size());
    if (n > lo) {
      for (size_t i = 0; i < H.simplices.size(); ++i) {
        const auto& s = H.simplices[i];
        int p = static_cast<int>(s.arrows.size());
        int k = n - p;
        const auto& A = D.value[H.total[i]];
        if (A.dim(k) == 0) continue;
        auto col0 = pos[n][{static_cast<int>(i), 0}];
        Matrix dA = A.d(k);
        for (size_t r = 0; r < dA.rows(); ++r)
          for (size_t c = 0; c < dA.cols(); ++c)
            if (dA(r, c) != 0) m(pos[n - 1][{static_cast<int>(i), r}], col0 + c) += dA(r, c);
        if (p == 0) continue;
        int sign_x = (k & 1) ? -1 : 1;
        for (int f = 0; f <= p; ++f) {
          Simplex face;
          ChainMap map;
          bool have_map = true;
          if (f == 0) {
            face.start = cat.morphisms[s.arrows[0]].tgt;
            face.arrows.assign(s.arrows.begin() + 1, s.arrows.end());
            map = D.first.at({s.arrows[0], composite(s, 1, p)});
          } else if (f == p) {
            face.start = s.start;
            face.arrows.assign(s.arrows.begin(), s.arrows.end() - 1);
            map = D.last.at({composite(s, 0, p - 1), s.arrows[p - 1]});
          } else {
            face.start = s.start;
            face.arrows = s.arrows;
            int merged = cat.compose(s.arrows[f], s.arrows[f - 1]);
            if (cat.is_identity(merged)) continue;
            face.arrows[f - 1] = merged;
            face.arrows.erase(face.arrows.begin() + f);
            have_map = false;
          }
          int fi = index.at({face.start, face.arrows});
          Rational sign = sign_x * ((f & 1) ? -1 : 1);
          Matrix F = have_map ? map.at(k) : Matrix::identity(A.dim(k));
          for (size_t r = 0; r < F.rows(); ++r)
            for (size_t c = 0; c < F.cols(); ++c)
              if (F(r, c) != 0) m(pos[n - 1][{fi, r}], col0 + c) += sign * F(r, c);
        }
      }
    }
    d.push_back(std::move(m));
  }
  H.complex = ChainComplex(lo, std::move(sp), std::move(d));
  return H;
}

// ---- tensor products ----

// d(a b) = da b + (-1)^|a| a db; basis ordered by degree of the left factor.
inline ChainComplex tensor(const ChainComplex& A, const ChainComplex& B) {
  if (A.empty_window() || B.empty_window()) return {};
  int lo = A.lo() + B.lo(), hi = A.hi() + B.hi();
  auto off = [&](int n, int i) {
    size_t o = 0;
    for (int a = A.lo(); a < i; ++a) o += A.dim(a) * B.dim(n - a);
    return o;
  };
  auto dim = [&](int n) { return off(n, A.hi() + 1); };
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  for (int n = lo; n <= hi; ++n) {
    std::vector<BasisElement> b;
    Matrix m(n > lo ? dim(n - 1) : 0, dim(n));
    for (int i = A.lo(); i <= A.hi(); ++i) {
      int j = n - i;
      for (auto& ea : A.space(i).basis())
        for (auto& eb : B.space(j).basis()) b.push_back({ea.label + "*" + eb.label, n & 1, ea.weight + eb.weight});
      if (n == lo) continue;
      Matrix da = A.d(i), db = B.d(j);
      size_t c0 = off(n, i);
      for (size_t x = 0; x < A.dim(i); ++x)
        for (size_t y = 0; y < B.dim(j); ++y) {
          size_t col = c0 + x * B.dim(j) + y;
          for (size_t r = 0; r < da.rows(); ++r)
            if (da(r, x) != 0) m(off(n - 1, i - 1) + r * B.dim(j) + y, col) += da(r, x);
          Rational s = (i & 1) ? -1 : 1;
          for (size_t r = 0; r < db.rows(); ++r)
            if (db(r, y) != 0) m(off(n - 1, i) + x * B.dim(j - 1) + r, col) += s * db(r, y);
        }
    }
    sp.emplace_back(std::move(b));
    d.push_back(std::move(m));
  }
  return ChainComplex(lo, std::move(sp), std::move(d));
}

// f (x) g for degree-zero chain maps.
inline ChainMap tensor(const ChainMap& f, const ChainMap& g) {
  auto S = tensor(f.source(), g.source()), T = tensor(f.target(), g.target());
  std::map<int, Matrix> comp;
  if (S.empty_window() || T.empty_window()) return ChainMap(S, T, {}, false);
  const auto &A = f.source(), &B = g.source(), &C = f.target(), &E = g.target();
  for (int n = S.lo(); n <= S.hi(); ++n) {
    Matrix m(T.dim(n), S.dim(n));
    size_t c0 = 0;
    for (int i = A.lo(); i <= A.hi(); ++i) {
      int j = n - i;
      size_t r0 = 0;
      for (int a = C.lo(); a < i; ++a) r0 += C.dim(a) * E.dim(n - a);
      Matrix fi = f.at(i), gj = g.at(j);
      for (size_t x = 0; x < A.dim(i); ++x)
        for (size_t y = 0; y < B.dim(j); ++y)
          for (size_t u = 0; u < fi.rows(); ++u)
            for (size_t v = 0; v < gj.rows(); ++v)
              if (fi(u, x) != 0 && gj(v, y) != 0) m(r0 + u * E.dim(j) + v, c0 + x * B.dim(j) + y) += fi(u, x) * gj(v, y);
      c0 += A.dim(i) * B.dim(j);
    }
    comp[n] = std::move(m);
  }
  return ChainMap(S, T, std::move(comp), false);
}

// ---- S-modules over finite posets ----

struct ConcatenationMap {
  std::vector<int> parts;
  int result = 0;
  ChainMap map;  // tensor of the parts, left to right -> value[result]
};

struct SModule {
  FiniteCategory poset;
  std::vector<ChainComplex> value;
  std::map<int, ChainMap> push;  // non-identity morphism -> pushforward
  std::vector<ConcatenationMap> concatenations;

  ChainMap pushforward(int a, int b) const {
    if (a == b) return ChainMap::identity(value[a]);
    auto m = poset.arrow(a, b);
    if (!m) throw InvalidInput("no arrow " + poset.objects[a] + " -> " + poset.objects[b]);
    return push.at(*m);
  }

  bool leq(int a, int b) const { return a == b || poset.arrow(a, b).has_value(); }

  std::vector<int> below(int t) const {
    std::vector<int> out;
    for (int a = 0; a < poset.size(); ++a)
      if (a != t && leq(a, t)) out.push_back(a);
    return out;
  }

  bool is_maximal(int t) const {
    for (auto& c : concatenations)
      if (c.result == t) return false;
    return true;
  }

  ChainComplex tensor_of(const std::vector<int>& parts) const {
    ChainComplex t = value[parts.at(0)];
    for (size_t i = 1; i < parts.size(); ++i) t = tensor(t, value[parts[i]]);
    return t;
  }

  void check() const {
    poset.check();
    if (!poset.is_poset()) throw DiagramViolation("S-module: the indexing category must be a poset");
    if (static_cast<int>(value.size()) != poset.size()) throw DiagramViolation("S-module: one complex per object required");
    for (int m = 0; m < static_cast<int>(poset.morphisms.size()); ++m) {
      if (poset.is_identity(m)) continue;
      auto it = push.find(m);
      if (it == push.end()) throw DiagramViolation("S-module: missing pushforward " + poset.morphisms[m].name);
      auto& mm = poset.morphisms[m];
      auto& f = it->second;
      for (int k = std::min(f.lo(), value[mm.src].lo()); k <= std::max(f.hi(), value[mm.tgt].hi()); ++k)
        if (f.at(k).rows() != value[mm.tgt].dim(k) || f.at(k).cols() != value[mm.src].dim(k))
          throw DiagramViolation("S-module: pushforward " + mm.name + " has the wrong shape");
      if (f.first_noncommuting_degree()) throw DiagramViolation("S-module: pushforward " + mm.name + " is not a chain map");
    }
    for (int a = 0; a < poset.size(); ++a)
      for (int b : above(a))
        for (int c = 0; c < poset.size(); ++c) {
          if (c == b || !leq(b, c)) continue;
          if (!compose(pushforward(b, c), pushforward(a, b)).equals(pushforward(a, c)))
            throw DiagramViolation("S-module: pushforwards " + poset.objects[a] + " -> " + poset.objects[b] + " -> " +
                                   poset.objects[c] + " do not compose");
        }
    for (auto& c : concatenations) {
      auto src = tensor_of(c.parts);
      for (int k = std::min(src.lo(), value[c.result].lo()); k <= std::max(src.hi(), value[c.result].hi()); ++k)
        if (c.map.at(k).cols() != src.dim(k) || c.map.at(k).rows() != value[c.result].dim(k))
          throw DiagramViolation("S-module: concatenation into " + poset.objects[c.result] + " has the wrong shape");
      if (c.map.first_noncommuting_degree())
        throw DiagramViolation("S-module: concatenation into " + poset.objects[c.result] + " is not a chain map");
    }
    // Morphism-of-concatenations squares.
    for (auto& c1 : concatenations)
      for (auto& c2 : concatenations) {
        if (&c1 == &c2 || c1.parts.size() != c2.parts.size() || !leq(c1.result, c2.result)) continue;
        bool ok = true;
        for (size_t i = 0; i < c1.parts.size() && ok; ++i) ok = leq(c1.parts[i], c2.parts[i]);
        if (!ok) continue;
        ChainMap along = pushforward(c1.parts[0], c2.parts[0]);
        for (size_t i = 1; i < c1.parts.size(); ++i) along = tensor(along, pushforward(c1.parts[i], c2.parts[i]));
        if (!compose(pushforward(c1.result, c2.result), c1.map).equals(compose(c2.map, along)))
          throw DiagramViolation("S-module: concatenation square into " + poset.objects[c2.result] + " does not commute");
      }
    // Composite-concatenation triangles: concatenating in two stages agrees with concatenating at once.
    for (auto& outer : concatenations)
      for (size_t slot = 0; slot < outer.parts.size(); ++slot)
        for (auto& inner : concatenations) {
          if (inner.result != outer.parts[slot]) continue;
          std::vector<int> flat(outer.parts.begin(), outer.parts.begin() + slot);
          flat.insert(flat.end(), inner.parts.begin(), inner.parts.end());
          flat.insert(flat.end(), outer.parts.begin() + slot + 1, outer.parts.end());
          for (auto& whole : concatenations) {
            if (whole.result != outer.result || whole.parts != flat) continue;
            ChainMap stage = slot == 0 ? inner.map : ChainMap::identity(value[outer.parts[0]]);
            for (size_t i = 1; i < outer.parts.size(); ++i)
              stage = tensor(stage, i == slot ? inner.map : ChainMap::identity(value[outer.parts[i]]));
            if (!compose(compose(outer.map, stage), reorder(whole.map.source(), stage.source())).equals(whole.map))
              throw DiagramViolation("S-module: concatenation triangle into " + poset.objects[outer.result] +
                                     " does not commute");
          }
        }
  }

  HomotopyDiagram diagram() const {
    std::map<int, ChainMap> maps;
    for (auto& [m, f] : push) maps.emplace(m, f);
    return HomotopyDiagram::from_functor(poset, value, maps);
  }

 private:
  std::vector<int> above(int a) const {
    std::vector<int> out;
    for (int b = 0; b < poset.size(); ++b)
      if (b != a && leq(a, b)) out.push_back(b);
    return out;
  }
  // Identifies two bracketings of the same tensor product by basis labels.
  static ChainMap reorder(const ChainComplex& from, const ChainComplex& to) {
    std::map<int, Matrix> comp;
    for (int k = from.lo(); k <= from.hi() && !from.empty_window(); ++k) {
      std::map<std::string, size_t> where;
      for (size_t i = 0; i < to.dim(k); ++i) where[to.space(k).basis()[i].label] = i;
      Matrix m(to.dim(k), from.dim(k));
      for (size_t j = 0; j < from.dim(k); ++j) {
        auto it = where.find(from.space(k).basis()[j].label);
        if (it == where.end() || from.dim(k) != to.dim(k))
          throw DiagramViolation("S-module: bracketings of a concatenation do not match");
        m(it->second, j) = 1;
      }
      comp[k] = std::move(m);
    }
    return ChainMap(from, to, std::move(comp), false);
  }
};

// Restriction to a set of objects, with its index map.
inline std::pair<SModule, std::vector<int>> restrict_module(const SModule& M, const std::vector<int>& objs) {
  std::vector<std::string> names;
  for (int o : objs) names.push_back(M.poset.objects[o]);
  SModule R;
  R.poset = FiniteCategory::poset(names, [&](int a, int b) { return M.leq(objs[a], objs[b]); });
  for (int o : objs) R.value.push_back(M.value[o]);
  for (int m = 0; m < static_cast<int>(R.poset.morphisms.size()); ++m) {
    if (R.poset.is_identity(m)) continue;
    auto& mm = R.poset.morphisms[m];
    R.push.emplace(m, M.pushforward(objs[mm.src], objs[mm.tgt]));
  }
  return {R, objs};
}

// Objects in an order refining the poset.
inline std::vector<int> linear_extension(const SModule& M) {
  std::vector<int> order(M.poset.size());
  for (int i = 0; i < M.poset.size(); ++i) order[i] = i;
  std::vector<size_t> depth(order.size());
  for (int i : order) depth[i] = M.below(i).size();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

struct Colimit {
  std::vector<int> objects;
  DirectSum sum;
  Quotient quotient;
  ChainComplex& complex() { return quotient.complex; }
  const ChainComplex& complex() const { return quotient.complex; }

  // Structure map M(objects[i]) -> colim.
  ChainMap from(const SModule& M, size_t i) const {
    std::map<int, Matrix> comp;
    const auto& X = M.value[objects[i]];
    for (int k = X.lo(); k <= X.hi(); ++k) {
      if (!quotient.projection.count(k)) continue;
      Matrix inc(sum.complex.dim(k), X.dim(k));
      inc.set_block(sum.offset[i].at(k), 0, Matrix::identity(X.dim(k)));
      comp[k] = quotient.projection.at(k) * inc;
    }
    return ChainMap(X, quotient.complex, std::move(comp), false);
  }

  // The map out of the colimit induced by a cocone g_i: M(objects[i]) -> Z.
  ChainMap induced(const std::vector<ChainMap>& cocone, const ChainComplex& Z) const {
    std::map<int, Matrix> comp;
    const auto& Q = quotient.complex;
    for (int k = Q.lo(); k <= Q.hi() && !Q.empty_window(); ++k) {
      Matrix big(Z.dim(k), sum.complex.dim(k));
      for (size_t i = 0; i < objects.size(); ++i) {
        Matrix g = cocone[i].at(k);
        if (g.cols()) big.set_block(0, sum.offset[i].at(k), g);
      }
      comp[k] = big * quotient.section.at(k);
    }
    return ChainMap(Q, Z, std::move(comp), false);
  }
};

inline Colimit colimit(const SModule& M, const std::vector<int>& objs) {
  Colimit c;
  c.objects = objs;
  std::vector<ChainComplex> parts;
  std::vector<std::string> tags;
  for (int o : objs) {
    parts.push_back(M.value[o]);
    tags.push_back(M.poset.objects[o]);
  }
  c.sum = direct_sum(parts, tags);
  const auto& V = c.sum.complex;
  std::map<int, Matrix> rel;
  for (int k = V.lo(); k <= V.hi() && !V.empty_window(); ++k) {
    std::vector<std::vector<Rational>> cols;
    for (size_t a = 0; a < objs.size(); ++a)
      for (size_t b = 0; b < objs.size(); ++b) {
        if (a == b || !M.leq(objs[a], objs[b])) continue;
        Matrix f = M.pushforward(objs[a], objs[b]).at(k);
        for (size_t x = 0; x < M.value[objs[a]].dim(k); ++x) {
          std::vector<Rational> v(V.dim(k));
          v[c.sum.offset[a].at(k) + x] -= 1;
          for (size_t r = 0; r < f.rows(); ++r) v[c.sum.offset[b].at(k) + r] += f(r, x);
          cols.push_back(std::move(v));
        }
      }
    rel[k] = Matrix::from_columns(V.dim(k), cols);
  }
  c.quotient = quotient(V, rel);
  return c;
}

// ---- cofibrancy ----

struct CofibrancyReport {
  bool ok = true;
  std::string check;  // "concatenation" or "latching"
  int object = -1;
  int degree = 0;
  std::vector<Rational> witness;
  std::vector<std::string> witness_basis;
  std::string detail;
};

// Latching map colim_{T' < T} M(T') -> M(T).
inline std::pair<Colimit, ChainMap> latching(const SModule& M, int t) {
  auto c = colimit(M, M.below(t));
  std::vector<ChainMap> cocone;
  for (int o : c.objects) cocone.push_back(M.pushforward(o, t));
  auto map = c.induced(cocone, M.value[t]);
  return {std::move(c), std::move(map)};
}

inline CofibrancyReport check_cofibrant(const SModule& M) {
  M.check();
  CofibrancyReport rep;
  for (auto& c : M.concatenations) {
    auto& f = c.map;
    for (int k = f.lo(); k <= f.hi(); ++k) {
      Matrix m = f.at(k);
      size_t r = rank(m);
      if (r == m.rows() && r == m.cols()) continue;
      rep.ok = false;
      rep.check = "concatenation";
      rep.object = c.result;
      rep.degree = k;
      if (r < m.cols()) {
        rep.witness = kernel(m).column(0);
        for (auto& e : f.source().space(k).basis()) rep.witness_basis.push_back(e.label);
        rep.detail = "concatenation map into " + M.poset.objects[c.result] + " has a kernel";
      } else {
        rep.detail = "concatenation map into " + M.poset.objects[c.result] + " is not surjective";
      }
      return rep;
    }
  }
  for (int t = 0; t < M.poset.size(); ++t) {
    if (!M.is_maximal(t)) continue;
    auto [c, map] = latching(M, t);
    const auto& Q = c.complex();
    for (int k = Q.lo(); k <= Q.hi() && !Q.empty_window(); ++k) {
      Matrix m = map.at(k);
      if (rank(m) == Q.dim(k)) continue;
      rep.ok = false;
      rep.check = "latching";
      rep.object = t;
      rep.degree = k;
      rep.witness = c.quotient.section.at(k).apply(kernel(m).column(0));
      for (auto& e : c.sum.complex.space(k).basis()) rep.witness_basis.push_back(e.label);
      rep.detail = "colimit below " + M.poset.objects[t] + " does not inject in degree " + std::to_string(k);
      return rep;
    }
  }
  return rep;
}

// ---- cofibrant replacement and lifting ----

struct Replacement {
  SModule module;
  std::vector<ChainMap> q;  // objectwise surjective quasi-isomorphisms module -> M
};

// Inductively, M_cof(T) is the mapping cylinder of colim_{T' < T} M_cof(T') -> M(T). Concatenations are not carried.
inline Replacement cofibrant_replacement(const SModule& M) {
  M.check();
  Replacement R;
  R.module.poset = M.poset;
  int n = M.poset.size();
  R.module.value.resize(n);
  R.q.resize(n);
  std::vector<ChainMap> into(n);  // colim below T -> M_cof(T), through the cylinder inclusion
  for (int t : linear_extension(M)) {
    auto c = colimit(R.module, M.below(t));
    std::vector<ChainMap> cocone;
    for (int o : c.objects) cocone.push_back(compose(M.pushforward(o, t), R.q[o]));
    auto f = c.induced(cocone, M.value[t]);
    if (f.first_noncommuting_degree()) throw HypothesisViolation("replacement: induced map is not a chain map");
    auto cyl = mapping_cylinder(f);
    R.module.value[t] = cyl.complex;
    R.q[t] = cyl.projection;
    for (size_t i = 0; i < c.objects.size(); ++i) {
      int o = c.objects[i];
      R.module.push.emplace(*M.poset.arrow(o, t), compose(cyl.inclusion, c.from(R.module, i)));
    }
  }
  return R;
}

// For every arrow a -> b: N(a->b) f_a == f_b M(a->b).
inline std::optional<std::string> naturality_failure(const SModule& M, const SModule& N, const std::vector<ChainMap>& f) {
  for (int m = 0; m < static_cast<int>(M.poset.morphisms.size()); ++m) {
    if (M.poset.is_identity(m)) continue;
    int a = M.poset.morphisms[m].src, b = M.poset.morphisms[m].tgt;
    if (!compose(N.pushforward(a, b), f[a]).equals(compose(f[b], M.pushforward(a, b))))
      return M.poset.morphisms[m].name;
  }
  return std::nullopt;
}

// Given X cofibrant, p: Y -> Z objectwise a surjective quasi-isomorphism and g: X -> Z natural, builds L: X -> Y
// natural with p L = g, one object at a time against the latching maps.
inline std::vector<ChainMap> lift_module_map(const SModule& X, const SModule& Y, const std::vector<ChainMap>& p,
                                             const std::vector<ChainMap>& g) {
  int n = X.poset.size();
  std::vector<ChainMap> L(n);
  for (int t : linear_extension(X)) {
    auto [c, i] = latching(X, t);
    std::vector<ChainMap> cocone;
    for (int o : c.objects) cocone.push_back(compose(Y.pushforward(o, t), L[o]));
    auto top = c.induced(cocone, Y.value[t]);
    L[t] = lift_against_acyclic_fibration(i, p[t], top, g[t]);
  }
  return L;
}

// ---- comparison of colimit and homotopy colimit ----

struct ColimComparison {
  std::map<int, size_t> hocolim_homology, colim_homology;
  bool agree = false;
  bool natural_map_quasi_iso = false;
};

inline std::map<int, size_t> nonzero(const std::map<int, size_t>& h) {
  std::map<int, size_t> out;
  for (auto& [k, v] : h)
    if (v) out[k] = v;
  return out;
}

inline void require_downward_closed(const SModule& M, const std::vector<int>& objs) {
  std::set<int> in(objs.begin(), objs.end());
  if (in.size() != objs.size()) throw InvalidSubposet("sub-poset lists an object twice");
  for (int o : objs) {
    if (o < 0 || o >= M.poset.size()) throw InvalidSubposet("sub-poset names an unknown object");
    for (int a : M.below(o))
      if (!in.count(a))
        throw InvalidSubposet(M.poset.objects[a] + " lies below " + M.poset.objects[o] + " but is not in the sub-poset");
  }
}

// The natural map sends the vertex summand of T to colim through M(T), and higher simplices to zero.
inline ChainMap hocolim_to_colim(const SModule& sub, const Hocolim& H, const Colimit& c) {
  std::map<int, Matrix> comp;
  std::vector<ChainMap> from;
  for (size_t i = 0; i < c.objects.size(); ++i) from.push_back(c.from(sub, i));
  for (auto& [n, basis] : H.basis) {
    Matrix m(c.complex().dim(n), basis.size());
    for (size_t col = 0; col < basis.size(); ++col) {
      auto [si, j] = basis[col];
      if (!H.simplices[si].arrows.empty()) continue;
      Matrix f = from[H.simplices[si].start].at(n);
      for (size_t r = 0; r < f.rows(); ++r) m(r, col) = f(r, j);
    }
    comp[n] = std::move(m);
  }
  return ChainMap(H.complex, c.complex(), std::move(comp), true);
}

inline ColimComparison colim_vs_hocolim(const SModule& M, const std::vector<int>& objs) {
  require_downward_closed(M, objs);
  ColimComparison r;
  auto [sub, idx] = restrict_module(M, objs);
  std::vector<int> all(objs.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  auto H = hocolim(sub.diagram(), false);
  auto c = colimit(sub, all);
  r.hocolim_homology = nonzero(homology_dimensions(H.complex));
  r.colim_homology = nonzero(homology_dimensions(c.complex()));
  r.agree = r.hocolim_homology == r.colim_homology;
  r.natural_map_quasi_iso = is_quasi_isomorphism(hocolim_to_colim(sub, H, c));
  return r;
}

// ---- the module Q[S] over a strata poset ----

// Object x carries the span of the surviving strata y <= x inside Q[S](root); pushforwards are inclusions.
inline SModule qs_module(const StrataPoset& P, const QSComplex& q) {
  SModule M;
  std::vector<std::string> names;
  for (auto& s : P.strata) names.push_back(s.key);
  M.poset = FiniteCategory::poset(names, [&](int a, int b) { return P.leq(a, b); });
  const auto& C = q.complex;
  int n = static_cast<int>(P.strata.size());
  std::vector<std::map<int, std::vector<size_t>>> sel(n);
  for (int x = 0; x < n; ++x) {
    std::vector<GradedSpace> sp;
    std::vector<Matrix> d;
    for (int k = C.lo(); k <= C.hi() && !C.empty_window(); ++k) {
      std::vector<BasisElement> b;
      if (q.basis.count(k))
        for (size_t i = 0; i < q.basis.at(k).size(); ++i)
          if (P.leq(q.basis.at(k)[i], x)) {
            sel[x][k].push_back(i);
            b.push_back(C.space(k).basis()[i]);
          }
      sp.emplace_back(std::move(b));
      auto& cols = sel[x][k];
      auto& rows = sel[x][k - 1];
      Matrix full = C.d(k), m(k > C.lo() ? rows.size() : 0, cols.size());
      for (size_t c = 0; c < cols.size(); ++c) {
        Rational escaped = 0;
        for (size_t r = 0; r < full.rows(); ++r) {
          auto it = std::find(rows.begin(), rows.end(), r);
          if (it == rows.end()) escaped += full(r, cols[c]) * full(r, cols[c]);
          else m(it - rows.begin(), c) = full(r, cols[c]);
        }
        if (escaped != 0) throw HypothesisViolation("Q[S]: boundary leaves the strata below " + names[x]);
      }
      d.push_back(std::move(m));
    }
    M.value.push_back(C.empty_window() ? ChainComplex() : ChainComplex(C.lo(), std::move(sp), std::move(d)));
  }
  for (int m = 0; m < static_cast<int>(M.poset.morphisms.size()); ++m) {
    if (M.poset.is_identity(m)) continue;
    int a = M.poset.morphisms[m].src, b = M.poset.morphisms[m].tgt;
    std::map<int, Matrix> comp;
    for (int k = C.lo(); k <= C.hi() && !C.empty_window(); ++k) {
      Matrix inc(sel[b][k].size(), sel[a][k].size());
      for (size_t j = 0; j < sel[a][k].size(); ++j) {
        auto it = std::find(sel[b][k].begin(), sel[b][k].end(), sel[a][k][j]);
        inc(it - sel[b][k].begin(), j) = 1;
      }
      comp[k] = std::move(inc);
    }
    M.push.emplace(m, ChainMap(M.value[a], M.value[b], std::move(comp)));
  }
  return M;
}

// For a diagram with a final object F: the map hocolim -> A(id_F) given on vertex summands by pushing forward.
inline ChainMap hocolim_to_final(const SModule& M, const Hocolim& H) {
  auto fin = M.poset.final_object();
  if (!fin) throw HypothesisViolation("hocolim_to_final: no final object");
  std::map<int, Matrix> comp;
  const auto& Z = M.value[*fin];
  for (auto& [n, basis] : H.basis) {
    Matrix m(Z.dim(n), basis.size());
    for (size_t col = 0; col < basis.size(); ++col) {
      auto [si, j] = basis[col];
      if (!H.simplices[si].arrows.empty()) continue;
      Matrix f = M.pushforward(H.simplices[si].start, *fin).at(n);
      for (size_t r = 0; r < f.rows(); ++r) m(r, col) = f(r, j);
    }
    comp[n] = std::move(m);
  }
  return ChainMap(H.complex, Z, std::move(comp), true);
}

}  // namespace sft
