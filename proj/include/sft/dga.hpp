#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sft/counts.hpp"
#include "sft/errors.hpp"
#include "sft/graded_linear.hpp"
#include "sft/orbits.hpp"
#include "sft/trees.hpp"

namespace sft {

using Monomial = std::vector<int>;  // orbit ids in canonical (ascending) order

struct CCElement {
  std::map<Monomial, Rational> terms;

  bool is_zero() const { return terms.empty(); }
  void add(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto& x = terms[m];
    x += c;
    if (x == 0) terms.erase(m);
  }
  Rational coeff(const Monomial& m) const {
    auto it = terms.find(m);
    return it == terms.end() ? Rational(0) : it->second;
  }
  CCElement& operator+=(const CCElement& y) {
    for (auto& [m, c] : y.terms) add(m, c);
    return *this;
  }
  CCElement& operator-=(const CCElement& y) {
    for (auto& [m, c] : y.terms) add(m, -c);
    return *this;
  }
  friend CCElement operator+(CCElement x, const CCElement& y) { return x += y; }
  friend CCElement operator-(CCElement x, const CCElement& y) { return x -= y; }
  CCElement scaled(const Rational& s) const {
    CCElement r;
    if (s == 0) return r;
    for (auto& [m, c] : terms) r.terms[m] = c * s;
    return r;
  }
  bool operator==(const CCElement&) const = default;
};

inline std::string monomial_string(const OrbitUniverse& u, const Monomial& m) {
  if (m.empty()) return "1";
  std::string s;
  for (size_t i = 0; i < m.size(); ++i) s += (i ? "*" : "") + std::string("q_") + u[m[i]].name;
  return s;
}

inline std::string element_string(const OrbitUniverse& u, const CCElement& x) {
  if (x.is_zero()) return "0";
  std::string s;
  for (auto& [m, c] : x.terms) s += (s.empty() ? "" : " + ") + ("(" + to_string(c) + ")") + monomial_string(u, m);
  return s;
}

// The free supercommutative algebra on the good orbits of a universe.
class CCAlgebra {
 public:
  CCAlgebra() = default;
  explicit CCAlgebra(OrbitUniverse u) : u_(std::move(u)) {}

  const OrbitUniverse& universe() const { return u_; }

  int parity(const Monomial& m) const {
    int p = 0;
    for (int g : m) p += u_.parity(g);
    return p & 1;
  }
  Rational action(const Monomial& m) const {
    Rational a = 0;
    for (int g : m) a += u_.action(g);
    return a;
  }
  std::optional<long> degree(const Monomial& m) const {
    long d = 0;
    for (int g : m) {
      auto x = u_.grading(g);
      if (!x) return std::nullopt;
      d += *x;
    }
    return d;
  }
  std::vector<long> homology_class(const Monomial& m) const {
    std::vector<long> h;
    for (int g : m) h = beta_add(h, u_[g].homology());
    return h;
  }

  // Sorts a word of generators; returns the Koszul sign, or 0 if the word vanishes.
  int normalize(std::vector<int>& word) const {
    std::vector<int> par;
    for (int g : word) {
      if (u_.bad(g)) return 0;
      par.push_back(u_.parity(g));
    }
    int s = sort_sign(word, par);
    for (size_t i = 1; i < word.size(); ++i)
      if (word[i] == word[i - 1] && u_.parity(word[i])) return 0;
    return s;
  }

  CCElement unit() const {
    CCElement e;
    e.add({}, 1);
    return e;
  }
  CCElement gen(int id) const {
    if (u_.bad(id)) throw InvalidInput("bad orbit is not a generator: " + u_[id].name);
    CCElement e;
    e.add({id}, 1);
    return e;
  }
  CCElement word(std::vector<int> w, const Rational& c = 1) const {
    CCElement e;
    int s = normalize(w);
    if (s) e.add(w, c * s);
    return e;
  }

  CCElement multiply(const CCElement& x, const CCElement& y) const {
    CCElement r;
    for (auto& [a, ca] : x.terms)
      for (auto& [b, cb] : y.terms) {
        std::vector<int> w = a;
        w.insert(w.end(), b.begin(), b.end());
        int s = normalize(w);
        if (s) r.add(w, ca * cb * s);
      }
    return r;
  }

 private:
  OrbitUniverse u_;
};

// |Aut(Gamma-, beta)| for a one-vertex count, computed by the tree module.
inline long output_automorphisms(const CountKey& k) {
  DecoratedTree t;
  Vertex v;
  v.beta = k.beta;
  t.vertices = {v};
  t.edges.push_back(Edge{-1, 0, k.in, 0, 0});
  for (int o : k.outs) t.edges.push_back(Edge{0, -1, o, 0, 0});
  return tree_automorphisms(t);
}

// Generator images (1/d) * sum c / |Aut| q_Gamma read off a count table.
inline std::map<int, CCElement> generator_images(const CountTable& t, const CCAlgebra& target) {
  std::map<int, CCElement> img;
  for (auto& [k, c] : t.entries) {
    if (t.top().bad(k.in)) continue;
    Rational coef = c / Rational(t.top().mult(k.in) * output_automorphisms(k));
    img[k.in] += target.word(k.outs, coef);
  }
  return img;
}

// Inverse of generator_images for one generator: counts = d * |Aut| * coefficient.
inline void images_to_counts(CountTable& t, int in, const CCElement& image, const std::vector<long>& beta = {}) {
  for (auto& [m, c] : image.terms) {
    CountKey k{in, m, beta};
    k.beta.resize(t.beta_rank, 0);
    t.set(in, m, k.beta, c * Rational(t.top().mult(in) * output_automorphisms(k)));
  }
}

// An odd derivation determined by its values on generators.
struct Derivation {
  const CCAlgebra* alg = nullptr;
  std::map<int, CCElement> images;

  CCElement on_generator(int g) const {
    auto it = images.find(g);
    return it == images.end() ? CCElement{} : it->second;
  }

  CCElement apply(const CCElement& x) const {
    CCElement r;
    for (auto& [m, c] : x.terms) {
      int before = 0;
      for (size_t i = 0; i < m.size(); ++i) {
        CCElement img = on_generator(m[i]);
        if (!img.is_zero()) {
          CCElement left, right;
          left.add(Monomial(m.begin(), m.begin() + static_cast<long>(i)), 1);
          right.add(Monomial(m.begin() + static_cast<long>(i) + 1, m.end()), 1);
          CCElement t = alg->multiply(alg->multiply(left, img), right);
          r += t.scaled(c * ((before & 1) ? -1 : 1));
        }
        before += alg->universe().parity(m[i]);
      }
    }
    return r;
  }
};

inline Derivation differential(const CountTable& t, const CCAlgebra& alg) {
  if (t.flavor != Flavor::I) throw InvalidInput("differential: expected a flavor I table");
  return Derivation{&alg, generator_images(t, alg)};
}

// An even unital algebra map determined by generator images.
struct AlgebraMap {
  const CCAlgebra* source = nullptr;
  const CCAlgebra* target = nullptr;
  std::map<int, CCElement> images;

  CCElement on_generator(int g) const {
    auto it = images.find(g);
    return it == images.end() ? CCElement{} : it->second;
  }

  CCElement apply(const CCElement& x) const {
    CCElement r;
    for (auto& [m, c] : x.terms) {
      CCElement acc = target->unit();
      for (int g : m) {
        acc = target->multiply(acc, on_generator(g));
        if (acc.is_zero()) break;
      }
      r += acc.scaled(c);
    }
    return r;
  }
};

inline AlgebraMap compose(const AlgebraMap& g, const AlgebraMap& f) {
  AlgebraMap h{f.source, g.target, {}};
  for (auto& [id, img] : f.images) {
    auto v = g.apply(img);
    if (!v.is_zero()) h.images[id] = v;
  }
  return h;
}

inline AlgebraMap identity_map(const CCAlgebra& a) {
  AlgebraMap m{&a, &a, {}};
  for (int g : a.universe().good_ids()) m.images[g] = a.gen(g);
  return m;
}

inline AlgebraMap cobordism_map(const CountTable& t, const CCAlgebra& plus, const CCAlgebra& minus) {
  if (t.flavor != Flavor::II) throw InvalidInput("cobordism_map: expected a flavor II table");
  return AlgebraMap{&plus, &minus, generator_images(t, minus)};
}

// ---- action filtration ----

// Monomials of total action < a, sorted by (action, monomial).
inline std::vector<Monomial> filtered_basis(const CCAlgebra& alg, const Rational& a) {
  const auto& u = alg.universe();
  auto good = u.good_ids();
  std::vector<Monomial> out;
  Monomial cur;
  std::function<void(size_t, Rational)> rec = [&](size_t from, Rational used) {
    out.push_back(cur);
    for (size_t i = from; i < good.size(); ++i) {
      int g = good[i];
      Rational na = used + u.action(g);
      if (na >= a) continue;
      bool odd = u.parity(g);
      cur.push_back(g);
      rec(odd ? i + 1 : i, na);
      cur.pop_back();
    }
  };
  if (a > 0) rec(0, 0);
  std::stable_sort(out.begin(), out.end(), [&](const Monomial& x, const Monomial& y) {
    Rational ax = alg.action(x), ay = alg.action(y);
    if (ax != ay) return ax < ay;
    return x < y;
  });
  return out;
}

inline std::vector<int> generators_below(const CCAlgebra& alg, const Rational& a) {
  std::vector<int> g;
  for (int id : alg.universe().good_ids())
    if (alg.universe().action(id) < a) g.push_back(id);
  return g;
}

struct Witness {
  std::string where;  // generator or monomial the identity was evaluated on
  Monomial input;
  Monomial monomial;
  Rational coefficient;
};

struct CheckResult {
  bool ok = true;
  size_t checked = 0;
  std::optional<Witness> witness;
};

inline CheckResult first_nonzero(const OrbitUniverse& src, const Monomial& input, const CCElement& e) {
  CheckResult r;
  if (e.is_zero()) return r;
  r.ok = false;
  auto& [m, c] = *e.terms.begin();
  r.witness = Witness{monomial_string(src, input), input, m, c};
  return r;
}

// d^2 vanishes on the generators below a (and hence on every monomial below a, as d^2 is a derivation).
inline CheckResult verify_d_squared(const CountTable& t, const Rational& a) {
  CCAlgebra alg(t.top());
  auto d = differential(t, alg);
  CheckResult res;
  for (int g : generators_below(alg, a)) {
    ++res.checked;
    auto dd = d.apply(d.apply(alg.gen(g)));
    auto r = first_nonzero(alg.universe(), {g}, dd);
    if (!r.ok) {
      r.checked = res.checked;
      return r;
    }
  }
  return res;
}

// Coefficient of q_Gamma in d^2 q_gamma scaled by d_gamma |Aut Gamma|: the count-level residual summed over beta.
inline Rational d_squared_residual(const CountTable& t, int gamma, const Monomial& gamma_minus) {
  CCAlgebra alg(t.top());
  auto d = differential(t, alg);
  auto dd = d.apply(d.apply(alg.gen(gamma)));
  return dd.coeff(gamma_minus) * Rational(t.top().mult(gamma) * multiset_aut(gamma_minus));
}

// Matrix of a linear operator on a basis of monomials: column j is the image of basis[j].
inline Matrix operator_matrix(const std::vector<Monomial>& basis, const std::function<CCElement(const Monomial&)>& op,
                              const std::vector<Monomial>* target_basis = nullptr) {
  const auto& tb = target_basis ? *target_basis : basis;
  std::map<Monomial, size_t> index;
  for (size_t i = 0; i < tb.size(); ++i) index[tb[i]] = i;
  Matrix m(tb.size(), basis.size());
  for (size_t j = 0; j < basis.size(); ++j) {
    auto img = op(basis[j]);
    for (auto& [mono, c] : img.terms) {
      auto it = index.find(mono);
      if (it == index.end()) throw HypothesisViolation("operator leaves the filtered basis at " + std::to_string(j));
      m(it->second, j) = c;
    }
  }
  return m;
}

struct HomologyReport {
  Rational bound;
  size_t basis_size = 0;
  size_t even = 0;
  size_t odd = 0;
  std::map<long, size_t> by_degree;  // when integer gradings are known
  bool unit_is_exact = false;
};

inline HomologyReport homology_below(const CountTable& t, const Rational& a) {
  auto sq = verify_d_squared(t, a);
  if (!sq.ok) throw HypothesisViolation("d^2 != 0 on " + sq.witness->where);
  CCAlgebra alg(t.top());
  auto d = differential(t, alg);
  auto basis = filtered_basis(alg, a);
  HomologyReport rep;
  rep.bound = a;
  rep.basis_size = basis.size();
  auto D = operator_matrix(basis, [&](const Monomial& m) {
    CCElement x;
    x.add(m, 1);
    return d.apply(x);
  });
  // Split by parity: H_p = ker(D on p) / im(D from 1-p).
  for (int p = 0; p < 2; ++p) {
    std::vector<size_t> src, dst;
    for (size_t i = 0; i < basis.size(); ++i) (alg.parity(basis[i]) == p ? src : dst).push_back(i);
    Matrix out(basis.size(), src.size()), in(basis.size(), dst.size());
    for (size_t j = 0; j < src.size(); ++j)
      for (size_t i = 0; i < basis.size(); ++i) out(i, j) = D(i, src[j]);
    for (size_t j = 0; j < dst.size(); ++j)
      for (size_t i = 0; i < basis.size(); ++i) in(i, j) = D(i, dst[j]);
    size_t h = src.size() - rank(out) - rank(in);
    (p == 0 ? rep.even : rep.odd) = h;
  }
  bool graded = std::all_of(basis.begin(), basis.end(), [&](const Monomial& m) { return alg.degree(m).has_value(); });
  if (graded) {
    std::map<long, std::vector<size_t>> deg;
    for (size_t i = 0; i < basis.size(); ++i) deg[*alg.degree(basis[i])].push_back(i);
    auto block = [&](long k) {
      // D restricted to degree k, landing in degree k-1.
      auto s = deg.count(k) ? deg[k] : std::vector<size_t>{};
      auto r = deg.count(k - 1) ? deg[k - 1] : std::vector<size_t>{};
      Matrix m(r.size(), s.size());
      for (size_t j = 0; j < s.size(); ++j)
        for (size_t i = 0; i < r.size(); ++i) m(i, j) = D(r[i], s[j]);
      return m;
    };
    for (auto& [k, idx] : deg) {
      size_t h = idx.size() - rank(block(k)) - rank(block(k + 1));
      if (h) rep.by_degree[k] = h;
    }
  }
  if (!basis.empty()) {
    std::vector<Rational> e(basis.size(), 0);
    e[0] = 1;  // basis[0] is the unit, the unique monomial of action 0
    rep.unit_is_exact = solve(D, e).has_value();
  }
  return rep;
}

// d_- Phi - Phi d_+ vanishes on the generators below a.
inline CheckResult verify_chain_map(const CountTable& cob, const CountTable& plus, const CountTable& minus,
                                    const Rational& a) {
  CCAlgebra ap(plus.top()), am(minus.top());
  auto dp = differential(plus, ap);
  auto dm = differential(minus, am);
  auto phi = cobordism_map(cob, ap, am);
  CheckResult res;
  for (int g : generators_below(ap, a)) {
    ++res.checked;
    auto x = ap.gen(g);
    auto e = dm.apply(phi.apply(x)) - phi.apply(dp.apply(x));
    auto r = first_nonzero(ap.universe(), {g}, e);
    if (!r.ok) {
      r.checked = res.checked;
      return r;
    }
  }
  return res;
}

// ---- homotopies: an exact flow of algebra maps in t ----

using Poly = std::vector<Rational>;  // coefficients of t^0, t^1, ...

struct PolyElement {
  std::map<Monomial, Poly> terms;

  static void add_poly(Poly& a, const Poly& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0);
    for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  }
  void add(const Monomial& m, const Poly& p) {
    auto& x = terms[m];
    add_poly(x, p);
    while (!x.empty() && x.back() == 0) x.pop_back();
    if (x.empty()) terms.erase(m);
  }
  static PolyElement constant(const CCElement& e) {
    PolyElement r;
    for (auto& [m, c] : e.terms) r.add(m, {c});
    return r;
  }
  PolyElement& operator+=(const PolyElement& y) {
    for (auto& [m, p] : y.terms) add(m, p);
    return *this;
  }
  PolyElement scaled(const Rational& s) const {
    PolyElement r;
    for (auto& [m, p] : terms) {
      Poly q = p;
      for (auto& x : q) x *= s;
      r.add(m, q);
    }
    return r;
  }
  // Antiderivative vanishing at t = 0.
  PolyElement integrate() const {
    PolyElement r;
    for (auto& [m, p] : terms) {
      Poly q(p.size() + 1, 0);
      for (size_t i = 0; i < p.size(); ++i) q[i + 1] = p[i] / Rational(static_cast<long>(i + 1));
      r.add(m, q);
    }
    return r;
  }
  CCElement at_one() const {
    CCElement e;
    for (auto& [m, p] : terms) {
      Rational s = 0;
      for (auto& c : p) s += c;
      e.add(m, s);
    }
    return e;
  }
};

inline PolyElement poly_multiply(const CCAlgebra& alg, const PolyElement& x, const PolyElement& y) {
  PolyElement r;
  for (auto& [a, pa] : x.terms)
    for (auto& [b, pb] : y.terms) {
      std::vector<int> w = a;
      w.insert(w.end(), b.begin(), b.end());
      int s = alg.normalize(w);
      if (!s) continue;
      Poly q(pa.size() + pb.size() - 1, 0);
      for (size_t i = 0; i < pa.size(); ++i)
        for (size_t j = 0; j < pb.size(); ++j) q[i + j] += pa[i] * pb[j] * s;
      r.add(w, q);
    }
  return r;
}

inline PolyElement poly_apply(const Derivation& d, const PolyElement& x) {
  PolyElement r;
  for (auto& [m, p] : x.terms) {
    CCElement e;
    e.add(m, 1);
    auto img = d.apply(e);
    for (auto& [mm, c] : img.terms) {
      Poly q = p;
      for (auto& v : q) v *= c;
      r.add(mm, q);
    }
  }
  return r;
}

// Phi_t from Phi_start with dPhi_t/dt = [d, k_t], where k_t is the Phi_t-derivation extending k on generators.
struct HomotopyFlow {
  const CCAlgebra* plus = nullptr;
  const CCAlgebra* minus = nullptr;
  std::map<int, PolyElement> phi_t;  // generator images as polynomials in t
  std::map<int, CCElement> k;        // generator values of the homotopy

  PolyElement phi_word(const Monomial& m) const {
    PolyElement acc = PolyElement::constant(minus->unit());
    for (int g : m) {
      auto it = phi_t.find(g);
      if (it == phi_t.end()) return {};
      acc = poly_multiply(*minus, acc, it->second);
    }
    return acc;
  }

  // k_t on a monomial: sum_i (-1)^{|g_<i|} Phi_t(g_<i) k(g_i) Phi_t(g_>i).
  PolyElement k_word(const Monomial& m) const {
    PolyElement r;
    int before = 0;
    for (size_t i = 0; i < m.size(); ++i) {
      auto it = k.find(m[i]);
      if (it != k.end() && !it->second.is_zero()) {
        auto left = phi_word(Monomial(m.begin(), m.begin() + static_cast<long>(i)));
        auto right = phi_word(Monomial(m.begin() + static_cast<long>(i) + 1, m.end()));
        auto t = poly_multiply(*minus, poly_multiply(*minus, left, PolyElement::constant(it->second)), right);
        r += t.scaled((before & 1) ? -1 : 1);
      }
      before += plus->universe().parity(m[i]);
    }
    return r;
  }

  PolyElement k_element(const CCElement& x) const {
    PolyElement r;
    for (auto& [m, c] : x.terms) r += k_word(m).scaled(c);
    return r;
  }

  // K = integral over [0, 1] of k_t.
  CCElement K(const CCElement& x) const { return k_element(x).integrate().at_one(); }

  AlgebraMap end_map() const {
    AlgebraMap m{plus, minus, {}};
    for (auto& [g, p] : phi_t) {
      auto v = p.at_one();
      if (!v.is_zero()) m.images[g] = v;
    }
    return m;
  }
};

inline HomotopyFlow run_flow(const AlgebraMap& start, const std::map<int, CCElement>& k, const Derivation& d_plus,
                             const Derivation& d_minus, const Rational& a) {
  HomotopyFlow f;
  f.plus = start.source;
  f.minus = start.target;
  f.k = k;
  auto gens = generators_below(*start.source, a);
  std::stable_sort(gens.begin(), gens.end(), [&](int x, int y) {
    return start.source->universe().action(x) < start.source->universe().action(y);
  });
  for (int g : gens) {
    PolyElement rate;
    auto kg = k.find(g);
    if (kg != k.end()) rate += PolyElement::constant(d_minus.apply(kg->second));
    rate += f.k_element(d_plus.apply(start.source->gen(g)));
    auto p = PolyElement::constant(start.on_generator(g));
    p += rate.integrate();
    f.phi_t[g] = p;
  }
  return f;
}

inline std::map<int, CCElement> homotopy_generators(const CountTable& t, const CCAlgebra& target) {
  if (t.flavor != Flavor::III && t.flavor != Flavor::IV) throw InvalidInput("expected a flavor III or IV table");
  return generator_images(t, target);
}

// Phi_end - Phi_start = d_- K + K d_+ below a, with K built from connected counts by the flow.
// Checked on every monomial of the filtered basis; the first failure is returned.
inline CheckResult verify_homotopy(const std::map<int, CCElement>& k, const AlgebraMap& start, const AlgebraMap& end,
                                   const Derivation& d_plus, const Derivation& d_minus, const Rational& a) {
  auto flow = run_flow(start, k, d_plus, d_minus, a);
  CheckResult res;
  for (auto& m : filtered_basis(*start.source, a)) {
    ++res.checked;
    CCElement x;
    x.add(m, 1);
    auto e = end.apply(x) - start.apply(x) - d_minus.apply(flow.K(x)) - flow.K(d_plus.apply(x));
    auto r = first_nonzero(start.source->universe(), m, e);
    if (!r.ok) {
      r.checked = res.checked;
      return r;
    }
  }
  return res;
}

// Generator-level residual of the homotopy identity, scaled to count normalization.
inline std::map<CountKey, Rational> homotopy_residuals(const std::map<int, CCElement>& k, const AlgebraMap& start,
                                                       const AlgebraMap& end, const Derivation& d_plus,
                                                       const Derivation& d_minus, const Rational& a) {
  auto flow = run_flow(start, k, d_plus, d_minus, a);
  std::map<CountKey, Rational> out;
  const auto& u = start.source->universe();
  for (int g : generators_below(*start.source, a)) {
    auto x = start.source->gen(g);
    auto e = end.apply(x) - start.apply(x) - d_minus.apply(flow.K(x)) - flow.K(d_plus.apply(x));
    for (auto& [m, c] : e.terms) out[CountKey{g, m, {}}] = c * Rational(u.mult(g) * multiset_aut(m));
  }
  return out;
}

// Three cobordisms X0 -> X1 -> X2 and the glued one X0 -> X2: each map intertwines the differentials, and the
// flow driven by the connected flavor IV counts carries Phi^02 to Phi^12 o Phi^01.
struct CompositionCheck {
  CheckResult map01, map12, map02, homotopy;
  bool ok() const { return map01.ok && map12.ok && map02.ok && homotopy.ok; }
};

inline CompositionCheck verify_composition(const CountTable& k_table, const CountTable& cob01, const CountTable& cob12,
                                           const CountTable& cob02, const CountTable& t0, const CountTable& t1,
                                           const CountTable& t2, const Rational& a) {
  CompositionCheck r;
  r.map01 = verify_chain_map(cob01, t0, t1, a);
  r.map12 = verify_chain_map(cob12, t1, t2, a);
  r.map02 = verify_chain_map(cob02, t0, t2, a);
  CCAlgebra a0(t0.top()), a1(t1.top()), a2(t2.top());
  auto composite = compose(cobordism_map(cob12, a1, a2), cobordism_map(cob01, a0, a1));
  auto k = homotopy_generators(k_table, a2);
  r.homotopy = verify_homotopy(k, cobordism_map(cob02, a0, a2), composite, differential(t0, a0), differential(t2, a2), a);
  return r;
}

// ---- the trivial-cobordism isomorphism check ----

struct FilteredMatrix {
  Matrix phi;                    // column j = image of basis element j
  std::vector<Rational> action;  // per basis element
  std::vector<long> degree;      // per basis element
};

struct IsoCheck {
  bool is_iso = false;
  std::optional<Matrix> inverse;
  std::optional<std::pair<size_t, size_t>> singular_block;  // (block index, first row in sorted order) that fails
};

// Filtration: F_(a,k) spanned by elements of action < a, or action = a and degree >= k.
// A filtered map is an isomorphism iff its diagonal (equal action and degree) blocks are invertible.
inline IsoCheck trivial_cobordism_check(const FilteredMatrix& f) {
  const size_t n = f.action.size();
  if (f.phi.rows() != n || f.phi.cols() != n || f.degree.size() != n)
    throw InvalidInput("trivial_cobordism_check: shape mismatch");
  auto below_or_equal = [&](size_t i, size_t j) {
    // Is basis i in the filtration level of basis j?
    if (f.action[i] != f.action[j]) return f.action[i] < f.action[j];
    return f.degree[i] >= f.degree[j];
  };
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < n; ++i)
      if (f.phi(i, j) != 0 && !below_or_equal(i, j))
        throw NotFiltered("entry (" + std::to_string(i) + "," + std::to_string(j) + ") raises the filtration");
  // Order basis from the bottom of the filtration upwards; phi is then block upper triangular.
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    if (f.action[x] != f.action[y]) return f.action[x] < f.action[y];
    return f.degree[x] > f.degree[y];
  });
  std::vector<std::pair<size_t, size_t>> blocks;  // [start, end) in `order`
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && f.action[order[j]] == f.action[order[i]] && f.degree[order[j]] == f.degree[order[i]]) ++j;
    blocks.push_back({i, j});
    i = j;
  }
  Matrix P(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) P(i, j) = f.phi(order[i], order[j]);
  std::vector<Matrix> diag_inv;
  IsoCheck res;
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto [s, e] = blocks[b];
    auto inv = inverse(P.block(s, s, e - s, e - s));
    if (!inv) {
      res.singular_block = {b, s};
      return res;
    }
    diag_inv.push_back(*inv);
  }
  // Back-substitution for the block upper triangular inverse Q: P Q = I.
  Matrix Q(n, n);
  for (size_t bj = 0; bj < blocks.size(); ++bj) {
    for (size_t bi = bj + 1; bi-- > 0;) {
      auto [is, ie] = blocks[bi];
      auto [js, je] = blocks[bj];
      Matrix rhs(ie - is, je - js);
      if (bi == bj)
        for (size_t k = 0; k < ie - is; ++k) rhs(k, k) = 1;
      for (size_t bk = bi + 1; bk <= bj; ++bk) {
        auto [ks, ke] = blocks[bk];
        rhs = rhs - P.block(is, ks, ie - is, ke - ks) * Q.block(ks, js, ke - ks, je - js);
      }
      Q.set_block(is, js, diag_inv[bi] * rhs);
    }
  }
  Matrix inv(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) inv(order[i], order[j]) = Q(i, j);
  res.is_iso = true;
  res.inverse = inv;
  return res;
}

// The matrix of an algebra map on the filtered basis, with (action, degree) data for the check above.
inline FilteredMatrix filtered_matrix(const AlgebraMap& phi, const Rational& a) {
  auto basis = filtered_basis(*phi.source, a);
  FilteredMatrix f;
  f.phi = operator_matrix(basis, [&](const Monomial& m) {
    CCElement x;
    x.add(m, 1);
    return phi.apply(x);
  });
  for (auto& m : basis) {
    f.action.push_back(phi.source->action(m));
    auto d = phi.source->degree(m);
    f.degree.push_back(d ? *d : phi.source->parity(m));
  }
  return f;
}

}  // namespace sft
