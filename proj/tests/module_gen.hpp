#pragma once

// Random finite posets and S-modules over them, plus an order-complex reference for nerve homology.

#include <functional>
#include <map>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sft/vfc_algebra.hpp"

namespace modules {

using namespace sft;

inline int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Random relation on 0..n-1 compatible with the index order, transitively closed; optionally a top element.
inline std::vector<std::vector<char>> random_order(int n, std::mt19937_64& rng, double p = 0.4, bool top = false) {
  std::vector<std::vector<char>> le(n, std::vector<char>(n, 0));
  std::bernoulli_distribution edge(p);
  for (int i = 0; i < n; ++i) {
    le[i][i] = 1;
    for (int j = i + 1; j < n; ++j) le[i][j] = edge(rng);
  }
  if (top)
    for (int i = 0; i < n; ++i) le[i][n - 1] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (le[i][k] && le[k][j]) le[i][j] = 1;
  return le;
}

inline FiniteCategory random_poset(int n, std::mt19937_64& rng, double p = 0.4, bool top = false) {
  auto le = random_order(n, rng, p, top);
  return FiniteCategory::poset(n, [le](int a, int b) { return le[a][b] != 0; });
}

inline bool leq(const FiniteCategory& P, int a, int b) { return a == b || P.arrow(a, b).has_value(); }

inline ChainComplex small_complex(std::mt19937_64& rng, size_t maxdim = 2) {
  return oracle::random_complex(0, oracle::random_dims(3, maxdim, rng), rng);
}

// Builds the module from values and a rule giving the matrix of each pushforward in each degree.
inline SModule make_module(const FiniteCategory& P, std::vector<ChainComplex> values,
                           const std::function<Matrix(int, int, int)>& push_at) {
  SModule M;
  M.poset = P;
  M.value = std::move(values);
  for (int m = 0; m < static_cast<int>(P.morphisms.size()); ++m) {
    if (P.is_identity(m)) continue;
    int a = P.morphisms[m].src, b = P.morphisms[m].tgt;
    std::map<int, Matrix> comp;
    int lo = std::min(M.value[a].lo(), M.value[b].lo()), hi = std::max(M.value[a].hi(), M.value[b].hi());
    for (int k = lo; k <= hi; ++k) comp[k] = push_at(a, b, k);
    M.push.emplace(m, ChainMap(M.value[a], M.value[b], std::move(comp)));
  }
  return M;
}

inline SModule constant_module(const FiniteCategory& P, const ChainComplex& C) {
  return make_module(P, std::vector<ChainComplex>(P.size(), C), [&](int, int, int k) { return Matrix::identity(C.dim(k)); });
}

// M(x) = sum over t <= x of C_t, with block inclusions.
inline SModule free_module(const FiniteCategory& P, const std::vector<ChainComplex>& gens) {
  int n = P.size();
  std::vector<DirectSum> sums(n);
  std::vector<std::vector<int>> members(n);
  for (int x = 0; x < n; ++x) {
    std::vector<ChainComplex> parts;
    std::vector<std::string> tags;
    for (int t = 0; t < n; ++t)
      if (leq(P, t, x)) {
        members[x].push_back(t);
        parts.push_back(gens[t]);
        tags.push_back(P.objects[t]);
      }
    sums[x] = direct_sum(parts, tags);
  }
  std::vector<ChainComplex> values;
  for (auto& s : sums) values.push_back(s.complex);
  return make_module(P, values, [&](int a, int b, int k) {
    Matrix m(sums[b].complex.dim(k), sums[a].complex.dim(k));
    for (size_t i = 0; i < members[a].size(); ++i) {
      int t = members[a][i];
      size_t j = std::find(members[b].begin(), members[b].end(), t) - members[b].begin();
      size_t d = gens[t].dim(k);
      if (d) m.set_block(sums[b].offset[j].at(k), sums[a].offset[i].at(k), Matrix::identity(d));
    }
    return m;
  });
}

// C on a downward-closed set D, zero elsewhere; pushforwards leaving D vanish.
inline SModule supported_module(const FiniteCategory& P, const std::vector<char>& in, const ChainComplex& C) {
  std::vector<ChainComplex> values;
  for (int x = 0; x < P.size(); ++x) values.push_back(in[x] ? C : ChainComplex::from_dims(C.lo(), std::vector<size_t>(C.hi() - C.lo() + 1, 0), std::vector<Matrix>(C.hi() - C.lo() + 1)));
  return make_module(P, values, [&](int a, int b, int k) {
    if (in[a] && in[b]) return Matrix::identity(C.dim(k));
    return Matrix(in[b] ? C.dim(k) : 0, in[a] ? C.dim(k) : 0);
  });
}

inline SModule direct_sum_module(const SModule& A, const SModule& B) {
  std::vector<DirectSum> sums;
  for (int x = 0; x < A.poset.size(); ++x) sums.push_back(direct_sum({A.value[x], B.value[x]}, {"l", "r"}));
  std::vector<ChainComplex> values;
  for (auto& s : sums) values.push_back(s.complex);
  return make_module(A.poset, values, [&](int a, int b, int k) {
    Matrix m(sums[b].complex.dim(k), sums[a].complex.dim(k));
    Matrix fa = A.pushforward(a, b).at(k), fb = B.pushforward(a, b).at(k);
    if (fa.rows() && fa.cols()) m.set_block(sums[b].offset[0].at(k), sums[a].offset[0].at(k), fa);
    if (fb.rows() && fb.cols()) m.set_block(sums[b].offset[1].at(k), sums[a].offset[1].at(k), fb);
    return m;
  });
}

inline std::vector<char> random_down_set(const FiniteCategory& P, std::mt19937_64& rng) {
  std::vector<char> in(P.size(), 0);
  std::bernoulli_distribution pick(0.5);
  for (int x = 0; x < P.size(); ++x)
    if (pick(rng))
      for (int y = 0; y < P.size(); ++y)
        if (leq(P, y, x)) in[y] = 1;
  return in;
}

// A module that is usually not cofibrant: a constant piece plus a piece supported on a down-set.
inline SModule random_module(const FiniteCategory& P, std::mt19937_64& rng) {
  ChainComplex E = oracle::random_complex(0, {static_cast<size_t>(uniform(rng, 0, 2)), static_cast<size_t>(uniform(rng, 0, 1)), 0}, rng);
  ChainComplex S = oracle::random_complex(0, {static_cast<size_t>(uniform(rng, 0, 1)), static_cast<size_t>(uniform(rng, 0, 2)), 0}, rng);
  return direct_sum_module(constant_module(P, E), supported_module(P, random_down_set(P, rng), S));
}

inline std::vector<int> down_set_objects(const FiniteCategory& P, std::mt19937_64& rng) {
  auto in = random_down_set(P, rng);
  std::vector<int> objs;
  for (int x = 0; x < P.size(); ++x)
    if (in[x]) objs.push_back(x);
  return objs;
}

// Homology of the order complex of a poset, from strictly increasing chains and rank over the integers.
inline std::map<int, size_t> order_complex_homology(int n, const std::function<bool(int, int)>& lt) {
  std::vector<std::vector<std::vector<int>>> chains(1);
  for (int x = 0; x < n; ++x) chains[0].push_back({x});
  while (true) {
    std::vector<std::vector<int>> next;
    for (auto& c : chains.back())
      for (int y = 0; y < n; ++y)
        if (lt(c.back(), y)) {
          auto d = c;
          d.push_back(y);
          next.push_back(d);
        }
    if (next.empty()) break;
    chains.push_back(next);
  }
  std::vector<size_t> ranks(chains.size() + 1, 0);
  for (size_t p = 1; p < chains.size(); ++p) {
    std::map<std::vector<int>, size_t> idx;
    for (size_t i = 0; i < chains[p - 1].size(); ++i) idx[chains[p - 1][i]] = i;
    Matrix d(chains[p - 1].size(), chains[p].size());
    for (size_t j = 0; j < chains[p].size(); ++j)
      for (size_t i = 0; i <= p; ++i) {
        auto f = chains[p][j];
        f.erase(f.begin() + i);
        d(idx.at(f), j) += (i % 2) ? -1 : 1;
      }
    ranks[p] = oracle::rational_rank(d);
  }
  std::map<int, size_t> h;
  for (size_t p = 0; p < chains.size(); ++p) {
    size_t v = chains[p].size() - ranks[p] - ranks[p + 1];
    if (v) h[static_cast<int>(p)] = v;
  }
  return h;
}

}  // namespace modules
