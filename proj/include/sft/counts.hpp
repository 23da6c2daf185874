#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sft/errors.hpp"
#include "sft/graded_linear.hpp"
#include "sft/orbits.hpp"
#include "sft/trees.hpp"

namespace sft {

// One connected count: input orbit (top universe), sorted outputs (bottom universe), homotopy class.
struct CountKey {
  int in = 0;
  std::vector<int> outs;
  std::vector<long> beta;
  auto operator<=>(const CountKey&) const = default;
  bool operator==(const CountKey&) const = default;
};

inline std::vector<long> beta_add(std::vector<long> a, const std::vector<long>& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

inline std::vector<long> beta_sub(std::vector<long> a, const std::vector<long>& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  return a;
}

// Product of factorials of repeated entries: the stabilizer of a multiset of outputs.
inline long multiset_aut(const std::vector<int>& sorted) {
  long a = 1;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    for (size_t k = 2; k <= j - i; ++k) a *= static_cast<long>(k);
    i = j;
  }
  return a;
}

// A table of virtual counts. levels: {U} for flavor I, {U+, U-} for II and III, {U0, U1, U2} for IV.
struct CountTable {
  Flavor flavor = Flavor::I;
  std::vector<OrbitUniverse> levels;
  int beta_rank = 0;
  std::map<CountKey, Rational> entries;
  // Flavors III and IV: optional user-supplied counts of disconnected curves, keyed by their components.
  std::map<std::vector<CountKey>, Rational> disconnected;

  const OrbitUniverse& top() const { return levels.front(); }
  const OrbitUniverse& bottom() const { return levels.back(); }

  std::vector<int> out_parities(const std::vector<int>& outs) const {
    std::vector<int> p;
    for (int o : outs) p.push_back(bottom().parity(o));
    return p;
  }

  void check_ids(int in, const std::vector<int>& outs) const {
    if (in < 0 || in >= static_cast<int>(top().size())) throw MissingOrbit("input orbit id out of range");
    for (int o : outs)
      if (o < 0 || o >= static_cast<int>(bottom().size())) throw MissingOrbit("output orbit id out of range");
  }

  // Normalizes the outputs to canonical order; the stored value absorbs the Koszul sign.
  CountKey normalize(int in, std::vector<int> outs, std::vector<long> beta, int& sign) const {
    check_ids(in, outs);
    auto par = out_parities(outs);
    sign = sort_sign(outs, par);
    beta.resize(std::max<size_t>(beta.size(), beta_rank), 0);
    return CountKey{in, std::move(outs), std::move(beta)};
  }

  void set(int in, std::vector<int> outs, std::vector<long> beta, const Rational& value) {
    int s = 1;
    auto k = normalize(in, std::move(outs), std::move(beta), s);
    if (value == 0)
      entries.erase(k);
    else
      entries[k] = value * s;
  }

  Rational value(int in, std::vector<int> outs, std::vector<long> beta) const {
    int s = 1;
    auto k = normalize(in, std::move(outs), std::move(beta), s);
    auto it = entries.find(k);
    return it == entries.end() ? Rational(0) : it->second * s;
  }

  Rational at(const CountKey& k) const {
    auto it = entries.find(k);
    return it == entries.end() ? Rational(0) : it->second;
  }

  std::map<int, std::vector<std::pair<CountKey, Rational>>> by_input() const {
    std::map<int, std::vector<std::pair<CountKey, Rational>>> r;
    for (auto& [k, v] : entries) r[k.in].push_back({k, v});
    return r;
  }
};

inline std::string key_string(const CountTable& t, const CountKey& k) {
  std::string s = t.top()[k.in].name + "->{";
  for (size_t i = 0; i < k.outs.size(); ++i) s += (i ? "," : "") + t.bottom()[k.outs[i]].name;
  s += "}";
  bool nonzero = std::any_of(k.beta.begin(), k.beta.end(), [](long b) { return b != 0; });
  if (nonzero) s += "@" + beta_key(k.beta);
  return s;
}

inline int required_index(Flavor f) {
  switch (f) {
    case Flavor::I: return 1;
    case Flavor::II: return 0;
    default: return -1;
  }
}

// Fredholm index of a one-vertex key when integer gradings are known; the homotopy class contributes nothing here.
inline std::optional<long> key_index(const CountTable& t, const CountKey& k) {
  auto g = t.top().grading(k.in);
  if (!g) return std::nullopt;
  long mu = *g;
  for (int o : k.outs) {
    auto h = t.bottom().grading(o);
    if (!h) return std::nullopt;
    mu -= *h;
  }
  return mu;
}

inline int key_parity(const CountTable& t, const CountKey& k) {
  int p = t.top().parity(k.in);
  for (int o : k.outs) p += t.bottom().parity(o);
  return p & 1;
}

inline bool has_odd_repeat(const CountTable& t, const std::vector<int>& sorted_outs) {
  for (size_t i = 1; i < sorted_outs.size(); ++i)
    if (sorted_outs[i] == sorted_outs[i - 1] && t.bottom().parity(sorted_outs[i])) return true;
  return false;
}

inline bool touches_bad_orbit(const CountTable& t, const CountKey& k) {
  if (t.top().bad(k.in)) return true;
  return std::any_of(k.outs.begin(), k.outs.end(), [&](int o) { return t.bottom().bad(o); });
}

// Violations: bad_orbit, index, odd_repeat, action, beta_rank, plus the same for disconnected entries.
inline std::vector<std::string> validate_counts(const CountTable& t) {
  std::vector<std::string> v;
  size_t want_levels = t.flavor == Flavor::I ? 1 : t.flavor == Flavor::IV ? 3 : 2;
  if (t.levels.size() != want_levels) {
    v.push_back("levels");
    return v;
  }
  auto check = [&](const CountKey& k, const Rational& val, bool connected_only_index) {
    t.check_ids(k.in, k.outs);
    std::string ks = key_string(t, k);
    if (val == 0) return;
    if (touches_bad_orbit(t, k)) v.push_back("bad_orbit:" + ks);
    if (has_odd_repeat(t, k.outs)) v.push_back("odd_repeat:" + ks);
    if (static_cast<int>(k.beta.size()) != t.beta_rank) v.push_back("beta_rank:" + ks);
    if (connected_only_index) {
      int want = required_index(t.flavor);
      auto mu = key_index(t, k);
      if (mu ? *mu != want : key_parity(t, k) != (want & 1)) v.push_back("index:" + ks);
    }
    if (t.flavor == Flavor::I) {
      Rational out = 0;
      for (int o : k.outs) out += t.bottom().action(o);
      if (out >= t.top().action(k.in)) v.push_back("action:" + ks);
    }
  };
  for (auto& [k, val] : t.entries) check(k, val, true);
  if (!t.disconnected.empty() && t.flavor != Flavor::III && t.flavor != Flavor::IV) v.push_back("disconnected_not_allowed");
  for (auto& [ks, val] : t.disconnected) {
    long total = 0;
    bool known = true;
    int par = 0;
    for (auto& k : ks) {
      check(k, val, false);
      auto mu = key_index(t, k);
      if (mu)
        total += *mu;
      else
        known = false;
      par += key_parity(t, k);
    }
    if (val != 0 && (known ? total != -1 : (par & 1) != 1)) {
      std::string s;
      for (auto& k : ks) s += (s.empty() ? "" : "+") + key_string(t, k);
      v.push_back("index:" + s);
    }
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// ---- residuals ----

// All position subsets of `outs` (sorted) whose orbit multiset equals `sub` (sorted).
inline void for_each_position_subset(const std::vector<int>& outs, const std::vector<int>& sub,
                                     const std::function<void(const std::vector<int>&)>& fn) {
  std::map<int, std::vector<int>> positions;
  for (size_t i = 0; i < outs.size(); ++i) positions[outs[i]].push_back(static_cast<int>(i));
  std::map<int, int> need;
  for (int o : sub) need[o]++;
  for (auto& [o, m] : need)
    if (static_cast<int>(positions[o].size()) < m) return;
  std::vector<std::pair<int, int>> items(need.begin(), need.end());
  std::vector<int> chosen;
  std::function<void(size_t)> rec = [&](size_t idx) {
    if (idx == items.size()) {
      auto s = chosen;
      std::sort(s.begin(), s.end());
      fn(s);
      return;
    }
    const auto& pos = positions[items[idx].first];
    int m = items[idx].second;
    std::function<void(size_t, int)> pick = [&](size_t from, int left) {
      if (left == 0) {
        rec(idx + 1);
        return;
      }
      for (size_t i = from; i + left <= pos.size(); ++i) {
        chosen.push_back(pos[i]);
        pick(i + 1, left - 1);
        chosen.pop_back();
      }
    };
    pick(0, m);
  };
  rec(0);
}

inline bool is_submultiset(const std::vector<int>& sub, const std::vector<int>& outs) {
  return std::includes(outs.begin(), outs.end(), sub.begin(), sub.end());
}

// Sign of sorting `word` (leaf positions) into ascending order. With marker_at >= 0 an odd marker sits
// before word[marker_at] and is moved to the front.
inline int word_sign(const std::vector<int>& word, const std::vector<int>& parity_of_pos, int marker_at = -1) {
  std::vector<int> items, par;
  if (marker_at >= 0) {
    for (int i = 0; i < static_cast<int>(word.size()); ++i) {
      if (i == marker_at) {
        items.push_back(-1);
        par.push_back(1);
      }
      items.push_back(word[i]);
      par.push_back(parity_of_pos[word[i]]);
    }
    if (marker_at >= static_cast<int>(word.size())) {
      items.push_back(-1);
      par.push_back(1);
    }
  } else {
    for (int w : word) {
      items.push_back(w);
      par.push_back(parity_of_pos[w]);
    }
  }
  std::vector<int> perm(items.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return items[a] < items[b]; });
  return koszul_sign(perm, par);
}

// Two-level configuration: `upper` has an output gamma0 feeding `lower`, which takes the leaves at positions S.
// Returns sum over labelled configurations of sign * c_upper * c_lower / d_{gamma0}.
inline Rational two_level_sum(const CountTable& upper, const CountTable& lower, const CountKey& key) {
  const auto& mid = lower.top();
  std::vector<int> ppos;
  for (int o : key.outs) ppos.push_back(upper.bottom().parity(o));
  Rational total = 0;
  for (auto& [lk, lv] : lower.entries) {
    if (!is_submultiset(lk.outs, key.outs)) continue;
    int g0 = lk.in;
    auto beta_u = beta_sub(key.beta, lk.beta);
    for_each_position_subset(key.outs, lk.outs, [&](const std::vector<int>& S) {
      std::vector<int> A;
      for (int i = 0, j = 0; i < static_cast<int>(key.outs.size()); ++i) {
        if (j < static_cast<int>(S.size()) && S[j] == i)
          ++j;
        else
          A.push_back(i);
      }
      std::vector<int> uouts;
      for (int i : A) uouts.push_back(key.outs[i]);
      // The junction orbit lives in the upper table's bottom universe; ids agree because the universes coincide.
      auto it = std::lower_bound(uouts.begin(), uouts.end(), g0);
      int p = static_cast<int>(it - uouts.begin());
      uouts.insert(it, g0);
      Rational cu = upper.at(CountKey{key.in, uouts, beta_u});
      if (cu == 0) return;
      std::vector<int> word(A.begin(), A.begin() + p);
      word.insert(word.end(), S.begin(), S.end());
      word.insert(word.end(), A.begin() + p, A.end());
      int sign = word_sign(word, ppos, p);
      total += Rational(sign) * cu * lv / mid.mult(g0);
    });
  }
  return total;
}

// Flavor I: the master equation residual of a one-vertex key.
inline Rational master_residual(const CountTable& t, const CountKey& key) {
  if (t.flavor != Flavor::I) throw InvalidInput("master_residual: expected a flavor I table");
  return two_level_sum(t, t, key);
}

// Flavor II: symplectization level above (A) minus symplectization level below (B).
inline Rational master_residual(const CountTable& cob, const CountTable& plus, const CountTable& minus,
                                const CountKey& key) {
  if (cob.flavor != Flavor::II || plus.flavor != Flavor::I || minus.flavor != Flavor::I)
    throw InvalidInput("master_residual: expected flavors II, I, I");
  std::vector<int> ppos;
  for (int o : key.outs) ppos.push_back(cob.bottom().parity(o));
  const int n = static_cast<int>(key.outs.size());
  auto cob_by_in = cob.by_input();
  Rational a_sum = 0;
  for (auto& [uk, uv] : plus.entries) {
    if (uk.in != key.in) continue;
    const int k = static_cast<int>(uk.outs.size());
    Rational weight = uv / Rational(multiset_aut(uk.outs));
    for (int o : uk.outs) weight /= plus.bottom().mult(o);
    // Assign each leaf position to one child; children are the upper vertex's outputs in order.
    std::vector<int> f(n, 0);
    std::function<void(int)> assign = [&](int pos) {
      if (pos < n) {
        for (int c = 0; c < k; ++c) {
          f[pos] = c;
          assign(pos + 1);
        }
        return;
      }
      if (k == 0 && n > 0) return;
      std::vector<std::vector<int>> blocks(k);
      for (int i = 0; i < n; ++i) blocks[f[i]].push_back(i);
      std::vector<int> word;
      for (auto& b : blocks) word.insert(word.end(), b.begin(), b.end());
      int sign = word_sign(word, ppos);
      // Sum over children's homotopy classes with total beta fixed.
      std::function<void(int, std::vector<long>, Rational)> child = [&](int c, std::vector<long> beta_left, Rational acc) {
        if (c == k) {
          bool zero = std::all_of(beta_left.begin(), beta_left.end(), [&](long b) { return b == 0; });
          if (zero) a_sum += Rational(sign) * weight * acc;
          return;
        }
        std::vector<int> outs;
        for (int i : blocks[c]) outs.push_back(key.outs[i]);
        auto it = cob_by_in.find(uk.outs[c]);
        if (it == cob_by_in.end()) return;
        for (auto& [ck, cv] : it->second) {
          if (ck.outs != outs) continue;
          child(c + 1, beta_sub(beta_left, ck.beta), acc * cv);
        }
      };
      child(0, beta_sub(key.beta, uk.beta), Rational(1));
    };
    assign(0);
  }
  Rational b_sum = two_level_sum(cob, minus, key);
  return a_sum - b_sum;
}

// Keys reachable by one splitting from a flavor I table's support; keys whose outputs square to zero are skipped.
inline std::set<CountKey> residual_keys(const CountTable& t) {
  std::set<CountKey> keys;
  auto by_in = t.by_input();
  for (auto& [uk, uv] : t.entries)
    for (size_t p = 0; p < uk.outs.size(); ++p) {
      if (p && uk.outs[p] == uk.outs[p - 1]) continue;
      auto it = by_in.find(uk.outs[p]);
      if (it == by_in.end()) continue;
      for (auto& [lk, lv] : it->second) {
        std::vector<int> outs(uk.outs.begin(), uk.outs.end());
        outs.erase(outs.begin() + static_cast<long>(p));
        outs.insert(outs.end(), lk.outs.begin(), lk.outs.end());
        std::sort(outs.begin(), outs.end());
        if (has_odd_repeat(t, outs)) continue;
        keys.insert(CountKey{uk.in, outs, beta_add(uk.beta, lk.beta)});
      }
    }
  return keys;
}

inline std::set<CountKey> residual_keys(const CountTable& cob, const CountTable& plus, const CountTable& minus) {
  std::set<CountKey> keys;
  auto cob_in = cob.by_input();
  auto minus_in = minus.by_input();
  for (auto& [uk, uv] : plus.entries) {
    std::function<void(size_t, std::vector<int>, std::vector<long>)> rec = [&](size_t c, std::vector<int> outs,
                                                                               std::vector<long> beta) {
      if (c == uk.outs.size()) {
        std::sort(outs.begin(), outs.end());
        if (!has_odd_repeat(cob, outs)) keys.insert(CountKey{uk.in, outs, beta});
        return;
      }
      auto it = cob_in.find(uk.outs[c]);
      if (it == cob_in.end()) return;
      for (auto& [ck, cv] : it->second) {
        auto o = outs;
        o.insert(o.end(), ck.outs.begin(), ck.outs.end());
        rec(c + 1, o, beta_add(beta, ck.beta));
      }
    };
    rec(0, {}, uk.beta);
  }
  for (auto& [uk, uv] : cob.entries)
    for (size_t p = 0; p < uk.outs.size(); ++p) {
      auto it = minus_in.find(uk.outs[p]);
      if (it == minus_in.end()) continue;
      for (auto& [lk, lv] : it->second) {
        std::vector<int> outs(uk.outs.begin(), uk.outs.end());
        outs.erase(outs.begin() + static_cast<long>(p));
        outs.insert(outs.end(), lk.outs.begin(), lk.outs.end());
        std::sort(outs.begin(), outs.end());
        if (has_odd_repeat(cob, outs)) continue;
        keys.insert(CountKey{uk.in, outs, beta_add(uk.beta, lk.beta)});
      }
    }
  return keys;
}

struct ResidualReport {
  std::vector<std::pair<CountKey, Rational>> nonzero;
  size_t checked = 0;
  bool ok() const { return nonzero.empty(); }
};

inline ResidualReport all_residuals(const CountTable& t) {
  ResidualReport r;
  for (auto& k : residual_keys(t)) {
    ++r.checked;
    auto v = master_residual(t, k);
    if (v != 0) r.nonzero.push_back({k, v});
  }
  return r;
}

inline ResidualReport all_residuals(const CountTable& cob, const CountTable& plus, const CountTable& minus) {
  ResidualReport r;
  for (auto& k : residual_keys(cob, plus, minus)) {
    ++r.checked;
    auto v = master_residual(cob, plus, minus, k);
    if (v != 0) r.nonzero.push_back({k, v});
  }
  return r;
}

inline CountTable empty_table(Flavor f, std::vector<OrbitUniverse> levels, int beta_rank = 0) {
  CountTable t;
  t.flavor = f;
  t.levels = std::move(levels);
  t.beta_rank = beta_rank;
  return t;
}

}  // namespace sft
