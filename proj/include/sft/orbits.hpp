#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sft/errors.hpp"
#include "sft/rational.hpp"

namespace sft {

struct SimpleOrbitSeed {
  std::string name;
  Rational action = 1;
  int parity = 0;  // |gamma| of the simple orbit
  int m = 0;       // parity of the number of eigenvalues of the return map in (-1, 0)
  std::optional<long> cz;
  std::vector<long> h1;  // homology class in the declared free abelian group
};

inline int cover_parity(const SimpleOrbitSeed& seed, int k) {
  if (k < 1) throw InvalidInput("covering multiplicity must be >= 1");
  return ((seed.parity + (k + 1) * seed.m) % 2 + 2) % 2;
}

struct ReebOrbit {
  SimpleOrbitSeed seed;
  int k = 1;
  std::string name;
  std::optional<long> cz;  // overrides the seed value; required for k > 1 when an integer index is needed

  Rational action() const { return seed.action * k; }
  int parity() const { return cover_parity(seed, k); }
  int multiplicity() const { return k; }
  bool bad() const { return k % 2 == 0 && (seed.m & 1); }
  std::optional<long> cz_index() const {
    if (cz) return cz;
    if (k == 1) return seed.cz;
    return std::nullopt;
  }
  std::vector<long> homology() const {
    std::vector<long> h = seed.h1;
    for (auto& x : h) x *= k;
    return h;
  }
};

inline ReebOrbit make_orbit(const SimpleOrbitSeed& seed, int k = 1, std::string name = {},
                            std::optional<long> cz = std::nullopt) {
  if (k < 1) throw InvalidInput("covering multiplicity must be >= 1");
  if (seed.action <= 0) throw InvalidInput("orbit action must be positive: " + seed.name);
  if (name.empty()) name = k == 1 ? seed.name : seed.name + "^" + std::to_string(k);
  return ReebOrbit{seed, k, std::move(name), cz};
}

inline bool is_bad(const ReebOrbit& o) { return o.bad(); }

// Action of a rotation r in Z/d on the orientation line of o.
inline int sign_action(const ReebOrbit& o, long rotation) {
  long r = ((rotation % o.k) + o.k) % o.k;
  long e = static_cast<long>(o.k - 1) * (o.seed.m & 1) * r;
  return (e % 2) ? -1 : 1;
}

// A chosen generator of the orientation line of a good orbit. Only the sign calculus is modelled.
struct OrientationLineModel {
  ReebOrbit orbit;
  int generator = 1;  // +1 or -1 relative to the reference choice
  int parity() const { return orbit.parity(); }
  int act(long rotation) const { return sign_action(orbit, rotation); }
};

class OrbitUniverse {
 public:
  OrbitUniverse() = default;

  OrbitUniverse(std::vector<ReebOrbit> orbits, std::optional<long> n = std::nullopt) : n_(n) {
    std::sort(orbits.begin(), orbits.end(), [](const ReebOrbit& a, const ReebOrbit& b) { return a.name < b.name; });
    for (size_t i = 0; i < orbits.size(); ++i) {
      if (orbits[i].k < 1) throw InvalidInput("covering multiplicity must be >= 1: " + orbits[i].name);
      if (orbits[i].seed.action <= 0) throw InvalidInput("orbit action must be positive: " + orbits[i].name);
      if (i && orbits[i].name == orbits[i - 1].name) throw InvalidInput("duplicate orbit name: " + orbits[i].name);
      id_[orbits[i].name] = static_cast<int>(i);
    }
    orbits_ = std::move(orbits);
  }

  size_t size() const { return orbits_.size(); }
  const ReebOrbit& operator[](int id) const { return orbits_.at(id); }
  const std::vector<ReebOrbit>& orbits() const { return orbits_; }
  std::optional<long> n() const { return n_; }

  int id(const std::string& name) const {
    auto it = id_.find(name);
    if (it == id_.end()) throw MissingOrbit("unknown orbit '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return id_.count(name) > 0; }

  int parity(int id) const { return orbits_.at(id).parity(); }
  int mult(int id) const { return orbits_.at(id).k; }
  Rational action(int id) const { return orbits_.at(id).action(); }
  bool bad(int id) const { return orbits_.at(id).bad(); }

  // |gamma| = CZ + n - 3 as an integer grading when available.
  std::optional<long> grading(int id) const {
    auto cz = orbits_.at(id).cz_index();
    if (!cz || !n_) return std::nullopt;
    return *cz + *n_ - 3;
  }

  std::vector<int> good_ids() const {
    std::vector<int> g;
    for (size_t i = 0; i < orbits_.size(); ++i)
      if (!orbits_[i].bad()) g.push_back(static_cast<int>(i));
    return g;
  }

  // Parity consistency |gamma| = CZ + n - 3 (mod 2) wherever both sides are known.
  std::vector<std::string> validate() const {
    std::vector<std::string> v;
    for (size_t i = 0; i < orbits_.size(); ++i) {
      auto g = grading(static_cast<int>(i));
      if (g && (((*g % 2) + 2) % 2) != orbits_[i].parity())
        v.push_back("cz_parity_mismatch:" + orbits_[i].name);
    }
    return v;
  }

 private:
  std::vector<ReebOrbit> orbits_;
  std::map<std::string, int> id_;
  std::optional<long> n_;
};

}  // namespace sft
