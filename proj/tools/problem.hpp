#pragma once

// Problem files: UTF-8 JSON, schema "sft-chainlab/1". Every object is resolved here, so a command never sees a
// dangling name; any failure carries a location (line:column for syntax, a JSON pointer for the schema).

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sft/counts.hpp"
#include "sft/orbits.hpp"
#include "sft/trees.hpp"
#include "sft/vfc_algebra.hpp"

namespace chainlab {

using json = nlohmann::json;
using namespace sft;

inline constexpr const char* kSchema = "sft-chainlab/1";

struct ParseError : std::runtime_error {
  std::string where;
  ParseError(std::string w, const std::string& what) : std::runtime_error(what), where(std::move(w)) {}
};

struct TableSpec {
  std::string name, path;
  CountTable table;
  std::vector<std::string> levels;
  std::map<std::string, std::string> uses;
  bool trivial = false;
};

struct TreeSpec {
  std::string name, path;
  DecoratedTree tree;
  std::vector<std::string> levels;
  std::string table;
};

struct ModuleSpec {
  std::string name, path;
  SModule module;
  std::optional<std::vector<int>> subposet;
};

struct MapSpec {
  std::string name, path, source, target;
  std::vector<ChainMap> components;
};

struct Problem {
  std::optional<long> n;
  int homology_rank = 0;
  std::optional<Rational> action_bound;
  std::optional<uint64_t> seed;
  std::optional<int> samples;
  std::map<std::string, OrbitUniverse> universes;
  std::map<std::string, TableSpec> tables;
  std::map<std::string, TreeSpec> trees;
  std::map<std::string, ModuleSpec> modules;
  std::map<std::string, MapSpec> maps;
  std::vector<std::string> commands;

  TreeContext context(const TreeSpec& t) const {
    TreeContext c;
    for (auto& l : t.levels) c.levels.push_back(&universes.at(l));
    c.n = n;
    c.beta_rank = homology_rank;
    return c;
  }
};

// A JSON value together with its pointer, so every complaint names the spot.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError("#" + (path_.empty() ? "/" : path_), what); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }
  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!has(key)) fail("missing field '" + key + "'");
    return child(key);
  }
  std::optional<Node> opt(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!has(key)) return std::nullopt;
    return child(key);
  }
  std::vector<Node> items() const {
    if (!j_->is_array()) fail("expected an array");
    std::vector<Node> r;
    for (size_t i = 0; i < j_->size(); ++i) r.emplace_back((*j_)[i], path_ + "/" + std::to_string(i));
    return r;
  }
  std::vector<std::pair<std::string, Node>> fields() const {
    if (!j_->is_object()) fail("expected an object");
    std::vector<std::pair<std::string, Node>> r;
    for (auto it = j_->begin(); it != j_->end(); ++it) r.emplace_back(it.key(), child(it.key()));
    return r;
  }
  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (auto* a : allowed) ok = ok || it.key() == a;
      if (!ok) child(it.key()).fail("unknown field '" + it.key() + "'");
    }
  }

  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  Rational rational() const {
    if (j_->is_number_integer()) return make_rational(j_->get<long>());
    if (!j_->is_string()) fail("expected a rational as a \"p/q\" string");
    try {
      return parse_rational(j_->get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  std::vector<long> integers() const {
    std::vector<long> r;
    for (auto& x : items()) r.push_back(x.integer());
    return r;
  }

 private:
  Node child(const std::string& key) const { return Node((*j_)[key], path_ + "/" + key); }
  const json* j_;
  std::string path_;
};

namespace detail {

inline Flavor flavor(const Node& n) {
  auto s = n.str();
  if (s == "I") return Flavor::I;
  if (s == "II") return Flavor::II;
  if (s == "III") return Flavor::III;
  if (s == "IV") return Flavor::IV;
  n.fail("flavor must be one of I, II, III, IV");
}

inline SLabel s_label(const Node& n) {
  auto s = n.str();
  if (s == "none") return SLabel::None;
  if (s == "0") return SLabel::Zero;
  if (s == "1") return SLabel::One;
  if (s == "(0,1)") return SLabel::ZeroOne;
  if (s == "inf") return SLabel::Inf;
  if (s == "(0,inf)") return SLabel::ZeroInf;
  n.fail("s must be one of none, 0, 1, (0,1), inf, (0,inf)");
}

inline size_t level_count(Flavor f) { return f == Flavor::I ? 1 : f == Flavor::IV ? 3 : 2; }

inline OrbitUniverse universe(const Node& u, std::optional<long> n, int rank) {
  u.only({"seeds", "orbits"});
  std::map<std::string, SimpleOrbitSeed> seeds;
  for (auto& s : u.at("seeds").items()) {
    s.only({"name", "action", "parity", "m", "cz", "h1"});
    SimpleOrbitSeed seed;
    seed.name = s.at("name").str();
    seed.action = s.at("action").rational();
    if (seed.action <= 0) s.at("action").fail("orbit action must be positive");
    seed.parity = s.opt("parity") ? static_cast<int>(s.at("parity").integer()) : 0;
    seed.m = s.opt("m") ? static_cast<int>(s.at("m").integer()) : 0;
    if (seed.parity != 0 && seed.parity != 1) s.at("parity").fail("parity must be 0 or 1");
    if (seed.m != 0 && seed.m != 1) s.at("m").fail("m must be 0 or 1");
    if (auto cz = s.opt("cz")) seed.cz = cz->integer();
    seed.h1 = s.opt("h1") ? s.at("h1").integers() : std::vector<long>(rank, 0);
    if (static_cast<int>(seed.h1.size()) != rank)
      s.at("h1").fail("h1 must have homology_rank = " + std::to_string(rank) + " entries");
    if (!seeds.emplace(seed.name, seed).second) s.at("name").fail("duplicate seed name '" + seed.name + "'");
  }
  std::vector<ReebOrbit> orbits;
  std::set<std::string> names;
  auto add = [&](ReebOrbit o, const Node& where) {
    if (!names.insert(o.name).second) where.fail("duplicate orbit name '" + o.name + "'");
    orbits.push_back(std::move(o));
  };
  if (auto os = u.opt("orbits")) {
    for (auto& o : os->items()) {
      o.only({"seed", "k", "name", "cz"});
      auto sn = o.at("seed").str();
      auto it = seeds.find(sn);
      if (it == seeds.end()) o.at("seed").fail("unknown seed '" + sn + "'");
      long k = o.opt("k") ? o.at("k").integer() : 1;
      if (k < 1) o.at("k").fail("covering multiplicity must be >= 1");
      std::optional<long> cz;
      if (auto c = o.opt("cz")) cz = c->integer();
      add(make_orbit(it->second, static_cast<int>(k), o.opt("name") ? o.at("name").str() : std::string{}, cz), o);
    }
  } else {
    for (auto& [name, seed] : seeds) add(make_orbit(seed), u.at("seeds"));
  }
  return OrbitUniverse(std::move(orbits), n);
}

inline int orbit_id(const OrbitUniverse& u, const Node& n) {
  auto name = n.str();
  if (!u.contains(name)) n.fail("unknown orbit '" + name + "'");
  return u.id(name);
}

inline CountKey count_key(const CountTable& t, const Node& e, int rank, int& sign) {
  int in = orbit_id(t.top(), e.at("in"));
  std::vector<int> outs;
  if (auto os = e.opt("outs"))
    for (auto& o : os->items()) outs.push_back(orbit_id(t.bottom(), o));
  std::vector<long> beta = e.opt("beta") ? e.at("beta").integers() : std::vector<long>(rank, 0);
  if (static_cast<int>(beta.size()) != rank) e.at("beta").fail("beta must have homology_rank entries");
  return t.normalize(in, std::move(outs), std::move(beta), sign);
}

// Matrix rows of rationals; an absent matrix is zero.
inline Matrix matrix(const Node& n, size_t rows, size_t cols) {
  Matrix m(rows, cols);
  auto rs = n.items();
  if (rs.size() != rows) n.fail("expected " + std::to_string(rows) + " rows");
  for (size_t i = 0; i < rows; ++i) {
    auto cs = rs[i].items();
    if (cs.size() != cols) rs[i].fail("expected " + std::to_string(cols) + " columns");
    for (size_t j = 0; j < cols; ++j) m(i, j) = cs[j].rational();
  }
  return m;
}

inline int degree_key(const Node& where, const std::string& k) {
  try {
    size_t used = 0;
    int d = std::stoi(k, &used);
    if (used == k.size()) return d;
  } catch (const std::exception&) {
  }
  where.fail("degree keys must be integers, got '" + k + "'");
}

inline ChainComplex complex(const Node& n) {
  n.only({"lo", "dims", "d"});
  int lo = n.opt("lo") ? static_cast<int>(n.at("lo").integer()) : 0;
  std::vector<size_t> dims;
  for (auto& x : n.at("dims").items()) {
    long d = x.integer();
    if (d < 0) x.fail("dimensions are nonnegative");
    dims.push_back(static_cast<size_t>(d));
  }
  auto dim = [&](int k) { return k < lo || k >= lo + static_cast<int>(dims.size()) ? size_t{0} : dims[k - lo]; };
  std::vector<Matrix> d;
  for (size_t i = 0; i < dims.size(); ++i) d.emplace_back(dim(lo + static_cast<int>(i) - 1), dims[i]);
  if (auto ds = n.opt("d"))
    for (auto& [k, m] : ds->fields()) {
      int deg = degree_key(m, k);
      if (deg < lo || deg >= lo + static_cast<int>(dims.size())) m.fail("degree outside the window");
      d[deg - lo] = matrix(m, dim(deg - 1), dim(deg));
    }
  try {
    return ChainComplex::from_dims(lo, dims, std::move(d));
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

inline ChainMap chain_map(const Node& n, const ChainComplex& src, const ChainComplex& tgt) {
  std::map<int, Matrix> comp;
  int lo = std::min(src.lo(), tgt.lo()), hi = std::max(src.hi(), tgt.hi());
  for (int k = lo; k <= hi; ++k) comp[k] = Matrix(tgt.dim(k), src.dim(k));
  for (auto& [k, m] : n.fields()) {
    int deg = degree_key(m, k);
    comp[deg] = matrix(m, tgt.dim(deg), src.dim(deg));
  }
  return ChainMap(src, tgt, std::move(comp), false);
}

inline int object_id(const std::map<std::string, int>& ids, const Node& n) {
  auto s = n.str();
  auto it = ids.find(s);
  if (it == ids.end()) n.fail("unknown object '" + s + "'");
  return it->second;
}

}  // namespace detail

inline void parse_table(Problem& p, const Node& n) {
  n.only({"name", "flavor", "levels", "uses", "trivial", "entries", "disconnected"});
  TableSpec s;
  s.name = n.at("name").str();
  s.path = n.path();
  Flavor f = detail::flavor(n.at("flavor"));
  std::vector<OrbitUniverse> levels;
  for (auto& l : n.at("levels").items()) {
    auto name = l.str();
    if (!p.universes.count(name)) l.fail("unknown universe '" + name + "'");
    s.levels.push_back(name);
    levels.push_back(p.universes.at(name));
  }
  if (levels.size() != detail::level_count(f))
    n.at("levels").fail("flavor " + std::string(flavor_name(f)) + " needs " +
                        std::to_string(detail::level_count(f)) + " universes");
  s.table = empty_table(f, levels, p.homology_rank);
  s.trivial = n.opt("trivial") ? n.at("trivial").boolean() : false;
  if (s.trivial && (f != Flavor::II || s.levels[0] != s.levels[1]))
    n.at("trivial").fail("a trivial cobordism is a flavor II table from a universe to itself");
  if (auto es = n.opt("entries"))
    for (auto& e : es->items()) {
      e.only({"in", "outs", "beta", "value"});
      int sign = 1;
      auto k = detail::count_key(s.table, e, p.homology_rank, sign);
      if (s.table.entries.count(k)) e.fail("duplicate entry " + key_string(s.table, k));
      auto v = e.at("value").rational();
      if (v != 0) s.table.entries[k] = v * sign;
    }
  if (auto ds = n.opt("disconnected")) {
    if (f != Flavor::III && f != Flavor::IV) ds->fail("disconnected counts belong to flavors III and IV");
    for (auto& d : ds->items()) {
      d.only({"components", "value"});
      std::vector<CountKey> ks;
      int sign = 1;
      for (auto& c : d.at("components").items()) {
        c.only({"in", "outs", "beta"});
        int s1 = 1;
        ks.push_back(detail::count_key(s.table, c, p.homology_rank, s1));
        sign *= s1;
      }
      if (ks.size() < 2) d.at("components").fail("a disconnected count has at least two components");
      auto v = d.at("value").rational();
      if (v != 0) s.table.disconnected[ks] = v * sign;
    }
  }
  if (auto u = n.opt("uses"))
    for (auto& [role, ref] : u->fields()) s.uses[role] = ref.str();
  if (!p.tables.emplace(s.name, std::move(s)).second) n.at("name").fail("duplicate table name");
}

// Role references must name tables of the right flavor over the right universes.
inline void resolve_uses(const Problem& p, const TableSpec& s) {
  struct Need {
    const char* role;
    Flavor f;
    std::vector<int> levels;
  };
  std::vector<Need> need;
  switch (s.table.flavor) {
    case Flavor::I: break;
    case Flavor::II: need = {{"plus", Flavor::I, {0}}, {"minus", Flavor::I, {1}}}; break;
    case Flavor::III:
      need = {{"plus", Flavor::I, {0}}, {"minus", Flavor::I, {1}}, {"start", Flavor::II, {0, 1}}, {"end", Flavor::II, {0, 1}}};
      break;
    case Flavor::IV:
      need = {{"t0", Flavor::I, {0}},          {"t1", Flavor::I, {1}},          {"t2", Flavor::I, {2}},
              {"cob01", Flavor::II, {0, 1}}, {"cob12", Flavor::II, {1, 2}}, {"cob02", Flavor::II, {0, 2}}};
      break;
  }
  for (auto& [role, ref] : s.uses) {
    bool known = false;
    for (auto& x : need) known = known || role == x.role;
    if (!known) throw ParseError("#" + s.path + "/uses/" + role, "unknown role '" + role + "'");
  }
  for (auto& x : need) {
    std::string where = "#" + s.path + "/uses/" + x.role;
    auto it = s.uses.find(x.role);
    if (it == s.uses.end())
      throw ParseError("#" + s.path + "/uses", "flavor " + std::string(flavor_name(s.table.flavor)) + " table needs '" +
                                                    x.role + "'");
    auto t = p.tables.find(it->second);
    if (t == p.tables.end()) throw ParseError(where, "unknown table '" + it->second + "'");
    if (t->second.table.flavor != x.f)
      throw ParseError(where, "'" + it->second + "' must be a flavor " + flavor_name(x.f) + " table");
    for (size_t i = 0; i < x.levels.size(); ++i)
      if (t->second.levels[i] != s.levels[x.levels[i]])
        throw ParseError(where, "'" + it->second + "' is over the wrong universes");
  }
}

inline void parse_tree(Problem& p, const Node& n) {
  n.only({"name", "flavor", "s", "levels", "vertices", "edges", "table"});
  TreeSpec s;
  s.name = n.at("name").str();
  s.path = n.path();
  auto& t = s.tree;
  t.flavor = detail::flavor(n.at("flavor"));
  t.s = n.opt("s") ? detail::s_label(n.at("s")) : SLabel::None;
  for (auto& l : n.at("levels").items()) {
    auto name = l.str();
    if (!p.universes.count(name)) l.fail("unknown universe '" + name + "'");
    s.levels.push_back(name);
  }
  if (s.levels.size() != detail::level_count(t.flavor)) n.at("levels").fail("wrong number of universes for the flavor");
  for (auto& v : n.at("vertices").items()) {
    v.only({"beta", "lp", "lm"});
    Vertex x;
    x.beta = v.opt("beta") ? v.at("beta").integers() : std::vector<long>(p.homology_rank, 0);
    x.lp = v.opt("lp") ? static_cast<int>(v.at("lp").integer()) : 0;
    x.lm = v.opt("lm") ? static_cast<int>(v.at("lm").integer()) : x.lp;
    t.vertices.push_back(x);
  }
  for (auto& e : n.at("edges").items()) {
    e.only({"src", "dst", "orbit", "level", "basepoint"});
    Edge x;
    x.src = e.opt("src") ? static_cast<int>(e.at("src").integer()) : -1;
    x.dst = e.opt("dst") ? static_cast<int>(e.at("dst").integer()) : -1;
    for (int v : {x.src, x.dst})
      if (v < -1 || v >= t.nv()) e.fail("vertex index out of range");
    x.level = e.opt("level") ? static_cast<int>(e.at("level").integer()) : 0;
    if (x.level < 0 || x.level >= static_cast<int>(s.levels.size())) e.at("level").fail("level out of range");
    x.orbit = detail::orbit_id(p.universes.at(s.levels[x.level]), e.at("orbit"));
    x.basepoint = e.opt("basepoint") ? e.at("basepoint").integer() : 0;
    t.edges.push_back(x);
  }
  if (auto tb = n.opt("table")) {
    s.table = tb->str();
    auto it = p.tables.find(s.table);
    if (it == p.tables.end()) tb->fail("unknown table '" + s.table + "'");
    if (it->second.table.flavor != t.flavor) tb->fail("table flavor differs from the tree flavor");
    if (it->second.levels != s.levels) tb->fail("table and tree use different universes");
  }
  if (!p.trees.emplace(s.name, std::move(s)).second) n.at("name").fail("duplicate tree name");
}

inline void parse_module(Problem& p, const Node& n) {
  n.only({"name", "objects", "order", "values", "push", "subposet"});
  ModuleSpec s;
  s.name = n.at("name").str();
  s.path = n.path();
  std::vector<std::string> names;
  std::map<std::string, int> ids;
  for (auto& o : n.at("objects").items()) {
    auto name = o.str();
    if (!ids.emplace(name, static_cast<int>(names.size())).second) o.fail("duplicate object '" + name + "'");
    names.push_back(name);
  }
  int k = static_cast<int>(names.size());
  std::vector<std::vector<char>> le(k, std::vector<char>(k, 0));
  for (int i = 0; i < k; ++i) le[i][i] = 1;
  if (auto order = n.opt("order"))
    for (auto& r : order->items()) {
      auto pair = r.items();
      if (pair.size() != 2) r.fail("an order relation is a pair [a, b] meaning a <= b");
      le[detail::object_id(ids, pair[0])][detail::object_id(ids, pair[1])] = 1;
    }
  for (int m = 0; m < k; ++m)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (le[i][m] && le[m][j]) le[i][j] = 1;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (le[i][j] && le[j][i]) n.at("order").fail("the order has a cycle through '" + names[i] + "'");
  auto& M = s.module;
  M.poset = FiniteCategory::poset(names, [&](int a, int b) { return le[a][b] != 0; });
  auto values = n.at("values");
  for (auto& name : names) {
    auto v = values.opt(name);
    if (!v) values.fail("no value for object '" + name + "'");
    M.value.push_back(detail::complex(*v));
  }
  std::map<std::pair<int, int>, ChainMap> given;
  if (auto ps = n.opt("push"))
    for (auto& e : ps->items()) {
      e.only({"from", "to", "maps"});
      int a = detail::object_id(ids, e.at("from")), b = detail::object_id(ids, e.at("to"));
      if (a == b || !le[a][b]) e.fail("no relation " + names[a] + " < " + names[b]);
      if (given.count({a, b})) e.fail("duplicate pushforward");
      given.emplace(std::make_pair(a, b), detail::chain_map(e.at("maps"), M.value[a], M.value[b]));
    }
  // Pushforwards not given are composed from given ones through intermediate objects.
  bool grew = true;
  while (grew) {
    grew = false;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        if (a == b || !le[a][b] || given.count({a, b})) continue;
        for (int c = 0; c < k; ++c)
          if (given.count({a, c}) && given.count({c, b})) {
            given.emplace(std::make_pair(a, b), compose(given.at({c, b}), given.at({a, c})));
            grew = true;
            break;
          }
      }
  }
  for (int m = 0; m < static_cast<int>(M.poset.morphisms.size()); ++m) {
    if (M.poset.is_identity(m)) continue;
    int a = M.poset.morphisms[m].src, b = M.poset.morphisms[m].tgt;
    auto it = given.find({a, b});
    if (it == given.end()) n.fail("no pushforward for " + names[a] + " < " + names[b]);
    M.push.emplace(m, it->second);
  }
  if (auto sub = n.opt("subposet")) {
    std::vector<int> objs;
    for (auto& o : sub->items()) objs.push_back(detail::object_id(ids, o));
    std::sort(objs.begin(), objs.end());
    objs.erase(std::unique(objs.begin(), objs.end()), objs.end());
    s.subposet = objs;
  }
  if (!p.modules.emplace(s.name, std::move(s)).second) n.at("name").fail("duplicate module name");
}

inline void parse_map(Problem& p, const Node& n) {
  n.only({"name", "source", "target", "components"});
  MapSpec s;
  s.name = n.at("name").str();
  s.path = n.path();
  s.source = n.at("source").str();
  s.target = n.at("target").str();
  auto src = p.modules.find(s.source), tgt = p.modules.find(s.target);
  if (src == p.modules.end()) n.at("source").fail("unknown module '" + s.source + "'");
  if (tgt == p.modules.end()) n.at("target").fail("unknown module '" + s.target + "'");
  const auto& X = src->second.module;
  const auto& Y = tgt->second.module;
  if (X.poset.objects != Y.poset.objects || X.poset.morphisms.size() != Y.poset.morphisms.size())
    n.fail("source and target live over different posets");
  auto comps = n.at("components");
  for (int x = 0; x < X.poset.size(); ++x) {
    auto c = comps.opt(X.poset.objects[x]);
    if (!c) comps.fail("no component at '" + X.poset.objects[x] + "'");
    s.components.push_back(detail::chain_map(*c, X.value[x], Y.value[x]));
  }
  if (!p.maps.emplace(s.name, std::move(s)).second) n.at("name").fail("duplicate map name");
}

inline Problem parse_problem(const json& j) {
  Node root(j, "");
  if (!j.is_object()) root.fail("a problem file is a JSON object");
  root.only({"schema", "n", "homology_rank", "action_bound", "seed", "samples", "universes", "tables", "trees",
             "modules", "maps", "commands"});
  auto schema = root.at("schema").str();
  if (schema != kSchema) root.at("schema").fail("unsupported schema '" + schema + "', expected " + kSchema);
  Problem p;
  if (auto n = root.opt("n")) p.n = n->integer();
  if (auto r = root.opt("homology_rank")) {
    p.homology_rank = static_cast<int>(r->integer());
    if (p.homology_rank < 0) r->fail("homology_rank is nonnegative");
  }
  if (auto a = root.opt("action_bound")) p.action_bound = a->rational();
  if (auto s = root.opt("seed")) {
    if (!s->raw().is_number_unsigned()) s->fail("seed is a nonnegative integer");
    p.seed = s->raw().get<uint64_t>();
  }
  if (auto s = root.opt("samples")) {
    p.samples = static_cast<int>(s->integer());
    if (*p.samples < 0) s->fail("samples is nonnegative");
  }
  if (auto us = root.opt("universes"))
    for (auto& [name, u] : us->fields()) p.universes.emplace(name, detail::universe(u, p.n, p.homology_rank));
  if (auto ts = root.opt("tables"))
    for (auto& t : ts->items()) parse_table(p, t);
  for (auto& [name, t] : p.tables) resolve_uses(p, t);
  if (auto ts = root.opt("trees"))
    for (auto& t : ts->items()) parse_tree(p, t);
  if (auto ms = root.opt("modules"))
    for (auto& m : ms->items()) parse_module(p, m);
  if (auto ms = root.opt("maps"))
    for (auto& m : ms->items()) parse_map(p, m);
  if (auto cs = root.opt("commands"))
    for (auto& c : cs->items()) p.commands.push_back(c.str());
  return p;
}

// Syntax errors are located by line and column of the offending byte.
inline Problem load_problem(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t pos = e.byte ? e.byte - 1 : 0, line = 1, col = 1;
    for (size_t i = 0; i < pos && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    auto cut = what.find("syntax error");
    throw ParseError(file + ":" + std::to_string(line) + ":" + std::to_string(col),
                     cut == std::string::npos ? what : what.substr(cut));
  }
  try {
    return parse_problem(j);
  } catch (ParseError& e) {
    e.where = file + e.where;
    throw;
  }
}

}  // namespace chainlab
