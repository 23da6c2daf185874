#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "problem.hpp"
#include "report.hpp"
#include "sft/counts.hpp"
#include "sft/dga.hpp"
#include "sft/glue_params.hpp"
#include "sft/strata.hpp"
#include "sft/trees.hpp"
#include "sft/vfc_algebra.hpp"

using namespace chainlab;

namespace {

struct Options {
  std::string file;
  int jobs = 1;
  std::string json_path;
  std::string below;
  std::optional<int> samples;
  std::optional<uint64_t> seed;
  std::string tree, table, module;
  std::string csv_dir;
};

using Builder = std::function<std::vector<Task>(const Problem&, const Options&)>;

Rational action_bound(const Problem& p, const Options& o) {
  if (!o.below.empty()) {
    try {
      return parse_rational(o.below);
    } catch (const Error& e) {
      throw ParseError("--below", e.what());
    }
  }
  if (p.action_bound) return *p.action_bound;
  throw ParseError(o.file + "#/action_bound", "no action bound: pass --below or set action_bound");
}

json witness_json(const OrbitUniverse& out, const CheckResult& r) {
  const auto& w = *r.witness;
  return {{"input", w.where}, {"monomial", monomial_string(out, w.monomial)}, {"coefficient", str(w.coefficient)}};
}

std::string witness_text(const OrbitUniverse& out, const CheckResult& r, const std::string& what) {
  const auto& w = *r.witness;
  return what + "(" + w.where + ") has coefficient " + str(w.coefficient) + " on " + monomial_string(out, w.monomial);
}

void report_check(Section& s, const std::string& id, const CheckResult& r, const OrbitUniverse& out,
                  const std::string& what, const std::string& unit) {
  if (r.ok) s.pass(id, "identity holds on " + std::to_string(r.checked) + " " + unit);
  else s.fail(id, witness_text(out, r, what), witness_json(out, r));
}

const TableSpec& used(const Problem& p, const TableSpec& t, const std::string& role) { return p.tables.at(t.uses.at(role)); }

std::vector<const TableSpec*> tables_of(const Problem& p, const Options& o, std::initializer_list<Flavor> flavors) {
  std::vector<const TableSpec*> r;
  if (!o.table.empty()) {
    auto it = p.tables.find(o.table);
    if (it == p.tables.end()) throw ParseError("--table", "unknown table '" + o.table + "'");
    for (Flavor f : flavors)
      if (it->second.table.flavor == f) r.push_back(&it->second);
    if (r.empty())
      throw ParseError("--table", "'" + o.table + "' is a flavor " + flavor_name(it->second.table.flavor) +
                                      " table, which this command does not take");
    return r;
  }
  for (auto& [name, t] : p.tables)
    for (Flavor f : flavors)
      if (t.table.flavor == f) r.push_back(&t);
  return r;
}

std::vector<const TreeSpec*> trees_of(const Problem& p, const Options& o) {
  std::vector<const TreeSpec*> r;
  if (!o.tree.empty()) {
    auto it = p.trees.find(o.tree);
    if (it == p.trees.end()) throw ParseError("--tree", "unknown tree '" + o.tree + "'");
    r.push_back(&it->second);
    return r;
  }
  for (auto& [name, t] : p.trees) r.push_back(&t);
  return r;
}

std::vector<const ModuleSpec*> modules_of(const Problem& p, const Options& o) {
  std::vector<const ModuleSpec*> r;
  if (!o.module.empty()) {
    auto it = p.modules.find(o.module);
    if (it == p.modules.end()) throw ParseError("--module", "unknown module '" + o.module + "'");
    r.push_back(&it->second);
    return r;
  }
  for (auto& [name, m] : p.modules) r.push_back(&m);
  return r;
}

// ---- validate ----

std::vector<Task> validate_tasks(const Problem& p, const Options&) {
  std::vector<Task> tasks;
  for (auto& [name, u] : p.universes)
    tasks.push_back({"orbits.universe", "universe " + name, [&u = u](Section& s) {
                       size_t bad = u.size() - u.good_ids().size();
                       auto v = u.validate();
                       s.data = {{"orbits", u.size()}, {"bad", bad}};
                       s.check(v.empty(), "orbits.universe",
                               v.empty() ? std::to_string(u.size()) + " orbits, " + std::to_string(bad) + " bad"
                                         : v.front(),
                               v.empty() ? json() : json(v));
                     }});
  for (auto& [name, t] : p.tables)
    tasks.push_back({"counts.table", "table " + name, [&t = t](Section& s) {
                       auto v = validate_counts(t.table);
                       s.data = {{"flavor", flavor_name(t.table.flavor)}, {"entries", t.table.entries.size()}};
                       s.check(v.empty(), "counts.table",
                               v.empty() ? "flavor " + std::string(flavor_name(t.table.flavor)) + ", " +
                                               std::to_string(t.table.entries.size()) + " entries"
                                         : v.front(),
                               v.empty() ? json() : json(v));
                     }});
  for (auto& [name, t] : p.trees)
    tasks.push_back({"trees.tree", "tree " + name, [&p, &t = t](Section& s) {
                       auto ctx = p.context(t);
                       auto v = validate(t.tree, &ctx);
                       if (!v.empty()) {
                         s.fail("trees.tree", v.front(), json(v));
                         return;
                       }
                       std::string d = std::to_string(t.tree.nv()) + " vertices, codim " + std::to_string(codim(t.tree));
                       s.data = {{"vertices", t.tree.nv()}, {"codim", codim(t.tree)}};
                       try {
                         long mu = index(t.tree, ctx);
                         d += ", index " + std::to_string(mu) + ", vdim " + std::to_string(vdim(t.tree, ctx));
                         s.data["index"] = mu;
                       } catch (const MissingData&) {
                       }
                       s.pass("trees.tree", d);
                     }});
  for (auto& [name, m] : p.modules)
    tasks.push_back({"vfc_algebra.module", "module " + name, [&m = m](Section& s) {
                       m.module.check();
                       s.pass("vfc_algebra.module", std::to_string(m.module.poset.size()) + " objects, " +
                                                        std::to_string(m.module.push.size()) + " pushforwards");
                     }});
  for (auto& [name, f] : p.maps)
    tasks.push_back({"vfc_algebra.map", "map " + name, [&p, &f = f](Section& s) {
                       const auto& X = p.modules.at(f.source).module;
                       const auto& Y = p.modules.at(f.target).module;
                       for (size_t x = 0; x < f.components.size(); ++x)
                         if (auto k = f.components[x].first_noncommuting_degree()) {
                           s.fail("vfc_algebra.map", "component at " + X.poset.objects[x] +
                                                         " is not a chain map in degree " + std::to_string(*k));
                           return;
                         }
                       auto why = naturality_failure(X, Y, f.components);
                       s.check(!why, "vfc_algebra.map", why ? *why : "natural " + f.source + " -> " + f.target);
                     }});
  return tasks;
}

// ---- counts and the algebra ----

std::vector<Task> residual_tasks(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::I, Flavor::II})) {
    tasks.push_back({"counts.master_residual", "table " + t->name, [&p, t](Section& s) {
                       auto r = t->table.flavor == Flavor::I
                                    ? all_residuals(t->table)
                                    : all_residuals(t->table, used(p, *t, "plus").table, used(p, *t, "minus").table);
                       s.data = {{"checked", r.checked}, {"nonzero", r.nonzero.size()}};
                       if (r.ok()) {
                         s.pass("counts.master_residual", std::to_string(r.checked) + " keys, all residuals vanish");
                         return;
                       }
                       json w = json::array();
                       for (auto& [k, v] : r.nonzero) w.push_back({{"key", key_string(t->table, k)}, {"residual", str(v)}});
                       auto& [k0, v0] = r.nonzero.front();
                       s.fail("counts.master_residual",
                              "residual " + str(v0) + " at " + key_string(t->table, k0) + " (" +
                                  std::to_string(r.nonzero.size()) + " of " + std::to_string(r.checked) + " keys)",
                              w);
                     }});
  }
  return tasks;
}

std::vector<Task> d2_tasks(const Problem& p, const Options& o) {
  Rational a = action_bound(p, o);
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::I})) {
    tasks.push_back({"dga.d_squared", "table " + t->name, [t, a](Section& s) {
                       auto r = verify_d_squared(t->table, a);
                       s.data = {{"bound", str(a)}, {"checked", r.checked}, {"ok", r.ok}};
                       if (r.ok) s.pass("dga.d_squared", "d^2 = 0 on " + std::to_string(r.checked) + " generators below " + str(a));
                       else s.fail("dga.d_squared", witness_text(t->table.top(), r, "d^2"), witness_json(t->table.top(), r));
                     }});
  }
  return tasks;
}

std::vector<Task> homology_tasks(const Problem& p, const Options& o) {
  Rational a = action_bound(p, o);
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::I})) {
    tasks.push_back({"dga.homology", "table " + t->name, [t, a](Section& s) {
                       auto h = homology_below(t->table, a);
                       std::string d = std::string("unit exact: ") + (h.unit_is_exact ? "true" : "false") + "; CH^{<" +
                                       str(a) + "}";
                       if (h.even + h.odd == 0) d += " = 0";
                       else d += ": even " + std::to_string(h.even) + ", odd " + std::to_string(h.odd);
                       if (!h.by_degree.empty()) d += ", by degree " + histogram(h.by_degree);
                       s.data = {{"bound", str(a)},         {"basis_size", h.basis_size},
                                 {"even", h.even},          {"odd", h.odd},
                                 {"unit_is_exact", h.unit_is_exact}, {"by_degree", histogram_json(h.by_degree)}};
                       s.pass("dga.homology", d);
                     }});
  }
  return tasks;
}

std::vector<Task> cobordism_tasks(const Problem& p, const Options& o) {
  Rational a = action_bound(p, o);
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::II})) {
    tasks.push_back({"dga.chain_map", "table " + t->name, [&p, t, a](Section& s) {
                       const auto& plus = used(p, *t, "plus").table;
                       const auto& minus = used(p, *t, "minus").table;
                       auto r = verify_chain_map(t->table, plus, minus, a);
                       s.data = {{"bound", str(a)}, {"chain_map", r.ok}};
                       report_check(s, "dga.chain_map", r, minus.top(), "d_- Phi - Phi d_+", "generators");
                       if (!t->trivial) return;
                       CCAlgebra ap(plus.top()), am(minus.top());
                       auto f = filtered_matrix(cobordism_map(t->table, ap, am), a);
                       auto iso = trivial_cobordism_check(f);
                       s.data["filtered_iso"] = iso.is_iso;
                       if (iso.is_iso)
                         s.pass("dga.trivial_cobordism",
                                "filtered isomorphism on " + std::to_string(f.phi.cols()) + " basis elements below " + str(a));
                       else
                         s.fail("dga.trivial_cobordism",
                                "diagonal block " + std::to_string(iso.singular_block->first) + " is singular",
                                {{"block", iso.singular_block->first}, {"row", iso.singular_block->second}});
                     }});
  }
  return tasks;
}

std::vector<Task> homotopy_tasks(const Problem& p, const Options& o) {
  Rational a = action_bound(p, o);
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::III})) {
    tasks.push_back({"dga.homotopy", "table " + t->name, [&p, t, a](Section& s) {
                       const auto& plus = used(p, *t, "plus").table;
                       const auto& minus = used(p, *t, "minus").table;
                       CCAlgebra ap(plus.top()), am(minus.top());
                       auto start = cobordism_map(used(p, *t, "start").table, ap, am);
                       auto end = cobordism_map(used(p, *t, "end").table, ap, am);
                       auto r = verify_homotopy(homotopy_generators(t->table, am), start, end, differential(plus, ap),
                                                differential(minus, am), a);
                       s.data = {{"bound", str(a)}, {"ok", r.ok}};
                       report_check(s, "dga.homotopy", r, minus.top(), "Phi_end - Phi_start - d_- K - K d_+",
                                    "monomials");
                     }});
  }
  return tasks;
}

std::vector<Task> compose_tasks(const Problem& p, const Options& o) {
  Rational a = action_bound(p, o);
  std::vector<Task> tasks;
  for (auto* t : tables_of(p, o, {Flavor::IV})) {
    tasks.push_back({"dga.composition", "table " + t->name, [&p, t, a](Section& s) {
                       auto tab = [&](const char* role) -> const CountTable& { return used(p, *t, role).table; };
                       auto r = verify_composition(t->table, tab("cob01"), tab("cob12"), tab("cob02"), tab("t0"),
                                                   tab("t1"), tab("t2"), a);
                       report_check(s, "dga.chain_map", r.map01, tab("t1").top(), "Phi01", "generators");
                       report_check(s, "dga.chain_map", r.map12, tab("t2").top(), "Phi12", "generators");
                       report_check(s, "dga.chain_map", r.map02, tab("t2").top(), "Phi02", "generators");
                       report_check(s, "dga.composition", r.homotopy, tab("t2").top(),
                                    "Phi12 Phi01 - Phi02 - d K - K d", "monomials");
                       s.data = {{"bound", str(a)}, {"ok", r.ok()}};
                     }});
  }
  return tasks;
}

// ---- trees, strata and gluing ----

struct StrataInput {
  StrataTables tabs;
  CountKey root;
};

StrataInput strata_input(const Problem& p, const TreeSpec& t) {
  const auto& T = t.tree;
  if (T.nv() != 1 || t.table.empty() || (T.flavor != Flavor::I && T.flavor != Flavor::II))
    throw ParseError("#" + t.path, "strata need a one-vertex flavor I or II tree with a count table");
  const auto& spec = p.tables.at(t.table);
  StrataInput in;
  in.tabs = T.flavor == Flavor::I ? StrataTables::one(spec.table)
                                  : StrataTables::two(spec.table, used(p, spec, "plus").table, used(p, spec, "minus").table);
  std::vector<int> outs;
  for (int e : T.outputs()) outs.push_back(T.edges[e].orbit);
  int in_edge = T.incoming(0);
  if (in_edge < 0) throw ParseError("#" + t.path, "the tree has no input edge");
  int sign = 1;
  in.root = in.tabs.root_table().normalize(T.edges[in_edge].orbit, outs, T.vertices[0].beta, sign);
  return in;
}

std::vector<const TreeSpec*> strata_trees(const Problem& p, const Options& o) {
  std::vector<const TreeSpec*> r;
  for (auto* t : trees_of(p, o)) {
    bool fits = t->tree.nv() == 1 && !t->table.empty() &&
                (t->tree.flavor == Flavor::I || t->tree.flavor == Flavor::II);
    if (fits || !o.tree.empty()) r.push_back(t);
  }
  return r;
}

std::vector<Task> strata_tasks(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  for (auto* t : strata_trees(p, o)) {
    auto in = std::make_shared<StrataInput>(strata_input(p, *t));
    tasks.push_back({"trees.strata", "tree " + t->name, [in](Section& s) {
                       auto eff = effective_set(in->tabs);
                       auto P = enumerate_strata(in->tabs, in->root, &eff);
                       std::map<int, int> by_codim;
                       bool below_root = true;
                       json list = json::array();
                       for (size_t i = 0; i < P.strata.size(); ++i) {
                         const auto& st = P.strata[i];
                         ++by_codim[st.codim];
                         below_root = below_root && P.leq(static_cast<int>(i), 0);
                         std::string faces;
                         for (int j : P.faces[i]) faces += (faces.empty() ? "" : ",") + std::to_string(j);
                         s.info("trees.stratum", "#" + std::to_string(i) + " " + st.key + ": codim " +
                                                     std::to_string(st.codim) + ", degree " + std::to_string(st.degree) +
                                                     (st.odd_symmetry ? ", odd symmetry" : "") + ", faces {" + faces + "}");
                         list.push_back({{"key", st.key},
                                         {"codim", st.codim},
                                         {"degree", st.degree},
                                         {"odd_symmetry", st.odd_symmetry},
                                         {"faces", std::vector<int>(P.faces[i].begin(), P.faces[i].end())}});
                       }
                       s.data["strata"] = list;
                       s.check(below_root, "trees.strata",
                               std::to_string(P.strata.size()) + " strata, by codimension " + histogram(by_codim) +
                                   (below_root ? ", all below the root" : ", some stratum is not below the root"));
                       try {
                         auto q = qs_complex(P);
                         auto h = nonzero(homology_dimensions(q.complex));
                         s.data["qs_homology"] = histogram_json(h);
                         s.pass("vfc_algebra.qs_complex", "Q[S] has d^2 = 0, homology " + histogram(h));
                       } catch (const Error& e) {
                         s.fail("vfc_algebra.qs_complex", e.what());
                       }
                       auto r = qs_residual(in->tabs, eff, in->root);
                       s.check(r == 0, "counts.module_map",
                               r == 0 ? "counts define a chain map Q[S] -> Q at the root"
                                      : "boundary of the root generator evaluates to " + str(r),
                               r == 0 ? json() : json({{"residual", str(r)}}));
                     }});
  }
  return tasks;
}

std::string vertex_set(const std::vector<int>& vs) {
  std::string s = "{";
  for (size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + std::to_string(vs[i]);
  return s + "}";
}

std::vector<Task> subtree_tasks(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  for (auto* t : trees_of(p, o))
    tasks.push_back({"trees.subtrees", "tree " + t->name, [t](Section& s) {
                       const auto& T = t->tree;
                       auto sets = subtree_vertex_sets(T);
                       bool connected = true;
                       size_t singletons = 0;
                       json list = json::array();
                       for (auto& vs : sets) {
                         auto sub = induced_subtree(T, vs);
                         bool one = num_components(sub) == 1;
                         connected = connected && one;
                         singletons += vs.size() == 1;
                         auto v = validate(sub);
                         s.info("trees.subtree", vertex_set(vs) + ": codim " + std::to_string(codim(sub)) +
                                                     (v.empty() ? ", valid" : ", " + v.front()));
                         list.push_back({{"vertices", vs}, {"codim", codim(sub)}, {"valid", v.empty()}});
                       }
                       s.data["subtrees"] = list;
                       bool ok = connected && singletons == static_cast<size_t>(T.nv());
                       s.check(ok, "trees.subtrees",
                               std::to_string(sets.size()) + " connected subtrees" +
                                   (ok ? ", each induced subtree connected" : ", inconsistent enumeration"));
                     }});
  return tasks;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::vector<Task> glue_tasks(const Problem& p, const Options& o) {
  int samples = o.samples ? *o.samples : p.samples ? *p.samples : 100;
  uint64_t seed = o.seed ? *o.seed : p.seed ? *p.seed : 0;
  if (!o.csv_dir.empty()) std::filesystem::create_directories(o.csv_dir);
  std::vector<Task> tasks;
  for (auto* t : trees_of(p, o))
    tasks.push_back({"glue_params.cell_like", "tree " + t->name, [t, samples, seed, dir = o.csv_dir](Section& s) {
                       auto r = verify_cell_like(t->tree, samples, seed);
                       s.data = {{"samples", r.samples},
                                 {"seed", seed},
                                 {"chart_dim", r.chart_dim},
                                 {"top_dim", r.top_dim},
                                 {"max_roundtrip_error", r.max_roundtrip_error},
                                 {"passed", r.passed},
                                 {"by_dimension", histogram_json(r.by_dimension)}};
                       if (r.ok())
                         s.pass("glue_params.cell_like",
                                std::to_string(r.samples) + " samples, chart dimension " + std::to_string(r.chart_dim) +
                                    ", max round-trip error " + sci(r.max_roundtrip_error) + ", stratum dimensions " +
                                    histogram(r.by_dimension));
                       else
                         s.fail("glue_params.cell_like", r.failures.front(), r.failures);
                       if (!dir.empty() && r.ok()) {
                         std::ofstream(std::filesystem::path(dir) / (t->name + ".csv")) << sample_csv(t->tree, samples, seed);
                       }
                     }});
  return tasks;
}

// ---- module algebra ----

std::vector<Task> hocolim_tasks(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  if (!o.tree.empty()) {
    auto in = std::make_shared<StrataInput>(strata_input(p, *trees_of(p, o).front()));
    tasks.push_back({"vfc_algebra.hocolim_final", "tree " + o.tree, [in](Section& s) {
                       auto P = enumerate_strata(in->tabs, in->root);
                       auto q = qs_complex(P);
                       auto M = qs_module(P, q);
                       auto H = hocolim(M.diagram());
                       auto h = nonzero(homology_dimensions(H.complex));
                       bool qi = is_quasi_isomorphism(hocolim_to_final(M, H));
                       s.data = {{"strata", P.strata.size()}, {"hocolim_homology", histogram_json(h)}, {"quasi_iso", qi}};
                       s.check(qi, "vfc_algebra.hocolim_final",
                               "hocolim over " + std::to_string(P.strata.size()) + " strata has homology " +
                                   histogram(h) + (qi ? ", quasi-isomorphic to Q[S] at the root" : ", not the root value"));
                     }});
    return tasks;
  }
  for (auto* m : modules_of(p, o)) {
    std::vector<int> objs(m->module.poset.size());
    for (size_t i = 0; i < objs.size(); ++i) objs[i] = static_cast<int>(i);
    if (m->subposet) objs = *m->subposet;
    try {
      require_downward_closed(m->module, objs);
    } catch (const InvalidSubposet& e) {
      throw ParseError("#" + m->path + "/subposet", e.what());
    }
    tasks.push_back({"vfc_algebra.module", "module " + m->name, [m, objs](Section& s) {
                       const auto& M = m->module;
                       M.check();
                       auto H = hocolim(M.diagram(), false);
                       auto h = nonzero(homology_dimensions(H.complex));
                       s.data["hocolim_homology"] = histogram_json(h);
                       s.pass("vfc_algebra.hocolim", "homology " + histogram(h) + " from " +
                                                         std::to_string(H.simplices.size()) + " simplices");
                       auto cof = check_cofibrant(M);
                       s.data["cofibrant"] = cof.ok;
                       if (cof.ok) {
                         s.info("vfc_algebra.cofibrant", "cofibrant");
                       } else {
                         std::string obj = cof.object >= 0 ? M.poset.objects[cof.object] : "?";
                         s.info("vfc_algebra.cofibrant", "not cofibrant: " + cof.check + " map at " + obj +
                                                             " in degree " + std::to_string(cof.degree) +
                                                             (cof.detail.empty() ? "" : " (" + cof.detail + ")"));
                       }
                       auto c = colim_vs_hocolim(M, objs);
                       s.data["colim_homology"] = histogram_json(c.colim_homology);
                       s.data["agree"] = c.agree;
                       std::string d = std::to_string(objs.size()) + " objects: hocolim " +
                                       histogram(c.hocolim_homology) + ", colim " + histogram(c.colim_homology);
                       if (cof.ok) s.check(c.agree && c.natural_map_quasi_iso, "vfc_algebra.colim_vs_hocolim", d);
                       else s.info("vfc_algebra.colim_vs_hocolim", d + (c.agree ? ", agree" : ", differ"));
                     }});
  }
  return tasks;
}

bool lift_ok(const SModule& X, const Replacement& R, const std::vector<ChainMap>& g, std::string& why) {
  auto L = lift_module_map(X, R.module, R.q, g);
  if (auto w = naturality_failure(X, R.module, L)) {
    why = "lift is not natural: " + *w;
    return false;
  }
  for (int x = 0; x < X.poset.size(); ++x)
    if (!compose(R.q[x], L[x]).equals(g[x])) {
      why = "q L differs from the map at " + X.poset.objects[x];
      return false;
    }
  return true;
}

std::vector<Task> lift_tasks(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  for (auto* m : modules_of(p, o))
    tasks.push_back({"vfc_algebra.replacement", "module " + m->name, [&p, m](Section& s) {
                       const auto& M = m->module;
                       auto R = cofibrant_replacement(M);
                       auto cof = check_cofibrant(R.module);
                       s.check(cof.ok, "vfc_algebra.replacement_cofibrant",
                               cof.ok ? "replacement is cofibrant" : "replacement fails " + cof.check + " check");
                       bool qi = true;
                       for (auto& q : R.q) qi = qi && is_quasi_isomorphism(q);
                       auto nat = naturality_failure(R.module, M, R.q);
                       s.check(qi && !nat, "vfc_algebra.replacement",
                               !qi ? "q is not an objectwise quasi-isomorphism"
                                   : nat ? "q is not natural: " + *nat : "q: M_cof -> M is a natural quasi-isomorphism");
                       int lifted = 0;
                       for (auto& [name, f] : p.maps) {
                         if (f.target != m->name) continue;
                         ++lifted;
                         const auto& X = p.modules.at(f.source).module;
                         if (!check_cofibrant(X).ok) {
                           s.fail("vfc_algebra.lift", "map " + name + ": source " + f.source + " is not cofibrant");
                           continue;
                         }
                         if (auto w = naturality_failure(X, M, f.components)) {
                           s.fail("vfc_algebra.lift", "map " + name + " is not natural: " + *w);
                           continue;
                         }
                         std::string why;
                         bool ok = lift_ok(X, R, f.components, why);
                         s.check(ok, "vfc_algebra.lift", "map " + name + (ok ? " lifts through q" : ": " + why));
                       }
                       if (lifted == 0) {
                         // Without a map into M, lift the identity of M_cof through its own replacement.
                         auto R2 = cofibrant_replacement(R.module);
                         std::vector<ChainMap> id;
                         for (auto& v : R.module.value) id.push_back(ChainMap::identity(v));
                         std::string why;
                         bool ok = lift_ok(R.module, R2, id, why);
                         s.check(ok, "vfc_algebra.lift", ok ? "identity of M_cof lifts through q" : why);
                       }
                     }});
  return tasks;
}

const std::map<std::string, Builder>& builders() {
  static const std::map<std::string, Builder> b = {
      {"validate", validate_tasks},     {"residuals", residual_tasks},       {"d2", d2_tasks},
      {"homology", homology_tasks},     {"cobordism-verify", cobordism_tasks}, {"homotopy-verify", homotopy_tasks},
      {"compose-verify", compose_tasks}, {"strata", strata_tasks},           {"subtrees", subtree_tasks},
      {"glue-verify", glue_tasks},      {"vfc-hocolim", hocolim_tasks},     {"vfc-lift", lift_tasks},
  };
  return b;
}

std::vector<Task> run_tasks_of_file(const Problem& p, const Options& o) {
  std::vector<Task> tasks;
  for (size_t i = 0; i < p.commands.size(); ++i) {
    auto it = builders().find(p.commands[i]);
    if (it == builders().end() || p.commands[i] == "run")
      throw ParseError(o.file + "#/commands/" + std::to_string(i), "unknown command '" + p.commands[i] + "'");
    for (auto& t : it->second(p, o)) {
      t.subject = p.commands[i] + " " + t.subject;
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

int finish(const Report& r, int code, const Options& o) {
  std::cout << r.text(code) << std::flush;
  if (!o.json_path.empty()) {
    std::ofstream out(o.json_path);
    out << r.sidecar(code).dump(2) << '\n';
    if (!out) {
      std::cerr << "cannot write " << o.json_path << '\n';
      return 2;
    }
  }
  return code;
}

int execute(const std::string& command, const Builder& build, Options o) {
  Report r;
  r.command = command;
  r.input = std::filesystem::path(o.file).filename().string();
  if (const char* env = std::getenv("SFT_CHAINLAB_JOBS")) {
    char* end = nullptr;
    long j = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || j < 1) {
      r.extra.push_back({"cli.parse", Status::Fail, "SFT_CHAINLAB_JOBS", "not a positive integer: '" + std::string(env) + "'", {}});
      return finish(r, 2, o);
    }
    o.jobs = static_cast<int>(j);
  }
  try {
    Problem p = load_problem(o.file);
    auto tasks = build(p, o);
    r.sections = run_tasks(tasks, o.jobs);
  } catch (const ParseError& e) {
    std::string where = e.where.rfind('#', 0) == 0 ? o.file + e.where : e.where;
    r.extra.push_back({"cli.parse", Status::Fail, where, e.what(), {{"location", where}}});
    return finish(r, 2, o);
  } catch (const Error& e) {
    r.extra.push_back({"cli.parse", Status::Fail, r.input, e.what(), {}});
    return finish(r, 2, o);
  }
  return finish(r, r.failures() ? 1 : 0, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact chain-level checks for contact homology count tables, trees and module algebra."};
  app.require_subcommand(1);
  Options o;
  std::map<std::string, CLI::App*> subs;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("file", o.file, "problem file (JSON, schema sft-chainlab/1)")->required()->check(CLI::ExistingFile);
    c->add_option("--jobs", o.jobs, "worker threads; SFT_CHAINLAB_JOBS overrides")->check(CLI::PositiveNumber);
    c->add_option("--json", o.json_path, "write the JSON report to this path");
    subs[name] = c;
    return c;
  };
  add("validate", "validate universes, count tables, trees, modules and maps");
  add("residuals", "master-equation residuals of flavor I and II tables");
  add("d2", "d^2 = 0 below the action bound")->add_option("--below", o.below, "action bound (p/q)");
  add("homology", "filtered homology and exactness of the unit")->add_option("--below", o.below, "action bound (p/q)");
  add("cobordism-verify", "cobordism maps are chain maps; trivial cobordisms are filtered isomorphisms")
      ->add_option("--below", o.below, "action bound (p/q)");
  add("homotopy-verify", "flavor III counts give a chain homotopy")->add_option("--below", o.below, "action bound (p/q)");
  add("compose-verify", "flavor IV counts homotope the glued map to the composite")
      ->add_option("--below", o.below, "action bound (p/q)");
  add("strata", "strata over a one-vertex tree and the complex Q[S]")->add_option("--tree", o.tree, "tree name");
  add("subtrees", "connected subtrees of a tree")->add_option("--tree", o.tree, "tree name");
  auto* glue = add("glue-verify", "sample gluing charts and check the stratification");
  glue->add_option("--samples", o.samples, "samples per tree")->check(CLI::NonNegativeNumber);
  glue->add_option("--seed", o.seed, "random seed");
  glue->add_option("--tree", o.tree, "tree name");
  glue->add_option("--csv", o.csv_dir, "directory for per-tree CSV samples");
  auto* hc = add("vfc-hocolim", "homotopy colimits, cofibrancy and colim vs hocolim");
  hc->add_option("--module", o.module, "module name");
  hc->add_option("--tree", o.tree, "compare hocolim of Q[S] over the strata of this tree with its root value");
  add("vfc-lift", "cofibrant replacement and lifting of module maps")->add_option("--module", o.module, "module name");
  auto* run = add("run", "run the commands listed in the problem file");
  run->add_option("--below", o.below, "action bound (p/q)");
  run->add_option("--samples", o.samples, "samples per tree")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", o.seed, "random seed");
  for (auto& c : {"d2", "homology", "cobordism-verify", "homotopy-verify", "compose-verify", "residuals"})
    subs[c]->add_option("--table", o.table, "table name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto& [name, c] : subs)
    if (c->parsed()) return execute(name, name == "run" ? Builder(run_tasks_of_file) : builders().at(name), o);
  return 2;
}
