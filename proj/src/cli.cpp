// SPDX-License-Identifier: Apache-2.0
#include "imtk/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>

#include "imtk/model_io.hpp"

namespace imtk::cli {
namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string model;
  std::uint64_t seed = 42;
  int samples = 200;
  double tol = 0.0;
  bool has_tol = false;
  bool json = false;
  bool roundtrip = false;
  bool kernel_flat = false;
  bool emit = false;
  std::string witness;
  std::string gauge;
  std::string name;
};

struct Outcome {
  Outcome() = default;
  explicit Outcome(Report r) : report(std::move(r)) {}

  Report report;
  ojson extras = ojson::object();
  std::optional<std::string> emitted;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void missing(const std::string& section) {
  throw ModelError(ModelError::Kind::schema, "", "model provides no " + section);
}

// Sections missing from the file are filled in from its example section or
// from the coupling, in that order.
class Workspace {
 public:
  Workspace(ModelFile file, const SamplePlan& plan) : file_(std::move(file)), plan_(plan) {
    if (file_.example) built_ = make_example(*file_.example, plan_);
  }

  const ModelFile& file() const { return file_; }
  const SamplePlan& plan() const { return plan_; }

  bool coupling_only() const { return file_.coupling && !file_.algebroid && !built_; }

  LieAlgebroid algebroid() const {
    if (file_.algebroid) return *file_.algebroid;
    if (built_) return built_->algebroid;
    if (file_.coupling) return build_semidirect(*file_.coupling);
    missing("algebroid");
  }

  int ideal_rank() const {
    if (file_.ideal) return *file_.ideal;
    if (built_ && built_->ideal) return built_->ideal->k;
    if (coupling_only()) return file_.coupling->k();
    missing("ideal");
  }

  IdealBundle ideal() const { return IdealBundle(algebroid(), ideal_rank()); }

  IMForm form() const {
    if (file_.im_form) return *file_.im_form;
    if (built_ && built_->form) return *built_->form;
    if (coupling_only()) return coupling_to_im(*file_.coupling, plan_);
    missing("IM connection form");
  }

  bool has_coupling() const {
    return file_.coupling || file_.im_form || (built_ && (built_->coupling || built_->form));
  }

  CouplingData coupling() const {
    if (file_.coupling) return *file_.coupling;
    if (built_ && built_->coupling) return *built_->coupling;
    if (!file_.im_form && !(built_ && built_->form)) missing("coupling");
    return extract_coupling(algebroid(), ideal(), form(), plan_);
  }

  const GroupoidSection& groupoid() const {
    if (!file_.groupoid) missing("groupoid");
    return *file_.groupoid;
  }

 private:
  ModelFile file_;
  SamplePlan plan_;
  std::optional<Model> built_;
};

Report fresh(const SamplePlan& plan) {
  Report r;
  r.seed = plan.seed;
  r.samples = plan.count;
  return r;
}

double im_max_abs(const IMForm& f, const SamplePlan& plan) {
  double m = 0.0;
  for (int a = 0; a < f.algebroid().rank(); ++a) {
    m = std::max(m, sampled_max_abs(f.algebroid().chart(), f.symbol(a).components(), plan));
    m = std::max(m, sampled_max_abs(f.algebroid().chart(), f.op(a).components(), plan));
  }
  return m;
}

// Residual 0 when the two verdicts agree, 1 otherwise.
void add_agreement(Report& rep, const std::string& name, bool a, bool b, const std::string& what) {
  rep.add(name, a == b ? 0.0 : 1.0, 0.5, what);
}

// ---------------------------------------------------------------- commands

Outcome verify_algebroid(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  LieAlgebroid a = ws.algebroid();
  std::optional<IdealBundle> ideal;
  if (ws.file().ideal || ws.coupling_only()) ideal = ws.ideal();
  o.report.append(check_axioms(a, ideal ? &*ideal : nullptr, ws.plan()));
  o.extras["rank"] = a.rank();
  o.extras["dim"] = a.dim();
  return o;
}

// [[beta ^ beta] ^ beta] = 0 for a random k-valued 1-form.
double wedge_jacobi(const FiberBracket& br, const Chart& chart, const SamplePlan& plan) {
  std::mt19937_64 rng(plan.seed);
  CoeffForm beta(chart.dim, br.rank(), 1);
  for (std::size_t t = 0; t < beta.tuple_count(); ++t)
    for (int c = 0; c < br.rank(); ++c) beta.at(t, c) = random_polynomial(chart.dim, 1, rng);
  if (chart.dim < 3) return 0.0;
  CoeffForm j = fiber_bracket_wedge(br, fiber_bracket_wedge(br, beta, beta), beta);
  return sampled_max_abs(chart, j.components(), plan);
}

Outcome verify_ideal(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  IdealBundle ideal = ws.ideal();
  o.report.append(check_axioms(ideal.parent, &ideal, ws.plan()));
  ARepresentation rep = canonical_representation(ideal.parent, ideal, ws.plan());
  o.report.add("canonical_flatness", rep.flatness_residual(ws.plan()), 1e-8);
  o.report.add("wedge_jacobi", wedge_jacobi(ideal.bracket, ideal.parent.chart(), ws.plan()), 1e-8);
  o.extras["k"] = ideal.k;
  return o;
}

Outcome verify_im(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  IdealBundle ideal = ws.ideal();
  IMForm form = ws.form();
  o.report.append(check_im_form(form, canonical_representation(ideal.parent, ideal, ws.plan()), ws.plan()));
  return o;
}

Outcome coupling(const Workspace& ws, const Options& opt) {
  Outcome o(fresh(ws.plan()));
  CouplingData cd = ws.coupling();
  o.report.add("U_skew", u_skew_residual(cd, ws.plan()), 1e-8);
  if (opt.roundtrip) {
    IMForm f = coupling_to_im(cd, ws.plan());
    const LieAlgebroid& s = f.algebroid();
    CouplingData back = extract_coupling(s, IdealBundle(s, cd.k()), f, ws.plan());
    o.report.add("roundtrip_coupling", coupling_difference(back, cd, ws.plan()), 1e-10);
    IMForm form = ws.form();
    auto [q, qi] = splitting_frame(form);
    o.report.add("roundtrip_im", im_form_difference(form.change_frame(q, qi), f, ws.plan()), 1e-10);
    o.report.add("roundtrip_algebroid", algebroid_difference(ws.algebroid().change_frame(q, qi), s, ws.plan()),
                 1e-10);
  }
  o.extras["k"] = cd.k();
  o.extras["base_rank"] = cd.base_rank();
  return o;
}

Outcome check_structure(const Workspace& ws, const Options& opt) {
  Outcome o(fresh(ws.plan()));
  CouplingData cd = ws.coupling();
  if (!opt.kernel_flat) {
    o.report.append(check_structure_equations(cd, StructureVariant::S1S3, ws.plan()));
    return o;
  }
  o.report.append(check_structure_equations(cd, StructureVariant::S1pS3p, ws.plan()));
  IMForm u2 = u_two_form(cd);
  o.report.append(check_im_form(u2, induced_representation(cd.base, cd.nabla), ws.plan()), "U_im:");
  std::vector<Section> vals;
  for (int a = 0; a < cd.base_rank(); ++a)
    for (int i = 0; i < cd.dim(); ++i) vals.push_back(u2.symbol(a).value(std::vector<int>{i}));
  o.report.add("U_center", center_residual(cd.kbracket, cd.chart(), vals, ws.plan()), 1e-7);
  AlgebroidCochain w = chain_map(u2);
  AlgebroidCochain want(cd.base_rank(), cd.k(), 2);
  const int rb = cd.base_rank();
  for (std::size_t t = 0; t < want.values.size(); ++t) {
    const auto& ab = increasing_tuples(rb, 2)[t];
    want.values[t] = cd.u_value(frame_section(rb, ab[0]), cd.base.anchor_of(frame_section(rb, ab[1])));
  }
  o.report.add("chain_map", cochain_difference(cd.chart(), w, want, ws.plan()), 1e-9);
  return o;
}

Outcome build_semidirect_cmd(const Workspace& ws, const Options& opt) {
  Outcome o(fresh(ws.plan()));
  CouplingData cd = ws.coupling();
  LieAlgebroid s = build_semidirect(cd);
  IdealBundle ideal(s, cd.k());
  o.report.append(check_axioms(s, &ideal, ws.plan()));
  o.extras["rank"] = s.rank();
  if (opt.emit) {
    ModelFile m;
    m.chart = s.chart();
    m.algebroid = s;
    m.ideal = cd.k();
    m.im_form = coupling_to_im(cd, ws.plan());
    m.coupling = cd;
    o.emitted = dump_model(m);
  }
  return o;
}

Outcome curvature(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  CouplingData cd = ws.coupling();
  IMForm c = curvature_im(cd, ws.plan());
  const LieAlgebroid& s = c.algebroid();
  ARepresentation rep = canonical_representation(s, IdealBundle(s, cd.k()), ws.plan());
  o.report.append(check_im_form(c, rep, ws.plan()), "im:");
  const double size = im_max_abs(c, ws.plan());
  o.report.flags["vanishes"] = size < 1e-9;
  o.extras["max_abs"] = size;
  try {
    IMForm d = d_im(cd.nabla, rep, coupling_to_im(cd, ws.plan()), ws.plan());
    o.report.add("d_im_agreement", im_form_difference(d, c, ws.plan()), 1e-9);
  } catch (const PreconditionError& e) {
    o.report.notes.push_back(std::string("d_im not defined: ") + e.what());
  }
  return o;
}

Outcome classify(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  CouplingData cd = ws.coupling();
  FlatnessClass f = classify_flatness(cd, ws.plan());
  o.report.flags = f.report.flags;
  o.report.discarded = f.report.discarded;
  ojson names = ojson::array();
  if (f.totally_flat) names.push_back("totally");
  if (f.leafwise_flat) names.push_back("leafwise");
  if (f.kernel_flat) names.push_back("kernel");
  o.extras["flatness"] = names;
  ojson m = ojson::object();
  for (const CheckResult& c : f.report.checks) m[c.name] = c.max_residual;
  const double size = im_max_abs(curvature_im(cd, ws.plan()), ws.plan());
  m["curvature_im"] = size;
  o.extras["measurements"] = m;
  add_agreement(o.report, "curvature_consistency", size < 1e-9, f.totally_flat,
                "curvature_im vanishes exactly when totally flat");
  return o;
}

Outcome rank_one(const Workspace& ws, const Options& opt) {
  Outcome o(fresh(ws.plan()));
  RankOneData data;
  bool reference = false;
  if (ws.has_coupling()) {
    CouplingData cd = ws.coupling();
    if (cd.k() != 1) throw DimensionError("rank-one: the ideal has rank " + std::to_string(cd.k()));
    data = extract_rank_one(cd);
    reference = check_structure_equations(cd, StructureVariant::S1S3, ws.plan()).pass();
  } else {
    LieAlgebroid a = ws.algebroid();
    if (ws.ideal_rank() != 1) throw DimensionError("rank-one: the ideal has rank " + std::to_string(ws.ideal_rank()));
    data = rank_one_cochains(a);
    IdealBundle ideal(a, 1);
    reference = check_axioms(a, &ideal, ws.plan()).pass();
  }
  Report own = check_rank_one(data, ws.plan());
  o.report.append(own);
  o.report.flags["reference"] = reference;
  add_agreement(o.report, "verdict_agreement", own.pass(), reference,
                data.has_coupling() ? "against the structure equations" : "against the algebroid axioms");
  if (!opt.gauge.empty()) {
    Expr h = parse(opt.gauge, data.base.dim());
    Report g = check_rank_one(gauge_transform(data, h), ws.plan());
    o.report.append(g, "gauge:");
    add_agreement(o.report, "gauge_agreement", g.pass(), own.pass(), "verdict unchanged by the gauge");
  }
  if (!opt.witness.empty()) {
    WitnessKind kind = parse_witness_kind(opt.witness);
    if (!ws.file().witness) missing("rank_one_witness section");
    o.report.append(verify_witness(data, kind, ws.file().witness->witness, ws.plan()), "witness:");
    o.extras["witness"] = to_string(kind);
  }
  return o;
}

struct GroupoidSetup {
  MultForm alpha;
  LinearConnection conn;
};

GroupoidSetup setup(const GroupoidSection& g, const SamplePlan& plan) {
  return {connection_from_splitting(g.gpd, g.splitting, plan), splitting_connection(g.gpd, g.splitting)};
}

Outcome groupoid_verify(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  const GroupoidSection& g = ws.groupoid();
  o.report.append(g.gpd.check(ws.plan()), "groupoid:");
  o.report.append(splitting_preconditions(g.gpd, g.splitting, ws.plan()), "splitting:");
  GroupoidSetup s = setup(g, ws.plan());
  MultForm omega = covariant_exterior_D(g.gpd, s.alpha, s.alpha, s.conn, g.fd);
  o.report.append(check_groupoid_properties(g.gpd, s.alpha, omega, s.conn, ws.plan(), g.fd));
  o.report.append(step_halving(g.gpd, s.alpha, s.conn, 0.1, 1e-6, 10, ws.plan().seed));
  o.extras["fd_step"] = g.fd.step;
  return o;
}

Outcome lie_functor(const Workspace& ws, const Options&) {
  Outcome o(fresh(ws.plan()));
  const GroupoidSection& g = ws.groupoid();
  GroupoidSetup s = setup(g, ws.plan());
  o.report.append(lie_functor_report(g.gpd, s.alpha, ws.plan()));
  return o;
}

ModelFile groupoid_model(const GroupoidFixture& f) {
  ModelFile m;
  m.chart = f.gpd.chart();
  m.groupoid = GroupoidSection{f.gpd, f.splitting, {}};
  return m;
}

std::optional<ModelFile> named_groupoid(const std::string& name) {
  if (name == "so2_trivial_groupoid") return groupoid_model(so2_trivial_fixture());
  if (name == "so3_radial_groupoid") return groupoid_model(so3_radial_fixture());
  return std::nullopt;
}

std::vector<std::string> example_names() {
  std::vector<std::string> v = example_presets();
  v.emplace_back("so2_trivial_groupoid");
  v.emplace_back("so3_radial_groupoid");
  return v;
}

Outcome example(const Options& opt, const SamplePlan& plan) {
  Outcome o(fresh(plan));
  ModelFile m;
  if (!opt.name.empty()) {
    if (auto g = named_groupoid(opt.name)) {
      m = *g;
    } else {
      ExampleSpec spec;
      try {
        spec = example_preset(opt.name);
      } catch (const std::invalid_argument&) {
        throw UsageError("unknown example \"" + opt.name + "\"");
      }
      Model built = make_example(spec, plan);
      m.chart = built.algebroid.chart();
      m.algebroid = built.algebroid;
      if (built.ideal) m.ideal = built.ideal->k;
      m.im_form = built.form;
      m.coupling = built.coupling;
    }
  } else if (!opt.model.empty()) {
    m = load_model(opt.model);
    if (!m.example) missing("example section");
    Model built = make_example(*m.example, plan);
    m.algebroid = built.algebroid;
    if (built.ideal) m.ideal = built.ideal->k;
    m.im_form = built.form;
    m.coupling = built.coupling;
    m.example.reset();
  } else {
    throw UsageError("example: give a name or --model");
  }
  if (opt.emit) {
    o.emitted = dump_model(m);
    return o;
  }
  if (m.groupoid) {
    o.report.append(m.groupoid->gpd.check(plan), "groupoid:");
    o.report.append(splitting_preconditions(m.groupoid->gpd, m.groupoid->splitting, plan), "splitting:");
  } else {
    std::optional<IdealBundle> ideal;
    if (m.ideal) ideal = IdealBundle(*m.algebroid, *m.ideal);
    o.report.append(check_axioms(*m.algebroid, ideal ? &*ideal : nullptr, plan), "axioms:");
    if (m.im_form) o.report.append(check_im_form(*m.im_form, canonical_representation(*m.algebroid, *ideal, plan), plan), "im:");
    if (m.coupling) o.report.append(check_structure_equations(*m.coupling, StructureVariant::S1S3, plan), "structure:");
  }
  ojson sections = ojson::array();
  for (const auto& s : m.sections()) sections.push_back(s);
  o.extras["sections"] = sections;
  return o;
}

using Handler = std::function<Outcome(const Workspace&, const Options&)>;

const std::vector<std::pair<std::string, std::string>>& descriptions() {
  static const std::vector<std::pair<std::string, std::string>> d{
      {"verify-algebroid", "Jacobi, anchor morphism and ideal clauses"},
      {"verify-ideal", "ideal clauses, canonical representation and bracket identities"},
      {"verify-im", "IM conditions of the connection form"},
      {"coupling", "extract the coupling data; --roundtrip compares both directions"},
      {"check-structure", "structure equations of the coupling"},
      {"build-semidirect", "build B + k from the coupling and check its axioms"},
      {"curvature", "curvature IM 2-form"},
      {"classify", "flatness classes of the coupling"},
      {"rank-one", "trivialized equations of a rank-one ideal"},
      {"groupoid-verify", "connection and curvature on the action groupoid"},
      {"lie-functor", "differentiate the groupoid connection to an IM form"},
      {"example", "build a named example"},
  };
  return d;
}

Handler handler(const std::string& name) {
  static const std::map<std::string, Handler> h{
      {"verify-algebroid", verify_algebroid}, {"verify-ideal", verify_ideal},
      {"verify-im", verify_im},               {"coupling", coupling},
      {"check-structure", check_structure},   {"build-semidirect", build_semidirect_cmd},
      {"curvature", curvature},               {"classify", classify},
      {"rank-one", rank_one},                 {"groupoid-verify", groupoid_verify},
      {"lie-functor", lie_functor},
  };
  return h.at(name);
}

void regrade(Report& r, double tol) {
  for (CheckResult& c : r.checks) {
    c.tolerance = tol;
    c.pass = std::isfinite(c.max_residual) && c.max_residual < tol;
  }
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson report_json(const std::string& command, const Outcome& o) {
  const Report& r = o.report;
  ojson j;
  j["schema"] = "imtk-report";
  j["version"] = kReportVersion;
  j["command"] = command;
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  j["discarded"] = r.discarded;
  ojson checks = ojson::array();
  for (const CheckResult& c : r.checks)
    checks.push_back(ojson{{"name", c.name},
                           {"max_residual", number_or_null(c.max_residual)},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass},
                           {"note", c.note}});
  j["checks"] = checks;
  ojson flags = ojson::object();
  for (const auto& [k, v] : r.flags) flags[k] = v;
  j["flags"] = flags;
  j["notes"] = r.notes;
  for (const auto& [k, v] : o.extras.items()) j[k] = v;
  j["pass"] = r.pass();
  return j;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void print_table(std::ostream& out, const std::string& command, const Outcome& o, double millis) {
  const Report& r = o.report;
  out << "imtk " << command << "  seed=" << r.seed << "  samples=" << r.samples << "  discarded=" << r.discarded
      << "\n";
  std::size_t width = 5;
  for (const CheckResult& c : r.checks) width = std::max(width, c.name.size());
  char line[256];
  std::snprintf(line, sizeof line, "  %-*s  %-11s  %-11s  %s\n", static_cast<int>(width), "check", "residual",
                "tolerance", "result");
  out << line;
  for (const CheckResult& c : r.checks) {
    std::snprintf(line, sizeof line, "  %-*s  %-11s  %-11s  %s", static_cast<int>(width), c.name.c_str(),
                  sci(c.max_residual).c_str(), sci(c.tolerance).c_str(), c.pass ? "ok" : "FAIL");
    out << line;
    if (!c.note.empty()) out << "  (" << c.note << ")";
    out << "\n";
  }
  for (const auto& [k, v] : r.flags) out << "  flag " << k << " = " << (v ? "true" : "false") << "\n";
  for (const auto& n : r.notes) out << "  note: " << n << "\n";
  for (const auto& [k, v] : o.extras.items()) out << "  " << k << ": " << v.dump() << "\n";
  std::snprintf(line, sizeof line, "  wall time: %.1f ms\n", millis);
  out << line;
  out << (r.pass() ? "PASS" : "FAIL") << "\n";
}

void print_error(std::ostream& out, std::ostream& err, const std::string& command, const Options& opt,
                 const std::string& kind, const std::string& message, const std::string& pointer = {},
                 std::optional<std::size_t> offset = {}) {
  err << "imtk " << command << ": " << message;
  if (!pointer.empty()) err << " (at " << pointer << ")";
  err << "\n";
  if (!opt.json) return;
  ojson e{{"kind", kind}, {"message", message}};
  if (!pointer.empty()) e["pointer"] = pointer;
  if (offset) e["offset"] = *offset;
  ojson j{{"schema", "imtk-report"}, {"version", kReportVersion}, {"command", command}, {"error", e}, {"pass", false}};
  out << j.dump(2) << "\n";
}

std::string model_kind(ModelError::Kind k) {
  switch (k) {
    case ModelError::Kind::io: return "io";
    case ModelError::Kind::syntax: return "syntax";
    case ModelError::Kind::schema: return "schema";
    case ModelError::Kind::parse: return "parse";
    case ModelError::Kind::dimension: return "dimension";
  }
  return "model";
}

int execute(const std::string& command, const Options& opt, std::ostream& out, std::ostream& err) {
  const SamplePlan plan{opt.seed, opt.samples};
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    try {
      if (command == "example") {
        o = example(opt, plan);
      } else {
        if (opt.model.empty()) throw UsageError(command + " requires --model");
        Workspace ws(load_model(opt.model), plan);
        o = handler(command)(ws, opt);
      }
    } catch (const PreconditionError& e) {
      o = Outcome(e.report());
      o.report.seed = plan.seed;
      o.report.samples = plan.count;
      o.report.notes.push_back(std::string("refused: ") + e.what());
    } catch (const DegeneracyError& e) {
      o = Outcome(fresh(plan));
      o.report.add("degeneracy", INFINITY, 0.0, e.what());
    }
  } catch (const UsageError& e) {
    print_error(out, err, command, opt, "usage", e.what());
    return Exit::usage;
  } catch (const ModelError& e) {
    std::optional<std::size_t> offset;
    if (e.kind() == ModelError::Kind::parse || e.kind() == ModelError::Kind::syntax) offset = e.offset();
    print_error(out, err, command, opt, model_kind(e.kind()), e.what(), e.pointer(), offset);
    return Exit::model;
  } catch (const ParseError& e) {
    print_error(out, err, command, opt, "parse", e.what(), {}, e.offset());
    return Exit::model;
  } catch (const std::invalid_argument& e) {
    print_error(out, err, command, opt, "model", e.what());
    return Exit::model;
  }
  if (opt.has_tol) regrade(o.report, opt.tol);
  o.report.command = command;
  std::vector<std::string> notes;
  for (auto& n : o.report.notes)
    if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.push_back(std::move(n));
  o.report.notes = std::move(notes);
  if (o.emitted) {
    out << *o.emitted;
    return o.report.pass() ? Exit::pass : Exit::check_failed;
  }
  const double millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (opt.json)
    out << report_json(command, o).dump(2) << "\n";
  else
    print_table(out, command, o, millis);
  return o.report.pass() ? Exit::pass : Exit::check_failed;
}

}  // namespace

std::vector<std::string> subcommands() {
  std::vector<std::string> v;
  for (const auto& [name, _] : descriptions()) v.push_back(name);
  return v;
}

const std::vector<Coverage>& coverage() {
  static const std::vector<Coverage> c{
      {"expr-core", "parse", "verify-algebroid"},
      {"expr-core", "differentiate", "verify-algebroid"},
      {"expr-core", "evaluate", "verify-algebroid"},
      {"bundle-geometry", "covariant_derivative", "coupling"},
      {"bundle-geometry", "exterior_covariant_derivative", "check-structure"},
      {"bundle-geometry", "curvature_tensor", "check-structure"},
      {"bundle-geometry", "fiber_bracket_wedge", "verify-ideal"},
      {"algebroid-core", "bracket", "verify-algebroid"},
      {"algebroid-core", "check_axioms", "verify-algebroid"},
      {"algebroid-core", "canonical_representation", "verify-ideal"},
      {"algebroid-core", "lie_derivative_form", "verify-im"},
      {"algebroid-core", "check_A_invariant", "curvature"},
      {"algebroid-core", "basic_curvature", "example"},
      {"algebroid-core", "cartan_build_connection", "example"},
      {"im-connections", "check_im_form", "verify-im"},
      {"im-connections", "extract_coupling", "coupling"},
      {"im-connections", "coupling_to_im", "coupling"},
      {"im-connections", "check_structure_equations", "check-structure"},
      {"im-connections", "build_semidirect", "build-semidirect"},
      {"im-connections", "curvature_im", "curvature"},
      {"im-connections", "classify_flatness", "classify"},
      {"im-connections", "d_im", "curvature"},
      {"im-connections", "chain_map", "check-structure"},
      {"rank-one", "extract_rank_one", "rank-one"},
      {"rank-one", "check_rank_one", "rank-one"},
      {"rank-one", "verify_witness", "rank-one"},
      {"example-factory", "make_example", "example"},
      {"example-factory", "transitive_im_connection", "example"},
      {"groupoid-harness", "connection_from_splitting", "groupoid-verify"},
      {"groupoid-harness", "simplicial_delta", "groupoid-verify"},
      {"groupoid-harness", "covariant_exterior_D", "groupoid-verify"},
      {"groupoid-harness", "check_groupoid_properties", "groupoid-verify"},
      {"groupoid-harness", "differentiate_to_im", "lie-functor"},
      {"cli-io", "load_model", "verify-algebroid"},
      {"cli-io", "run", "verify-algebroid"},
  };
  return c;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verification toolkit for IM connections on Lie algebroids", "imtk"};
  app.require_subcommand(1);
  Options opt;
  for (const auto& [name, what] : descriptions()) {
    CLI::App* sub = app.add_subcommand(name, what);
    sub->add_option("--model", opt.model, "model file (JSON)");
    sub->add_option("--seed", opt.seed, "sampling seed")->capture_default_str();
    sub->add_option("--samples", opt.samples, "sample count")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", opt.tol, "re-grade every check at this tolerance")->check(CLI::PositiveNumber);
    sub->add_flag("--json", opt.json, "print the report as JSON");
    if (name == "coupling") sub->add_flag("--roundtrip", opt.roundtrip, "compare both directions");
    if (name == "check-structure") sub->add_flag("--kernel-flat", opt.kernel_flat, "use the kernel-flat variant");
    if (name == "rank-one") {
      sub->add_option("--witness", opt.witness, "verify a witness of this kind");
      sub->add_option("--gauge", opt.gauge, "also check after the trivialization e' = h e");
    }
    if (name == "build-semidirect") sub->add_flag("--emit", opt.emit, "print the result as a model file");
    if (name == "example") {
      std::string names;
      for (const auto& n : example_names()) names += (names.empty() ? "" : ", ") + n;
      sub->add_option("name", opt.name, "one of " + names);
      sub->add_flag("--emit", opt.emit, "print the model file");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? Exit::pass : Exit::usage;
  }
  opt.has_tol = false;
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->get_option("--tol")->count() > 0) opt.has_tol = true;
    return execute(sub->get_name(), opt, out, err);
  }
  return Exit::usage;
}

}  // namespace imtk::cli
