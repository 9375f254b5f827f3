// SPDX-License-Identifier: Apache-2.0
// Runs the acceptance criteria and prints one line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "imtk/cli.hpp"
#include "imtk/model_io.hpp"

using namespace imtk;

namespace {

std::string g_fixtures = IMTK_FIXTURES;

constexpr double kJacobiTol = 1e-8;
constexpr double kBrokenFloor = 1e-3;
constexpr double kRoundTripTol = 1e-10;
constexpr double kFlatTol = 1e-9;
constexpr double kKernelImTol = 1e-8;
constexpr double kCenterTol = 1e-7;
constexpr double kChainTol = 1e-9;
constexpr double kUniqueTol = 1e-9;
constexpr double kImTol = 1e-8;
constexpr double kRefuseFloor = 1e-3;
constexpr double kDeltaAlphaTol = 1e-7;
constexpr double kGroupoidTol = 1e-4;
constexpr double kLieTol = 1e-6;
constexpr double kTimeBudget = 60.0;

const SamplePlan kPlan{42, 200};

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
  template <class T>
  Verdict& operator<<(const T& v) {
    detail << v;
    return *this;
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

ModelFile load(const std::string& name) { return load_model(g_fixtures + "/" + name + ".json"); }

struct Loaded {
  LieAlgebroid algebroid;
  int k = 0;
  std::optional<IMForm> form;
  CouplingData coupling;
  bool coupling_only = false;
};

Loaded resolve(const std::string& name) {
  ModelFile m = load(name);
  Loaded out;
  if (m.example) {
    Model built = make_example(*m.example, kPlan);
    out.algebroid = built.algebroid;
    out.k = built.ideal->k;
    out.form = built.form;
    out.coupling = built.coupling ? *built.coupling : extract_coupling(built.algebroid, *built.ideal, *built.form, kPlan);
    return out;
  }
  out.coupling = *m.coupling;
  if (m.algebroid) {
    out.algebroid = *m.algebroid;
    out.k = *m.ideal;
    out.form = m.im_form;
  } else {
    out.algebroid = build_semidirect(out.coupling);
    out.k = out.coupling.k();
    out.coupling_only = true;
    try {
      out.form = coupling_to_im(out.coupling, kPlan);
    } catch (const PreconditionError&) {
    }
  }
  return out;
}

double max_checks(const Report& r, const std::string& prefix = {}) {
  double m = 0.0;
  for (const CheckResult& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) m = std::max(m, std::isfinite(c.max_residual) ? c.max_residual : INFINITY);
  return m;
}

double im_max_abs(const IMForm& f) {
  double m = 0.0;
  for (int a = 0; a < f.algebroid().rank(); ++a) {
    m = std::max(m, sampled_max_abs(f.algebroid().chart(), f.symbol(a).components(), kPlan));
    m = std::max(m, sampled_max_abs(f.algebroid().chart(), f.op(a).components(), kPlan));
  }
  return m;
}

const std::vector<std::string> kValidCouplings{"product_so3", "principal_so3", "principal_flat", "rank_one_coupling",
                                               "so3_radial"};

// --------------------------------------------------------------- criteria

void coupling_soundness(Verdict& v) {
  double worst = 0.0;
  for (const auto& name : kValidCouplings) {
    CouplingData cd = resolve(name).coupling;
    LieAlgebroid s = build_semidirect(cd);
    IdealBundle ideal(s, cd.k());
    Report r = check_axioms(s, &ideal, kPlan);
    double j = r.residual("jacobi"), a = r.residual("anchor_morphism");
    worst = std::max({worst, j, a});
    v.require(j < kJacobiTol && a < kJacobiTol, name);
  }
  v << "valid max " << sci(worst);
  const std::vector<std::pair<std::string, std::string>> broken{
      {"bad_u", "S3"}, {"bad_curvature", "S2"}, {"bad_bracket", "S1"}};
  for (const auto& [name, eq] : broken) {
    CouplingData cd = resolve(name).coupling;
    double se = check_structure_equations(cd, StructureVariant::S1S3, kPlan).residual(eq);
    LieAlgebroid s = build_semidirect(cd);
    IdealBundle ideal(s, cd.k());
    double j = check_axioms(s, &ideal, kPlan).residual("jacobi");
    v << "; " << name << " " << eq << "=" << sci(se) << " jacobi=" << sci(j);
    v.require(se > kBrokenFloor && j > kBrokenFloor, name);
  }
}

void round_trip(Verdict& v) {
  double fwd = 0.0, rev = 0.0;
  const std::vector<std::string> names{"product_so3",    "principal_so3",  "principal_flat", "rank_one_coupling",
                                       "so3_radial",     "transitive_flat", "transitive_so3", "leafwise_flat"};
  for (const auto& name : names) {
    Loaded l = resolve(name);
    IMForm f = coupling_to_im(l.coupling, kPlan);
    const LieAlgebroid& s = f.algebroid();
    CouplingData back = extract_coupling(s, IdealBundle(s, l.coupling.k()), f, kPlan);
    double d = coupling_difference(back, l.coupling, kPlan);
    fwd = std::max(fwd, d);
    v.require(d < kRoundTripTol, name + " forward");
    if (l.coupling_only) continue;
    CouplingData cd = extract_coupling(l.algebroid, IdealBundle(l.algebroid, l.k), *l.form, kPlan);
    IMForm again = coupling_to_im(cd, kPlan);
    auto [q, qi] = splitting_frame(*l.form);
    double di = im_form_difference(l.form->change_frame(q, qi), again, kPlan);
    double da = algebroid_difference(l.algebroid.change_frame(q, qi), again.algebroid(), kPlan);
    rev = std::max({rev, di, da});
    v.require(di < kRoundTripTol && da < kRoundTripTol, name + " reverse");
  }
  v << names.size() << " fixtures, forward " << sci(fwd) << ", reverse " << sci(rev);
}

void flatness_taxonomy(Verdict& v) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected{
      {"product_so3", {"totally_flat", "leafwise_flat", "kernel_flat"}},
      {"principal_flat", {"kernel_flat"}},
      {"leafwise_flat", {"leafwise_flat"}},
  };
  for (const auto& [name, want] : expected) {
    std::vector<std::string> got = classify_flatness(resolve(name).coupling, kPlan).names();
    std::string joined;
    for (const auto& g : got) joined += (joined.empty() ? "" : ",") + g;
    v << name << "={" << joined << "} ";
    v.require(got == want, name);
  }
  int agree = 0, total = 0;
  std::vector<std::string> all = kValidCouplings;
  all.insert(all.end(), {"transitive_flat", "transitive_so3", "leafwise_flat"});
  for (const auto& name : all) {
    CouplingData cd = resolve(name).coupling;
    bool vanishes = im_max_abs(curvature_im(cd, kPlan)) < kFlatTol;
    bool flat = classify_flatness(cd, kPlan).totally_flat;
    ++total;
    if (vanishes == flat) ++agree;
    v.require(vanishes == flat, name + " curvature_im");
  }
  v << "curvature_im iff totally flat on " << agree << "/" << total;
}

void kernel_flat_two_form(Verdict& v) {
  for (const std::string name : {"principal_flat", "rank_one_coupling"}) {
    CouplingData cd = resolve(name).coupling;
    IMForm u2 = u_two_form(cd);
    double im = max_checks(check_im_form(u2, induced_representation(cd.base, cd.nabla), kPlan));
    std::vector<Section> vals;
    for (int a = 0; a < cd.base_rank(); ++a)
      for (int i = 0; i < cd.dim(); ++i) vals.push_back(u2.symbol(a).value(std::vector<int>{i}));
    double center = center_residual(cd.kbracket, cd.chart(), vals, kPlan);
    const int rb = cd.base_rank();
    AlgebroidCochain want(rb, cd.k(), 2);
    for (std::size_t t = 0; t < want.values.size(); ++t) {
      const auto& ab = increasing_tuples(rb, 2)[t];
      want.values[t] = cd.u_value(frame_section(rb, ab[0]), cd.base.anchor_of(frame_section(rb, ab[1])));
    }
    double chain = cochain_difference(cd.chart(), chain_map(u2), want, kPlan);
    v << name << " im=" << sci(im) << " center=" << sci(center) << " chain=" << sci(chain) << "; ";
    v.require(im < kKernelImTol && center < kCenterTol && chain < kChainTol, name);
  }
}

void transitive_uniqueness(Verdict& v) {
  for (const std::string name : {"transitive_flat", "transitive_so3"}) {
    Loaded l = resolve(name);
    const int n = l.algebroid.dim();
    ExprMatrix tau(l.algebroid.rank(), n);
    for (int i = 0; i < n; ++i) tau(l.k + i, i) = Expr(1.0);
    IMForm transitive = transitive_im_connection(l.algebroid, tau, kPlan);
    double d = im_form_difference(transitive, coupling_to_im(l.coupling, kPlan), kPlan);
    IdealBundle ideal(l.algebroid, l.k);
    double im = max_checks(check_im_form(transitive, canonical_representation(l.algebroid, ideal, kPlan), kPlan));
    v << name << " diff=" << sci(d) << " im=" << sci(im) << "; ";
    v.require(d < kUniqueTol && im < kImTol, name);
  }
}

void cartan_criterion(Verdict& v) {
  Loaded l = resolve("so3_radial");
  IdealBundle ideal(l.algebroid, l.k);
  Report im = check_im_form(*l.form, canonical_representation(l.algebroid, ideal, kPlan), kPlan);
  double worst = max_checks(im);
  bool predicate = im.flags.count("connection_predicate") && im.flags.at("connection_predicate");
  v << "im=" << sci(worst) << " connection=" << (predicate ? "yes" : "no");
  v.require(worst < kImTol && predicate, "radial form");

  ActionParams p = so3_radial_action();
  ExprMatrix pinv = inverse(p.frame);
  LieAlgebroid adapted = action_algebroid(p.chart, p.algebra, p.fields).change_frame(p.frame, pinv);
  LinearConnection conn = LinearConnection(3, 3).change_frame(p.frame, pinv);
  IdealBundle adapted_ideal(adapted, 1);
  ExprMatrix bad(1, 3);
  bad(0, 0) = Expr(1.0);
  bad(0, 1) = Expr::coordinate(1);
  double refused = cartan_preconditions(adapted, adapted_ideal, bad, conn, kPlan).residual("bar_nabla_l");
  bool threw = false;
  try {
    cartan_build_connection(adapted, adapted_ideal, bad, conn, kPlan);
  } catch (const PreconditionError&) {
    threw = true;
  }
  v << "; non-equivariant bar_nabla_l=" << sci(refused) << (threw ? " refused" : " accepted");
  v.require(refused > kRefuseFloor && threw, "non-equivariant splitting");
}

// Coupling on TM with k = R, nabla = d + d phi and U read off Omega = exp(-phi) d eta.
CouplingData random_rank_one(int n, int broken, std::mt19937_64& rng) {
  Chart chart(n);
  Expr phi = random_polynomial(n, 2, rng);
  std::vector<ExprMatrix> gamma;
  for (int i = 0; i < n; ++i) {
    ExprMatrix g(1, 1);
    g(0, 0) = differentiate(phi, i);
    gamma.push_back(g);
  }
  if (broken == 1) gamma[0](0, 0) = gamma[0](0, 0) + Expr::coordinate(1);
  CoeffForm eta(n, 1, 1);
  for (int i = 0; i < n; ++i) eta.at(static_cast<std::size_t>(i), 0) = random_polynomial(n, 2, rng);
  CoeffForm omega = exp(-phi) * exterior_derivative(eta);
  if (broken == 2) {
    std::vector<int> t{0, 1};
    omega.at(omega.tuple_index(t), 0) = omega.at(omega.tuple_index(t), 0) + Expr::coordinate(2);
  }
  CouplingData cd(tangent_algebroid(chart), FiberBracket(1), LinearConnection(n, 1, gamma));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) {
      std::vector<int> slots{a, i};
      cd.U(a, i, 0) = omega.component(slots, 0);
    }
  if (broken == 3) cd.U(0, 0, 0) = Expr(1.0);
  return cd;
}

void rank_one_equivalence(Verdict& v) {
  std::mt19937_64 rng(kPlan.seed);
  // (dimension, broken kind)
  const std::vector<std::pair<int, int>> plan{{2, 0}, {3, 0}, {2, 0}, {3, 0}, {2, 0},
                                              {3, 0}, {3, 0}, {2, 1}, {3, 2}, {2, 3}};
  const Expr h = exp(Expr::coordinate(0));
  int agree = 0, gauge = 0, expected = 0;
  for (std::size_t t = 0; t < plan.size(); ++t) {
    auto [n, broken] = plan[t];
    CouplingData cd = random_rank_one(n, broken, rng);
    RankOneData data = extract_rank_one(cd);
    bool trivialized = check_rank_one(data, kPlan).pass();
    bool intrinsic = check_structure_equations(cd, StructureVariant::S1S3, kPlan).pass();
    bool gauged = check_rank_one(gauge_transform(data, h), kPlan).pass();
    if (trivialized == intrinsic) ++agree;
    if (gauged == trivialized) ++gauge;
    if (intrinsic == (broken == 0)) ++expected;
    std::string id = "fixture " + std::to_string(t);
    v.require(trivialized == intrinsic, id + " verdicts");
    v.require(gauged == trivialized, id + " gauge");
    v.require(intrinsic == (broken == 0), id + " expected verdict");
  }
  v << "agree " << agree << "/10, gauge-invariant " << gauge << "/10, expected verdicts " << expected << "/10 with 3 broken";
}

struct GroupoidCase {
  std::string name;
  GroupoidSection section;
  MultForm alpha;
  LinearConnection conn;
};

GroupoidCase groupoid_case(const std::string& name) {
  ModelFile m = load(name);
  const GroupoidSection& g = *m.groupoid;
  return {name, g, connection_from_splitting(g.gpd, g.splitting, kPlan), splitting_connection(g.gpd, g.splitting)};
}

void groupoid_side(Verdict& v) {
  for (const std::string name : {"so2_trivial_groupoid", "so3_radial_groupoid"}) {
    GroupoidCase c = groupoid_case(name);
    const ActionGroupoid& gpd = c.section.gpd;
    MultForm omega = covariant_exterior_D(gpd, c.alpha, c.alpha, c.conn, c.section.fd);
    Report r = check_groupoid_properties(gpd, c.alpha, omega, c.conn, kPlan, c.section.fd);
    double da = delta_residual(gpd, c.alpha, 100, kPlan.seed);
    double st = r.residual("structure"), bi = r.residual("bianchi"), dw = r.residual("delta_Omega");
    Report halving = step_halving(gpd, c.alpha, c.conn, 0.1, 1e-6, 10, kPlan.seed);
    v << name << " delta_alpha=" << sci(da) << " structure=" << sci(st) << " bianchi=" << sci(bi)
      << " delta_Omega=" << sci(dw) << " halving=" << (halving.pass() ? "ok" : "no") << "; ";
    v.require(da < kDeltaAlphaTol && st < kGroupoidTol && bi < kGroupoidTol && dw < kGroupoidTol && halving.pass(),
              name);
  }
}

void lie_functor(Verdict& v) {
  for (const std::string name : {"so2_trivial_groupoid", "so3_radial_groupoid"}) {
    GroupoidCase c = groupoid_case(name);
    Report r = lie_functor_report(c.section.gpd, c.alpha, kPlan, kLieTol);
    double im = max_checks(r, "im:");
    double sc = std::max({r.residual("coupling:S1"), r.residual("coupling:S2"), r.residual("coupling:S3")});
    bool predicate = r.flags.count("connection_predicate") && r.flags.at("connection_predicate");
    v << name << " im=" << sci(im) << " S1-S3=" << sci(sc) << " connection=" << (predicate ? "yes" : "no") << "; ";
    v.require(im < kLieTol && sc < kLieTol && predicate, name);
  }
}

int cli(std::vector<std::string> args, std::string* out) {
  args.insert(args.begin(), "imtk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  return code;
}

void cli_determinism(Verdict& v) {
  const std::string good = g_fixtures + "/product_so3.json", bad = g_fixtures + "/bad_u.json";
  std::string a, b, c, d;
  int ca = cli({"classify", "--model", good, "--json"}, &a);
  int cb = cli({"classify", "--model", good, "--json"}, &b);
  int cc = cli({"check-structure", "--model", bad, "--json"}, &c);
  int cd = cli({"check-structure", "--model", bad, "--json"}, &d);
  v << "passing exit " << ca << "/" << cb << (a == b ? " identical" : " differ") << "; failing exit " << cc << "/"
    << cd << (c == d ? " identical" : " differ");
  v.require(a == b && c == d && !a.empty() && !c.empty(), "byte-identical");
  v.require(ca == cli::pass && cb == cli::pass && cc == cli::check_failed && cd == cli::check_failed, "exit codes");
  int unknown = cli({"frobnicate"}, nullptr);
  int missing = cli({"classify", "--model", g_fixtures + "/missing.json"}, nullptr);
  v << "; unknown subcommand " << unknown << ", model error " << missing;
  v.require(unknown == cli::usage && missing == cli::model, "error exit codes");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_fixtures = argv[1];
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"coupling soundness", coupling_soundness},
      {"round-trip exactness", round_trip},
      {"flatness taxonomy", flatness_taxonomy},
      {"kernel-flat IM 2-form", kernel_flat_two_form},
      {"transitive uniqueness", transitive_uniqueness},
      {"Cartan criterion", cartan_criterion},
      {"rank-one equivalence", rank_one_equivalence},
      {"groupoid side", groupoid_side},
      {"Lie functor", lie_functor},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v << " error: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.require(secs < kTimeBudget, "time budget");
    if (!v.pass) ++failed;
    char head[96];
    std::snprintf(head, sizeof head, "%s %2zu %-24s (%.2f s) ", v.pass ? "PASS" : "FAIL", i + 1,
                  criteria[i].first.c_str(), secs);
    std::cout << head << v.detail.str() << "\n";
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all passed")
            << "\n";
  return failed ? 1 : 0;
}
