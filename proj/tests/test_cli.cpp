// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "doctest.h"
#include "imtk/cli.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "imtk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = imtk::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(IMTK_FIXTURES) + "/" + name; }

const json* check(const json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("every library operation is reachable from a subcommand") {
  const std::vector<std::pair<std::string, std::string>> ops{
      {"expr-core", "parse"},
      {"expr-core", "differentiate"},
      {"expr-core", "evaluate"},
      {"bundle-geometry", "covariant_derivative"},
      {"bundle-geometry", "exterior_covariant_derivative"},
      {"bundle-geometry", "curvature_tensor"},
      {"bundle-geometry", "fiber_bracket_wedge"},
      {"algebroid-core", "bracket"},
      {"algebroid-core", "check_axioms"},
      {"algebroid-core", "canonical_representation"},
      {"algebroid-core", "lie_derivative_form"},
      {"algebroid-core", "check_A_invariant"},
      {"algebroid-core", "basic_curvature"},
      {"algebroid-core", "cartan_build_connection"},
      {"im-connections", "check_im_form"},
      {"im-connections", "extract_coupling"},
      {"im-connections", "coupling_to_im"},
      {"im-connections", "check_structure_equations"},
      {"im-connections", "build_semidirect"},
      {"im-connections", "curvature_im"},
      {"im-connections", "classify_flatness"},
      {"im-connections", "d_im"},
      {"im-connections", "chain_map"},
      {"rank-one", "extract_rank_one"},
      {"rank-one", "check_rank_one"},
      {"rank-one", "verify_witness"},
      {"example-factory", "make_example"},
      {"example-factory", "transitive_im_connection"},
      {"groupoid-harness", "connection_from_splitting"},
      {"groupoid-harness", "simplicial_delta"},
      {"groupoid-harness", "covariant_exterior_D"},
      {"groupoid-harness", "check_groupoid_properties"},
      {"groupoid-harness", "differentiate_to_im"},
      {"cli-io", "load_model"},
      {"cli-io", "run"},
  };
  const auto subs = imtk::cli::subcommands();
  CHECK(subs.size() == 12);
  for (const auto& [module, op] : ops) {
    CAPTURE(op);
    auto it = std::find_if(imtk::cli::coverage().begin(), imtk::cli::coverage().end(),
                           [&](const imtk::cli::Coverage& c) { return c.module == module && c.operation == op; });
    REQUIRE(it != imtk::cli::coverage().end());
    CHECK(std::find(subs.begin(), subs.end(), it->subcommand) != subs.end());
  }
  CHECK(imtk::cli::coverage().size() == ops.size());
}

TEST_CASE("classify the product fixture") {
  Run r = run({"classify", "--model", fixture("product_so3.json"), "--json"});
  CHECK(r.code == 0);
  REQUIRE(!r.out.empty());
  CHECK(r.out.back() == '\n');
  json j = json::parse(r.out);
  CHECK(j["flatness"] == json::array({"totally", "leafwise", "kernel"}));
  CHECK(j["pass"] == true);
  CHECK(j["schema"] == "imtk-report");
  CHECK(j["version"] == imtk::cli::kReportVersion);
  CHECK(j["seed"] == 42);
  CHECK(j["samples"] == 200);
}

TEST_CASE("classify the kernel-flat fixture") {
  Run r = run({"classify", "--model", fixture("principal_flat.json"), "--json"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["flatness"] == json::array({"kernel"}));
}

TEST_CASE("a non-closed U fails S3 with exit 1") {
  Run r = run({"check-structure", "--model", fixture("bad_u.json"), "--json"});
  CHECK(r.code == imtk::cli::check_failed);
  json j = json::parse(r.out);
  const json* s3 = check(j, "S3");
  REQUIRE(s3);
  CHECK((*s3)["pass"] == false);
  CHECK((*s3)["max_residual"].get<double>() > 1e-3);
  CHECK(j["pass"] == false);

  Run human = run({"check-structure", "--model", fixture("bad_u.json")});
  CHECK(human.code == 1);
  CHECK(human.out.find("S3") != std::string::npos);
  CHECK(human.out.find("FAIL") != std::string::npos);
}

TEST_CASE("lie functor on the radial groupoid") {
  Run r = run({"lie-functor", "--model", fixture("so3_radial_groupoid.json"), "--json"});
  CHECK(r.code == 0);
  json j = json::parse(r.out);
  for (const char* name : {"im:im_skew", "im:im_bracket_L", "im:im_bracket_l"}) {
    const json* c = check(j, name);
    REQUIRE(c);
    CHECK((*c)["max_residual"].get<double>() < 1e-6);
  }
  CHECK(j["flags"]["connection_predicate"] == true);
}

TEST_CASE("JSON reports are byte-identical across runs") {
  for (const char* f : {"product_so3.json", "bad_u.json", "so3_radial.json"}) {
    std::vector<std::string> args{"check-structure", "--model", fixture(f), "--json", "--seed", "7", "--samples", "50"};
    Run a = run(args), b = run(args);
    CHECK(a.out == b.out);
    CHECK(a.code == b.code);
    CHECK(json::parse(a.out)["seed"] == 7);
  }
  Run h = run({"check-structure", "--model", fixture("product_so3.json")});
  CHECK(h.out.find("wall time") != std::string::npos);
  Run j = run({"check-structure", "--model", fixture("product_so3.json"), "--json"});
  CHECK(j.out.find("wall") == std::string::npos);
}

TEST_CASE("report keys come in schema order") {
  Run r = run({"verify-algebroid", "--model", fixture("principal_flat.json"), "--json"});
  std::vector<std::size_t> pos;
  for (const char* k : {"\"schema\"", "\"version\"", "\"command\"", "\"seed\"", "\"samples\"", "\"discarded\"",
                        "\"checks\"", "\"flags\"", "\"notes\""})
    pos.push_back(r.out.find(k));
  CHECK(std::is_sorted(pos.begin(), pos.end()));
  CHECK(r.out.rfind("\"pass\"") > r.out.find("\"notes\""));
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == imtk::cli::usage);
  CHECK(run({"frobnicate"}).code == imtk::cli::usage);
  CHECK(run({"classify", "--samples", "-3", "--model", fixture("product_so3.json")}).code == imtk::cli::usage);
  CHECK(run({"classify"}).code == imtk::cli::usage);
  CHECK(run({"example", "nope"}).code == imtk::cli::usage);
  CHECK(run({"classify", "--model", fixture("missing.json")}).code == imtk::cli::model);
  CHECK(run({"--help"}).code == imtk::cli::pass);

  Run bad = run({"verify-im", "--model", fixture("so2_trivial_groupoid.json"), "--json"});
  CHECK(bad.code == imtk::cli::model);
  CHECK(json::parse(bad.out)["error"]["kind"] == "schema");
}

TEST_CASE("tolerance override re-grades every check") {
  Run r = run({"check-structure", "--model", fixture("bad_u.json"), "--tol", "2", "--json"});
  CHECK(r.code == 0);
  for (const auto& c : json::parse(r.out)["checks"]) CHECK(c["tolerance"] == 2.0);
}

TEST_CASE("passing subcommands on the shipped fixtures") {
  const std::vector<std::vector<std::string>> runs{
      {"verify-algebroid", "product_so3.json"},        {"verify-ideal", "so3_radial.json"},
      {"verify-im", "so3_radial.json"},                {"coupling", "so3_radial.json", "--roundtrip"},
      {"coupling", "principal_so3.json", "--roundtrip"}, {"check-structure", "principal_flat.json", "--kernel-flat"},
      {"build-semidirect", "principal_so3.json"},      {"curvature", "principal_flat.json"},
      {"classify", "so3_radial.json"},                 {"rank-one", "principal_flat.json"},
      {"groupoid-verify", "so2_trivial_groupoid.json"}, {"lie-functor", "so2_trivial_groupoid.json"},
      {"verify-im", "transitive_so3.json"},
  };
  for (const auto& v : runs) {
    std::vector<std::string> args{v[0], "--model", fixture(v[1]), "--json"};
    args.insert(args.end(), v.begin() + 2, v.end());
    CAPTURE(v[0]);
    CAPTURE(v[1]);
    Run r = run(args);
    CHECK(r.code == 0);
    CHECK(json::parse(r.out)["pass"] == true);
  }
}

TEST_CASE("rank-one witnesses and gauge") {
  Run r = run({"rank-one", "--model", fixture("rank_one_closed_v.json"), "--witness", "product", "--gauge", "exp(x1)",
               "--json"});
  CHECK(r.code == 0);
  json j = json::parse(r.out);
  CHECK(check(j, "witness:c1"));
  CHECK(check(j, "gauge_agreement"));

  Run p = run({"rank-one", "--model", fixture("principal_flat_witness.json"), "--witness", "principal_type"});
  CHECK(p.code == 0);

  Run broken = run({"rank-one", "--model", fixture("bad_u.json"), "--json"});
  CHECK(broken.code == 1);
  json b = json::parse(broken.out);
  CHECK((*check(b, "verdict_agreement"))["pass"] == true);
  CHECK((*check(b, "S3''"))["pass"] == false);

  CHECK(run({"rank-one", "--model", fixture("product_so3.json")}).code == imtk::cli::model);
  CHECK(run({"rank-one", "--model", fixture("principal_flat.json"), "--witness", "sideways"}).code ==
        imtk::cli::model);
}

TEST_CASE("example subcommand") {
  std::set<std::string> names{"product_so3",    "so3_radial",          "principal_flat",     "principal_so3",
                              "transitive_flat", "transitive_so3",     "so2_trivial_groupoid", "so3_radial_groupoid"};
  for (const auto& n : names) {
    CAPTURE(n);
    Run r = run({"example", n, "--json"});
    CHECK(r.code == 0);
  }
  Run e = run({"example", "product_so3", "--emit"});
  CHECK(e.code == 0);
  std::ifstream in(fixture("product_so3.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(e.out == ss.str());

  Run m = run({"example", "--model", fixture("rank_one_closed_v.json"), "--json"});
  CHECK(m.code == 0);
  CHECK(json::parse(m.out)["sections"] == json::array({"chart", "algebroid", "ideal", "rank_one_witness"}));
}

TEST_CASE("semidirect emission reloads") {
  Run e = run({"build-semidirect", "--model", fixture("principal_flat.json"), "--emit"});
  CHECK(e.code == 0);
  json j = json::parse(e.out);
  CHECK(j["algebroid"]["rank"] == 3);
  CHECK(j.contains("coupling"));
}
