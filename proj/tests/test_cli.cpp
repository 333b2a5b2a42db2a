#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "otlab/cli.hpp"
#include "otlab/io.hpp"

using namespace otlab;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// run the CLI capturing stdout
int run_captured(const std::vector<std::string>& args, std::string* out) {
  std::stringstream buf;
  auto* old = std::cout.rdbuf(buf.rdbuf());
  int code = run_cli(args);
  std::cout.rdbuf(old);
  *out = buf.str();
  return code;
}

// minimal structural validation against the shipped schema
json load_schema() {
  for (const char* p : {"schemas/otlab-output.schema.json", "../schemas/otlab-output.schema.json",
                        "../../schemas/otlab-output.schema.json",
                        "../../../schemas/otlab-output.schema.json"}) {
    std::ifstream in(p);
    if (in.good()) return json::parse(in);
  }
  FAIL("schema file not found");
  return {};
}

void validate_schema(const json& doc) {
  static json schema = load_schema();
  REQUIRE(doc.is_object());
  for (const auto& req : schema["required"]) {
    CAPTURE(req.get<std::string>());
    CHECK(doc.contains(req.get<std::string>()));
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!schema["properties"].contains(it.key())) continue;
    const json& spec = schema["properties"][it.key()];
    if (!spec.contains("type")) continue;
    std::string t = spec["type"];
    CAPTURE(it.key());
    if (t == "string") CHECK(it->is_string());
    if (t == "number") CHECK(it->is_number());
    if (t == "integer") CHECK(it->is_number_integer());
    if (t == "boolean") CHECK(it->is_boolean());
    if (t == "object") CHECK(it->is_object());
    if (t == "array") CHECK(it->is_array());
  }
}

std::string tmp(const std::string& name) { return "/tmp/otlab_cli_" + name; }

void make_uniform_file(const std::string& path, int n) {
  auto dom = Domain::interval(0.0, 1.0, n);
  DensityGrid d(dom, std::vector<double>(n, 1.0));
  save_density(d, path);
}

void make_cos_field_file(const std::string& path, int n) {
  auto dom = Domain::interval(0.0, 1.0, n);
  ScalarField h(dom, 0.0);
  for (int i = 0; i < n; ++i) h.v[i] = std::cos(kPi * dom->mesh().node[i].x);
  save_field(h, path);
}

}  // namespace

TEST_CASE("cli: d2 of identical densities is zero, envelope validates") {
  make_uniform_file(tmp("u.dat"), 400);
  std::string out;
  int code = run_captured({"d2", "--mu", tmp("u.dat"), "--nu", tmp("u.dat"), "--backend", "exact",
                           "--json"},
                          &out);
  CHECK(code == 0);
  json env = json::parse(out);
  validate_schema(env);
  CHECK(env["d2"].get<double>() <= 1e-9);
  CHECK(env.contains("timings"));
}

TEST_CASE("cli: sharpness sweep emits a monotone csv, svg, and is deterministic") {
  std::string out;
  int code = run_captured({"sharpness", "--p", "2", "--eta", "0.9", "--eps", "1e-1,1e-2,1e-3",
                           "--out", tmp("sharp.csv"), "--svg", tmp("sharp.svg"), "--json"},
                          &out);
  CHECK(code == 0);
  std::string csv = slurp(tmp("sharp.csv"));
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "eps,map_gap_sup,dens_gap_sup,ratio");
  std::vector<double> ratios;
  std::string line;
  while (std::getline(lines, line)) {
    auto last = line.rfind(',');
    ratios.push_back(std::stod(line.substr(last + 1)));
  }
  REQUIRE(ratios.size() == 3);
  CHECK(ratios[0] < ratios[1]);
  CHECK(ratios[1] < ratios[2]);
  CHECK(slurp(tmp("sharp.csv") + ".header.txt").find("eps") != std::string::npos);
  CHECK(slurp(tmp("sharp.svg")).find("<svg") == 0);

  // byte-identical rerun
  run_captured({"sharpness", "--p", "2", "--eta", "0.9", "--eps", "1e-1,1e-2,1e-3", "--out",
                tmp("sharp2.csv")},
               &out);
  CHECK(slurp(tmp("sharp2.csv")) == csv);
}

TEST_CASE("cli: path slice writes a loadable density") {
  make_uniform_file(tmp("p0.dat"), 300);
  auto dom = Domain::interval(0.0, 1.0, 300);
  std::vector<double> v(300);
  for (int i = 0; i < 300; ++i) v[i] = 2.0 * dom->mesh().node[i].x;
  save_density(DensityGrid(dom, v), tmp("p1.dat"));
  std::string out;
  int code = run_captured({"path", "--kind", "linear", "--f0", tmp("p0.dat"), "--f1", tmp("p1.dat"),
                           "--t", "0.5", "--out", tmp("slice.dat")},
                          &out);
  CHECK(code == 0);
  DensityGrid slice = load_density(tmp("slice.dat"));
  for (int i = 0; i < 300; i += 61) {
    double x = dom->mesh().node[i].x;
    CHECK(slice.values()[i] == doctest::Approx(0.5 * (1.0 + 2.0 * x)).epsilon(1e-12));
  }
}

TEST_CASE("cli: response run emits the field and a schema-valid diagnostic") {
  make_uniform_file(tmp("rf.dat"), 800);
  make_cos_field_file(tmp("rh.dat"), 800);
  json pf{{"kind", "multiplicative"}, {"f", tmp("rf.dat")}, {"h", tmp("rh.dat")}};
  json pg{{"kind", "linear"}, {"f0", tmp("rf.dat")}, {"f1", tmp("rf.dat")}};
  std::ofstream(tmp("pf.json")) << pf.dump();
  std::ofstream(tmp("pg.json")) << pg.dump();
  std::string out;
  int code = run_captured({"response", "--path-f", tmp("pf.json"), "--path-g", tmp("pg.json"),
                           "--t", "0", "--out", tmp("xi.dat"), "--diag", tmp("diag.json")},
                          &out);
  CHECK(code == 0);
  ScalarField xi = load_field(tmp("xi.dat"));
  CHECK(xi.v.size() == 800);
  json diag = json::parse(slurp(tmp("diag.json")));
  validate_schema(diag);
  CHECK(std::abs(diag["compatibility"].get<double>()) < 1e-10);
}

TEST_CASE("cli: second-variation config reproduces the cosine value") {
  make_uniform_file(tmp("svf.dat"), 2000);
  make_cos_field_file(tmp("svh.dat"), 2000);
  auto dom = Domain::interval(0.0, 1.0, 2000);
  save_field(ScalarField(dom, 0.0), tmp("svk.dat"));
  json cfg{{"f", tmp("svf.dat")}, {"g", tmp("svf.dat")}, {"h", tmp("svh.dat")},
           {"k", tmp("svk.dat")}, {"delta_t", 1e-2},     {"backend", "exact1d"}};
  std::ofstream(tmp("sv.json")) << cfg.dump();
  std::string out;
  int code = run_captured(
      {"second-variation", "--config", tmp("sv.json"), "--out", tmp("svrep.json"), "--json"}, &out);
  CHECK(code == 0);
  json rep = json::parse(slurp(tmp("svrep.json")));
  validate_schema(rep);
  CHECK(rep["formula_value"].get<double>() == doctest::Approx(0.0506606).epsilon(2e-3));
  CHECK(rep["relative_gap"].get<double>() <= 1e-3);

  // unknown config keys are rejected
  cfg["typo_key"] = 1;
  std::ofstream(tmp("svbad.json")) << cfg.dump();
  code = run_captured({"second-variation", "--config", tmp("svbad.json")}, &out);
  CHECK(code == 2);
}

TEST_CASE("cli: stability sweep csv is sorted and deterministic") {
  json cfg{{"n", 1000}, {"seed", 11}, {"steps", {0.3, 0.1, 0.2}}};
  std::ofstream(tmp("fam.json")) << cfg.dump();
  std::string out;
  int code = run_captured({"stability", "--theorem", "1.2", "--family", "piecewise", "--config",
                           tmp("fam.json"), "--csv", tmp("stab.csv"), "--out", tmp("stab.json")},
                          &out);
  CHECK(code == 0);
  json rep = json::parse(slurp(tmp("stab.json")));
  validate_schema(rep);
  std::string csv1 = slurp(tmp("stab.csv"));
  // sorted rows despite the shuffled config order
  std::istringstream lines(csv1);
  std::string line;
  std::getline(lines, line);
  double prev = -1;
  while (std::getline(lines, line)) {
    double p = std::stod(line.substr(0, line.find(',')));
    CHECK(p > prev);
    prev = p;
  }
  code = run_captured({"stability", "--theorem", "1.2", "--family", "piecewise", "--config",
                       tmp("fam.json"), "--csv", tmp("stab2.csv")},
                      &out);
  CHECK(code == 0);
  CHECK(slurp(tmp("stab2.csv")) == csv1);
}

TEST_CASE("cli: identities suite reports a positive magic slope") {
  std::string out;
  int code = run_captured({"identities", "--nr", "12", "--out", tmp("ident.json"), "--json"}, &out);
  CHECK(code == 0);
  json rep = json::parse(slurp(tmp("ident.json")));
  validate_schema(rep);
  CHECK(rep["magic_residual"]["slope"].get<double>() > 0.8);
  CHECK(rep["boundary_normal_residual_identity"].get<double>() < 1e-8);
  CHECK(rep["cofactor_divergence_sup_quadratic"].get<double>() < 1e-10);
}

TEST_CASE("cli: empty report writes a header-only csv") {
  write_csv(tmp("empty.csv"), {"a", "b"}, {}, {"first", "second"});
  CHECK(slurp(tmp("empty.csv")) == "a,b\n");
  CHECK(slurp(tmp("empty.csv") + ".header.txt").find("first") != std::string::npos);
}

TEST_CASE("cli: exit codes distinguish bad input from solver failure") {
  std::string out;
  CHECK(run_captured({"d2", "--mu", "/tmp/otlab_missing.dat", "--nu", "/tmp/otlab_missing.dat"},
                     &out) == 2);
  CHECK(run_captured({"d2", "--mu", tmp("u.dat"), "--nu", tmp("u.dat"), "--bogus-flag"}, &out) ==
        2);
  CHECK(run_captured({"no-such-subcommand"}, &out) == 2);

  // sinkhorn starved of sweeps reports a solver failure
  make_uniform_file(tmp("sa.dat"), 100);
  CHECK(run_captured({"d2", "--mu", tmp("sa.dat"), "--nu", tmp("sa.dat"), "--backend", "sinkhorn",
                      "--eps", "1e-4", "--tol", "1e-14", "--max-sweeps", "2"},
                     &out) == 3);
}
