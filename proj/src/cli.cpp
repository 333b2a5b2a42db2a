#include "otlab/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "otlab/experiments.hpp"
#include "otlab/io.hpp"
#include "otlab/linear_response.hpp"
#include "otlab/second_variation.hpp"

namespace otlab {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::config_error, "config '" + path + "': " + e.what());
  }
  return j;
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || it.key() == k;
    require(ok, ErrorCode::config_error, where + ": unknown key '" + it.key() + "'");
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  require(out.good(), ErrorCode::io_error, "short write to '" + path + "'");
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// stdout envelope; timings stay here and never enter the deterministic files
void emit_envelope(const std::string& backend, std::uint64_t seed, const Stopwatch& sw,
                   json extra) {
  json env;
  env["version"] = kVersion;
  env["seed"] = seed;
  env["backend"] = backend;
  env["timings"] = {{"total_s", sw.seconds()}};
  for (auto it = extra.begin(); it != extra.end(); ++it) env[it.key()] = *it;
  std::cout << env.dump() << "\n";
}

DensityPath load_path_config(const std::string& path) {
  json j = load_json(path);
  reject_unknown_keys(j, {"kind", "f0", "f1", "f", "h", "backend", "eps"}, path);
  require(j.contains("kind"), ErrorCode::config_error, path + ": missing 'kind'");
  std::string kind = j["kind"];
  if (kind == "linear" || kind == "geodesic") {
    require(j.contains("f0") && j.contains("f1"), ErrorCode::config_error,
            path + ": " + kind + " paths need 'f0' and 'f1'");
    DensityGrid f0 = load_density(j["f0"]);
    DensityGrid f1 = load_density(j["f1"]);
    if (kind == "linear") return DensityPath::linear(std::move(f0), std::move(f1));
    GeodesicOptions opt;
    if (j.value("backend", "exact") == std::string("sinkhorn")) {
      opt.backend = OtBackend::sinkhorn;
      opt.sk.eps = j.value("eps", 1e-2);
    }
    return DensityPath::geodesic(std::move(f0), std::move(f1), opt);
  }
  if (kind == "multiplicative") {
    require(j.contains("f") && j.contains("h"), ErrorCode::config_error,
            path + ": multiplicative paths need 'f' and 'h'");
    DensityGrid f = load_density(j["f"]);
    ScalarField h = load_field(j["h"]);
    return DensityPath::multiplicative(std::move(f), std::move(h));
  }
  fail(ErrorCode::config_error, path + ": unknown path kind '" + kind + "'");
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t at = 0;
  while (at < csv.size()) {
    std::size_t comma = csv.find(',', at);
    if (comma == std::string::npos) comma = csv.size();
    out.push_back(std::stod(csv.substr(at, comma - at)));
    at = comma + 1;
  }
  require(!out.empty(), ErrorCode::config_error, "empty list '" + csv + "'");
  return out;
}

json stability_to_json(const StabilityReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"perturbation", r.perturbation},
                    {"lhs", r.lhs},
                    {"lhs2", r.lhs2},
                    {"rhs", r.rhs},
                    {"ratio", r.ratio},
                    {"ratio2", r.ratio2},
                    {"ok", r.ok},
                    {"note", r.note}});
  }
  return json{{"version", kVersion},
              {"theorem", rep.theorem},
              {"family", rep.family},
              {"seed", rep.seed},
              {"backend", rep.backend},
              {"rows", rows}};
}

void stability_to_csv(const StabilityReport& rep, const std::string& path) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : rep.rows)
    rows.push_back({r.perturbation, r.lhs, r.lhs2, r.rhs, r.ratio, r.ratio2});
  write_csv(path, {"perturbation", "lhs", "lhs2", "rhs", "ratio", "ratio2"}, rows,
            {"perturbation size of the family instance",
             "primary left-hand norm of the bound",
             "secondary left-hand norm (plans or gradients), 0 if unused",
             "right-hand combination of the bound",
             "lhs / rhs (0 when rhs vanishes)",
             "lhs2 / rhs^exponent (0 when unused)"});
}

int cmd_d2(const std::string& mu_path, const std::string& nu_path, const std::string& backend,
           double eps, double tol, int max_sweeps, bool as_json, const std::string& out) {
  Stopwatch sw;
  DensityGrid mu = load_density(mu_path);
  DensityGrid nu = load_density(nu_path);
  D2Result r;
  if (backend == "exact") {
    r = d2_discrete(mu, nu, OtBackend::exact);
  } else if (backend == "sinkhorn") {
    SinkhornParams sk;
    sk.eps = eps;
    sk.tol = tol;
    if (max_sweeps > 0) sk.max_sweeps = max_sweeps;
    r = d2_discrete(mu, nu, OtBackend::sinkhorn, sk);
  } else {
    fail(ErrorCode::config_error, "--backend must be exact or sinkhorn");
  }
  json body{{"d2", r.d2},
            {"cost", r.cost},
            {"backend", r.backend},
            {"eps", r.eps},
            {"debiased", r.debiased},
            {"marginal_violation", r.marginal_violation},
            {"atoms", {r.atoms_mu, r.atoms_nu}}};
  if (!out.empty()) {
    json file = body;
    file["version"] = kVersion;
    file["seed"] = 0;
    write_json_file(file, out);
  }
  if (as_json)
    emit_envelope(r.backend, 0, sw, body);
  else
    std::cout << "d2 = " << fmt(r.d2) << " (" << r.backend << ")\n";
  return 0;
}

int cmd_sharpness(double p, double eta, const std::string& eps_csv, const std::string& out,
                  const std::string& svg, bool as_json) {
  Stopwatch sw;
  auto eps_list = parse_list(eps_csv);
  auto rows = counterexample_sweep(p, eta, eps_list);
  std::vector<std::vector<double>> table;
  for (const auto& r : rows) table.push_back({r.eps, r.map_gap_sup, r.dens_gap_sup, r.ratio});
  if (!out.empty())
    write_csv(out, {"eps", "map_gap_sup", "dens_gap_sup", "ratio"}, table,
              {"family parameter eps, a = 1/(2(1-eps))",
               "sup |G_a^{-1} - G_{1/2}^{-1}| over [0,1]",
               "sup |g_a - g_{1/2}| over [0,1]",
               "map_gap_sup / dens_gap_sup^eta"});
  if (!svg.empty()) {
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      xs.push_back(r.eps);
      ys.push_back(r.ratio);
    }
    write_svg_line(svg, xs, ys, true, "sharpness ratio vs eps");
  }
  json body{{"rows", table.size()}, {"p", p}, {"eta", eta}};
  if (as_json) emit_envelope("closed-form", 0, sw, body);
  return 0;
}

int cmd_path(const std::string& kind, const std::string& f0p, const std::string& f1p,
             const std::string& hp, double t, const std::string& out, bool as_json) {
  Stopwatch sw;
  json cfg{{"kind", kind}};
  DensityGrid slice = [&] {
    if (kind == "multiplicative") {
      require(!hp.empty(), ErrorCode::config_error, "multiplicative paths need --hfield");
      DensityGrid f = load_density(f0p);
      ScalarField h = load_field(hp);
      return DensityPath::multiplicative(std::move(f), std::move(h)).at(t);
    }
    DensityGrid f0 = load_density(f0p);
    require(!f1p.empty(), ErrorCode::config_error, kind + " paths need --f1");
    DensityGrid f1 = load_density(f1p);
    if (kind == "linear") return DensityPath::linear(std::move(f0), std::move(f1)).at(t);
    require(kind == "geodesic", ErrorCode::config_error, "unknown path kind '" + kind + "'");
    return DensityPath::geodesic(std::move(f0), std::move(f1)).at(t);
  }();
  require(!out.empty(), ErrorCode::config_error, "path needs --out");
  save_density(slice, out);
  if (as_json) emit_envelope("exact", 0, sw, json{{"t", t}, {"out", out}});
  return 0;
}

int cmd_response(const std::string& pf_path, const std::string& pg_path, double t,
                 const std::string& out, const std::string& diag_path,
                 const std::string& backend, double eps, bool as_json) {
  Stopwatch sw;
  DensityPath pf = load_path_config(pf_path);
  DensityPath pg = load_path_config(pg_path);
  DensityGrid ft = pf.at(t);
  DensityGrid gt = pg.at(t);
  PotentialOptions popt;
  if (backend == "sinkhorn") {
    popt.backend = OtBackend::sinkhorn;
    popt.sk.eps = eps;
  } else {
    require(backend == "exact", ErrorCode::config_error, "--backend must be exact or sinkhorn");
  }
  PotentialField phi = potential_between(ft, gt, popt);
  ResponseField xi = solve_response(pf, pg, phi, t);
  require(!out.empty(), ErrorCode::config_error, "response needs --out");
  save_field(xi.xi, out);
  json diag{{"version", kVersion},
            {"seed", 0},
            {"iterations", xi.diag.iterations},
            {"residual", xi.diag.residual},
            {"compatibility", xi.diag.compatibility},
            {"compatibility_raw", xi.diag.compatibility_raw},
            {"clamp_rate", xi.diag.clamp_rate}};
  if (!diag_path.empty()) write_json_file(diag, diag_path);
  if (as_json) emit_envelope(backend, 0, sw, diag);
  return 0;
}

int cmd_second_variation(const std::string& cfg_path, const std::string& out, bool as_json) {
  Stopwatch sw;
  json cfg = load_json(cfg_path);
  reject_unknown_keys(cfg, {"f", "g", "h", "k", "delta_t", "backend", "eps", "tol", "potential"},
                      cfg_path);
  for (const char* key : {"f", "g", "h", "k"})
    require(cfg.contains(key), ErrorCode::config_error,
            cfg_path + std::string(": missing '") + key + "'");
  DensityGrid f = load_density(cfg["f"]);
  DensityGrid g = load_density(cfg["g"]);
  ScalarField h = load_field(cfg["h"]);
  ScalarField k = load_field(cfg["k"]);
  double delta_t = cfg.value("delta_t", 1e-2);
  auto pf = DensityPath::multiplicative(std::move(f), std::move(h));
  auto pg = DensityPath::multiplicative(std::move(g), std::move(k));

  PotentialOptions popt;
  std::string pot_backend = cfg.value("potential", "exact");
  if (pot_backend == "sinkhorn") {
    popt.backend = OtBackend::sinkhorn;
    popt.sk.eps = cfg.value("eps", 1e-2);
  }
  PotentialField phi;
  const DensityGrid f0 = pf.at(0.0), g0 = pg.at(0.0);
  if (f0.domain()->dim() == 1) {
    Map1D t_map = brenier_map_1d(f0, g0);
    phi.phi = ScalarField(f0.domain(), 0.0);
    phi.grad = VectorField(f0.domain());
    for (int i = 0; i < f0.domain()->mesh().cell_count(); ++i)
      phi.grad.v[i] = {t_map.t[i], 0.0};
    double acc = 0.0;
    double hstep = f0.domain()->spacing();
    for (int i = 1; i < f0.domain()->mesh().cell_count(); ++i) {
      acc += 0.5 * (t_map.t[i - 1] + t_map.t[i]) * hstep;
      phi.phi.v[i] = acc;
    }
    double mean = quadrature(phi.phi) / f0.domain()->volume();
    for (auto& v : phi.phi.v) v -= mean;
    phi.hess_raw = hessian_of(phi.grad);
    phi.hess = phi.hess_raw;
    ClampBracket br = remark_bracket(f0, g0);
    phi.clamp_rate = phi.hess.clamp(br.lambda_floor, br.lambda_cap);
  } else {
    phi = potential_between(f0, g0, popt);
  }

  D2Backend backend;
  std::string bk = cfg.value("backend", "auto");
  if (bk == "auto") {
    backend = auto_backend(f0, g0);
  } else if (bk == "exact1d") {
    backend.kind = D2Backend::Kind::exact1d;
  } else if (bk == "lp") {
    backend.kind = D2Backend::Kind::lp;
  } else if (bk == "sinkhorn") {
    backend.kind = D2Backend::Kind::sinkhorn;
    backend.sk.eps = cfg.value("eps", 1e-2);
    backend.sk.tol = cfg.value("tol", 1e-7);
  } else {
    fail(ErrorCode::config_error, cfg_path + ": unknown backend '" + bk + "'");
  }
  auto rep = validate(pf, pg, phi, delta_t, backend);
  json body{{"version", kVersion},
            {"seed", 0},
            {"backend", rep.backend},
            {"formula_value", rep.formula_value},
            {"fd_value", rep.fd_value},
            {"fd_value_coarse", rep.fd_value_coarse},
            {"delta_t", rep.delta_t},
            {"relative_gap", rep.relative_gap}};
  if (!out.empty()) write_json_file(body, out);
  if (as_json) emit_envelope(rep.backend, 0, sw, body);
  return 0;
}

int cmd_stability(const std::string& theorem, const std::string& family,
                  const std::string& cfg_path, const std::string& csv, const std::string& out_json,
                  bool as_json) {
  Stopwatch sw;
  json cfg = cfg_path.empty() ? json::object() : load_json(cfg_path);
  reject_unknown_keys(cfg,
                      {"shifts", "ts", "steps", "eps_list", "n", "seed", "alpha", "p", "eta",
                       "with_plans", "plan_cells"},
                      cfg_path.empty() ? "config" : cfg_path);
  int n = cfg.value("n", 2000);
  std::uint64_t seed = cfg.value("seed", 0);
  StabilityReport rep;
  if (theorem == "1.1" && family == "translation") {
    auto shifts = cfg.value("shifts", std::vector<double>{0.02, 0.05, 0.1, 0.15, 0.2});
    rep = thm11_translation_sweep(shifts, n, cfg.value("with_plans", false),
                                  cfg.value("plan_cells", 48));
  } else if (theorem == "1.1" && family == "multiplicative") {
    auto ts = cfg.value("ts", std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4});
    rep = thm11_multiplicative_sweep(ts, n);
  } else if (theorem == "1.2" && family == "piecewise") {
    auto steps = cfg.value("steps", std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4});
    rep = thm12_piecewise_sweep(steps, n, seed);
  } else if (theorem == "1.3" && family == "smooth") {
    auto ts = cfg.value("ts", std::vector<double>{0.05, 0.1, 0.2, 0.4});
    rep = thm13_smooth_sweep(ts, cfg.value("alpha", 0.5), n, seed);
  } else if (theorem == "1.3" && family == "counterexample") {
    auto eps_list = cfg.value("eps_list", std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    rep = thm13_counterexample_control(cfg.value("p", 2.0), cfg.value("eta", 0.9), eps_list);
  } else {
    fail(ErrorCode::config_error,
         "no family '" + family + "' for theorem " + theorem +
             " (try translation|multiplicative|piecewise|smooth|counterexample)");
  }
  rep.seed = seed;
  if (!csv.empty()) stability_to_csv(rep, csv);
  if (!out_json.empty()) write_json_file(stability_to_json(rep), out_json);
  if (as_json)
    emit_envelope(rep.backend, seed, sw,
                  json{{"theorem", rep.theorem}, {"family", rep.family}, {"rows", rep.rows.size()}});
  return 0;
}

int cmd_identities(int nr, const std::string& out, bool as_json) {
  Stopwatch sw;
  require(nr >= 8, ErrorCode::config_error, "--nr must be at least 8");
  // magic identity on Monge-Ampere-consistent synthetic data, two grids
  auto magic_at = [](int m) {
    auto dom = Domain::disk({0, 0}, 1.0, m, 2 * m);
    auto tgt = Domain::disk({0, 0}, 1.35, m, 2 * m);
    int n = dom->mesh().cell_count();
    auto gfun = [](Vec2 y) { return 1.0 + 0.3 * std::exp(-norm2(y)); };
    std::vector<double> gv(tgt->mesh().cell_count());
    for (int i = 0; i < tgt->mesh().cell_count(); ++i) gv[i] = gfun(tgt->mesh().node[i]);
    DensityGrid g(tgt, gv);
    double gmass = g.raw_mass();
    std::vector<double> fv(n);
    PotentialField phi;
    phi.phi = ScalarField(dom, 0.0);
    phi.grad = VectorField(dom);
    for (int i = 0; i < n; ++i) {
      Vec2 p = dom->mesh().node[i];
      phi.phi.v[i] = 0.5 * norm2(p) + 0.1 * std::cos(p.x) * std::sin(p.y);
      phi.grad.v[i] = {p.x - 0.1 * std::sin(p.x) * std::sin(p.y),
                       p.y + 0.1 * std::cos(p.x) * std::cos(p.y)};
      Sym2 H{1.0 - 0.1 * std::cos(p.x) * std::sin(p.y), -0.1 * std::sin(p.x) * std::cos(p.y),
             1.0 - 0.1 * std::cos(p.x) * std::sin(p.y)};
      fv[i] = (gfun(phi.grad.v[i]) / gmass) * H.det();
    }
    DensityGrid f(dom, fv);
    phi.hess_raw = hessian_of(phi.grad);
    phi.hess = phi.hess_raw;
    phi.clamp_rate = phi.hess.clamp(0.3, 3.0);
    ScalarField xi(dom, 0.0);
    for (int i = 0; i < n; ++i) {
      Vec2 p = dom->mesh().node[i];
      xi.v[i] = std::sin(p.x) * std::cos(1.3 * p.y);
    }
    return magic_residual(f, g, phi, xi);
  };
  double m1 = magic_at(nr), m2 = magic_at(2 * nr);

  auto dom = Domain::disk({0, 0}, 1.0, nr, 2 * nr);
  PotentialField quad;
  quad.phi = ScalarField(dom, 0.0);
  quad.grad = VectorField(dom);
  for (int i = 0; i < dom->mesh().cell_count(); ++i) {
    Vec2 p = dom->mesh().node[i];
    quad.phi.v[i] = 0.7 * p.x * p.x + 0.4 * p.y * p.y + 0.2 * p.x * p.y;
    quad.grad.v[i] = {1.4 * p.x + 0.2 * p.y, 0.2 * p.x + 0.8 * p.y};
  }
  quad.hess_raw = hessian_of(quad.grad);
  quad.hess = quad.hess_raw;
  auto cof = cofactor_divergence(quad);
  double cof_sup = 0.0;
  for (const auto& v : cof.v) cof_sup = std::max(cof_sup, norm(v));

  PotentialField idpot;
  idpot.phi = ScalarField(dom, 0.0);
  idpot.grad = VectorField(dom);
  for (int i = 0; i < dom->mesh().cell_count(); ++i) {
    Vec2 p = dom->mesh().node[i];
    idpot.phi.v[i] = 0.5 * norm2(p);
    idpot.grad.v[i] = p;
  }
  idpot.hess_raw = hessian_of(idpot.grad);
  idpot.hess = idpot.hess_raw;
  double bn = boundary_normal_residual(idpot, dom, dom);

  json body{{"version", kVersion},
            {"seed", 0},
            {"magic_residual", {{"coarse", m1}, {"fine", m2}, {"slope", std::log2(m1 / m2)}}},
            {"cofactor_divergence_sup_quadratic", cof_sup},
            {"boundary_normal_residual_identity", bn}};
  if (!out.empty()) write_json_file(body, out);
  if (as_json) emit_envelope("grid", 0, sw, body);
  return 0;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows,
               const std::vector<std::string>& column_docs) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write '" + path + "'");
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    require(row.size() == columns.size(), ErrorCode::config_error, "csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
    out << "\n";
  }
  require(out.good(), ErrorCode::io_error, "short write to '" + path + "'");
  std::ofstream doc(path + ".header.txt");
  require(doc.good(), ErrorCode::io_error, "cannot write '" + path + ".header.txt'");
  for (std::size_t i = 0; i < columns.size(); ++i)
    doc << columns[i] << ": " << (i < column_docs.size() ? column_docs[i] : "") << "\n";
}

void write_svg_line(const std::string& path, const std::vector<double>& xs,
                    const std::vector<double>& ys, bool log_x, const std::string& title) {
  require(xs.size() == ys.size(), ErrorCode::config_error, "svg series length mismatch");
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write '" + path + "'");
  const double W = 640, H = 420, L = 70, B = 50, T = 30, R = 20;
  auto tx = [&](double x) { return log_x ? std::log10(std::max(x, 1e-300)) : x; };
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xmin = std::min(xmin, tx(xs[i]));
    xmax = std::max(xmax, tx(xs[i]));
    ymin = std::min(ymin, ys[i]);
    ymax = std::max(ymax, ys[i]);
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - B - T); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << (log_x ? " (log x)" : "") << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) out << fmt(px(xs[i])) << "," << fmt(py(ys[i])) << " ";
  out << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << fmt(px(xs[i])) << "\" cy=\"" << fmt(py(ys[i]))
        << "\" r=\"3\" fill=\"firebrick\"/>\n";
  char lab[64];
  std::snprintf(lab, sizeof lab, "%.3g .. %.3g", xs.empty() ? 0.0 : xs.front(),
                xs.empty() ? 0.0 : xs.back());
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"12\">" << lab << "</text>\n";
  std::snprintf(lab, sizeof lab, "%.4g", ymax);
  out << "<text x=\"" << L - 8 << "\" y=\"" << T + 5
      << "\" text-anchor=\"end\" font-size=\"12\">" << lab << "</text>\n";
  std::snprintf(lab, sizeof lab, "%.4g", ymin);
  out << "<text x=\"" << L - 8 << "\" y=\"" << H - B
      << "\" text-anchor=\"end\" font-size=\"12\">" << lab << "</text>\n";
  out << "</svg>\n";
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"desk-scale optimal transport stability lab"};
  app.require_subcommand(1);
  int threads = 0;
  if (const char* env = std::getenv("OTLAB_THREADS")) threads = std::atoi(env);
  app.add_option("--threads", threads, "worker threads (default: logical cores)");

  // d2
  auto* d2 = app.add_subcommand("d2", "distance between two densities");
  std::string mu_path, nu_path, backend = "exact", out;
  double eps = 1e-3, tol = 1e-6;
  int max_sweeps = 0;
  bool as_json = false;
  d2->add_option("--mu", mu_path)->required();
  d2->add_option("--nu", nu_path)->required();
  d2->add_option("--backend", backend);
  d2->add_option("--eps", eps);
  d2->add_option("--tol", tol);
  d2->add_option("--max-sweeps", max_sweeps);
  d2->add_option("--out", out);
  d2->add_flag("--json", as_json);

  // sharpness
  auto* sharp = app.add_subcommand("sharpness", "vanishing-target ratio sweep");
  double p_exp = 2.0, eta = 0.9;
  std::string eps_csv = "1e-1,1e-2,1e-3,1e-4", sharp_out, sharp_svg;
  bool sharp_json = false;
  sharp->add_option("--p", p_exp);
  sharp->add_option("--eta", eta);
  sharp->add_option("--eps", eps_csv);
  sharp->add_option("--out", sharp_out);
  sharp->add_option("--svg", sharp_svg);
  sharp->add_flag("--json", sharp_json);

  // path
  auto* path = app.add_subcommand("path", "evaluate a density path slice");
  std::string kind = "geodesic", f0p, f1p, hp, path_out;
  double t_eval = 0.5;
  bool path_json = false;
  path->add_option("--kind", kind);
  path->add_option("--f0", f0p)->required();
  path->add_option("--f1", f1p);
  path->add_option("--hfield", hp);
  path->add_option("--t", t_eval);
  path->add_option("--out", path_out)->required();
  path->add_flag("--json", path_json);

  // response
  auto* resp = app.add_subcommand("response", "linearized potential response");
  std::string pf_path, pg_path, resp_out, diag_path, resp_backend = "exact";
  double resp_t = 0.5, resp_eps = 1e-2;
  bool resp_json = false;
  resp->add_option("--path-f", pf_path)->required();
  resp->add_option("--path-g", pg_path)->required();
  resp->add_option("--t", resp_t);
  resp->add_option("--out", resp_out)->required();
  resp->add_option("--diag", diag_path);
  resp->add_option("--backend", resp_backend);
  resp->add_option("--eps", resp_eps);
  resp->add_flag("--json", resp_json);

  // second-variation
  auto* sv = app.add_subcommand("second-variation", "formula vs finite differences");
  std::string sv_cfg, sv_out;
  bool sv_json = false;
  sv->add_option("--config", sv_cfg)->required();
  sv->add_option("--out", sv_out);
  sv->add_flag("--json", sv_json);

  // stability
  auto* stab = app.add_subcommand("stability", "ratio sweeps for the bounds");
  std::string theorem, family, stab_cfg, stab_csv, stab_json_out;
  bool stab_json = false;
  stab->add_option("--theorem", theorem)->required();
  stab->add_option("--family", family)->required();
  stab->add_option("--config", stab_cfg);
  stab->add_option("--csv", stab_csv);
  stab->add_option("--out", stab_json_out);
  stab->add_flag("--json", stab_json);

  // identities
  auto* ident = app.add_subcommand("identities", "divergence and boundary identity suite");
  int ident_nr = 16;
  std::string ident_out;
  bool ident_json = false;
  ident->add_option("--nr", ident_nr);
  ident->add_option("--out", ident_out);
  ident->add_flag("--json", ident_json);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (threads > 0) set_thread_count(threads);
  try {
    if (*d2) return cmd_d2(mu_path, nu_path, backend, eps, tol, max_sweeps, as_json, out);
    if (*sharp) return cmd_sharpness(p_exp, eta, eps_csv, sharp_out, sharp_svg, sharp_json);
    if (*path) return cmd_path(kind, f0p, f1p, hp, t_eval, path_out, path_json);
    if (*resp)
      return cmd_response(pf_path, pg_path, resp_t, resp_out, diag_path, resp_backend, resp_eps,
                          resp_json);
    if (*sv) return cmd_second_variation(sv_cfg, sv_out, sv_json);
    if (*stab)
      return cmd_stability(theorem, family, stab_cfg, stab_csv, stab_json_out, stab_json);
    if (*ident) return cmd_identities(ident_nr, ident_out, ident_json);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::no_convergence:
      case ErrorCode::incompatible_data:
      case ErrorCode::unmapped_point:
      case ErrorCode::convexity_error:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace otlab
