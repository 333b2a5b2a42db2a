#include "otlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace otlab {

namespace {

constexpr double kPi = std::numbers::pi;

DensityGrid uniform_on(double a, double b, int n) {
  auto dom = Domain::interval(a, b, n);
  return DensityGrid(dom, std::vector<double>(n, 1.0));
}

double map_l2(const Map1D& t0, const Map1D& t1) {
  const Mesh& m = t0.source->mesh();
  double acc = 0.0;
  for (int i = 0; i < m.cell_count(); ++i) {
    double d = t1.t[i] - t0.t[i];
    acc += d * d * m.vol[i];
  }
  return std::sqrt(acc);
}

// potential with phi' = T, integrated by the trapezoid between cell values
std::vector<double> integrate_map(const Map1D& t) {
  const Mesh& m = t.source->mesh();
  int n = m.cell_count();
  double h = t.source->spacing();
  std::vector<double> phi(n, 0.0);
  for (int i = 1; i < n; ++i) phi[i] = phi[i - 1] + 0.5 * (t.t[i - 1] + t.t[i]) * h;
  return phi;
}

std::string family_tag(const char* name, int n, std::uint64_t seed) {
  std::ostringstream os;
  os << name << "(n=" << n << ",seed=" << seed << ")";
  return os.str();
}

}  // namespace

StabilityReport thm11_translation_sweep(const std::vector<double>& shifts, int n,
                                        bool with_plans, int plan_cells) {
  StabilityReport rep;
  rep.theorem = "1.1";
  rep.family = family_tag("translation", n, 0);
  rep.backend = "exact-1d";
  auto f = uniform_on(0.0, 1.0, n);
  auto g0 = uniform_on(0.0, 1.0, n);
  Map1D t0 = brenier_map_1d(f, g0);
  for (double s : shifts) {
    StabilityRow row;
    row.perturbation = s;
    auto g1 = uniform_on(s, 1.0 + s, n);
    Map1D t1 = brenier_map_1d(f, g1);
    row.lhs = map_l2(t0, t1);
    row.rhs = d2_1d(f, f) + d2_1d(g0, g1);
    row.ratio = row.rhs > 0 ? row.lhs / row.rhs : 0.0;
    if (with_plans) {
      auto fc = uniform_on(0.0, 1.0, plan_cells);
      auto gc0 = uniform_on(0.0, 1.0, plan_cells);
      auto gc1 = uniform_on(s, 1.0 + s, plan_cells);
      auto p0 = solve_exact(measure_from_density(fc), measure_from_density(gc0));
      auto p1 = solve_exact(measure_from_density(fc), measure_from_density(gc1));
      row.lhs2 = plan_distance(p0.plan, p1.plan);
      row.ratio2 = row.rhs > 0 ? row.lhs2 / row.rhs : 0.0;
    }
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const StabilityRow& a, const StabilityRow& b) { return a.perturbation < b.perturbation; });
  return rep;
}

StabilityReport thm11_multiplicative_sweep(const std::vector<double>& ts, int n) {
  StabilityReport rep;
  rep.theorem = "1.1";
  rep.family = family_tag("multiplicative-cos", n, 0);
  rep.backend = "exact-1d";
  auto dom = Domain::interval(0.0, 1.0, n);
  DensityGrid f(dom, std::vector<double>(n, 1.0));
  auto g = uniform_on(0.0, 1.0, n);
  Map1D t_base = brenier_map_1d(f, g);
  for (double t : ts) {
    StabilityRow row;
    row.perturbation = t;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 + t * std::cos(kPi * dom->mesh().node[i].x);
    DensityGrid ft(dom, std::move(v));
    Map1D tt = brenier_map_1d(ft, g);
    row.lhs = map_l2(t_base, tt);
    row.rhs = d2_1d(f, ft);
    row.ratio = row.rhs > 0 ? row.lhs / row.rhs : 0.0;
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const StabilityRow& a, const StabilityRow& b) { return a.perturbation < b.perturbation; });
  return rep;
}

StabilityReport thm12_piecewise_sweep(const std::vector<double>& steps, int n,
                                      std::uint64_t seed) {
  StabilityReport rep;
  rep.theorem = "1.2";
  rep.family = family_tag("piecewise-step", n, seed);
  rep.backend = "exact-1d";
  Rng rng(seed);
  auto dom = Domain::interval(0.0, 1.0, n);
  double cut_f = 0.25 + 0.5 * rng.uniform();
  double cut_g = 0.25 + 0.5 * rng.uniform();
  auto step_density = [&](double b, double cut) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = dom->mesh().node[i].x < cut ? 1.0 + b : 1.0 - b;
    return DensityGrid(dom, std::move(v));
  };
  DensityGrid f0 = step_density(0.0, cut_f), g0 = step_density(0.0, cut_g);
  Map1D t0 = brenier_map_1d(f0, g0);
  std::vector<double> phi0 = integrate_map(t0);

  auto normalized_potential = [&](std::vector<double>& phi) {
    // shift so that quadrature(e^{-phi}) = 1, the gauge this sweep reports under
    ScalarField e(dom, 0.0);
    for (int i = 0; i < n; ++i) e.v[i] = std::exp(-phi[i]);
    double c = std::log(quadrature(e));
    for (double& v : phi) v += c;
  };
  normalized_potential(phi0);

  for (double b : steps) {
    require(b > 0 && b < 0.8, ErrorCode::range_error, "step size out of range");
    StabilityRow row;
    row.perturbation = b;
    DensityGrid f1 = step_density(b, cut_f), g1 = step_density(-b, cut_g);
    Map1D t1 = brenier_map_1d(f1, g1);
    std::vector<double> phi1 = integrate_map(t1);
    normalized_potential(phi1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = phi1[i] - phi0[i];
      acc += d * d * dom->mesh().vol[i];
    }
    row.lhs = std::sqrt(acc);   // potentials in L2
    row.lhs2 = map_l2(t0, t1);  // gradients in L2
    ScalarField df(dom, 0.0), dg(dom, 0.0);
    for (int i = 0; i < n; ++i) {
      df.v[i] = f1.values()[i] - f0.values()[i];
      dg.v[i] = g1.values()[i] - g0.values()[i];
    }
    row.rhs = lp_norm(df, 2.0) + lp_norm(dg, 2.0);
    row.ratio = row.rhs > 0 ? row.lhs / row.rhs : 0.0;
    row.ratio2 = row.rhs > 0 ? row.lhs2 / std::cbrt(row.rhs) : 0.0;
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const StabilityRow& a, const StabilityRow& b) { return a.perturbation < b.perturbation; });
  return rep;
}

StabilityReport thm13_smooth_sweep(const std::vector<double>& ts, double alpha, int n,
                                   std::uint64_t seed) {
  require(alpha > 0 && alpha < 1, ErrorCode::exponent_error,
          "alpha must lie strictly below the family smoothness order 1");
  StabilityReport rep;
  rep.theorem = "1.3";
  rep.family = family_tag("smooth-trig", n, seed);
  rep.backend = "exact-1d";
  Rng rng(seed);
  double p = 1.0 / (1.0 - alpha);  // d = 1
  auto dom = Domain::interval(0.0, 1.0, n);
  double c1 = rng.uniform(-0.4, 0.4), c2 = rng.uniform(-0.4, 0.4);
  DensityGrid f0(dom, std::vector<double>(n, 1.0));
  DensityGrid g0(dom, std::vector<double>(n, 1.0));
  Map1D t0 = brenier_map_1d(f0, g0);
  std::vector<double> phi0 = integrate_map(t0);

  auto zero_mean = [&](std::vector<double>& phi) {
    ScalarField ph(dom, 0.0);
    ph.v = phi;
    double mean = quadrature(ph) / dom->volume();
    for (double& v : phi) v -= mean;
  };
  zero_mean(phi0);

  for (double t : ts) {
    StabilityRow row;
    row.perturbation = t;
    std::vector<double> fv(n), gv(n);
    for (int i = 0; i < n; ++i) {
      double x = dom->mesh().node[i].x;
      fv[i] = 1.0 + t * c1 * std::cos(kPi * x);
      gv[i] = 1.0 + t * c2 * std::cos(2.0 * kPi * x);
    }
    DensityGrid f1(dom, std::move(fv)), g1(dom, std::move(gv));
    Map1D t1 = brenier_map_1d(f1, g1);
    std::vector<double> phi1 = integrate_map(t1);
    zero_mean(phi1);
    ScalarField dphi(dom, 0.0), dmap(dom, 0.0), df(dom, 0.0), dg(dom, 0.0);
    for (int i = 0; i < n; ++i) {
      dphi.v[i] = phi1[i] - phi0[i];
      dmap.v[i] = t1.t[i] - t0.t[i];
      df.v[i] = f1.values()[i] - f0.values()[i];
      dg.v[i] = g1.values()[i] - g0.values()[i];
    }
    NormReport grad_norms = norms(dmap, {}, alpha);
    row.lhs = sup_norm(dphi) + grad_norms.sup + grad_norms.holder;
    row.rhs = lp_norm(df, p) + lp_norm(dg, p);
    row.ratio = row.rhs > 0 ? row.lhs / row.rhs : 0.0;
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const StabilityRow& a, const StabilityRow& b) { return a.perturbation < b.perturbation; });
  return rep;
}

StabilityReport thm13_counterexample_control(double p, double eta,
                                             const std::vector<double>& eps_list) {
  StabilityReport rep;
  rep.theorem = "1.3-control";
  rep.family = "vanishing-target(p=" + std::to_string(p) + ",eta=" + std::to_string(eta) + ")";
  rep.backend = "closed-form";
  auto rows = counterexample_sweep(p, eta, eps_list);
  for (const auto& r : rows) {
    StabilityRow row;
    row.perturbation = r.eps;
    row.lhs = r.map_gap_sup;
    row.rhs = std::pow(r.dens_gap_sup, eta);
    row.ratio = r.ratio;
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const StabilityRow& a, const StabilityRow& b) { return a.perturbation < b.perturbation; });
  return rep;
}

BLResult brascamp_lieb_check(const ScalarField& F, const ScalarField& u) {
  check_same_mesh(F.dom, u.dom, "brascamp_lieb_check");
  const Mesh& m = F.dom->mesh();
  int n = m.cell_count();
  std::vector<double> w(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += (w[i] = std::exp(-F.v[i]) * m.vol[i]);
  for (double& x : w) x /= z;

  VectorField grad_u = gradient_of(u);
  SpdField hess_f = hessian_of(gradient_of(F));
  // convexity check before clamping to a tiny positive floor
  int bad = 0;
  for (const auto& s : hess_f.m) {
    if (F.dom->dim() == 1) {
      if (s.xx <= 0) ++bad;
    } else {
      double lo, hi;
      Vec2 v;
      s.eigen(lo, hi, v);
      if (lo <= 0) ++bad;
    }
  }
  BLResult out;
  out.clamp_rate = double(bad) / double(n);
  require(out.clamp_rate <= 0.5, ErrorCode::convexity_error,
          "the weight potential is not convex on most of the mesh");
  hess_f.clamp(1e-10, 1e12);

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += w[i] * u.v[i];
  for (int i = 0; i < n; ++i) {
    double d = u.v[i] - mean;
    out.lhs += w[i] * d * d;
    out.rhs += w[i] * dot(hess_f.inverse_at(i).apply(grad_u.v[i]), grad_u.v[i]);
  }
  out.margin = out.rhs - out.lhs;
  return out;
}

std::vector<BLResult> brascamp_lieb_suite(int count, std::uint64_t seed, int nr, int nt) {
  auto dom = Domain::disk({0, 0}, 1.0, nr, nt);
  int n = dom->mesh().cell_count();
  Rng rng(seed);
  std::vector<BLResult> out;
  out.reserve(count);
  for (int trial = 0; trial < count; ++trial) {
    // uniformly convex quadratic plus an exponential bump (convex)
    double q11 = 0.5 + rng.uniform(), q22 = 0.5 + rng.uniform();
    double q12 = rng.uniform(-0.3, 0.3);
    double b = rng.uniform(0.0, 0.4);
    Vec2 a{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    ScalarField F(dom, 0.0), u(dom, 0.0);
    double k1 = 1.0 + std::floor(rng.uniform(0.0, 3.0));
    double k2 = 1.0 + std::floor(rng.uniform(0.0, 3.0));
    double ph = rng.uniform(0.0, 2.0 * kPi);
    double c1 = rng.uniform(-1.0, 1.0), c2 = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
      Vec2 x = dom->mesh().node[i];
      F.v[i] = 0.5 * (q11 * x.x * x.x + 2.0 * q12 * x.x * x.y + q22 * x.y * x.y) +
               b * std::exp(dot(a, x));
      u.v[i] = c1 * std::cos(k1 * x.x + k2 * x.y + ph) + c2 * std::sin(k2 * x.x - k1 * x.y);
    }
    out.push_back(brascamp_lieb_check(F, u));
  }
  return out;
}

}  // namespace otlab
