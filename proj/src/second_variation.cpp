#include "otlab/second_variation.hpp"

#include <cmath>
#include <future>

#include "otlab/ot1d.hpp"

namespace otlab {

D2Backend auto_backend(const DensityGrid& f, const DensityGrid& g) {
  D2Backend b;
  if (f.domain()->dim() == 1) {
    b.kind = D2Backend::Kind::exact1d;
    return b;
  }
  int atoms = std::max(f.domain()->mesh().cell_count(), g.domain()->mesh().cell_count());
  if (atoms <= 1600) {
    b.kind = D2Backend::Kind::lp;
    return b;
  }
  b.kind = D2Backend::Kind::sinkhorn;
  double h = std::max(f.domain()->spacing(), g.domain()->spacing());
  b.sk.eps = h * h;
  b.sk.tol = 1e-9;
  return b;
}

double d2_squared(const DensityGrid& f, const DensityGrid& g, const D2Backend& backend) {
  switch (backend.kind) {
    case D2Backend::Kind::exact1d: {
      double d = d2_1d(f, g);
      return d * d;
    }
    case D2Backend::Kind::lp:
      return d2_discrete(f, g, OtBackend::exact).cost;
    case D2Backend::Kind::sinkhorn:
      return d2_discrete(f, g, OtBackend::sinkhorn, backend.sk).cost;
  }
  fail(ErrorCode::config_error, "unknown d2 backend");
}

double second_variation(const DensityGrid& f, const DensityGrid& g, const ScalarField& h,
                        const ScalarField& k, const PotentialField& phi, const ResponseField& xi) {
  require(std::abs(quadrature(h, f)) <= 1e-8, ErrorCode::mean_error,
          "h must have zero f-weighted mean");
  require(std::abs(quadrature(k, g)) <= 1e-8, ErrorCode::mean_error,
          "k must have zero g-weighted mean");
  check_same_mesh(f.domain(), xi.xi.dom, "second_variation");
  const Mesh& m = f.domain()->mesh();
  double acc = 0.0;
  for (int c = 0; c < m.cell_count(); ++c) {
    Vec2 grad = xi.grad.v[c];
    acc += dot(phi.hess.inverse_at(c).apply(grad), grad) * f.values()[c] * m.vol[c];
  }
  return acc;
}

namespace {

// Warm-started debiased entropic evaluator: potentials from the previous call
// seed the next one, so the t-sweep of a second quotient costs a few sweeps
// per slice after the first.
class EntropicQ {
 public:
  explicit EntropicQ(const SinkhornParams& base) : base_(base) {}

  double operator()(const DensityGrid& f, const DensityGrid& g) {
    DiscreteMeasure mu = measure_from_density(f), nu = measure_from_density(g);
    SinkhornParams p = base_;
    if (!cross_a_.empty()) {
      p.warm_alpha = cross_a_;
      p.warm_beta = cross_b_;
      p.scaling_start = p.eps;
    }
    SinkhornCost c = sinkhorn_cost(mu, nu, p);
    cross_a_ = c.alpha;
    cross_b_ = c.beta;

    // self-transport potentials solve a different problem; never seed them
    // from the caller's cross warm start
    SinkhornParams pf = base_;
    pf.warm_alpha.clear();
    pf.warm_beta.clear();
    pf.scaling_start = std::max(1.0, pf.eps);
    if (!self_f_.empty()) {
      pf.warm_alpha = self_f_;
      pf.scaling_start = pf.eps;
    }
    SinkhornCost cf = sinkhorn_self_cost(mu, pf);
    self_f_ = cf.alpha;

    SinkhornParams pg = base_;
    pg.warm_alpha.clear();
    pg.warm_beta.clear();
    pg.scaling_start = std::max(1.0, pg.eps);
    if (!self_g_.empty()) {
      pg.warm_alpha = self_g_;
      pg.scaling_start = pg.eps;
    }
    SinkhornCost cg = sinkhorn_self_cost(nu, pg);
    self_g_ = cg.alpha;

    return c.cost - 0.5 * (cf.cost + cg.cost);
  }

 private:
  SinkhornParams base_;
  std::vector<double> cross_a_, cross_b_, self_f_, self_g_;
};

}  // namespace

double fd_second_derivative(const DensityPath& path_f, const DensityPath& path_g, double delta_t,
                            const D2Backend& backend) {
  require(delta_t > 0, ErrorCode::range_error, "fd_second_derivative needs delta_t > 0");
  if (path_f.kind() == PathKind::multiplicative)
    require(delta_t < path_f.t_limit(), ErrorCode::range_error,
            "delta_t exceeds the positivity range of the source path");
  if (path_g.kind() == PathKind::multiplicative)
    require(delta_t < path_g.t_limit(), ErrorCode::range_error,
            "delta_t exceeds the positivity range of the target path");

  if (backend.kind == D2Backend::Kind::sinkhorn) {
    EntropicQ q(backend.sk);
    double q0 = q(path_f.at(0.0), path_g.at(0.0));
    double qp = q(path_f.at(delta_t), path_g.at(delta_t));
    double qm = q(path_f.at(-delta_t), path_g.at(-delta_t));
    return (qp + qm - 2.0 * q0) / (2.0 * delta_t * delta_t);
  }
  // the three distance evaluations are independent; run them concurrently
  auto eval = [&](double t) { return d2_squared(path_f.at(t), path_g.at(t), backend); };
  auto fp = std::async(std::launch::async, eval, delta_t);
  auto fm = std::async(std::launch::async, eval, -delta_t);
  double q0 = eval(0.0);
  return (fp.get() + fm.get() - 2.0 * q0) / (2.0 * delta_t * delta_t);
}

SecondVariationReport validate(const DensityPath& path_f, const DensityPath& path_g,
                               const PotentialField& phi, double delta_t,
                               const D2Backend& backend) {
  require(path_f.kind() == PathKind::multiplicative && path_g.kind() == PathKind::multiplicative,
          ErrorCode::kind_error, "the second-variation formula uses multiplicative paths");
  DensityGrid f = path_f.at(0.0);
  DensityGrid g = path_g.at(0.0);
  ResponseField xi = solve_response(path_f, path_g, phi, 0.0);
  SecondVariationReport rep;
  rep.formula_value =
      second_variation(f, g, path_f.perturbation(), path_g.perturbation(), phi, xi);
  rep.delta_t = delta_t;
  rep.fd_value = fd_second_derivative(path_f, path_g, delta_t, backend);
  rep.fd_value_coarse = fd_second_derivative(path_f, path_g, 2.0 * delta_t, backend);
  double floor = 1e-12 * std::max(1.0, std::abs(rep.formula_value));
  rep.relative_gap =
      std::abs(rep.formula_value - rep.fd_value) / std::max(std::abs(rep.fd_value), floor);
  switch (backend.kind) {
    case D2Backend::Kind::exact1d: rep.backend = "exact1d"; break;
    case D2Backend::Kind::lp: rep.backend = "lp"; break;
    case D2Backend::Kind::sinkhorn: rep.backend = "sinkhorn-debiased"; break;
  }
  return rep;
}

}  // namespace otlab
