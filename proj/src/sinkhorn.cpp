#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "otlab/ot_discrete.hpp"

namespace otlab {

namespace {

struct LogMeasure {
  const DiscreteMeasure* m = nullptr;
  std::vector<double> logw;
};

LogMeasure log_measure(const DiscreteMeasure& m) {
  LogMeasure lm;
  lm.m = &m;
  lm.logw.resize(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) {
    require(m.weight[i] > 0, ErrorCode::mass_error, "sinkhorn needs strictly positive weights");
    lm.logw[i] = std::log(m.weight[i]);
  }
  return lm;
}

// One half-sweep: pot_new[i] = -eps * LSE_j( logw_b[j] + (other[j] - c_ij)/eps ).
// Returns the L1 violation of the updated marginal measured with the incoming
// potentials (free via the scaling identity).
double half_sweep(const LogMeasure& rows, const LogMeasure& cols, double eps,
                  std::vector<double>& pot_rows, const std::vector<double>& pot_cols,
                  double omega = 1.0) {
  std::size_t m = rows.m->count(), n = cols.m->count();
  int dim = rows.m->dim;
  const double* rc = rows.m->coord.data();
  const double* cc = cols.m->coord.data();
  std::vector<double> viol(m, 0.0);
  parallel_chunks(m, [&](std::size_t b, std::size_t e) {
    std::vector<double> arg(n);
    for (std::size_t i = b; i < e; ++i) {
      const double* x = rc + dim * i;
      double mx = -1e300;
      if (dim == 2) {
        for (std::size_t j = 0; j < n; ++j) {
          double dx = x[0] - cc[2 * j], dy = x[1] - cc[2 * j + 1];
          double a = cols.logw[j] + (pot_cols[j] - (dx * dx + dy * dy)) / eps;
          arg[j] = a;
          if (a > mx) mx = a;
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          const double* y = cc + dim * j;
          for (int k = 0; k < dim; ++k) {
            double d = x[k] - y[k];
            s += d * d;
          }
          double a = cols.logw[j] + (pot_cols[j] - s) / eps;
          arg[j] = a;
          if (a > mx) mx = a;
        }
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += std::exp(arg[j] - mx);
      double fresh = -eps * (mx + std::log(sum));
      viol[i] = rows.m->weight[i] * std::abs(std::exp((pot_rows[i] - fresh) / eps) - 1.0);
      pot_rows[i] += omega * (fresh - pot_rows[i]);
    }
  });
  double total = 0.0;
  for (double v : viol) total += v;
  return total;
}

double transport_cost(const LogMeasure& rows, const LogMeasure& cols, double eps,
                      const std::vector<double>& pa, const std::vector<double>& pb) {
  std::size_t m = rows.m->count(), n = cols.m->count();
  int dim = rows.m->dim;
  const double* rc = rows.m->coord.data();
  const double* cc = cols.m->coord.data();
  std::vector<double> row_cost(m, 0.0);
  parallel_chunks(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* x = rc + dim * i;
      double acc = 0.0;
      double base = rows.logw[i] + pa[i] / eps;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* y = cc + dim * j;
        for (int k = 0; k < dim; ++k) {
          double d = x[k] - y[k];
          s += d * d;
        }
        acc += s * std::exp(base + cols.logw[j] + (pb[j] - s) / eps);
      }
      row_cost[i] = acc;
    }
  });
  double total = 0.0;
  for (double v : row_cost) total += v;
  return total;
}

double column_violation(const LogMeasure& rows, const LogMeasure& cols, double eps,
                        const std::vector<double>& pa, const std::vector<double>& pb) {
  std::size_t m = rows.m->count(), n = cols.m->count();
  int dim = rows.m->dim;
  const double* rc = rows.m->coord.data();
  const double* cc = cols.m->coord.data();
  std::vector<double> colsum(n, 0.0);
  std::vector<std::vector<double>> partial;
  int workers = std::max(1, thread_count());
  partial.assign(workers, std::vector<double>());
  // accumulate per-chunk then reduce in fixed order
  std::size_t chunk = (m + workers - 1) / workers;
  parallel_chunks(m, [&](std::size_t b, std::size_t e) {
    std::size_t w = b / std::max<std::size_t>(1, chunk);
    if (w >= partial.size()) w = partial.size() - 1;
    auto& local = partial[w];
    local.assign(n, 0.0);
    for (std::size_t i = b; i < e; ++i) {
      const double* x = rc + dim * i;
      double base = rows.logw[i] + pa[i] / eps;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* y = cc + dim * j;
        for (int k = 0; k < dim; ++k) {
          double d = x[k] - y[k];
          s += d * d;
        }
        local[j] += std::exp(base + cols.logw[j] + (pb[j] - s) / eps);
      }
    }
  });
  for (const auto& local : partial)
    for (std::size_t j = 0; j < local.size(); ++j) colsum[j] += local[j];
  double v = 0.0;
  for (std::size_t j = 0; j < n; ++j) v += std::abs(colsum[j] - cols.m->weight[j]);
  return v;
}

struct CoreResult {
  std::vector<double> alpha, beta;
  double violation = 0.0;
  int sweeps = 0;
};

CoreResult sinkhorn_core(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const SinkhornParams& p) {
  require(p.eps > 0, ErrorCode::range_error, "sinkhorn needs eps > 0");
  require(p.tol > 0, ErrorCode::range_error, "sinkhorn needs tol > 0");
  require(mu.dim == nu.dim, ErrorCode::dimension_error, "measures live in different dimensions");
  LogMeasure a = log_measure(mu), b = log_measure(nu);
  CoreResult r;
  r.alpha = p.warm_alpha.size() == mu.count() ? p.warm_alpha : std::vector<double>(mu.count(), 0.0);
  r.beta = p.warm_beta.size() == nu.count() ? p.warm_beta : std::vector<double>(nu.count(), 0.0);

  std::vector<double> stages;
  double e = std::max(p.eps, p.scaling_start);
  while (e > p.eps * (1.0 + 1e-12)) {
    stages.push_back(e);
    e *= p.scaling_factor;
  }
  stages.push_back(p.eps);

  const bool trace = std::getenv("OTLAB_SK_TRACE") != nullptr;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    double eps = stages[s];
    bool final_stage = s + 1 == stages.size();
    double stage_tol = final_stage ? p.tol : std::max(p.tol, 1e-3);
    int stage_cap = final_stage ? p.max_sweeps - r.sweeps : std::min(12, p.max_sweeps - r.sweeps);
    double omega = p.omega;
    double prev_viol = 1e300;
    int rising = 0;
    for (int it = 0; it < stage_cap; ++it) {
      half_sweep(b, a, eps, r.beta, r.alpha, omega);
      double viol = half_sweep(a, b, eps, r.alpha, r.beta, omega);
      ++r.sweeps;
      r.violation = viol;
      if (trace && (it % 25 == 0 || viol <= stage_tol))
        std::fprintf(stderr, "sk eps=%.3g it=%d viol=%.3e omega=%.2f\n", eps, it, viol, omega);
      if (viol <= stage_tol) break;
      // over-relaxation can diverge on hard instances; drop it only when the
      // violation genuinely grows, not merely contracts slowly
      rising = viol > 1.5 * prev_viol ? rising + 1 : 0;
      if (rising >= 3 && omega != 1.0) {
        omega = 1.0;
        rising = 0;
      }
      prev_viol = viol;
    }
    if (final_stage && p.omega != 1.0) {
      // plain closing sweeps so the row marginal is exact before reporting
      half_sweep(b, a, eps, r.beta, r.alpha);
      half_sweep(a, b, eps, r.alpha, r.beta);
      ++r.sweeps;
    }
    if (final_stage) {
      // rows are exact after the last alpha update; report the column gap
      r.violation = column_violation(a, b, eps, r.alpha, r.beta);
      if (r.violation > p.tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "sinkhorn stopped at marginal violation %.3e (tol %.3e) after %d sweeps",
                      r.violation, p.tol, r.sweeps);
        fail(ErrorCode::no_convergence, buf);
      }
    }
  }
  return r;
}

}  // namespace

SinkhornCost sinkhorn_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const SinkhornParams& p) {
  LogMeasure a = log_measure(mu), b = log_measure(nu);
  CoreResult core = sinkhorn_core(mu, nu, p);
  SinkhornCost out;
  out.cost = transport_cost(a, b, p.eps, core.alpha, core.beta);
  out.marginal_violation = core.violation;
  out.sweeps = core.sweeps;
  out.alpha = std::move(core.alpha);
  out.beta = std::move(core.beta);
  return out;
}

SinkhornCost sinkhorn_self_cost(const DiscreteMeasure& mu, const SinkhornParams& p) {
  // Symmetric fixed point: a single potential updated by averaging. Converges
  // fast because the map is a contraction around the symmetric solution.
  LogMeasure a = log_measure(mu);
  SinkhornCost out;
  std::vector<double> pot =
      p.warm_alpha.size() == mu.count() ? p.warm_alpha : std::vector<double>(mu.count(), 0.0);
  std::vector<double> fresh = pot;
  double e = std::max(p.eps, p.scaling_start);
  std::vector<double> stages;
  while (e > p.eps * (1.0 + 1e-12)) {
    stages.push_back(e);
    e *= p.scaling_factor;
  }
  stages.push_back(p.eps);
  int sweeps = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    double eps = stages[s];
    bool final_stage = s + 1 == stages.size();
    double stage_tol = final_stage ? p.tol : std::max(p.tol, 1e-3);
    int cap = final_stage ? std::max(10, p.max_sweeps - sweeps) : 8;
    for (int it = 0; it < cap; ++it) {
      fresh = pot;
      double viol = half_sweep(a, a, eps, fresh, pot);
      for (std::size_t i = 0; i < pot.size(); ++i) pot[i] = 0.5 * (pot[i] + fresh[i]);
      ++sweeps;
      out.marginal_violation = viol;
      if (viol <= stage_tol) break;
    }
    if (final_stage && out.marginal_violation > p.tol) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "self-transport stopped at marginal violation %.3e (tol %.3e)",
                    out.marginal_violation, p.tol);
      fail(ErrorCode::no_convergence, buf);
    }
  }
  out.cost = transport_cost(a, a, p.eps, pot, pot);
  out.sweeps = sweeps;
  out.alpha = pot;
  out.beta = std::move(pot);
  return out;
}

SinkhornSolution sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const SinkhornParams& p) {
  LogMeasure a = log_measure(mu), b = log_measure(nu);
  CoreResult core = sinkhorn_core(mu, nu, p);
  SinkhornSolution out;
  out.plan.source = mu;
  out.plan.target = nu;
  out.eps = p.eps;
  out.marginal_violation = core.violation;
  out.sweeps = core.sweeps;

  std::size_t m = mu.count(), n = nu.count();
  int dim = mu.dim;
  std::vector<std::vector<PlanEntry>> rows(m);
  parallel_chunks(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = mu.coord.data() + dim * i;
      double base = a.logw[i] + core.alpha[i] / p.eps;
      double cutoff = 1e-15 * mu.weight[i];
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* y = nu.coord.data() + dim * j;
        for (int k = 0; k < dim; ++k) {
          double d = x[k] - y[k];
          s += d * d;
        }
        double w = std::exp(base + b.logw[j] + (core.beta[j] - s) / p.eps);
        if (w > cutoff) rows[i].push_back({int(i), int(j), w});
      }
    }
  });
  double cost = 0.0;
  for (auto& row : rows) {
    for (const auto& entry : row) {
      out.plan.entries.push_back(entry);
      const double* x = mu.coord.data() + dim * entry.i;
      const double* y = nu.coord.data() + dim * entry.j;
      double s = 0.0;
      for (int k = 0; k < dim; ++k) {
        double d = x[k] - y[k];
        s += d * d;
      }
      cost += entry.w * s;
    }
  }
  out.plan.cost = cost;
  out.duals.alpha = std::move(core.alpha);
  out.duals.beta = std::move(core.beta);
  return out;
}

}  // namespace otlab
