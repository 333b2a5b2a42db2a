#include "otlab/ot_discrete.hpp"

#include <algorithm>
#include <cmath>

namespace otlab {

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

DiscreteMeasure measure_from_density(const DensityGrid& f) {
  const Mesh& m = f.domain()->mesh();
  DiscreteMeasure out;
  out.dim = f.domain()->dim();
  out.coord.reserve(out.dim * m.cell_count());
  out.weight.reserve(m.cell_count());
  for (int i = 0; i < m.cell_count(); ++i) {
    out.coord.push_back(m.node[i].x);
    if (out.dim == 2) out.coord.push_back(m.node[i].y);
    out.weight.push_back(f.values()[i] * m.vol[i]);
  }
  return out;
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> r(source.count(), 0.0);
  for (const auto& e : entries) r[e.i] += e.w;
  return r;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> c(target.count(), 0.0);
  for (const auto& e : entries) c[e.j] += e.w;
  return c;
}

namespace {

inline double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Transportation-problem network simplex with an artificial root basis and
// Cunningham's leaving-arc rule. Nodes: sources 0..m-1, sinks m..m+n-1, root.
class TransportSimplex {
 public:
  TransportSimplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
      : mu_(mu), nu_(nu), m_(int(mu.count())), n_(int(nu.count())), root_(m_ + n_) {
    cmax_ = 0.0;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) cmax_ = std::max(cmax_, cost(i, j));
    big_ = 10.0 * (1.0 + cmax_);
    int N = m_ + n_ + 1;
    parent_.assign(N, root_);
    flow_.assign(N, 0.0);
    ecost_.assign(N, big_);
    tail_is_child_.assign(N, false);
    pot_.assign(N, 0.0);
    depth_.assign(N, 0);
    first_child_.assign(N, -1);
    next_sib_.assign(N, -1);
    parent_[root_] = -1;
    for (int i = 0; i < m_; ++i) {
      flow_[i] = mu_.weight[i];
      tail_is_child_[i] = true;  // source -> root
    }
    for (int j = 0; j < n_; ++j) {
      flow_[m_ + j] = nu_.weight[j];
      tail_is_child_[m_ + j] = false;  // root -> sink
    }
    refresh_tree();
  }

  int run() {
    const long max_pivots = 400L * (m_ + n_) + 20000L;
    const double enter_tol = 1e-11 * (1.0 + cmax_);
    long arcs = long(m_) * n_;
    long block = std::max<long>(64, long(std::sqrt(double(arcs))));
    long cursor = 0;
    int pivots = 0;
    while (true) {
      int best_i = -1, best_j = -1;
      double best_r = -enter_tol;
      long scanned = 0;
      while (scanned < arcs) {
        long stop = std::min(block, arcs - scanned);
        for (long t = 0; t < stop; ++t) {
          long a = cursor + t;
          if (a >= arcs) a -= arcs;
          int i = int(a / n_), j = int(a % n_);
          double r = cost(i, j) - pot_[i] - pot_[m_ + j];
          if (r < best_r) {
            best_r = r;
            best_i = i;
            best_j = j;
          }
        }
        scanned += stop;
        cursor += stop;
        if (cursor >= arcs) cursor -= arcs;
        if (best_i >= 0) break;
      }
      if (best_i < 0) return pivots;  // optimal
      pivot(best_i, m_ + best_j);
      ++pivots;
      require(pivots < max_pivots, ErrorCode::no_convergence,
              "network simplex exceeded its pivot budget");
    }
  }

  double cost(int i, int j) const { return sq_dist(mu_.point(i), nu_.point(j), mu_.dim); }

  void extract(TransportPlan& plan, DualPotentials& duals) const {
    plan.entries.clear();
    double art_flow = 0.0;
    for (int v = 0; v < m_ + n_; ++v) {
      int p = parent_[v];
      if (p == root_) {
        art_flow += flow_[v];
        continue;
      }
      if (flow_[v] <= 0.0) continue;
      int src = v < m_ ? v : p;
      int snk = v < m_ ? p : v;
      plan.entries.push_back({src, snk - m_, flow_[v]});
    }
    require(art_flow <= 1e-9 * (1.0 + mu_.total_mass()), ErrorCode::mass_error,
            "artificial arcs kept flow; supplies do not balance");
    plan.cost = 0.0;
    for (const auto& e : plan.entries) plan.cost += e.w * cost(e.i, e.j);
    duals.alpha.assign(pot_.begin(), pot_.begin() + m_);
    duals.beta.assign(pot_.begin() + m_, pot_.begin() + m_ + n_);
    double s = 0.0, tot = mu_.total_mass();
    for (int i = 0; i < m_; ++i) s += duals.alpha[i] * mu_.weight[i];
    double shift = s / tot;
    for (double& a : duals.alpha) a -= shift;
    for (double& b : duals.beta) b += shift;
  }

 private:
  void refresh_tree() {
    int N = m_ + n_ + 1;
    std::fill(first_child_.begin(), first_child_.end(), -1);
    for (int v = 0; v < N; ++v) {
      if (v == root_) continue;
      next_sib_[v] = first_child_[parent_[v]];
      first_child_[parent_[v]] = v;
    }
    pot_[root_] = 0.0;
    depth_[root_] = 0;
    stack_.clear();
    stack_.push_back(root_);
    while (!stack_.empty()) {
      int p = stack_.back();
      stack_.pop_back();
      for (int v = first_child_[p]; v >= 0; v = next_sib_[v]) {
        depth_[v] = depth_[p] + 1;
        pot_[v] = child_potential(v, p);
        stack_.push_back(v);
      }
    }
  }

  // Dual bookkeeping: source-sink edge u+v=c; source-root u+w=M; root-sink
  // v-w=M (the root balance has opposite signs on its two arc families).
  double child_potential(int v, int p) const {
    double C = ecost_[v];
    if (p == root_) return v < m_ ? C - pot_[p] : C + pot_[p];
    if (v == root_) return p < m_ ? C - pot_[p] : pot_[p] - C;
    return C - pot_[p];
  }

  struct CycleEdge {
    int child;
    bool forward;  // walk direction matches the directed arc
  };

  void pivot(int u, int v) {
    int a = u, b = v;
    path_u_.clear();
    path_v_.clear();
    while (a != b) {
      if (depth_[a] >= depth_[b]) {
        path_u_.push_back(a);
        a = parent_[a];
      } else {
        path_v_.push_back(b);
        b = parent_[b];
      }
    }
    // cycle walked in the entering direction u -> v: descend join -> u,
    // cross the entering arc, ascend v -> join
    cycle_.clear();
    for (auto it = path_u_.rbegin(); it != path_u_.rend(); ++it)
      cycle_.push_back({*it, !tail_is_child_[*it]});
    for (int child : path_v_) cycle_.push_back({child, tail_is_child_[child]});

    double theta = 1e300;
    for (const auto& e : cycle_)
      if (!e.forward) theta = std::min(theta, flow_[e.child]);
    if (theta == 1e300) theta = 0.0;
    int leave = -1;
    bool leave_on_u_side = false;
    std::size_t u_side_len = path_u_.size();
    for (std::size_t k = 0; k < cycle_.size(); ++k) {
      const auto& e = cycle_[k];
      if (!e.forward && flow_[e.child] <= theta) {
        leave = e.child;
        leave_on_u_side = k < u_side_len;
      }
    }
    require(leave >= 0, ErrorCode::no_convergence, "pivot found no leaving arc");
    for (const auto& e : cycle_) flow_[e.child] += e.forward ? theta : -theta;
    flow_[leave] = 0.0;

    int q = leave_on_u_side ? u : v;
    int r = leave_on_u_side ? v : u;
    double carry_flow = theta;
    double carry_cost = cost(u, v - m_);
    bool carry_dir = q == u;  // entering arc runs source u -> sink v
    int node = q, new_parent = r;
    while (true) {
      int old_parent = parent_[node];
      double old_flow = flow_[node];
      double old_cost = ecost_[node];
      bool old_dir = tail_is_child_[node];
      bool last = node == leave;
      parent_[node] = new_parent;
      flow_[node] = carry_flow;
      ecost_[node] = carry_cost;
      tail_is_child_[node] = carry_dir;
      if (last) break;
      new_parent = node;
      node = old_parent;
      carry_flow = old_flow;
      carry_cost = old_cost;
      carry_dir = !old_dir;  // edge now stored at its other endpoint
    }
    refresh_tree();
  }

  const DiscreteMeasure& mu_;
  const DiscreteMeasure& nu_;
  int m_, n_, root_;
  double cmax_ = 0.0, big_ = 0.0;
  std::vector<int> parent_, depth_, first_child_, next_sib_, stack_;
  std::vector<double> flow_, ecost_, pot_;
  std::vector<bool> tail_is_child_;
  std::vector<int> path_u_, path_v_;
  std::vector<CycleEdge> cycle_;
};

}  // namespace

ExactSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(mu.count() > 0 && nu.count() > 0, ErrorCode::empty_input, "empty measure");
  require(mu.dim == nu.dim, ErrorCode::dimension_error, "measures live in different dimensions");
  require(int(mu.count()) <= kAtomCap && int(nu.count()) <= kAtomCap, ErrorCode::size_cap,
          "solve_exact supports at most 4000 atoms per side");
  double sm = mu.total_mass(), sn = nu.total_mass();
  require(std::abs(sm - sn) <= 1e-10 * std::max(1.0, sm), ErrorCode::mass_error,
          "total masses differ");
  for (double w : mu.weight)
    require(w > 0, ErrorCode::mass_error, "solve_exact needs strictly positive weights");
  for (double w : nu.weight)
    require(w > 0, ErrorCode::mass_error, "solve_exact needs strictly positive weights");

  TransportSimplex simplex(mu, nu);
  ExactSolution out;
  out.pivots = simplex.run();
  out.plan.source = mu;
  out.plan.target = nu;
  simplex.extract(out.plan, out.duals);
  return out;
}

double plan_distance(const TransportPlan& p0, const TransportPlan& p1) {
  auto lift = [](const TransportPlan& p) {
    DiscreteMeasure m;
    int d = p.source.dim;
    m.dim = 2 * d;
    for (const auto& e : p.entries) {
      if (e.w <= 0) continue;
      const double* x = p.source.point(e.i);
      const double* y = p.target.point(e.j);
      for (int k = 0; k < d; ++k) m.coord.push_back(x[k]);
      for (int k = 0; k < d; ++k) m.coord.push_back(y[k]);
      m.weight.push_back(e.w);
    }
    return m;
  };
  DiscreteMeasure a = lift(p0), b = lift(p1);
  require(int(a.count()) <= kAtomCap && int(b.count()) <= kAtomCap, ErrorCode::size_cap,
          "plan_distance supports at most 4000 atoms per plan");
  double sa = a.total_mass(), sb = b.total_mass();
  for (double& w : a.weight) w /= sa;
  for (double& w : b.weight) w /= sb;
  return std::sqrt(std::max(0.0, solve_exact(a, b).plan.cost));
}

ClampBracket remark_bracket(const DensityGrid& f, const DensityGrid& g) {
  ClampBracket b;
  b.lambda_cap = 10.0 * g.domain()->diameter() / f.domain()->diameter();
  int d = f.domain()->dim();
  b.lambda_floor = (f.min_value() / g.max_value()) * std::pow(b.lambda_cap, -(d - 1));
  b.lambda_floor = std::min(b.lambda_floor, 0.9 * b.lambda_cap);
  require(b.lambda_floor > 0, ErrorCode::floor_error,
          "clamp bracket needs a positive source floor");
  return b;
}

PotentialField brenier_potential(const TransportPlan& plan, const DualPotentials& duals,
                                 const DomainPtr& source_domain, const ClampBracket& bracket) {
  const Mesh& mesh = source_domain->mesh();
  require(int(plan.source.count()) == mesh.cell_count(), ErrorCode::mesh_mismatch,
          "plan source atoms do not match the domain cells");
  int n = mesh.cell_count();
  int d = plan.source.dim;
  PotentialField out;
  out.phi = ScalarField(source_domain, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* x = plan.source.point(i);
    double x2 = 0.0;
    for (int k = 0; k < d; ++k) x2 += x[k] * x[k];
    out.phi.v[i] = 0.5 * (x2 - duals.alpha[i]);
  }
  double mean = quadrature(out.phi) / source_domain->volume();
  for (double& v : out.phi.v) v -= mean;

  std::vector<double> mass(n, 0.0);
  std::vector<Vec2> bary(n);
  for (const auto& e : plan.entries) {
    const double* y = plan.target.point(e.j);
    mass[e.i] += e.w;
    bary[e.i].x += e.w * y[0];
    if (d == 2) bary[e.i].y += e.w * y[1];
  }
  out.grad = VectorField(source_domain);
  for (int i = 0; i < n; ++i) {
    require(mass[i] > 0, ErrorCode::unmapped_point,
            "plan row " + std::to_string(i) + " carries no mass");
    out.grad.v[i] = bary[i] / mass[i];
  }
  out.hess_raw = hessian_of(out.grad);
  out.hess = out.hess_raw;
  out.clamp_rate = out.hess.clamp(bracket.lambda_floor, bracket.lambda_cap);
  return out;
}

PotentialField potential_between(const DensityGrid& f, const DensityGrid& g,
                                 const PotentialOptions& opt) {
  DiscreteMeasure mu = measure_from_density(f), nu = measure_from_density(g);
  ClampBracket bracket = remark_bracket(f, g);
  if (opt.backend == OtBackend::exact) {
    ExactSolution s = solve_exact(mu, nu);
    return brenier_potential(s.plan, s.duals, f.domain(), bracket);
  }
  SinkhornSolution s = sinkhorn(mu, nu, opt.sk);
  return brenier_potential(s.plan, s.duals, f.domain(), bracket);
}

D2Result d2_discrete(const DensityGrid& f, const DensityGrid& g, OtBackend backend,
                     const SinkhornParams& sk) {
  DiscreteMeasure mu = measure_from_density(f), nu = measure_from_density(g);
  D2Result r;
  r.atoms_mu = int(mu.count());
  r.atoms_nu = int(nu.count());
  if (backend == OtBackend::exact) {
    r.backend = "exact";
    r.cost = solve_exact(mu, nu).plan.cost;
    r.d2 = std::sqrt(std::max(0.0, r.cost));
    return r;
  }
  r.backend = "sinkhorn";
  r.eps = sk.eps;
  SinkhornCost c = sinkhorn_cost(mu, nu, sk);
  r.marginal_violation = c.marginal_violation;
  r.cost = c.cost;
  if (sk.eps > 1e-3) {
    SinkhornCost cf = sinkhorn_self_cost(mu, sk);
    SinkhornCost cg = sinkhorn_self_cost(nu, sk);
    r.cost = c.cost - 0.5 * (cf.cost + cg.cost);
    r.debiased = true;
  }
  r.d2 = std::sqrt(std::max(0.0, r.cost));
  return r;
}

}  // namespace otlab
