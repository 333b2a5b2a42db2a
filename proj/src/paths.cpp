#include "otlab/paths.hpp"

#include <algorithm>
#include <cmath>

namespace otlab {

const char* path_kind_name(PathKind k) {
  switch (k) {
    case PathKind::geodesic: return "geodesic";
    case PathKind::linear: return "linear";
    case PathKind::multiplicative: return "multiplicative";
  }
  return "?";
}

const DensityGrid& DensityPath::f1() const {
  require(f1_.has_value(), ErrorCode::kind_error, "path has no second endpoint");
  return *f1_;
}

const ScalarField& DensityPath::perturbation() const {
  require(h_.has_value(), ErrorCode::kind_error, "path has no perturbation field");
  return *h_;
}

DensityPath DensityPath::linear(DensityGrid f0, DensityGrid f1) {
  check_same_mesh(f0.domain(), f1.domain(), "linear_path");
  DensityPath p(PathKind::linear, std::move(f0));
  p.f1_ = std::move(f1);
  return p;
}

DensityPath DensityPath::multiplicative(DensityGrid f, ScalarField h) {
  check_same_mesh(f.domain(), h.dom, "multiplicative_path");
  double wmean = quadrature(h, f);
  require(std::abs(wmean) <= 1e-8, ErrorCode::mean_error,
          "multiplicative perturbation must have zero f-weighted mean");
  double sup = sup_norm(h);
  DensityPath p(PathKind::multiplicative, std::move(f));
  p.h_ = std::move(h);
  p.t_limit_ = sup > 0 ? 1.0 / sup : 1e300;
  return p;
}

DensityPath DensityPath::geodesic(DensityGrid f0, DensityGrid f1, GeodesicOptions opt) {
  int dim = f0.domain()->dim();
  require(dim == f1.domain()->dim(), ErrorCode::dimension_error,
          "geodesic endpoints live in different dimensions");
  DensityPath p(PathKind::geodesic, f0);
  if (dim == 1) {
    p.map_1d_ = brenier_map_1d(p.f0_, f1);
    p.moving_support_ = !(f0.domain()->same_mesh(*f1.domain()));
  } else {
    require(f0.domain()->same_mesh(*f1.domain()), ErrorCode::domain_error,
            "2D geodesics need endpoints on a common mesh");
    PotentialOptions po;
    po.backend = opt.backend;
    po.sk = opt.sk;
    p.pot_2d_ = potential_between(f0, f1, po);
  }
  p.f1_ = std::move(f1);
  return p;
}

double DensityPath::map_extended(double x) const { return map_at_edge(x); }

double DensityPath::map_at_edge(double x) const {
  const Map1D& T = *map_1d_;
  double a = f0_.domain()->x0(), b = f0_.domain()->x1();
  if (x <= a) return f1_->domain()->x0();
  if (x >= b) return f1_->domain()->x1();
  return T.at(x);
}

double DensityPath::invert_1d(double t, double z) const {
  double lo = f0_.domain()->x0(), hi = f0_.domain()->x1();
  auto tmap = [&](double x) { return (1.0 - t) * x + t * map_at_edge(x); };
  if (z <= tmap(lo)) return lo;
  if (z >= tmap(hi)) return hi;
  for (int it = 0; it < 64; ++it) {
    double mid = 0.5 * (lo + hi);
    if (tmap(mid) < z)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vec2 DensityPath::invert_2d(double t, const Vec2& z, int* nearest_cell) const {
  const Mesh& m = f0_.domain()->mesh();
  const PotentialField& pot = *pot_2d_;
  int best = 0;
  double best_d = 1e300;
  for (int k = 0; k < m.cell_count(); ++k) {
    Vec2 p = m.node[k] * (1.0 - t) + pot.grad.v[k] * t;
    double d = norm2(p - z);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (nearest_cell) *nearest_cell = best;
  Vec2 pk = m.node[best] * (1.0 - t) + pot.grad.v[best] * t;
  Sym2 dt{(1.0 - t) + t * pot.hess.m[best].xx, t * pot.hess.m[best].xy,
          (1.0 - t) + t * pot.hess.m[best].yy};
  return m.node[best] + dt.inverse().apply(z - pk);
}

DensityGrid DensityPath::geodesic_slice(double t) const {
  if (f0_.domain()->dim() == 1) {
    const Mesh& m = f0_.domain()->mesh();
    int n = m.cell_count();
    double a_t = (1.0 - t) * f0_.domain()->x0() + t * f1_->domain()->x0();
    double b_t = (1.0 - t) * f0_.domain()->x1() + t * f1_->domain()->x1();
    auto dom_t = moving_support_ ? Domain::interval(a_t, b_t, n) : f0_.domain();
    ScalarField fa = f0_.as_field();
    ScalarField fb = f1_->as_field();
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
      double z = dom_t->mesh().node[i].x;
      double x = invert_1d(t, z);
      double fx = interpolate(fa, {x, 0});
      double gy = interpolate(fb, {map_at_edge(x), 0});
      fx = std::max(fx, 1e-300);
      gy = std::max(gy, 1e-300);
      vals[i] = fx * gy / ((1.0 - t) * gy + t * fx);
    }
    return DensityGrid(dom_t, std::move(vals));
  }
  const Mesh& m = f0_.domain()->mesh();
  int n = m.cell_count();
  ScalarField fa = f0_.as_field();
  std::vector<double> vals(n);
  std::vector<double> dets(n);
  const PotentialField& pot = *pot_2d_;
  for (int k = 0; k < n; ++k) {
    Sym2 dt{(1.0 - t) + t * pot.hess.m[k].xx, t * pot.hess.m[k].xy,
            (1.0 - t) + t * pot.hess.m[k].yy};
    dets[k] = dt.det();
  }
  parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      int cell = 0;
      Vec2 x = invert_2d(t, m.node[i], &cell);
      double fx = std::max(interpolate(fa, x), 1e-300);
      vals[i] = fx / std::max(dets[cell], 1e-12);
    }
  });
  return DensityGrid(f0_.domain(), std::move(vals));
}

DensityGrid DensityPath::at(double t) const {
  switch (kind_) {
    case PathKind::linear: {
      require(t >= -0.5 && t <= 1.5, ErrorCode::range_error, "linear path evaluated far outside [0,1]");
      if (t == 0.0) return f0_;
      if (t == 1.0) return *f1_;
      const auto& a = f0_.values();
      const auto& b = f1_->values();
      std::vector<double> v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        v[i] = (1.0 - t) * a[i] + t * b[i];
        require(v[i] >= 0.0, ErrorCode::range_error, "linear extrapolation left the density cone");
      }
      return DensityGrid::prenormalized(f0_.domain(), std::move(v),
                                        t >= 0 && t <= 1 ? std::min(f0_.floor(), f1_->floor()) : 0.0);
    }
    case PathKind::multiplicative: {
      require(std::abs(t) < t_limit_, ErrorCode::range_error,
              "multiplicative path evaluated beyond its positivity range");
      if (t == 0.0) return f0_;
      const auto& a = f0_.values();
      const auto& h = h_->v;
      std::vector<double> v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] * (1.0 + t * h[i]);
      return DensityGrid(f0_.domain(), std::move(v));
    }
    case PathKind::geodesic: {
      require(t >= 0.0 && t <= 1.0, ErrorCode::range_error, "geodesic defined for t in [0,1]");
      if (t == 0.0) return f0_;
      if (t == 1.0) return *f1_;
      return geodesic_slice(t);
    }
  }
  fail(ErrorCode::kind_error, "unknown path kind");
}

ScalarField DensityPath::time_derivative(double t) const {
  switch (kind_) {
    case PathKind::linear: {
      ScalarField d(f0_.domain(), 0.0);
      for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = f1_->values()[i] - f0_.values()[i];
      return d;
    }
    case PathKind::multiplicative: {
      ScalarField d(f0_.domain(), 0.0);
      for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = f0_.values()[i] * h_->v[i];
      return d;
    }
    case PathKind::geodesic: {
      require(!moving_support_, ErrorCode::domain_error,
              "geodesic time derivative needs a common support");
      // continuity equation: d/dt f_t = -div(f_t grad u_t), assembled as a
      // conservative face-flux divergence so the derivative has exact zero mean
      DensityGrid ft = at(t);
      VelocitySample vel = velocity(*this, t);
      const Mesh& m = ft.domain()->mesh();
      ScalarField out(ft.domain(), 0.0);
      for (const auto& f : m.ifaces) {
        Vec2 flux = (vel.grad_u.v[f.left] * ft.values()[f.left] +
                     vel.grad_u.v[f.right] * ft.values()[f.right]) * 0.5;
        double q = dot(flux, f.normal) * f.area;
        out.v[f.left] -= q / m.vol[f.left];
        out.v[f.right] += q / m.vol[f.right];
      }
      return out;
    }
  }
  fail(ErrorCode::kind_error, "unknown path kind");
}

VelocitySample velocity(const DensityPath& path, double t) {
  require(path.kind() == PathKind::geodesic, ErrorCode::kind_error,
          "velocity is defined for geodesic paths");
  require(t >= 0.0 && t < 1.0 + 1e-12, ErrorCode::range_error, "velocity needs t in [0,1)");
  VelocitySample out;
  out.t = t;
  DensityGrid ft = path.at(t);
  const DomainPtr& dom_t = ft.domain();
  const Mesh& m = dom_t->mesh();
  if (dom_t->dim() == 1) {
    const Map1D& T = *path.map_1d();
    out.grad_u = VectorField(dom_t);
    for (int i = 0; i < m.cell_count(); ++i) {
      double z = m.node[i].x;
      double x = path.invert_1d(t, z);
      out.grad_u.v[i] = {T.at(x) - x, 0.0};
    }
  } else {
    const PotentialField& pot = *path.potential_2d();
    out.grad_u = VectorField(dom_t);
    std::vector<Vec2>& gv = out.grad_u.v;
    parallel_chunks(m.cell_count(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        int cell = 0;
        Vec2 x = path.invert_2d(t, m.node[i], &cell);
        gv[i] = interpolate(pot.grad, x) - x;
      }
    });
  }
  for (const auto& b : m.bfaces) {
    Vec2 vb;
    if (dom_t->dim() == 1) {
      double x = path.invert_1d(t, b.center.x);
      vb = {path.map_extended(x) - x, 0.0};
    } else {
      Vec2 x = path.invert_2d(t, b.center);
      vb = interpolate(path.potential_2d()->grad, x) - x;
    }
    out.boundary_flux_max = std::max(out.boundary_flux_max, std::abs(dot(vb, b.normal)));
  }
  return out;
}

double bb_action(const DensityPath& path, int t_nodes) {
  require(path.kind() == PathKind::geodesic, ErrorCode::incomplete_input,
          "bb_action without velocities needs a geodesic path");
  require(t_nodes >= 1, ErrorCode::range_error, "bb_action needs at least one t node");
  double acc = 0.0;
  for (int k = 0; k < t_nodes; ++k) {
    double t = (k + 0.5) / t_nodes;
    DensityGrid ft = path.at(t);
    VelocitySample vel = velocity(path, t);
    ScalarField speed2(ft.domain(), 0.0);
    for (std::size_t i = 0; i < speed2.v.size(); ++i) speed2.v[i] = norm2(vel.grad_u.v[i]);
    acc += quadrature(speed2, ft);
  }
  return acc / t_nodes;
}

double bb_action(const DensityPath& path, const std::vector<VelocitySample>& velocities) {
  require(!velocities.empty(), ErrorCode::incomplete_input,
          "bb_action needs at least one velocity sample");
  double acc = 0.0;
  for (const auto& vel : velocities) {
    DensityGrid ft = path.at(vel.t);
    check_same_mesh(ft.domain(), vel.grad_u.dom, "bb_action");
    ScalarField speed2(ft.domain(), 0.0);
    for (std::size_t i = 0; i < speed2.v.size(); ++i) speed2.v[i] = norm2(vel.grad_u.v[i]);
    acc += quadrature(speed2, ft);
  }
  return acc / double(velocities.size());
}

}  // namespace otlab
