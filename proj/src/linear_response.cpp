#include "otlab/linear_response.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace otlab {

namespace {

Sym2 coefficient_at(const DensityGrid& f, const SpdField& hess, int c) {
  if (f.domain()->dim() == 1) return Sym2{f.values()[c] / hess.m[c].xx, 0.0, 1.0};
  return hess.m[c].inverse() * f.values()[c];
}

double conormal_weight(const Sym2& A, const Vec2& n, int dim) {
  if (dim == 1) return std::abs(A.xx);
  return norm(A.apply(n));
}

struct StencilEntry {
  int cell;
  Vec2 g;  // contribution of this cell's value to the face gradient
};

}  // namespace

EllipticProblem EllipticProblem::assemble(const DensityGrid& f, const SpdField& hess,
                                          const ScalarField& p, const std::vector<double>& q) {
  const DomainPtr& dom = f.domain();
  check_same_mesh(dom, p.dom, "assemble");
  require(hess.size() == std::size_t(dom->mesh().cell_count()), ErrorCode::mesh_mismatch,
          "assemble: hessian field size");
  const Mesh& m = dom->mesh();
  require(q.size() == m.bfaces.size(), ErrorCode::mesh_mismatch,
          "assemble: one boundary value per boundary face");
  int n = m.cell_count();
  int dim = dom->dim();

  std::vector<Sym2> A(n);
  for (int c = 0; c < n; ++c) A[c] = coefficient_at(f, hess, c);

  std::vector<std::map<int, double>> rows(n);
  auto add = [&](int a, int b, double v) { rows[a][b] += v; };

  std::vector<StencilEntry> st;
  for (const auto& face : m.ifaces) {
    Sym2 Af = (A[face.left] + A[face.right]) * 0.5;
    st.clear();
    // normal chord
    Vec2 g1 = face.e1 / face.d1;
    if (face.d2 > 0) {
      // solve [e1^T; e2^T] g = (v1, v2) for linear exactness
      double det = face.e1.x * face.e2.y - face.e1.y * face.e2.x;
      Vec2 col1{face.e2.y / det, -face.e2.x / det};   // multiplies v1
      Vec2 col2{-face.e1.y / det, face.e1.x / det};   // multiplies v2
      st.push_back({face.right, col1 / face.d1});
      st.push_back({face.left, col1 / face.d1 * -1.0});
      for (int k = 0; k < 4; ++k) {
        if (face.side[k] < 0) continue;
        st.push_back({face.side[k], col2 * (face.side_w[k] / face.d2)});
      }
    } else {
      st.push_back({face.right, g1});
      st.push_back({face.left, g1 * -1.0});
    }
    // merge duplicate cells (one-sided chords reuse left/right)
    std::sort(st.begin(), st.end(), [](const StencilEntry& a, const StencilEntry& b) {
      return a.cell < b.cell;
    });
    std::size_t w = 0;
    for (std::size_t r = 0; r < st.size(); ++r) {
      if (w > 0 && st[w - 1].cell == st[r].cell)
        st[w - 1].g += st[r].g;
      else
        st[w++] = st[r];
    }
    st.resize(w);
    for (std::size_t a = 0; a < st.size(); ++a) {
      Vec2 Ag = Af.apply(st[a].g);
      for (std::size_t b = a; b < st.size(); ++b) {
        double v = face.diamond * dot(Ag, st[b].g);
        add(st[a].cell, st[b].cell, v);
        if (st[a].cell != st[b].cell) add(st[b].cell, st[a].cell, v);
      }
    }
  }
  // boundary kites use the cell least-squares gradient
  for (const auto& b : m.bfaces) {
    int c = b.cell;
    double height = std::abs(dot(b.center - m.node[c], b.normal));
    double w_kite = dim == 1 ? height : 0.5 * b.area * height;
    const auto& nb = m.neigh[c];
    st.clear();
    Vec2 self{0, 0};
    for (std::size_t k = 0; k < nb.size(); ++k) {
      st.push_back({nb[k], m.ls_coef[c][k]});
      self -= m.ls_coef[c][k];
    }
    st.push_back({c, self});
    for (std::size_t a = 0; a < st.size(); ++a) {
      Vec2 Ag = A[c].apply(st[a].g);
      for (std::size_t bb = a; bb < st.size(); ++bb) {
        double v = w_kite * dot(Ag, st[bb].g);
        add(st[a].cell, st[bb].cell, v);
        if (st[a].cell != st[bb].cell) add(st[bb].cell, st[a].cell, v);
      }
    }
  }

  EllipticProblem out;
  out.dom_ = dom;
  out.rhs_.assign(n, 0.0);
  double p_scale = 0.0, q_scale = 0.0;
  for (int c = 0; c < n; ++c) {
    out.rhs_[c] = -p.v[c] * m.vol[c];
    p_scale += std::abs(p.v[c]) * m.vol[c];
  }
  for (std::size_t k = 0; k < m.bfaces.size(); ++k) {
    const auto& b = m.bfaces[k];
    double wq = conormal_weight(A[b.cell], b.normal, dim) * q[k] * b.area;
    out.rhs_[b.cell] += wq;
    q_scale += std::abs(wq);
  }
  double raw = 0.0;
  for (double v : out.rhs_) raw += v;
  out.compat_ = raw;
  double scale = std::max({p_scale, q_scale, 1e-300});
  require(std::abs(raw) <= 1e-6 * scale, ErrorCode::incompatible_data,
          "interior source and boundary flux do not balance");

  out.row_ptr_.assign(n + 1, 0);
  for (int c = 0; c < n; ++c) out.row_ptr_[c + 1] = out.row_ptr_[c] + int(rows[c].size());
  out.col_.resize(out.row_ptr_[n]);
  out.val_.resize(out.row_ptr_[n]);
  for (int c = 0; c < n; ++c) {
    int at = out.row_ptr_[c];
    for (const auto& [j, v] : rows[c]) {
      out.col_[at] = j;
      out.val_[at] = v;
      ++at;
    }
  }
  return out;
}

std::vector<double> EllipticProblem::apply(const std::vector<double>& x) const {
  int n = size();
  std::vector<double> y(n, 0.0);
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int k = row_ptr_[c]; k < row_ptr_[c + 1]; ++k) acc += val_[k] * x[col_[k]];
    y[c] = acc;
  }
  return y;
}

double EllipticProblem::energy(const std::vector<double>& xi) const {
  std::vector<double> y = apply(xi);
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) e += xi[i] * y[i];
  return e;
}

ResponseField EllipticProblem::solve(double rel_tol, int max_iter_factor) const {
  int n = size();
  std::vector<double> b = rhs_;
  double mean = 0.0;
  for (double v : b) mean += v;
  mean /= n;
  for (double& v : b) v -= mean;

  std::vector<double> diag(n, 0.0);
  for (int c = 0; c < n; ++c)
    for (int k = row_ptr_[c]; k < row_ptr_[c + 1]; ++k)
      if (col_[k] == c) diag[c] = std::max(val_[k], 1e-300);

  auto deflate = [&](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= n;
    for (double& x : v) x -= s;
  };

  std::vector<double> x(n, 0.0), r = b, z(n), pdir(n), Ap;
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  ResponseField out;
  out.diag.compatibility = compat_;
  if (bnorm == 0.0) {
    out.xi = ScalarField(dom_, 0.0);
    out.grad = VectorField(dom_);
    return out;
  }
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  deflate(z);
  pdir = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];
  int maxit = max_iter_factor * n;
  int it = 0;
  double rnorm = bnorm;
  for (; it < maxit; ++it) {
    rnorm = 0.0;
    for (double v : r) rnorm += v * v;
    rnorm = std::sqrt(rnorm);
    if (rnorm <= rel_tol * bnorm) break;
    Ap = apply(pdir);
    double pAp = 0.0;
    for (int i = 0; i < n; ++i) pAp += pdir[i] * Ap[i];
    require(pAp > 0, ErrorCode::no_convergence, "operator lost positivity in CG");
    double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * pdir[i];
      r[i] -= alpha * Ap[i];
    }
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    deflate(z);
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) pdir[i] = z[i] + beta * pdir[i];
  }
  require(it < maxit || rnorm <= rel_tol * bnorm * 100, ErrorCode::no_convergence,
          "CG did not reach its tolerance");

  out.xi = ScalarField(dom_, std::move(x));
  double qmean = quadrature(out.xi) / dom_->volume();
  for (double& v : out.xi.v) v -= qmean;
  out.grad = gradient_of(out.xi);
  out.diag.iterations = it;
  out.diag.residual = rnorm / bnorm;
  out.diag.compatibility = compat_;
  return out;
}

namespace {

// 1D route: flux(x) = integral of p, xi' = flux / a on cell edges, then a
// cumulative midpoint integration back to cell centers.
ResponseField solve_response_1d(const DensityGrid& f, const SpdField& hess,
                                std::vector<double> p_div) {
  const DomainPtr& dom = f.domain();
  const Mesh& m = dom->mesh();
  int n = m.cell_count();
  double h = dom->spacing();
  double raw = 0.0;
  for (int c = 0; c < n; ++c) raw += p_div[c] * m.vol[c];
  double mean = raw / dom->volume();
  for (double& v : p_div) v -= mean;

  std::vector<double> flux(n + 1, 0.0);
  for (int c = 0; c < n; ++c) flux[c + 1] = flux[c] + p_div[c] * m.vol[c];
  std::vector<double> a(n);
  for (int c = 0; c < n; ++c) a[c] = f.values()[c] / hess.m[c].xx;
  std::vector<double> slope(n + 1, 0.0);  // xi' at edges
  for (int e = 1; e < n; ++e) slope[e] = flux[e] / (0.5 * (a[e - 1] + a[e]));

  ResponseField out;
  out.xi = ScalarField(dom, 0.0);
  for (int c = 1; c < n; ++c) out.xi.v[c] = out.xi.v[c - 1] + slope[c] * h;
  double qmean = quadrature(out.xi) / dom->volume();
  for (double& v : out.xi.v) v -= qmean;
  out.grad = VectorField(dom);
  for (int c = 0; c < n; ++c) out.grad.v[c] = {0.5 * (slope[c] + slope[c + 1]), 0.0};
  out.diag.compatibility = flux[n];
  out.diag.compatibility_raw = raw;
  out.diag.iterations = 0;
  out.diag.residual = 0.0;
  return out;
}

}  // namespace

ResponseField solve_response(const DensityPath& path_f, const DensityPath& path_g,
                             const PotentialField& phi, double t) {
  DensityGrid ft = path_f.at(t);
  DensityGrid gt = path_g.at(t);
  check_same_mesh(ft.domain(), phi.phi.dom, "solve_response");
  ScalarField df = path_f.time_derivative(t);
  ScalarField dg = path_g.time_derivative(t);

  // w = (d/dt g_t)/g_t on the target mesh, composed with grad(phi)
  ScalarField w(gt.domain(), 0.0);
  for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] = dg.v[i] / gt.values()[i];

  const Mesh& m = ft.domain()->mesh();
  int n = m.cell_count();
  std::vector<double> p_div(n);
  for (int c = 0; c < n; ++c)
    p_div[c] = df.v[c] - interpolate(w, phi.grad.v[c]) * ft.values()[c];

  double raw = 0.0, scale = 1e-300;
  for (int c = 0; c < n; ++c) {
    raw += p_div[c] * m.vol[c];
    scale += std::abs(p_div[c]) * m.vol[c];
  }
  require(std::abs(raw) <= 0.01 * scale + 1e-14, ErrorCode::incompatible_data,
          "assembled response data is grossly incompatible");

  if (ft.domain()->dim() == 1) {
    ResponseField out = solve_response_1d(ft, phi.hess, std::move(p_div));
    out.diag.clamp_rate = phi.clamp_rate;
    return out;
  }

  double mean = raw / ft.domain()->volume();
  ScalarField p(ft.domain(), 0.0);
  for (int c = 0; c < n; ++c) p.v[c] = p_div[c] - mean;
  EllipticProblem prob =
      EllipticProblem::assemble(ft, phi.hess, p, std::vector<double>(m.bfaces.size(), 0.0));
  ResponseField out = prob.solve();
  out.diag.compatibility_raw = raw;
  out.diag.clamp_rate = phi.clamp_rate;
  return out;
}

double magic_residual(const DensityGrid& f, const DensityGrid& g, const PotentialField& phi,
                      const ScalarField& xi) {
  const DomainPtr& dom = f.domain();
  check_same_mesh(dom, xi.dom, "magic_residual");
  const Mesh& m = dom->mesh();
  int n = m.cell_count();
  VectorField grad_xi = gradient_of(xi);
  SpdField hess_xi = hessian_of(grad_xi);
  ScalarField gfield = g.as_field();
  VectorField grad_g = gradient_of(gfield);

  VectorField W(dom);
  for (int c = 0; c < n; ++c)
    W.v[c] = phi.hess.inverse_at(c).apply(grad_xi.v[c]) * f.values()[c];
  ScalarField divW = divergence_of(W);

  // skip two rings of cells next to the boundary: one-sided stencils there
  std::vector<char> skip(n, 0);
  for (const auto& b : m.bfaces) skip[b.cell] = 1;
  std::vector<char> skip2 = skip;
  for (int c = 0; c < n; ++c)
    if (skip[c])
      for (int nb : m.neigh[c]) skip2[nb] = 1;

  double acc = 0.0;
  for (int c = 0; c < n; ++c) {
    if (skip2[c]) continue;
    Sym2 inv = phi.hess.inverse_at(c);
    Sym2 H = hess_xi.m[c];
    double tr = dom->dim() == 1 ? inv.xx * H.xx
                                : inv.xx * H.xx + 2.0 * inv.xy * H.xy + inv.yy * H.yy;
    Vec2 y = phi.grad.v[c];
    double gval = std::max(interpolate(gfield, y), 1e-12);
    Vec2 gg = interpolate(grad_g, y);
    double lhs = f.values()[c] * (tr + dot(gg, grad_xi.v[c]) / gval);
    double r = lhs - divW.v[c];
    acc += r * r * m.vol[c];
  }
  return std::sqrt(acc);
}

VectorField cofactor_divergence(const PotentialField& phi) {
  const DomainPtr& dom = phi.phi.dom;
  require(dom->dim() == 2, ErrorCode::dimension_error, "cofactor divergence needs a 2D field");
  int n = dom->mesh().cell_count();
  std::vector<Sym2> cof(n);
  for (int c = 0; c < n; ++c) {
    const Sym2& H = phi.hess_raw.m[c];
    cof[c] = Sym2{H.yy, -H.xy, H.xx};
  }
  return divergence_rows(dom, cof);
}

double boundary_normal_residual(const PotentialField& phi, const DomainPtr& omega,
                                const DomainPtr& omega_star) {
  check_same_mesh(phi.phi.dom, omega, "boundary_normal_residual");
  const Mesh& m = omega->mesh();
  double collar = std::max(0.25 * omega_star->diameter(), 5.0 * omega_star->spacing());
  double worst = 0.0;
  for (std::size_t k = 0; k < m.bfaces.size(); ++k) {
    const auto& b = m.bfaces[k];
    Vec2 y = phi.grad.v[b.cell];
    require(std::abs(omega_star->omega(y)) <= collar, ErrorCode::range_error,
            "gradient leaves the target collar at boundary face " + std::to_string(k));
    Vec2 n_star = omega_star->outer_normal(y);
    Vec2 v = normalized(phi.hess.inverse_at(b.cell).apply(b.normal));
    double cross = n_star.x * v.y - n_star.y * v.x;
    worst = std::max(worst, std::atan2(std::abs(cross), dot(n_star, v)));
  }
  return worst;
}

}  // namespace otlab
