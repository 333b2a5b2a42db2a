#pragma once

#include "otlab/measures.hpp"
#include "otlab/paths.hpp"

namespace otlab {

struct SolveDiagnostics {
  int iterations = 0;
  double residual = 0.0;           // final relative CG residual
  double compatibility = 0.0;      // Fredholm residual of the assembled rhs
  double compatibility_raw = 0.0;  // before the discrete projection
  double clamp_rate = 0.0;         // Hessian clamp activity of the coefficient
};

struct ResponseField {
  ScalarField xi;    // quadrature mean zero
  VectorField grad;
  SolveDiagnostics diag;
};

// div[A grad xi] = p in Omega, <A grad xi, n> = |A n| q on its boundary,
// quadrature(xi) = 0, with A = f (D^2 phi)^{-1}. Cell-centered finite volumes
// with a per-face gradient (two-point normal chord plus a lateral chord), so
// the assembled matrix is symmetric positive semidefinite with kernel exactly
// the constants.
class EllipticProblem {
 public:
  static EllipticProblem assemble(const DensityGrid& f, const SpdField& hess,
                                  const ScalarField& p, const std::vector<double>& q);

  ResponseField solve(double rel_tol = 1e-10, int max_iter_factor = 20) const;

  double energy(const std::vector<double>& xi) const;  // xi^T L xi
  std::vector<double> apply(const std::vector<double>& xi) const;
  double compatibility() const { return compat_; }
  int size() const { return int(rhs_.size()); }
  const DomainPtr& domain() const { return dom_; }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return col_; }
  const std::vector<double>& vals() const { return val_; }
  const std::vector<double>& rhs() const { return rhs_; }

 private:
  DomainPtr dom_;
  std::vector<int> row_ptr_, col_;
  std::vector<double> val_;
  std::vector<double> rhs_;
  double compat_ = 0.0;
};

// Response of the Brenier potential to the data motion (d/dt of both path
// densities) at time t, solved in divergence form with no-flux conormal data.
// 1D inputs use the exact flux-integration route; 2D inputs are assembled.
ResponseField solve_response(const DensityPath& path_f, const DensityPath& path_g,
                             const PotentialField& phi, double t);

// L2 norm, over cells away from the boundary, of the gap between the
// non-divergence and divergence forms of the linearized operator.
double magic_residual(const DensityGrid& f, const DensityGrid& g, const PotentialField& phi,
                      const ScalarField& xi);

// Row-wise discrete divergence of the cofactor matrix of D^2 phi (2D).
VectorField cofactor_divergence(const PotentialField& phi);

// Max angle over boundary faces between the target normal at grad(phi) and
// the conormal direction (D^2 phi)^{-1} n.
double boundary_normal_residual(const PotentialField& phi, const DomainPtr& omega,
                                const DomainPtr& omega_star);

}  // namespace otlab
