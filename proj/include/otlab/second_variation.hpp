#pragma once

#include "otlab/linear_response.hpp"

namespace otlab {

struct D2Backend {
  enum class Kind { exact1d, lp, sinkhorn } kind = Kind::exact1d;
  SinkhornParams sk;  // sinkhorn backend settings (debiased costs)
};

// Mesh-scaled default: exact quantiles in 1D, LP up to 1600 atoms, otherwise
// debiased entropic costs with eps tied to the squared cell extent.
D2Backend auto_backend(const DensityGrid& f, const DensityGrid& g);

double d2_squared(const DensityGrid& f, const DensityGrid& g, const D2Backend& backend);

// quadrature of <(D^2 phi)^{-1} grad xi, grad xi> f; xi comes from
// solve_response with the perturbation source (k o grad phi - h) f.
double second_variation(const DensityGrid& f, const DensityGrid& g, const ScalarField& h,
                        const ScalarField& k, const PotentialField& phi, const ResponseField& xi);

// Symmetric second quotient [Q(dt) + Q(-dt) - 2 Q(0)] / (2 dt^2) of
// Q(t) = d2(f_t, g_t)^2, matching the (1/2) d^2/dt^2 convention.
double fd_second_derivative(const DensityPath& path_f, const DensityPath& path_g, double delta_t,
                            const D2Backend& backend);

struct SecondVariationReport {
  double formula_value = 0.0;
  double fd_value = 0.0;         // at delta_t
  double fd_value_coarse = 0.0;  // at 2 delta_t (Richardson companion)
  double delta_t = 0.0;
  double relative_gap = 0.0;
  std::string backend;
};

SecondVariationReport validate(const DensityPath& path_f, const DensityPath& path_g,
                               const PotentialField& phi, double delta_t,
                               const D2Backend& backend);

}  // namespace otlab
