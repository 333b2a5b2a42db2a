#pragma once

#include "otlab/measures.hpp"

namespace otlab {

// Cumulative distribution of a 1D density, sampled on the cell-edge grid.
// Values are exact integrals of the piecewise-constant density.
struct Cdf1D {
  double a = 0.0, b = 0.0;
  int cells = 0;
  std::vector<double> value;  // size cells+1, value[0] = 0, value[cells] = 1

  double edge(int k) const { return a + (b - a) * k / cells; }
  double at(double x) const;        // piecewise-linear CDF
  double inverse(double s) const;   // leftmost preimage on flats
};

// Monotone transport map sampled on the source cell centers.
struct Map1D {
  DomainPtr source;
  std::vector<double> t;
  double min_increment = 0.0;  // modulus of monotonicity over adjacent nodes

  double at(double x) const;  // piecewise-linear evaluation
};

Cdf1D cdf(const DensityGrid& f);
double quantile(const Cdf1D& F, double s);
Map1D brenier_map_1d(const DensityGrid& f, const DensityGrid& g);
double d2_1d(const DensityGrid& f, const DensityGrid& g);

struct LinftyL1Report {
  double lhs = 0.0;   // sup |T1 - T0|
  double rhs = 0.0;   // (1/a) (||f1-f0||_L1 + ||g1-g0||_L1)
  double h = 0.0;     // source grid spacing, slack scale
  bool holds = false; // lhs <= rhs + 10 h
};

LinftyL1Report verify_linfty_l1(const DensityGrid& f0, const DensityGrid& f1,
                                const DensityGrid& g0, const DensityGrid& g1, double a);

// L1 distance between 1D densities on possibly different intervals,
// integrating the piecewise-constant cell values over the union interval.
double l1_distance_1d(const DensityGrid& p, const DensityGrid& q);

// ---------------------------------------------------------------------------
// Closed forms of the vanishing-target family g_a on (0,1), a = 1/(2(1-eps)),
// used for the sharpness sweep. Evaluated analytically, never from grids.

double sharpness_density(double x, double p, double a);
double sharpness_quantile(double y, double p, double a);

struct SharpnessRow {
  double eps = 0.0;
  double map_gap_sup = 0.0;   // sup |G_a^{-1} - G_{1/2}^{-1}|
  double dens_gap_sup = 0.0;  // sup |g_a - g_{1/2}|
  double ratio = 0.0;         // map_gap_sup / dens_gap_sup^eta
};

std::vector<SharpnessRow> counterexample_sweep(double p, double eta,
                                               const std::vector<double>& eps_list,
                                               int scan_points = 200001);

}  // namespace otlab
