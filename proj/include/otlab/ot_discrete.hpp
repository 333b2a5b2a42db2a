#pragma once

#include "otlab/measures.hpp"

namespace otlab {

// Weighted atoms in R^d, d in {1, 2, 4}; coordinates stored flat, row-major.
struct DiscreteMeasure {
  int dim = 2;
  std::vector<double> coord;
  std::vector<double> weight;

  std::size_t count() const { return weight.size(); }
  const double* point(std::size_t i) const { return coord.data() + dim * i; }
  double total_mass() const;
};

DiscreteMeasure measure_from_density(const DensityGrid& f);

struct PlanEntry {
  int i = 0, j = 0;
  double w = 0.0;
};

// Sparse coupling between two discrete measures with squared-Euclidean cost.
struct TransportPlan {
  DiscreteMeasure source, target;
  std::vector<PlanEntry> entries;
  double cost = 0.0;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

struct DualPotentials {
  std::vector<double> alpha, beta;  // gauge: sum(alpha * mu) = 0
};

inline constexpr int kAtomCap = 4000;

struct ExactSolution {
  TransportPlan plan;
  DualPotentials duals;
  int pivots = 0;
};

// Optimal plan and feasible complementary duals via a transportation-problem
// network simplex on the dense bipartite instance.
ExactSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct SinkhornParams {
  double eps = 1e-2;
  double tol = 1e-6;           // L1 marginal violation at the target eps
  int max_sweeps = 10000;      // total, across stages
  double scaling_start = 1.0;  // eps scaling begins here
  double scaling_factor = 0.5;
  double omega = 1.8;          // log-domain over-relaxation, 1 disables
  std::vector<double> warm_alpha, warm_beta;  // optional warm start
};

struct SinkhornSolution {
  TransportPlan plan;
  DualPotentials duals;
  double marginal_violation = 0.0;
  int sweeps = 0;
  double eps = 0.0;
};

SinkhornSolution sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const SinkhornParams& params);

// Cost-only variant; skips plan materialization. Potentials are returned for
// warm starting nearby solves.
struct SinkhornCost {
  double cost = 0.0;
  double marginal_violation = 0.0;
  int sweeps = 0;
  std::vector<double> alpha, beta;
};

SinkhornCost sinkhorn_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const SinkhornParams& params);

// Entropic self-transport cost OT_eps(mu, mu) via the symmetric fixed point.
SinkhornCost sinkhorn_self_cost(const DiscreteMeasure& mu, const SinkhornParams& params);

// d2 between plans viewed as measures on R^{2d}.
double plan_distance(const TransportPlan& p0, const TransportPlan& p1);

struct ClampBracket {
  double lambda_floor = 0.0;
  double lambda_cap = 0.0;
};

// Ellipticity bracket: cap = 10 diam(target) / diam(source), floor from the
// determinant lower bound with the measured density extremes.
ClampBracket remark_bracket(const DensityGrid& f, const DensityGrid& g);

// phi(x_i) = (|x_i|^2 - alpha_i)/2 with quadrature mean zero, gradient from
// the barycentric projection of the plan, Hessian by differencing the
// gradient and clamping to the bracket.
PotentialField brenier_potential(const TransportPlan& plan, const DualPotentials& duals,
                                 const DomainPtr& source_domain, const ClampBracket& bracket);

enum class OtBackend { exact, sinkhorn };

struct PotentialOptions {
  OtBackend backend = OtBackend::exact;
  SinkhornParams sk;
};

PotentialField potential_between(const DensityGrid& f, const DensityGrid& g,
                                 const PotentialOptions& opt = {});

struct D2Result {
  double d2 = 0.0;
  double cost = 0.0;  // primal transport cost (debiased when noted)
  std::string backend;
  double eps = 0.0;
  bool debiased = false;
  double marginal_violation = 0.0;
  int atoms_mu = 0, atoms_nu = 0;
};

D2Result d2_discrete(const DensityGrid& f, const DensityGrid& g, OtBackend backend,
                     const SinkhornParams& sk = {});

}  // namespace otlab
