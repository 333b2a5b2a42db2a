#pragma once

#include <cstdint>

#include "otlab/ot1d.hpp"
#include "otlab/second_variation.hpp"

namespace otlab {

struct StabilityRow {
  double perturbation = 0.0;
  double lhs = 0.0;    // primary norm of the theorem
  double lhs2 = 0.0;   // secondary norm (plans or gradients), 0 if unused
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when rhs vanishes
  double ratio2 = 0.0;
  bool ok = true;
  std::string note;
};

struct StabilityReport {
  std::string theorem;
  std::string family;
  std::uint64_t seed = 0;
  std::string backend;
  std::vector<StabilityRow> rows;  // sorted by perturbation size
};

// Source and target pairs translated by s: maps shift rigidly, both sides of
// the bound scale linearly, ratio 1. Optionally adds the plan distance.
StabilityReport thm11_translation_sweep(const std::vector<double>& shifts, int n,
                                        bool with_plans = false, int plan_cells = 48);

// Multiplicative source perturbations f_t = f(1+t cos(pi x)) against a fixed
// uniform target; Lipschitz-stable ratios as t -> 0.
StabilityReport thm11_multiplicative_sweep(const std::vector<double>& ts, int n);

// Discontinuous piecewise-constant pairs with the exp(-phi) normalization.
StabilityReport thm12_piecewise_sweep(const std::vector<double>& steps, int n,
                                      std::uint64_t seed);

// Smooth trig families measured in the discrete C^{1,alpha} norm against the
// L^p norm with p = 1/(1-alpha) in one dimension.
StabilityReport thm13_smooth_sweep(const std::vector<double>& ts, double alpha, int n,
                                   std::uint64_t seed);

// Vanishing-target control: ratios diverge as eps -> 0 for eta > 1/(p+1).
StabilityReport thm13_counterexample_control(double p, double eta,
                                             const std::vector<double>& eps_list);

struct BLResult {
  double lhs = 0.0;   // Var_{mu_F}(u)
  double rhs = 0.0;   // int <(D^2 F)^{-1} grad u, grad u> d mu_F
  double margin = 0.0;
  double clamp_rate = 0.0;
};

// Variance bound for the log-concave weight e^{-F} restricted to the domain.
BLResult brascamp_lieb_check(const ScalarField& F, const ScalarField& u);

// Seeded property family: uniformly convex quadratic-plus-bump F and trig u
// on a disk grid.
std::vector<BLResult> brascamp_lieb_suite(int count, std::uint64_t seed, int nr, int nt);

}  // namespace otlab
