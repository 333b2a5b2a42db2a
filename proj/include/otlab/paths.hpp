#pragma once

#include <optional>

#include "otlab/ot1d.hpp"
#include "otlab/ot_discrete.hpp"

namespace otlab {

enum class PathKind { geodesic, linear, multiplicative };

const char* path_kind_name(PathKind k);

struct GeodesicOptions {
  OtBackend backend = OtBackend::exact;  // 2D potential solve
  SinkhornParams sk;
};

// Curve t -> f_t of unit-mass densities with a time-derivative evaluator.
class DensityPath {
 public:
  static DensityPath linear(DensityGrid f0, DensityGrid f1);
  static DensityPath multiplicative(DensityGrid f, ScalarField h);
  static DensityPath geodesic(DensityGrid f0, DensityGrid f1, GeodesicOptions opt = {});

  PathKind kind() const { return kind_; }
  DensityGrid at(double t) const;
  ScalarField time_derivative(double t) const;

  const DensityGrid& f0() const { return f0_; }
  const DensityGrid& f1() const;          // endpoints (geodesic/linear)
  const ScalarField& perturbation() const;  // multiplicative h
  double t_limit() const { return t_limit_; }   // |t| bound for multiplicative kind
  bool moving_support() const { return moving_support_; }

  // geodesic internals, exposed for the velocity evaluator
  const Map1D* map_1d() const { return map_1d_ ? &*map_1d_ : nullptr; }
  const PotentialField* potential_2d() const { return pot_2d_ ? &*pot_2d_ : nullptr; }

  // T_t^{-1}(z) for geodesics
  double invert_1d(double t, double z) const;
  double map_extended(double x) const;  // 1D map with exact edge values
  Vec2 invert_2d(double t, const Vec2& z, int* nearest_cell = nullptr) const;

 private:
  DensityPath(PathKind k, DensityGrid f0) : kind_(k), f0_(std::move(f0)) {}
  PathKind kind_;
  DensityGrid f0_;
  std::optional<DensityGrid> f1_;
  std::optional<ScalarField> h_;
  double t_limit_ = 1.0;
  bool moving_support_ = false;
  std::optional<Map1D> map_1d_;
  std::optional<PotentialField> pot_2d_;

  DensityGrid geodesic_slice(double t) const;
  double map_at_edge(double x) const;  // 1D map extended to cell edges
};

struct VelocitySample {
  double t = 0.0;
  VectorField grad_u;           // on the t-slice mesh
  double boundary_flux_max = 0.0;  // sup over boundary faces of |<grad_u, n>|
};

VelocitySample velocity(const DensityPath& path, double t);

// Benamou-Brenier action of a geodesic by composite midpoint rule in t.
double bb_action(const DensityPath& path, int t_nodes = 33);
// User-supplied velocity variant: samples must align with equispaced midpoint
// t-nodes; throws IncompleteInput when empty.
double bb_action(const DensityPath& path, const std::vector<VelocitySample>& velocities);

}  // namespace otlab
