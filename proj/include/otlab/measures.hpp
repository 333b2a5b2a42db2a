#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otlab/common.hpp"

namespace otlab {

enum class DomainKind { interval, disk, ellipse, rectangle };

const char* domain_kind_name(DomainKind k);
DomainKind domain_kind_from_name(const std::string& s);

struct BoundaryFace {
  int cell = -1;
  Vec2 center;
  Vec2 normal;  // unit outer normal
  double area = 0.0;
};

// Interior face with the data needed for a linear-exact face gradient:
// one chord across the face (left -> right cells) and, when available, a
// second chord built from up to four lateral neighbours.
struct InteriorFace {
  int left = -1, right = -1;
  Vec2 center;
  Vec2 normal;  // unit, oriented left -> right
  double area = 0.0;
  Vec2 e1;          // unit chord x_R - x_L
  double d1 = 0.0;  // |x_R - x_L|
  std::array<int, 4> side{-1, -1, -1, -1};  // plus-pair then minus-pair
  std::array<double, 4> side_w{0, 0, 0, 0};
  Vec2 e2;          // unit second chord (zero if unavailable)
  double d2 = 0.0;
  double diamond = 0.0;  // area associated with the face
};

struct Mesh {
  int dim = 1;
  int n1 = 0, n2 = 0;  // grid shape (cells): n1, or n1 x n2
  std::vector<Vec2> node;      // cell centers
  std::vector<double> vol;
  std::vector<InteriorFace> ifaces;
  std::vector<BoundaryFace> bfaces;
  std::vector<std::vector<int>> neigh;     // least-squares stencil
  std::vector<std::vector<Vec2>> ls_coef;  // gradient = sum coef_k * (u_k - u_c)
  double total_volume = 0.0;

  int cell_count() const { return int(node.size()); }
};

class Domain;
using DomainPtr = std::shared_ptr<const Domain>;

class Domain {
 public:
  static DomainPtr interval(double a, double b, int cells);
  static DomainPtr disk(Vec2 center, double radius, int n_r, int n_theta);
  static DomainPtr ellipse(Vec2 center, double rx, double ry, int n_r, int n_theta);
  static DomainPtr rectangle(double ax, double bx, double ay, double by, int nx, int ny);

  DomainKind kind() const { return kind_; }
  int dim() const { return mesh_.dim; }
  const Mesh& mesh() const { return mesh_; }
  const std::vector<double>& params() const { return params_; }

  // Convex defining function: negative inside, zero on the boundary.
  double omega(const Vec2& p) const;
  // Unit outer normal direction of the level set of omega through p.
  Vec2 outer_normal(const Vec2& p) const;

  double volume() const { return mesh_.total_volume; }
  double diameter() const;
  double spacing() const { return spacing_; }  // max cell extent

  int locate(const Vec2& p) const;  // nearest cell index
  bool same_mesh(const Domain& other) const;

  std::string describe() const;

  // 1D helpers
  double x0() const { return params_[0]; }
  double x1() const { return params_[1]; }

 private:
  Domain() = default;
  DomainKind kind_ = DomainKind::interval;
  std::vector<double> params_;
  Mesh mesh_;
  double spacing_ = 0.0;
  void build_ls_stencils();
};

// ---------------------------------------------------------------------------
// Fields

struct ScalarField {
  DomainPtr dom;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(DomainPtr d, std::vector<double> vals) : dom(std::move(d)), v(std::move(vals)) {}
  ScalarField(DomainPtr d, double fill) : dom(std::move(d)), v(dom ? dom->mesh().cell_count() : 0, fill) {}
  std::size_t size() const { return v.size(); }
};

struct VectorField {
  DomainPtr dom;
  std::vector<Vec2> v;

  VectorField() = default;
  VectorField(DomainPtr d, std::vector<Vec2> vals) : dom(std::move(d)), v(std::move(vals)) {}
  explicit VectorField(DomainPtr d) : dom(std::move(d)), v(dom ? dom->mesh().cell_count() : 0) {}
  std::size_t size() const { return v.size(); }
};

struct SpdField {
  DomainPtr dom;
  std::vector<Sym2> m;
  double lambda_min = 0.0;   // ellipticity bracket after clamping
  double lambda_max = 0.0;

  SpdField() = default;
  SpdField(DomainPtr d, std::vector<Sym2> vals) : dom(std::move(d)), m(std::move(vals)) {}
  std::size_t size() const { return m.size(); }

  // Returns the fraction of nodes whose eigenvalues were moved.
  double clamp(double lo, double hi);
  Sym2 inverse_at(std::size_t i) const;
};

// Brenier potential samples with gradient and clamped Hessian fields.
struct PotentialField {
  ScalarField phi;       // quadrature mean zero
  VectorField grad;
  SpdField hess;         // clamped to [lambda_min, lambda_max]
  SpdField hess_raw;     // symmetrized, unclamped
  double clamp_rate = 0.0;
};

struct NormReport {
  std::map<double, double> lp;
  double sup = 0.0;
  double holder = 0.0;
  double holder_alpha = 0.0;
  std::size_t pairs_sampled = 0;
};

// ---------------------------------------------------------------------------
// Densities

class DensityGrid {
 public:
  // Normalizes to unit mass, then checks the floor.
  DensityGrid(DomainPtr dom, std::vector<double> values, double floor = 0.0);

  // Trusted constructor: values are already a unit-mass density (used to keep
  // path endpoints bitwise exact).
  static DensityGrid prenormalized(DomainPtr dom, std::vector<double> values, double floor = 0.0);

  const DomainPtr& domain() const { return dom_; }
  const std::vector<double>& values() const { return v_; }
  double floor() const { return floor_; }
  double raw_mass() const { return raw_mass_; }
  double mass() const;  // quadrature of values, ~1
  double min_value() const;
  double max_value() const;
  ScalarField as_field() const { return ScalarField(dom_, v_); }

 private:
  DensityGrid() = default;
  DomainPtr dom_;
  std::vector<double> v_;
  double floor_ = 0.0;
  double raw_mass_ = 1.0;
};

// ---------------------------------------------------------------------------
// Operations

double quadrature(const ScalarField& field);
double quadrature(const ScalarField& field, const DensityGrid& weight);

NormReport norms(const ScalarField& field, const std::vector<double>& ps,
                 std::optional<double> holder_alpha = std::nullopt);
NormReport norms(const VectorField& field, const std::vector<double>& ps,
                 std::optional<double> holder_alpha = std::nullopt);

double lp_norm(const ScalarField& field, double p);
double sup_norm(const ScalarField& field);

// Least-squares discrete calculus on the mesh stencils. Exact on affine data.
VectorField gradient_of(const ScalarField& u);
SpdField hessian_of(const VectorField& g);           // symmetrized Jacobian
ScalarField divergence_of(const VectorField& g);
// Row-wise divergence of a matrix field (rows of Sym2 treated as vectors).
VectorField divergence_rows(const DomainPtr& dom, const std::vector<Sym2>& m);

// Point evaluation by nearest cell plus linear reconstruction.
double interpolate(const ScalarField& u, const Vec2& p);
Vec2 interpolate(const VectorField& u, const Vec2& p);

inline void check_same_mesh(const DomainPtr& a, const DomainPtr& b, const char* where) {
  require(a && b, ErrorCode::empty_input, std::string(where) + ": missing domain");
  require(a.get() == b.get() || a->same_mesh(*b), ErrorCode::mesh_mismatch, where);
}

}  // namespace otlab
