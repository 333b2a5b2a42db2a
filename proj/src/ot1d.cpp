#include "otlab/ot1d.hpp"

#include <algorithm>
#include <cmath>

namespace otlab {

double Cdf1D::at(double x) const {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  double h = (b - a) / cells;
  int k = std::min(int((x - a) / h), cells - 1);
  double xl = edge(k);
  return value[k] + (value[k + 1] - value[k]) * (x - xl) / h;
}

double Cdf1D::inverse(double s) const {
  require(s >= -1e-12 && s <= 1.0 + 1e-12, ErrorCode::range_error,
          "quantile argument outside [0,1]");
  s = std::clamp(s, 0.0, 1.0);
  // leftmost k with value[k] >= s (up to fp slack); flat stretches resolve to
  // their left edge
  const double slack = 1e-12;
  auto it = std::lower_bound(value.begin(), value.end(), s - slack);
  int k = int(it - value.begin());
  if (k >= int(value.size())) return b;
  if (k == 0) return a;
  if (std::abs(value[k] - s) <= slack) return edge(k);
  double lo = value[k - 1], hi = value[k];
  double h = (b - a) / cells;
  if (hi <= lo) return edge(k - 1);
  return edge(k - 1) + h * (s - lo) / (hi - lo);
}

double Map1D::at(double x) const {
  const Mesh& m = source->mesh();
  int n = m.cell_count();
  if (x <= m.node[0].x) return t[0];
  if (x >= m.node[n - 1].x) return t[n - 1];
  double h = (source->x1() - source->x0()) / n;
  int c = std::clamp(int((x - m.node[0].x) / h), 0, n - 2);
  double x0 = m.node[c].x;
  double w = (x - x0) / h;
  return t[c] + w * (t[c + 1] - t[c]);
}

Cdf1D cdf(const DensityGrid& f) {
  const DomainPtr& dom = f.domain();
  require(dom->dim() == 1, ErrorCode::dimension_error, "cdf needs a 1D density");
  const Mesh& m = dom->mesh();
  int n = m.cell_count();
  Cdf1D F;
  F.a = dom->x0();
  F.b = dom->x1();
  F.cells = n;
  F.value.assign(n + 1, 0.0);
  for (int i = 0; i < n; ++i) F.value[i + 1] = F.value[i] + f.values()[i] * m.vol[i];
  double tot = F.value[n];
  require(tot > 0, ErrorCode::mass_error, "cdf of zero-mass density");
  for (int i = 1; i <= n; ++i) F.value[i] /= tot;
  F.value[n] = 1.0;
  return F;
}

double quantile(const Cdf1D& F, double s) {
  require(s >= 0.0 && s <= 1.0, ErrorCode::range_error, "quantile argument outside [0,1]");
  return F.inverse(s);
}

Map1D brenier_map_1d(const DensityGrid& f, const DensityGrid& g) {
  require(f.domain()->dim() == 1 && g.domain()->dim() == 1, ErrorCode::dimension_error,
          "brenier_map_1d needs 1D densities");
  Cdf1D F = cdf(f), G = cdf(g);
  const Mesh& m = f.domain()->mesh();
  Map1D map;
  map.source = f.domain();
  map.t.resize(m.cell_count());
  for (int i = 0; i < m.cell_count(); ++i) map.t[i] = G.inverse(F.at(m.node[i].x));
  double inc = 1e300;
  for (std::size_t i = 0; i + 1 < map.t.size(); ++i) inc = std::min(inc, map.t[i + 1] - map.t[i]);
  map.min_increment = map.t.size() > 1 ? inc : 0.0;
  return map;
}

double d2_1d(const DensityGrid& f, const DensityGrid& g) {
  require(f.domain()->dim() == 1 && g.domain()->dim() == 1, ErrorCode::dimension_error,
          "d2_1d needs 1D densities");
  Cdf1D F = cdf(f), G = cdf(g);
  int M = 4 * std::max(F.cells, G.cells);
  double acc = 0.0;
  for (int k = 0; k < M; ++k) {
    double s = (k + 0.5) / M;
    double d = F.inverse(s) - G.inverse(s);
    acc += d * d;
  }
  return std::sqrt(acc / M);
}

double l1_distance_1d(const DensityGrid& p, const DensityGrid& q) {
  require(p.domain()->dim() == 1 && q.domain()->dim() == 1, ErrorCode::dimension_error,
          "l1_distance_1d needs 1D densities");
  auto dens_at = [](const DensityGrid& d, double x) -> double {
    double a = d.domain()->x0(), b = d.domain()->x1();
    if (x < a || x > b) return 0.0;
    int n = d.domain()->mesh().n1;
    int i = std::min(int((x - a) / ((b - a) / n)), n - 1);
    return d.values()[i];
  };
  // union cell-edge grid: integrate |p - q| cell by cell on a refined partition
  double lo = std::min(p.domain()->x0(), q.domain()->x0());
  double hi = std::max(p.domain()->x1(), q.domain()->x1());
  int n = 4 * std::max(p.domain()->mesh().n1, q.domain()->mesh().n1);
  double h = (hi - lo) / n, acc = 0.0;
  for (int k = 0; k < n; ++k) {
    double x = lo + (k + 0.5) * h;
    acc += std::abs(dens_at(p, x) - dens_at(q, x)) * h;
  }
  return acc;
}

LinftyL1Report verify_linfty_l1(const DensityGrid& f0, const DensityGrid& f1,
                                const DensityGrid& g0, const DensityGrid& g1, double a) {
  require(a > 0, ErrorCode::floor_error, "target floor a must be positive");
  require(std::min(g0.min_value(), g1.min_value()) >= a - 1e-9, ErrorCode::floor_error,
          "target densities drop below the stated floor");
  check_same_mesh(f0.domain(), f1.domain(), "verify_linfty_l1 sources");
  Map1D t0 = brenier_map_1d(f0, g0);
  Map1D t1 = brenier_map_1d(f1, g1);
  LinftyL1Report r;
  for (std::size_t i = 0; i < t0.t.size(); ++i) r.lhs = std::max(r.lhs, std::abs(t1.t[i] - t0.t[i]));
  r.rhs = (l1_distance_1d(f0, f1) + l1_distance_1d(g0, g1)) / a;
  r.h = f0.domain()->spacing();
  r.holds = r.lhs <= r.rhs + 10.0 * r.h;
  return r;
}

// ---------------------------------------------------------------------------

double sharpness_density(double x, double p, double a) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x <= a) return (p + 1.0) * std::pow(a, -p) * std::pow(a - x, p);
  return (p + 1.0) * std::pow(1.0 - a, -p) * std::pow(x - a, p);
}

double sharpness_quantile(double y, double p, double a) {
  y = std::clamp(y, 0.0, 1.0);
  if (y <= a) return a * (1.0 - std::pow(1.0 - y / a, 1.0 / (p + 1.0)));
  return a + (1.0 - a) * std::pow((y - a) / (1.0 - a), 1.0 / (p + 1.0));
}

std::vector<SharpnessRow> counterexample_sweep(double p, double eta,
                                               const std::vector<double>& eps_list,
                                               int scan_points) {
  require(p > 1.0, ErrorCode::range_error, "sharpness family needs p > 1");
  require(eta < 1.0, ErrorCode::exponent_error, "eta must be below 1");
  require(eta > 1.0 / (p + 1.0), ErrorCode::exponent_error,
          "eta must exceed 1/(p+1) for the family to diverge");
  std::vector<SharpnessRow> rows;
  rows.reserve(eps_list.size());
  for (double eps : eps_list) {
    require(eps > 0.0 && eps < 0.5, ErrorCode::degenerate_eps,
            "eps must lie in (0, 1/2); eps = 0 degenerates the family");
    double a = 1.0 / (2.0 * (1.0 - eps));
    SharpnessRow row;
    row.eps = eps;
    for (int k = 0; k <= scan_points; ++k) {
      double s = double(k) / scan_points;
      row.map_gap_sup = std::max(
          row.map_gap_sup, std::abs(sharpness_quantile(s, p, a) - sharpness_quantile(s, p, 0.5)));
      row.dens_gap_sup = std::max(
          row.dens_gap_sup, std::abs(sharpness_density(s, p, a) - sharpness_density(s, p, 0.5)));
    }
    row.ratio = row.map_gap_sup / std::pow(row.dens_gap_sup, eta);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace otlab
