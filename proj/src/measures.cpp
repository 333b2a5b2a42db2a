#include "otlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace otlab {

namespace {

constexpr double kPi = std::numbers::pi;

double shoelace(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(s);
}

// Builds the second chord of a face from up to two lateral cell pairs.
// Falls back to reusing (left,right) as the minus pair when one side is missing.
void set_side_chord(InteriorFace& f, const std::vector<Vec2>& node,
                    int p1, int p2, int m1, int m2) {
  if (p1 < 0 && m1 < 0) return;
  if (p1 < 0) {
    std::swap(p1, m1);
    std::swap(p2, m2);
  }
  if (m1 < 0) {
    m1 = f.left;
    m2 = f.right;
  }
  f.side = {p1, p2, m1, m2};
  f.side_w = {0.5, 0.5, -0.5, -0.5};
  Vec2 plus = (node[p1] + node[p2]) * 0.5;
  Vec2 minus = (node[m1] + node[m2]) * 0.5;
  Vec2 chord = plus - minus;
  double len = norm(chord);
  if (len < 1e-14) {
    f.side = {-1, -1, -1, -1};
    return;
  }
  Vec2 e2 = chord / len;
  // Reject nearly parallel chords; the face then degrades to two-point form.
  if (std::abs(f.e1.x * e2.y - f.e1.y * e2.x) < 0.05) {
    f.side = {-1, -1, -1, -1};
    return;
  }
  f.e2 = e2;
  f.d2 = len;
}

}  // namespace

const char* domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::interval: return "interval";
    case DomainKind::disk: return "disk";
    case DomainKind::ellipse: return "ellipse";
    case DomainKind::rectangle: return "rectangle";
  }
  return "?";
}

DomainKind domain_kind_from_name(const std::string& s) {
  if (s == "interval") return DomainKind::interval;
  if (s == "disk") return DomainKind::disk;
  if (s == "ellipse") return DomainKind::ellipse;
  if (s == "rectangle") return DomainKind::rectangle;
  fail(ErrorCode::config_error, "unknown domain kind '" + s + "'");
}

DomainPtr Domain::interval(double a, double b, int cells) {
  require(b > a, ErrorCode::domain_error, "interval needs a < b");
  require(cells >= 2, ErrorCode::domain_error, "interval needs >= 2 cells");
  auto d = std::shared_ptr<Domain>(new Domain());
  d->kind_ = DomainKind::interval;
  d->params_ = {a, b};
  Mesh& m = d->mesh_;
  m.dim = 1;
  m.n1 = cells;
  m.n2 = 1;
  double h = (b - a) / cells;
  d->spacing_ = h;
  m.node.resize(cells);
  m.vol.assign(cells, h);
  for (int i = 0; i < cells; ++i) m.node[i] = {a + (i + 0.5) * h, 0.0};
  m.total_volume = b - a;
  for (int i = 0; i + 1 < cells; ++i) {
    InteriorFace f;
    f.left = i;
    f.right = i + 1;
    f.center = {a + (i + 1) * h, 0.0};
    f.normal = {1.0, 0.0};
    f.area = 1.0;
    f.e1 = {1.0, 0.0};
    f.d1 = h;
    f.diamond = h;
    m.ifaces.push_back(f);
  }
  m.bfaces.push_back({0, {a, 0.0}, {-1.0, 0.0}, 1.0});
  m.bfaces.push_back({cells - 1, {b, 0.0}, {1.0, 0.0}, 1.0});
  d->build_ls_stencils();
  return d;
}

namespace {

// Shared polar construction for disk and ellipse: mesh the unit disk in
// reference coordinates and map through P(u) = c + (rx*ux, ry*uy).
void build_polar(Mesh& m, Vec2 c, double rx, double ry, int nr, int nt) {
  require(nr >= 2 && nt >= 4, ErrorCode::domain_error, "polar mesh needs nr >= 2, ntheta >= 4");
  m.dim = 2;
  m.n1 = nr;
  m.n2 = nt;
  const double dth = 2.0 * kPi / nt;
  auto ref = [&](double rho, double th) -> Vec2 {
    return {c.x + rx * rho * std::cos(th), c.y + ry * rho * std::sin(th)};
  };
  auto cell = [&](int i, int j) { return i * nt + j; };
  const int n = nr * nt;
  m.node.resize(n);
  m.vol.resize(n);
  double total = 0.0;
  for (int i = 0; i < nr; ++i) {
    double r0 = double(i) / nr, r1 = double(i + 1) / nr;
    double area = rx * ry * 0.5 * dth * (r1 * r1 - r0 * r0);
    double rc = 0.5 * (r0 + r1);
    for (int j = 0; j < nt; ++j) {
      double th = (j + 0.5) * dth;
      m.node[cell(i, j)] = ref(rc, th);
      m.vol[cell(i, j)] = area;
      total += area;
    }
  }
  m.total_volume = total;

  // radial faces between ring i and i+1
  for (int i = 0; i + 1 < nr; ++i) {
    double rho = double(i + 1) / nr;
    for (int j = 0; j < nt; ++j) {
      InteriorFace f;
      f.left = cell(i, j);
      f.right = cell(i + 1, j);
      Vec2 p1 = ref(rho, j * dth), p2 = ref(rho, (j + 1) * dth);
      f.center = (p1 + p2) * 0.5;
      f.area = norm(p2 - p1);
      Vec2 nrm = perp(normalized(p2 - p1));
      Vec2 chord = m.node[f.right] - m.node[f.left];
      if (dot(nrm, chord) < 0) nrm = nrm * -1.0;
      f.normal = nrm;
      f.d1 = norm(chord);
      f.e1 = chord / f.d1;
      int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
      set_side_chord(f, m.node, cell(i, jp), cell(i + 1, jp), cell(i, jm), cell(i + 1, jm));
      f.diamond = shoelace({m.node[f.left], p1, m.node[f.right], p2});
      m.ifaces.push_back(f);
    }
  }
  // angular faces between sector j and j+1 (periodic)
  for (int i = 0; i < nr; ++i) {
    double r0 = double(i) / nr, r1 = double(i + 1) / nr;
    for (int j = 0; j < nt; ++j) {
      int jp = (j + 1) % nt;
      InteriorFace f;
      f.left = cell(i, j);
      f.right = cell(i, jp);
      double th = (j + 1) * dth;
      Vec2 p1 = ref(r0, th), p2 = ref(r1, th);
      if (i == 0 && norm(p2 - p1) < 1e-14) continue;
      f.center = (p1 + p2) * 0.5;
      f.area = norm(p2 - p1);
      Vec2 nrm = perp(normalized(p2 - p1));
      Vec2 chord = m.node[f.right] - m.node[f.left];
      if (dot(nrm, chord) < 0) nrm = nrm * -1.0;
      f.normal = nrm;
      f.d1 = norm(chord);
      f.e1 = chord / f.d1;
      int ip = i + 1 < nr ? i + 1 : -1, im = i > 0 ? i - 1 : -1;
      set_side_chord(f, m.node, ip >= 0 ? cell(ip, j) : -1, ip >= 0 ? cell(ip, jp) : -1,
                     im >= 0 ? cell(im, j) : -1, im >= 0 ? cell(im, jp) : -1);
      f.diamond = shoelace({m.node[f.left], p1, m.node[f.right], p2});
      m.ifaces.push_back(f);
    }
  }
  // outer boundary
  for (int j = 0; j < nt; ++j) {
    BoundaryFace b;
    b.cell = cell(nr - 1, j);
    Vec2 p1 = ref(1.0, j * dth), p2 = ref(1.0, (j + 1) * dth);
    b.center = ref(1.0, (j + 0.5) * dth);
    b.area = norm(p2 - p1);
    Vec2 nrm = perp(normalized(p2 - p1));
    Vec2 out = b.center - m.node[b.cell];
    if (dot(nrm, out) < 0) nrm = nrm * -1.0;
    b.normal = nrm;
    m.bfaces.push_back(b);
  }
}

}  // namespace

DomainPtr Domain::disk(Vec2 center, double radius, int n_r, int n_theta) {
  require(radius > 0, ErrorCode::domain_error, "disk needs radius > 0");
  auto d = std::shared_ptr<Domain>(new Domain());
  d->kind_ = DomainKind::disk;
  d->params_ = {center.x, center.y, radius};
  build_polar(d->mesh_, center, radius, radius, n_r, n_theta);
  d->spacing_ = std::max(radius / n_r, radius * 2.0 * kPi / n_theta);
  d->build_ls_stencils();
  return d;
}

DomainPtr Domain::ellipse(Vec2 center, double rx, double ry, int n_r, int n_theta) {
  require(rx > 0 && ry > 0, ErrorCode::domain_error, "ellipse needs positive radii");
  auto d = std::shared_ptr<Domain>(new Domain());
  d->kind_ = DomainKind::ellipse;
  d->params_ = {center.x, center.y, rx, ry};
  build_polar(d->mesh_, center, rx, ry, n_r, n_theta);
  double rmax = std::max(rx, ry);
  d->spacing_ = std::max(rmax / n_r, rmax * 2.0 * kPi / n_theta);
  d->build_ls_stencils();
  return d;
}

DomainPtr Domain::rectangle(double ax, double bx, double ay, double by, int nx, int ny) {
  require(bx > ax && by > ay, ErrorCode::domain_error, "rectangle needs positive extents");
  require(nx >= 2 && ny >= 1, ErrorCode::domain_error, "rectangle needs nx >= 2");
  auto d = std::shared_ptr<Domain>(new Domain());
  d->kind_ = DomainKind::rectangle;
  d->params_ = {ax, bx, ay, by};
  Mesh& m = d->mesh_;
  m.dim = 2;
  m.n1 = nx;
  m.n2 = ny;
  double hx = (bx - ax) / nx, hy = (by - ay) / ny;
  d->spacing_ = std::max(hx, hy);
  auto cell = [&](int i, int j) { return i * ny + j; };
  m.node.resize(nx * ny);
  m.vol.assign(nx * ny, hx * hy);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      m.node[cell(i, j)] = {ax + (i + 0.5) * hx, ay + (j + 0.5) * hy};
  m.total_volume = (bx - ax) * (by - ay);
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      InteriorFace f;
      f.left = cell(i, j);
      f.right = cell(i + 1, j);
      f.center = {ax + (i + 1) * hx, ay + (j + 0.5) * hy};
      f.normal = {1.0, 0.0};
      f.area = hy;
      f.e1 = {1.0, 0.0};
      f.d1 = hx;
      set_side_chord(f, m.node, j + 1 < ny ? cell(i, j + 1) : -1,
                     j + 1 < ny ? cell(i + 1, j + 1) : -1,
                     j > 0 ? cell(i, j - 1) : -1, j > 0 ? cell(i + 1, j - 1) : -1);
      f.diamond = 0.5 * hx * hy;
      m.ifaces.push_back(f);
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      InteriorFace f;
      f.left = cell(i, j);
      f.right = cell(i, j + 1);
      f.center = {ax + (i + 0.5) * hx, ay + (j + 1) * hy};
      f.normal = {0.0, 1.0};
      f.area = hx;
      f.e1 = {0.0, 1.0};
      f.d1 = hy;
      set_side_chord(f, m.node, i + 1 < nx ? cell(i + 1, j) : -1,
                     i + 1 < nx ? cell(i + 1, j + 1) : -1,
                     i > 0 ? cell(i - 1, j) : -1, i > 0 ? cell(i - 1, j + 1) : -1);
      f.diamond = 0.5 * hx * hy;
      m.ifaces.push_back(f);
    }
  }
  for (int j = 0; j < ny; ++j) {
    m.bfaces.push_back({cell(0, j), {ax, ay + (j + 0.5) * hy}, {-1, 0}, hy});
    m.bfaces.push_back({cell(nx - 1, j), {bx, ay + (j + 0.5) * hy}, {1, 0}, hy});
  }
  for (int i = 0; i < nx; ++i) {
    m.bfaces.push_back({cell(i, 0), {ax + (i + 0.5) * hx, ay}, {0, -1}, hx});
    if (ny > 1) m.bfaces.push_back({cell(i, ny - 1), {ax + (i + 0.5) * hx, by}, {0, 1}, hx});
  }
  d->build_ls_stencils();
  return d;
}

void Domain::build_ls_stencils() {
  Mesh& m = mesh_;
  int n = m.cell_count();
  m.neigh.assign(n, {});
  for (const auto& f : m.ifaces) {
    m.neigh[f.left].push_back(f.right);
    m.neigh[f.right].push_back(f.left);
  }
  m.ls_coef.assign(n, {});
  for (int c = 0; c < n; ++c) {
    const auto& nb = m.neigh[c];
    m.ls_coef[c].resize(nb.size());
    if (m.dim == 1) {
      double mxx = 0.0;
      std::vector<double> wd(nb.size());
      for (std::size_t k = 0; k < nb.size(); ++k) {
        double dx = m.node[nb[k]].x - m.node[c].x;
        double w = 1.0 / (dx * dx);
        mxx += w * dx * dx;
        wd[k] = w * dx;
      }
      for (std::size_t k = 0; k < nb.size(); ++k) m.ls_coef[c][k] = {wd[k] / mxx, 0.0};
      continue;
    }
    Sym2 M;
    std::vector<Vec2> wd(nb.size());
    for (std::size_t k = 0; k < nb.size(); ++k) {
      Vec2 dv = m.node[nb[k]] - m.node[c];
      double w = 1.0 / norm2(dv);
      M.xx += w * dv.x * dv.x;
      M.xy += w * dv.x * dv.y;
      M.yy += w * dv.y * dv.y;
      wd[k] = dv * w;
    }
    Sym2 Mi = M.inverse();
    for (std::size_t k = 0; k < nb.size(); ++k) m.ls_coef[c][k] = Mi.apply(wd[k]);
  }
}

double Domain::omega(const Vec2& p) const {
  switch (kind_) {
    case DomainKind::interval:
      return std::max(params_[0] - p.x, p.x - params_[1]);
    case DomainKind::disk:
      return norm(p - Vec2{params_[0], params_[1]}) - params_[2];
    case DomainKind::ellipse: {
      Vec2 d = p - Vec2{params_[0], params_[1]};
      return std::hypot(d.x / params_[2], d.y / params_[3]) - 1.0;
    }
    case DomainKind::rectangle:
      return std::max({params_[0] - p.x, p.x - params_[1], params_[2] - p.y, p.y - params_[3]});
  }
  return 0.0;
}

Vec2 Domain::outer_normal(const Vec2& p) const {
  switch (kind_) {
    case DomainKind::interval:
      return {p.x >= 0.5 * (params_[0] + params_[1]) ? 1.0 : -1.0, 0.0};
    case DomainKind::disk:
      return normalized(p - Vec2{params_[0], params_[1]});
    case DomainKind::ellipse: {
      Vec2 d = p - Vec2{params_[0], params_[1]};
      return normalized({d.x / (params_[2] * params_[2]), d.y / (params_[3] * params_[3])});
    }
    case DomainKind::rectangle: {
      double vals[4] = {params_[0] - p.x, p.x - params_[1], params_[2] - p.y, p.y - params_[3]};
      int arg = int(std::max_element(vals, vals + 4) - vals);
      static const Vec2 nrm[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      return nrm[arg];
    }
  }
  return {0, 0};
}

double Domain::diameter() const {
  switch (kind_) {
    case DomainKind::interval: return params_[1] - params_[0];
    case DomainKind::disk: return 2.0 * params_[2];
    case DomainKind::ellipse: return 2.0 * std::max(params_[2], params_[3]);
    case DomainKind::rectangle:
      return std::hypot(params_[1] - params_[0], params_[3] - params_[2]);
  }
  return 0.0;
}

int Domain::locate(const Vec2& p) const {
  const Mesh& m = mesh_;
  switch (kind_) {
    case DomainKind::interval: {
      double h = (params_[1] - params_[0]) / m.n1;
      int i = int(std::floor((p.x - params_[0]) / h));
      return std::clamp(i, 0, m.n1 - 1);
    }
    case DomainKind::disk:
    case DomainKind::ellipse: {
      double rx = kind_ == DomainKind::disk ? params_[2] : params_[2];
      double ry = kind_ == DomainKind::disk ? params_[2] : params_[3];
      Vec2 u{(p.x - params_[0]) / rx, (p.y - params_[1]) / ry};
      double r = norm(u);
      int i = std::clamp(int(r * m.n1), 0, m.n1 - 1);
      double th = std::atan2(u.y, u.x);
      if (th < 0) th += 2.0 * kPi;
      int j = std::clamp(int(th / (2.0 * kPi / m.n2)), 0, m.n2 - 1);
      return i * m.n2 + j;
    }
    case DomainKind::rectangle: {
      double hx = (params_[1] - params_[0]) / m.n1;
      double hy = (params_[3] - params_[2]) / m.n2;
      int i = std::clamp(int(std::floor((p.x - params_[0]) / hx)), 0, m.n1 - 1);
      int j = std::clamp(int(std::floor((p.y - params_[2]) / hy)), 0, m.n2 - 1);
      return i * m.n2 + j;
    }
  }
  return 0;
}

bool Domain::same_mesh(const Domain& other) const {
  return kind_ == other.kind_ && params_ == other.params_ &&
         mesh_.n1 == other.mesh_.n1 && mesh_.n2 == other.mesh_.n2;
}

std::string Domain::describe() const {
  std::ostringstream os;
  os << domain_kind_name(kind_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
  os << ") " << mesh_.n1;
  if (mesh_.dim == 2) os << "x" << mesh_.n2;
  return os.str();
}

// ---------------------------------------------------------------------------

double SpdField::clamp(double lo, double hi) {
  require(lo > 0 && hi >= lo, ErrorCode::domain_error, "clamp bracket must satisfy 0 < lo <= hi");
  const double slack = 1e-12 * std::max({std::abs(lo), std::abs(hi), 1.0});
  std::size_t moved = 0;
  for (auto& s : m) {
    if (dom && dom->dim() == 1) {
      double c = std::clamp(s.xx, lo, hi);
      if (std::abs(c - s.xx) > slack) {
        s = Sym2{c, 0.0, 1.0};
        ++moved;
      } else {
        s = Sym2{s.xx, 0.0, 1.0};
      }
      continue;
    }
    double l, h;
    Vec2 u;
    s.eigen(l, h, u);
    if (l < lo - slack || h > hi + slack) {
      s = s.clamped(lo, hi);
      ++moved;
    }
  }
  lambda_min = lo;
  lambda_max = hi;
  return m.empty() ? 0.0 : double(moved) / double(m.size());
}

Sym2 SpdField::inverse_at(std::size_t i) const {
  if (dom && dom->dim() == 1) return Sym2{1.0 / m[i].xx, 0.0, 1.0};
  return m[i].inverse();
}

// ---------------------------------------------------------------------------

DensityGrid::DensityGrid(DomainPtr dom, std::vector<double> values, double floor) {
  require(dom != nullptr, ErrorCode::empty_input, "density needs a domain");
  require(values.size() == std::size_t(dom->mesh().cell_count()), ErrorCode::mesh_mismatch,
          "density values do not match mesh size");
  for (double& x : values) {
    require(x > -1e-12, ErrorCode::floor_error, "density values must be nonnegative");
    if (x < 0) x = 0;
  }
  double mass = 0.0;
  const auto& vol = dom->mesh().vol;
  for (std::size_t i = 0; i < values.size(); ++i) mass += values[i] * vol[i];
  require(std::isfinite(mass) && mass > 0, ErrorCode::mass_error, "density has nonpositive mass");
  for (double& x : values) x /= mass;
  dom_ = std::move(dom);
  v_ = std::move(values);
  floor_ = floor;
  raw_mass_ = mass;
  if (floor_ > 0) {
    double mn = min_value();
    require(mn >= floor_ - 1e-12 * std::max(1.0, floor_), ErrorCode::floor_error,
            "density drops below its floor after normalization");
  }
}

DensityGrid DensityGrid::prenormalized(DomainPtr dom, std::vector<double> values, double floor) {
  DensityGrid g;
  require(dom != nullptr, ErrorCode::empty_input, "density needs a domain");
  require(values.size() == std::size_t(dom->mesh().cell_count()), ErrorCode::mesh_mismatch,
          "density values do not match mesh size");
  g.dom_ = std::move(dom);
  g.v_ = std::move(values);
  g.floor_ = floor;
  g.raw_mass_ = 1.0;
  return g;
}

double DensityGrid::mass() const {
  double s = 0.0;
  const auto& vol = dom_->mesh().vol;
  for (std::size_t i = 0; i < v_.size(); ++i) s += v_[i] * vol[i];
  return s;
}

double DensityGrid::min_value() const { return *std::min_element(v_.begin(), v_.end()); }
double DensityGrid::max_value() const { return *std::max_element(v_.begin(), v_.end()); }

// ---------------------------------------------------------------------------

double quadrature(const ScalarField& field) {
  require(field.dom && !field.v.empty(), ErrorCode::empty_input, "quadrature of empty field");
  const auto& vol = field.dom->mesh().vol;
  double s = 0.0;
  for (std::size_t i = 0; i < field.v.size(); ++i) s += field.v[i] * vol[i];
  return s;
}

double quadrature(const ScalarField& field, const DensityGrid& weight) {
  require(field.dom && !field.v.empty(), ErrorCode::empty_input, "quadrature of empty field");
  check_same_mesh(field.dom, weight.domain(), "quadrature");
  const auto& vol = field.dom->mesh().vol;
  const auto& w = weight.values();
  double s = 0.0;
  for (std::size_t i = 0; i < field.v.size(); ++i) s += field.v[i] * w[i] * vol[i];
  return s;
}

double lp_norm(const ScalarField& field, double p) {
  require(p >= 1.0, ErrorCode::range_error, "Lp norm needs p >= 1");
  const auto& vol = field.dom->mesh().vol;
  double s = 0.0;
  for (std::size_t i = 0; i < field.v.size(); ++i) s += std::pow(std::abs(field.v[i]), p) * vol[i];
  return std::pow(s, 1.0 / p);
}

double sup_norm(const ScalarField& field) {
  double s = 0.0;
  for (double x : field.v) s = std::max(s, std::abs(x));
  return s;
}

namespace {

constexpr std::uint64_t kHolderSeed = 0x5EED;

template <typename Mag, typename Diff>
NormReport norms_impl(const DomainPtr& dom, std::size_t n, const std::vector<double>& ps,
                      std::optional<double> alpha, Mag mag, Diff diff) {
  require(dom && n > 0, ErrorCode::empty_input, "norms of empty field");
  NormReport r;
  const auto& vol = dom->mesh().vol;
  for (double p : ps) {
    require(p >= 1.0, ErrorCode::range_error, "Lp norm needs p >= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(mag(i), p) * vol[i];
    r.lp[p] = std::pow(s, 1.0 / p);
  }
  for (std::size_t i = 0; i < n; ++i) r.sup = std::max(r.sup, mag(i));
  if (alpha) {
    double a = *alpha;
    require(a > 0 && a <= 1, ErrorCode::range_error, "Holder order must lie in (0,1]");
    r.holder_alpha = a;
    const auto& node = dom->mesh().node;
    double best = 0.0;
    std::size_t pairs = 0;
    if (n <= 2000) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          double dist = norm(node[i] - node[j]);
          if (dist <= 0) continue;
          best = std::max(best, diff(i, j) / std::pow(dist, a));
          ++pairs;
        }
      }
    } else {
      Rng rng(kHolderSeed);
      for (int k = 0; k < 1000000; ++k) {
        std::size_t i = rng.below(n), j = rng.below(n);
        if (i == j) continue;
        double dist = norm(node[i] - node[j]);
        if (dist <= 0) continue;
        best = std::max(best, diff(i, j) / std::pow(dist, a));
        ++pairs;
      }
    }
    r.holder = best;
    r.pairs_sampled = pairs;
  }
  return r;
}

}  // namespace

NormReport norms(const ScalarField& field, const std::vector<double>& ps,
                 std::optional<double> holder_alpha) {
  return norms_impl(
      field.dom, field.v.size(), ps, holder_alpha,
      [&](std::size_t i) { return std::abs(field.v[i]); },
      [&](std::size_t i, std::size_t j) { return std::abs(field.v[i] - field.v[j]); });
}

NormReport norms(const VectorField& field, const std::vector<double>& ps,
                 std::optional<double> holder_alpha) {
  return norms_impl(
      field.dom, field.v.size(), ps, holder_alpha,
      [&](std::size_t i) { return norm(field.v[i]); },
      [&](std::size_t i, std::size_t j) { return norm(field.v[i] - field.v[j]); });
}

// ---------------------------------------------------------------------------

VectorField gradient_of(const ScalarField& u) {
  require(u.dom && !u.v.empty(), ErrorCode::empty_input, "gradient of empty field");
  const Mesh& m = u.dom->mesh();
  VectorField g(u.dom);
  for (int c = 0; c < m.cell_count(); ++c) {
    Vec2 acc;
    const auto& nb = m.neigh[c];
    for (std::size_t k = 0; k < nb.size(); ++k) acc += m.ls_coef[c][k] * (u.v[nb[k]] - u.v[c]);
    g.v[c] = acc;
  }
  return g;
}

SpdField hessian_of(const VectorField& g) {
  require(g.dom && !g.v.empty(), ErrorCode::empty_input, "hessian of empty field");
  const Mesh& m = g.dom->mesh();
  SpdField h(g.dom, std::vector<Sym2>(m.cell_count()));
  for (int c = 0; c < m.cell_count(); ++c) {
    const auto& nb = m.neigh[c];
    double jxx = 0, jxy = 0, jyx = 0, jyy = 0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      Vec2 coef = m.ls_coef[c][k];
      Vec2 dg = g.v[nb[k]] - g.v[c];
      jxx += coef.x * dg.x;
      jxy += coef.y * dg.x;
      jyx += coef.x * dg.y;
      jyy += coef.y * dg.y;
    }
    h.m[c] = m.dim == 1 ? Sym2{jxx, 0.0, 1.0} : Sym2{jxx, 0.5 * (jxy + jyx), jyy};
  }
  return h;
}

ScalarField divergence_of(const VectorField& g) {
  require(g.dom && !g.v.empty(), ErrorCode::empty_input, "divergence of empty field");
  const Mesh& m = g.dom->mesh();
  ScalarField d(g.dom, 0.0);
  for (int c = 0; c < m.cell_count(); ++c) {
    const auto& nb = m.neigh[c];
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      Vec2 coef = m.ls_coef[c][k];
      Vec2 dg = g.v[nb[k]] - g.v[c];
      acc += coef.x * dg.x + coef.y * dg.y;
    }
    d.v[c] = acc;
  }
  return d;
}

VectorField divergence_rows(const DomainPtr& dom, const std::vector<Sym2>& mat) {
  require(dom && !mat.empty(), ErrorCode::empty_input, "divergence of empty field");
  const Mesh& m = dom->mesh();
  VectorField d(dom);
  for (int c = 0; c < m.cell_count(); ++c) {
    const auto& nb = m.neigh[c];
    Vec2 acc;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      Vec2 coef = m.ls_coef[c][k];
      Sym2 dm = mat[nb[k]] - mat[c];
      acc.x += coef.x * dm.xx + coef.y * dm.xy;
      acc.y += coef.x * dm.xy + coef.y * dm.yy;
    }
    d.v[c] = acc;
  }
  return d;
}

namespace {

Vec2 cell_ls_gradient(const Mesh& m, const std::vector<double>& v, int c) {
  Vec2 acc;
  const auto& nb = m.neigh[c];
  for (std::size_t k = 0; k < nb.size(); ++k) acc += m.ls_coef[c][k] * (v[nb[k]] - v[c]);
  return acc;
}

}  // namespace

double interpolate(const ScalarField& u, const Vec2& p) {
  int c = u.dom->locate(p);
  const Mesh& m = u.dom->mesh();
  Vec2 g = cell_ls_gradient(m, u.v, c);
  return u.v[c] + dot(g, p - m.node[c]);
}

Vec2 interpolate(const VectorField& u, const Vec2& p) {
  int c = u.dom->locate(p);
  const Mesh& m = u.dom->mesh();
  Vec2 d = p - m.node[c];
  Vec2 out;
  const auto& nb = m.neigh[c];
  Vec2 gx, gy;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    Vec2 coef = m.ls_coef[c][k];
    Vec2 dv = u.v[nb[k]] - u.v[c];
    gx += coef * dv.x;
    gy += coef * dv.y;
  }
  out.x = u.v[c].x + dot(gx, d);
  out.y = u.v[c].y + dot(gy, d);
  return out;
}

}  // namespace otlab
