#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "otlab/io.hpp"
#include "otlab/measures.hpp"

using namespace otlab;

namespace {

DensityGrid uniform_density(const DomainPtr& dom, double floor = 0.0) {
  return DensityGrid(dom, std::vector<double>(dom->mesh().cell_count(), 1.0), floor);
}

}  // namespace

TEST_CASE("quadrature: constants and x^2 on the unit interval") {
  auto dom = Domain::interval(0.0, 1.0, 1000);
  ScalarField one(dom, 1.0);
  CHECK(quadrature(one) == doctest::Approx(1.0).epsilon(1e-12));

  auto dens = uniform_density(dom);
  CHECK(quadrature(one, dens) == doctest::Approx(1.0).epsilon(1e-8));

  ScalarField sq(dom, 0.0);
  for (int i = 0; i < 1000; ++i) {
    double x = dom->mesh().node[i].x;
    sq.v[i] = x * x;
  }
  CHECK(std::abs(quadrature(sq) - 1.0 / 3.0) < 1e-5);
}

TEST_CASE("quadrature: weighted by any density is 1 for the constant field") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto dom = Domain::interval(-1.0, 2.0, 500);
    std::vector<double> v(500);
    for (auto& x : v) x = 0.1 + rng.uniform();
    DensityGrid dens(dom, v);
    ScalarField one(dom, 1.0);
    CHECK(std::abs(quadrature(one, dens) - 1.0) < 1e-8);
  }
}

TEST_CASE("quadrature: mesh mismatch is rejected") {
  auto a = Domain::interval(0.0, 1.0, 100);
  auto b = Domain::interval(0.0, 1.0, 120);
  ScalarField fa(a, 1.0);
  DensityGrid db = uniform_density(b);
  CHECK_THROWS_AS(quadrature(fa, db), Error);
}

TEST_CASE("norms: constants, linear, sqrt") {
  auto dom = Domain::interval(0.0, 1.0, 2000);
  ScalarField c(dom, -3.5);
  auto rc = norms(c, {1.0, 2.0}, 0.5);
  CHECK(rc.sup == doctest::Approx(3.5));
  CHECK(rc.holder == doctest::Approx(0.0));

  ScalarField lin(dom, 0.0);
  ScalarField root(dom, 0.0);
  for (int i = 0; i < 2000; ++i) {
    double x = dom->mesh().node[i].x;
    lin.v[i] = x;
    root.v[i] = std::sqrt(x);
  }
  auto rl = norms(lin, {2.0}, 1.0);
  CHECK(std::abs(rl.holder - 1.0) < 1e-9);
  auto rr = norms(root, {2.0}, 0.5);
  CHECK(std::abs(rr.holder - 1.0) < 2e-2);
  CHECK(rr.pairs_sampled > 0);
}

TEST_CASE("norms: Lp monotone in p on unit-measure domains") {
  auto dom = Domain::interval(0.0, 1.0, 300);
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField u(dom, 0.0);
    for (auto& x : u.v) x = rng.uniform(-2.0, 2.0);
    auto r = norms(u, {1.0, 1.5, 2.0, 4.0, 8.0});
    double prev = 0.0;
    for (auto& [p, val] : r.lp) {
      CHECK(val >= prev - 1e-12);
      prev = val;
    }
    CHECK(r.sup >= prev - 1e-12);
  }
}

TEST_CASE("norms: empty input") {
  ScalarField empty;
  CHECK_THROWS_AS(norms(empty, {2.0}), Error);
}

TEST_CASE("domains: defining function and mesh invariants") {
  auto check_domain = [](const DomainPtr& dom, Vec2 outside_probe) {
    const Mesh& m = dom->mesh();
    double volsum = 0.0;
    for (int i = 0; i < m.cell_count(); ++i) {
      CHECK(dom->omega(m.node[i]) < 0.0);
      volsum += m.vol[i];
    }
    CHECK(std::abs(volsum - dom->volume()) / dom->volume() < 1e-10);
    CHECK(dom->omega(outside_probe) > 0.0);
    for (const auto& b : m.bfaces) {
      CHECK(std::abs(dom->omega(b.center)) <= dom->spacing());
      CHECK(norm(b.normal) == doctest::Approx(1.0).epsilon(1e-12));
    }
  };
  check_domain(Domain::interval(0.0, 1.0, 64), {1.5, 0.0});
  check_domain(Domain::disk({0.0, 0.0}, 1.0, 16, 32), {1.5, 0.2});
  check_domain(Domain::ellipse({0.5, -0.5}, 2.0, 0.5, 16, 32), {3.0, -0.5});
  check_domain(Domain::rectangle(0.0, 1.0, 0.0, 2.0, 8, 16), {1.5, 2.5});
}

TEST_CASE("domains: disk area matches pi r^2") {
  auto dom = Domain::disk({0.0, 0.0}, 2.0, 24, 48);
  CHECK(dom->volume() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
  auto ell = Domain::ellipse({0.0, 0.0}, 2.0, 0.5, 24, 48);
  CHECK(ell->volume() == doctest::Approx(std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("SpdField: clamping is idempotent and keeps eigenvector order") {
  auto dom = Domain::disk({0, 0}, 1.0, 8, 16);
  Rng rng(11);
  SpdField f(dom, std::vector<Sym2>(dom->mesh().cell_count()));
  for (auto& s : f.m) {
    double a = rng.uniform(0.05, 3.0), b = rng.uniform(-0.5, 0.5), c = rng.uniform(0.05, 3.0);
    s = Sym2{a, b, c};
  }
  SpdField g = f;
  double rate1 = g.clamp(0.5, 2.0);
  SpdField h = g;
  double rate2 = h.clamp(0.5, 2.0);
  CHECK(rate2 == doctest::Approx(0.0));
  (void)rate1;
  for (std::size_t i = 0; i < g.m.size(); ++i) {
    CHECK(std::abs(g.m[i].xx - h.m[i].xx) < 1e-12);
    CHECK(std::abs(g.m[i].xy - h.m[i].xy) < 1e-12);
    CHECK(std::abs(g.m[i].yy - h.m[i].yy) < 1e-12);
    double lo, hi;
    Vec2 u;
    g.m[i].eigen(lo, hi, u);
    CHECK(lo >= 0.5 - 1e-12);
    CHECK(hi <= 2.0 + 1e-12);
    // eigenvector of the small eigenvalue should still be the small one of f
    double flo, fhi;
    Vec2 fu;
    f.m[i].eigen(flo, fhi, fu);
    if (fhi - flo > 1e-9 && hi - lo > 1e-9) {
      CHECK(std::abs(dot(fu, u)) > 0.999);
    }
  }
}

TEST_CASE("DensityGrid: normalization and floor checks") {
  auto dom = Domain::interval(0.0, 2.0, 400);
  std::vector<double> v(400, 3.7);
  DensityGrid d(dom, v);
  CHECK(std::abs(d.mass() - 1.0) < 1e-8);
  CHECK(d.min_value() == doctest::Approx(0.5));

  CHECK_THROWS_AS(DensityGrid(dom, std::vector<double>(400, 1.0), 0.75), Error);

  auto disk = Domain::disk({0, 0}, 1.0, 12, 24);
  std::vector<double> w(disk->mesh().cell_count());
  Rng rng(5);
  for (auto& x : w) x = 0.5 + rng.uniform();
  DensityGrid dd(disk, w);
  CHECK(std::abs(dd.mass() - 1.0) < 1e-8);
}

TEST_CASE("least-squares calculus is exact on affine data") {
  auto domains = {Domain::disk({0, 0}, 1.0, 10, 20),
                  Domain::ellipse({0, 0}, 1.5, 0.75, 10, 20),
                  Domain::rectangle(0, 1, 0, 1, 12, 12)};
  for (const auto& dom : domains) {
    ScalarField u(dom, 0.0);
    for (int i = 0; i < dom->mesh().cell_count(); ++i) {
      Vec2 p = dom->mesh().node[i];
      u.v[i] = 2.0 * p.x - 3.0 * p.y + 0.25;
    }
    auto g = gradient_of(u);
    for (const auto& gv : g.v) {
      CHECK(std::abs(gv.x - 2.0) < 1e-10);
      CHECK(std::abs(gv.y + 3.0) < 1e-10);
    }
    // hessian of a linear vector field: constant Jacobian
    VectorField w(dom);
    for (int i = 0; i < dom->mesh().cell_count(); ++i) {
      Vec2 p = dom->mesh().node[i];
      w.v[i] = {1.5 * p.x + 0.5 * p.y, 0.5 * p.x - 2.0 * p.y};
    }
    auto H = hessian_of(w);
    for (const auto& s : H.m) {
      CHECK(std::abs(s.xx - 1.5) < 1e-10);
      CHECK(std::abs(s.xy - 0.5) < 1e-10);
      CHECK(std::abs(s.yy + 2.0) < 1e-10);
    }
    auto dv = divergence_of(w);
    for (double x : dv.v) CHECK(std::abs(x + 0.5) < 1e-10);
    // interpolation reproduces the affine function anywhere inside
    CHECK(std::abs(interpolate(u, {0.1, 0.05}) - (2.0 * 0.1 - 3.0 * 0.05 + 0.25)) < 1e-10);
  }
}

TEST_CASE("io: density and field round trips") {
  auto dom = Domain::disk({0.25, 0.0}, 1.5, 8, 16);
  std::vector<double> v(dom->mesh().cell_count());
  Rng rng(99);
  for (auto& x : v) x = 0.3 + rng.uniform();
  DensityGrid d(dom, v, 0.01);
  std::string path = "/tmp/otlab_test_density.dat";
  save_density(d, path);
  DensityGrid d2 = load_density(path);
  CHECK(d2.domain()->same_mesh(*dom));
  for (std::size_t i = 0; i < d.values().size(); ++i)
    CHECK(d.values()[i] == doctest::Approx(d2.values()[i]).epsilon(1e-14));
  std::remove(path.c_str());

  auto idom = Domain::interval(-1.0, 3.0, 50);
  ScalarField f(idom, 0.0);
  for (int i = 0; i < 50; ++i) f.v[i] = std::sin(i * 0.1);
  save_field(f, "/tmp/otlab_test_field.dat");
  ScalarField f2 = load_field("/tmp/otlab_test_field.dat");
  for (int i = 0; i < 50; ++i) CHECK(f.v[i] == doctest::Approx(f2.v[i]).epsilon(1e-15));
  std::remove("/tmp/otlab_test_field.dat");

  CHECK_THROWS_AS(load_density("/tmp/otlab_no_such_file.dat"), Error);
}
