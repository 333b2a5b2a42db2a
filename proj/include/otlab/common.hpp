#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace otlab {

enum class ErrorCode {
  mesh_mismatch,
  dimension_error,
  range_error,
  floor_error,
  exponent_error,
  degenerate_eps,
  mass_error,
  size_cap,
  no_convergence,
  unmapped_point,
  kind_error,
  mean_error,
  incompatible_data,
  domain_error,
  convexity_error,
  incomplete_input,
  io_error,
  empty_input,
  config_error,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra (d <= 2)

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm2(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::sqrt(norm2(a)); }
inline Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 normalized(const Vec2& a) {
  double n = norm(a);
  return n > 0 ? a / n : Vec2{0, 0};
}

// Symmetric 2x2 matrix; 1D problems use the xx entry only.
struct Sym2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;

  Sym2() = default;
  Sym2(double xx_, double xy_, double yy_) : xx(xx_), xy(xy_), yy(yy_) {}
  static Sym2 identity() { return {1.0, 0.0, 1.0}; }

  Vec2 apply(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  double quad(const Vec2& v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

  // Eigenvalues sorted ascending, eigenvector angle of the first one.
  void eigen(double& lo, double& hi, Vec2& v_lo) const;
  Sym2 clamped(double lo, double hi) const;  // eigenvalue clamp, eigenvectors kept
  Sym2 inverse() const;
};

double sym2_quad_1d(double a, double g);  // a * g * g, for symmetry with 2D path

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64 based; independent of libstdc++ distributions)

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Threading

int thread_count();
void set_thread_count(int n);  // n <= 0 restores the hardware default

// Splits [0, n) into contiguous chunks, one worker per chunk. fn(begin, end)
// must only write to disjoint slots so results are deterministic.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace otlab
