#include "otlab/common.hpp"

#include <algorithm>
#include <atomic>

namespace otlab {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::mesh_mismatch: return "MeshMismatch";
    case ErrorCode::dimension_error: return "DimensionError";
    case ErrorCode::range_error: return "RangeError";
    case ErrorCode::floor_error: return "FloorError";
    case ErrorCode::exponent_error: return "ExponentError";
    case ErrorCode::degenerate_eps: return "DegenerateEps";
    case ErrorCode::mass_error: return "MassError";
    case ErrorCode::size_cap: return "SizeCap";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::unmapped_point: return "UnmappedPoint";
    case ErrorCode::kind_error: return "KindError";
    case ErrorCode::mean_error: return "MeanError";
    case ErrorCode::incompatible_data: return "IncompatibleData";
    case ErrorCode::domain_error: return "DomainError";
    case ErrorCode::convexity_error: return "ConvexityError";
    case ErrorCode::incomplete_input: return "IncompleteInput";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Error";
}

void Sym2::eigen(double& lo, double& hi, Vec2& v_lo) const {
  double m = 0.5 * (xx + yy);
  double half_diff = 0.5 * (xx - yy);
  double r = std::hypot(half_diff, xy);
  lo = m - r;
  hi = m + r;
  if (r < 1e-300) {
    v_lo = {1.0, 0.0};
    return;
  }
  // eigenvector for lo: (A - hi I) column with larger norm
  Vec2 c1{xx - hi, xy}, c2{xy, yy - hi};
  v_lo = norm2(c1) >= norm2(c2) ? normalized(c1) : normalized(c2);
  if (norm2(v_lo) == 0.0) v_lo = {1.0, 0.0};
}

Sym2 Sym2::clamped(double lo_bound, double hi_bound) const {
  double lo, hi;
  Vec2 u;
  eigen(lo, hi, u);
  double cl = std::clamp(lo, lo_bound, hi_bound);
  double ch = std::clamp(hi, lo_bound, hi_bound);
  if (cl == lo && ch == hi) return *this;
  Vec2 v = perp(u);  // eigenvector of hi
  return Sym2{cl * u.x * u.x + ch * v.x * v.x,
              cl * u.x * u.y + ch * v.x * v.y,
              cl * u.y * u.y + ch * v.y * v.y};
}

Sym2 Sym2::inverse() const {
  double d = det();
  require(std::abs(d) > 1e-300, ErrorCode::domain_error, "singular Sym2");
  return Sym2{yy / d, -xy / d, xx / d};
}

double sym2_quad_1d(double a, double g) { return a * g * g; }

namespace {
std::atomic<int> g_threads{0};
}

int thread_count() {
  int t = g_threads.load();
  if (t > 0) return t;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

void set_thread_count(int n) { g_threads.store(n); }

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  std::size_t workers = std::size_t(std::max(1, thread_count()));
  if (workers <= 1 || n < 2 * workers) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace otlab
