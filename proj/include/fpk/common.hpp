#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpk {

/// Point in R^d, d <= 3. Unused trailing coordinates are zero.
using Pt = std::array<double, 3>;

inline Pt make_pt(double x, double y = 0.0, double z = 0.0) { return Pt{x, y, z}; }

inline double dot(const Pt& a, const Pt& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Pt& a, int dim) { return std::sqrt(dot(a, a, dim)); }

// ---------------------------------------------------------------------------
// Error taxonomy. Each operation contract names which of these it can throw.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArgumentError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct DegenerateInputError : Error { using Error::Error; };
struct NonIntegrableDriftError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct UnbalancedInputError : Error { using Error::Error; };
struct UnsupportedInputError : Error { using Error::Error; };
struct SchemeViolationError : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Small numeric helpers shared across modules.
// ---------------------------------------------------------------------------

inline constexpr double kPi = std::numbers::pi;

/// Bernoulli function t / (e^t - 1), stable near t = 0.
inline double bernoulli_fn(double t) {
  if (std::abs(t) < 1e-5) {
    // series: 1 - t/2 + t^2/12 - t^4/720
    const double t2 = t * t;
    return 1.0 - 0.5 * t + t2 / 12.0 - t2 * t2 / 720.0;
  }
  return t / std::expm1(t);
}

/// log(sum exp(a_i)) over a contiguous range, guarded against all -inf.
inline double logsumexp(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, a[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(a[i] - m);
  return m + std::log(s);
}

/// Standard normal density.
inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

/// Standard normal CDF via erfc for accuracy in the tails.
inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
}

/// Deterministic 64-bit string hash (FNV-1a); used to derive per-check seeds.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fpk
