#pragma once

// Shared numeric utilities, error types and deterministic RNG streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace its {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char* kEngineVersion = "0.1.0";

// Input or configuration violates a contract. CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Optimizer failed to reach its tolerance. CLI maps this to exit code 3.
class convergence_error : public std::runtime_error {
public:
  explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric evaluation produced a non-finite value.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Stable logistic transforms. Valid for |x| up to ~700.

inline double log1pexp(double x) {
  if (x <= -37.0) return std::exp(x);
  if (x <= 18.0) return std::log1p(std::exp(x));
  if (x <= 33.3) return x + std::exp(-x);
  return x;
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) {
  return std::log(p) - std::log1p(-p);
}

// ---------------------------------------------------------------------------
// Percentiles, type-7 (linear interpolation on sorted order statistics).

inline double percentile_type7(std::vector<double> sorted_ascending, double q) {
  const std::size_t n = sorted_ascending.size();
  if (n == 0) throw validation_error("percentile of empty sample");
  if (n == 1) return sorted_ascending[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted_ascending[lo] + frac * (sorted_ascending[hi] - sorted_ascending[lo]);
}

struct Summary3 {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
};

// Median and central 95% interval of a draw vector.
inline Summary3 summarize_draws(const std::vector<double>& draws) {
  std::vector<double> s(draws);
  std::sort(s.begin(), s.end());
  Summary3 out;
  out.lower = percentile_type7(s, 0.025);
  out.median = percentile_type7(s, 0.5);
  out.upper = percentile_type7(s, 0.975);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 is bit-specified by the standard; the
// uniform/normal transforms below are hand-rolled so draws are reproducible
// independent of the standard library implementation.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent substream seed from (seed, stream index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x51ed270b7d64b93fULL));
}

class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;  // 53 random bits
    return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; one value per call, spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t next_u64() { return engine_(); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u <= acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// FNV-1a, used for config hashes stamped into outputs.

inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : data) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xFULL];
    v >>= 4;
  }
  return out;
}

}  // namespace its
