#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace bpatch {

// Deterministic random source. std::mt19937_64 is bit-exact across
// implementations; the distribution transforms live here because the
// std::*_distribution classes are not, and fixed-seed runs must reproduce
// bit-identically on any toolchain.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); safe as a log argument.
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Marsaglia polar rejection (second variate discarded,
  // keeping the draw order independent of call history).
  double normal() {
    while (true) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // log of a Gamma(shape, 1) draw; exact for tiny shapes where the linear
  // value underflows (shape ~ 1e-3 puts most mass below exp(-700)).
  double log_gamma_sample(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("log_gamma_sample: shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return std::log(g) + std::log(uniform_pos()) / shape;
    }
    return std::log(gamma(shape));
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  // Dirichlet draw computed in log space, normalized on the simplex. Entries
  // may underflow to exact 0 for tiny concentrations; the sum is still 1.
  std::vector<double> dirichlet(std::span<const double> alpha) {
    std::vector<double> logs(alpha.size());
    double max_log = -HUGE_VAL;
    for (std::size_t v = 0; v < alpha.size(); ++v) {
      logs[v] = log_gamma_sample(alpha[v]);
      max_log = std::max(max_log, logs[v]);
    }
    double sum = 0.0;
    std::vector<double> out(alpha.size());
    for (std::size_t v = 0; v < alpha.size(); ++v) {
      out[v] = std::exp(logs[v] - max_log);
      sum += out[v];
    }
    for (double& x : out) x /= sum;
    return out;
  }

  // Index draw from an unnormalized nonnegative weight vector.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights must have positive sum");
    double u = uniform() * total;
    for (std::size_t v = 0; v + 1 < weights.size(); ++v) {
      u -= weights[v];
      if (u < 0.0) return static_cast<int>(v);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Independent child stream; deterministic in (seed, stream_id).
  Rng derive(std::uint64_t stream_id) const {
    return Rng(mix64(seed_ + 0x9e3779b97f4a7c15ULL * (stream_id + 1)));
  }

  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bpatch
