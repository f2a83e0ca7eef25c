#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace chantseg {

// Derives an independent seed for a named sub-stream ("split", "gibbs", ...)
// from a run seed, so components can be reproduced in isolation.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream) : engine_(derive_seed(seed, stream)) {}

  // Uniform on [0, 1).
  double uniform();
  // Gamma with the given shape and *rate*.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);

  // Inverse-CDF draw over unnormalized non-negative weights using a single
  // uniform variate. Returns weights.size() only if every weight is zero.
  std::size_t categorical(std::span<const double> weights);

  // Same, for weights given in log space.
  std::size_t categorical_log(std::span<const double> log_weights);

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

}  // namespace chantseg
