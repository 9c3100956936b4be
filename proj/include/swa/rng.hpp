#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace swa {

/// Seedable, splittable random stream. Child streams are derived from the
/// seed and a stream id with splitmix64, so a run is reproducible from the
/// master seed alone.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

  /// Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Draws an index proportionally to `weights` (non-negative, not all zero).
  std::size_t categorical(std::span<const double> weights);
  /// Draws an index from unnormalized log weights (max-subtracted before
  /// exponentiation).
  std::size_t categorical_log(std::span<const double> log_weights);

  /// Gamma(shape, 1) draw returned as its logarithm; stays finite for shapes
  /// far below 1 where the plain draw underflows to zero.
  double log_gamma_variate(double shape);

  std::mt19937_64& engine() { return engine_; }

  /// Engine state as text; restoring it resumes the stream exactly.
  std::string serialize() const;
  void deserialize(const std::string& state);

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

} // namespace swa
