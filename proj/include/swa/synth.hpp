#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swa/ingest.hpp"
#include "swa/timeutil.hpp"

namespace swa {

/// Known parameters of a generating process.
struct GroundTruth {
  std::size_t num_users = 0;
  std::size_t num_artists = 0;
  std::size_t num_topics = 0;
  std::vector<double> theta;   // U x K
  std::vector<double> phi;     // K x A
  std::vector<double> psi;     // U x A
  std::vector<double> lambda1; // per user, probability of x = 1
  std::vector<std::size_t> sessions_per_user;
  /// Session lengths are 1 + Geometric(p), truncated at max_session_length.
  double session_length_p = 0.2;
  std::size_t max_session_length = 30;
  /// Optional additive shift of lambda1 by local hour of the play, clamped to
  /// [0, 1]. Off by default.
  std::optional<std::array<double, 24>> hour_lambda_shift;
  UtcOffset timezone;
  Timestamp start_time = 1356998400; // 2013-01-01T00:00:00Z
  /// Gap between consecutive plays of a session, uniform in seconds.
  Timestamp min_play_gap = 60;
  Timestamp max_play_gap = 600;

  std::string user_id(std::size_t u) const;
  std::string artist_id(std::size_t a) const;

  /// Throws ConfigError when shapes or normalization are off.
  void validate() const;
};

enum class LambdaPrior { beta, two_groups, fixed };

/// Draws a GroundTruth from Dirichlet/Beta priors.
struct TruthConfig {
  std::size_t num_users = 200;
  std::size_t num_artists = 300;
  std::size_t num_topics = 10;
  double alpha = 0.1;  // user-topic Dirichlet
  double beta = 0.05;  // topic-artist Dirichlet
  double gamma = 0.05; // user-artist Dirichlet
  LambdaPrior lambda_prior = LambdaPrior::beta;
  double lambda_a = 0.5; // Beta(a, b) for LambdaPrior::beta
  double lambda_b = 0.5;
  /// two_groups: the first half of the users gets group_low, the rest
  /// group_high. fixed: every user gets group_low.
  double group_low = 0.05;
  double group_high = 0.95;
  std::size_t sessions_per_user = 20;
  double session_length_p = 0.2;
  std::size_t max_session_length = 30;
};

GroundTruth sample_ground_truth(const TruthConfig& config, std::uint64_t seed);

struct SyntheticData {
  SessionizedDataset dataset;
  /// True mode flag per log and topic per session, in the dataset's flattened
  /// (user, session, position) order.
  std::vector<std::uint8_t> true_x;
  std::vector<std::uint32_t> true_z;
};

/// Runs the generative process forward: per session z ~ theta_u; per play
/// x ~ Bernoulli(lambda1_u [+ hour shift]) and artist ~ phi_z (x = 0) or
/// psi_u (x = 1). Plays within a session are under 30 minutes apart and
/// sessions at least 30 minutes apart. Each user has its own derived RNG
/// stream.
SyntheticData generate_dataset(const GroundTruth& truth, std::uint64_t seed);

/// Hour-of-day lambda shift: +amplitude for local hours 5-11, -amplitude for
/// 17-23, zero otherwise.
std::array<double, 24> morning_schedule(double amplitude);

/// lambda0 * sum_k theta_uk phi_ka + lambda1 * psi_ua under the truth.
double true_song_prob(const GroundTruth& truth, std::size_t user, std::size_t artist);

/// Writes logs.tsv in the generic play-log format plus truth_z.tsv,
/// truth_x.tsv, truth_theta.tsv, truth_phi.tsv, truth_psi.tsv and
/// truth_lambda.tsv.
void write_synthetic(const std::filesystem::path& dir, const GroundTruth& truth,
                     const SyntheticData& data, std::span<const std::string> provenance = {});

} // namespace swa
