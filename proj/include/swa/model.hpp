#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "swa/corpus.hpp"
#include "swa/rng.hpp"

namespace swa {

/// session: every play comes from the session topic (x fixed to 0).
/// swa: each play is taste-driven (x = 0) or addiction-driven (x = 1).
enum class Variant { session, swa };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct Hyperparameters {
  std::size_t num_topics = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double rho = 0.5;
  Variant variant = Variant::swa;

  /// alpha = 1/K, beta = gamma = 50/|A|, rho = 0.5.
  static Hyperparameters defaults(std::size_t num_topics, std::size_t num_artists,
                                  Variant variant);
  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Latent state: a topic per session and a mode flag per log, both in the
/// Corpus' global numbering.
struct Assignments {
  std::vector<std::uint32_t> z;
  std::vector<std::uint8_t> x;

  friend bool operator==(const Assignments&, const Assignments&) = default;
};

/// Sufficient statistics of the collapsed model.
struct CountTables {
  std::size_t num_topics = 0;
  std::size_t num_artists = 0;
  std::vector<std::int64_t> n_u0;  // logs of u with x = 0
  std::vector<std::int64_t> n_u1;  // logs of u with x = 1
  std::vector<std::int64_t> n_u;   // all logs of u
  std::vector<std::unordered_map<Index, std::int64_t>> n_u1a;  // x = 1 plays of a by u
  std::vector<std::int64_t> n_ka;  // x = 0 plays of a under topic k, row-major K x A
  std::vector<std::int64_t> n_k;
  std::vector<std::int64_t> r_uk;  // sessions of u with topic k, row-major U x K
  std::vector<std::int64_t> r_u;

  std::int64_t ka(std::size_t k, std::size_t a) const { return n_ka[k * num_artists + a]; }
  std::int64_t uk(std::size_t u, std::size_t k) const { return r_uk[u * num_topics + k]; }
  std::int64_t u1a(std::size_t u, Index a) const {
    auto it = n_u1a[u].find(a);
    return it == n_u1a[u].end() ? 0 : it->second;
  }

  friend bool operator==(const CountTables&, const CountTables&) = default;
};

/// Full recount of the statistics from assignments.
CountTables recount(const Corpus& corpus, std::size_t num_topics, const Assignments& asg);

/// A Gibbs chain: data, hyperparameters, assignments, counts and random
/// stream. Counts match assignments between public calls; detach_session /
/// detach_log leave a hole that must be filled with attach_* before any other
/// operation.
class ModelState {
public:
  ModelState(std::shared_ptr<const Corpus> corpus, Hyperparameters hp, Assignments asg,
             std::uint64_t seed);

  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> corpus_ptr() const { return corpus_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  const Assignments& assignments() const { return asg_; }
  const CountTables& counts() const { return counts_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t sweeps_done() const { return sweeps_done_; }
  void set_sweeps_done(std::uint64_t n) { sweeps_done_ = n; }

  /// When set under variant=swa, sweeps leave every x untouched. Combined
  /// with all x = 0 this reduces the chain to the session model.
  bool x_frozen() const { return x_frozen_; }
  void set_x_frozen(bool frozen) { x_frozen_ = frozen; }

  /// Removes session s's topic contribution (R_uk and its x = 0 plays).
  void detach_session(std::size_t s);
  void attach_session(std::size_t s, std::uint32_t topic);
  /// Removes log l's mode contribution.
  void detach_log(std::size_t l);
  void attach_log(std::size_t l, std::uint8_t flag);

  void set_topic(std::size_t s, std::uint32_t topic);
  /// Throws ContractError when flag = 1 under variant=session.
  void set_x(std::size_t l, std::uint8_t flag);

  bool counts_consistent() const;

private:
  std::shared_ptr<const Corpus> corpus_;
  Hyperparameters hp_;
  Assignments asg_;
  CountTables counts_;
  std::uint64_t seed_;
  Rng rng_;
  std::uint64_t sweeps_done_ = 0;
  bool x_frozen_ = false;
};

/// z uniform on [0, K); x uniform on {0, 1} (swa) or 0 (session).
ModelState init_assignments(std::shared_ptr<const Corpus> corpus, const Hyperparameters& hp,
                            std::uint64_t seed);

/// Natural log of the collapsed joint P(D, Z, X | alpha, beta, gamma, rho).
/// Under variant=session the taste/addiction and user-artist factors are
/// absent and the session model's P(D, Z | alpha, beta) is returned.
double joint_log_prob(const ModelState& state);

/// Unnormalized log weights of z_s = k given everything else, with session s
/// excluded from the counts. Only x = 0 plays of the session contribute to
/// the artist terms.
std::vector<double> topic_log_weights(const ModelState& state, std::size_t session);
/// Normalized topic conditional of session s.
std::vector<double> topic_conditional(const ModelState& state, std::size_t session);

/// Normalized (p(x=0), p(x=1)) for log l with the log excluded from the
/// counts. Throws ContractError under variant=session.
std::array<double, 2> x_conditional(const ModelState& state, std::size_t log);

/// Resamples z for session s (global index) and returns the new topic.
std::uint32_t sample_topic(ModelState& state, std::size_t session, Rng& rng);
std::uint32_t sample_topic(ModelState& state, std::size_t user, std::size_t ordinal,
                           Rng& rng);

/// Resamples x for log l (global index). Throws ContractError under
/// variant=session.
std::uint8_t sample_x(ModelState& state, std::size_t log, Rng& rng);
std::uint8_t sample_x(ModelState& state, std::size_t user, std::size_t ordinal,
                      std::size_t position, Rng& rng);

struct SweepStats {
  double log_joint = 0.0;
  std::chrono::nanoseconds elapsed{0};
};

/// One pass over users in index order and their sessions chronologically:
/// z of the session first, then its x flags in position order.
SweepStats gibbs_sweep(ModelState& state);

} // namespace swa
