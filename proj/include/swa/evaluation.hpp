#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swa/corpus.hpp"
#include "swa/ingest.hpp"
#include "swa/model.hpp"

namespace swa {

/// Parameter readout from one Gibbs state.
///
/// theta is dense |U| x K, phi dense K x |A|. psi is kept sparse: a per-user
/// floor value (the smoothed probability of an artist never played in
/// addiction mode) plus the artists with nonzero addiction counts.
struct PointEstimates {
  Hyperparameters hp;
  std::vector<std::string> user_ids;
  std::vector<std::string> artist_ids;
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<double> phi_floor;
  std::vector<double> psi_floor;
  std::vector<std::vector<std::pair<Index, double>>> psi_entries; // sorted by artist
  std::vector<double> lambda0;
  std::vector<double> lambda1;
  std::vector<std::int64_t> user_logs;

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_artists() const { return artist_ids.size(); }
  std::size_t num_topics() const { return hp.num_topics; }

  double theta_at(std::size_t u, std::size_t k) const { return theta[u * hp.num_topics + k]; }
  double phi_at(std::size_t k, std::size_t a) const { return phi[k * artist_ids.size() + a]; }
  double psi_at(std::size_t u, Index a) const;

  std::optional<std::size_t> user_index(const std::string& id) const;
  std::optional<std::size_t> artist_index(const std::string& id) const;
  /// Rebuilds the id lookup tables; call after filling ids by hand.
  void index_ids();

private:
  std::unordered_map<std::string, std::size_t> user_lookup_;
  std::unordered_map<std::string, std::size_t> artist_lookup_;
};

/// Smoothed posterior-mean style readout of theta, phi, psi and lambda from
/// the counts. Under variant=session psi is uniform and lambda = (1, 0).
PointEstimates estimate_parameters(const ModelState& state);

/// lambda0 * sum_k theta_uk phi_ka + lambda1 * psi_ua.
double song_prob(std::size_t user, std::size_t artist, const PointEstimates& est);
/// Throws LookupError for an unknown user or artist.
double song_prob(const std::string& user, const std::string& artist, const PointEstimates& est);

struct PerplexityResult {
  double perplexity = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped_unknown_user = 0;
  std::size_t skipped_unknown_artist = 0;
  std::size_t skipped() const { return skipped_unknown_user + skipped_unknown_artist; }
};

/// exp(-mean log p) over test logs whose user and artist the model knows.
/// Sums sequentially in dataset order. Throws Error when nothing is
/// evaluable.
PerplexityResult perplexity(const SessionizedDataset& test, const PointEstimates& est);

/// Writes model.tsv (hyperparameters), artists.tsv, theta.tsv (dense),
/// phi.tsv and psi.tsv (triplets; artist "*" holds the row floor) and
/// lambda.tsv into `dir`.
void write_estimates(const std::filesystem::path& dir, const PointEstimates& est,
                     std::span<const std::string> provenance = {});
PointEstimates read_estimates(const std::filesystem::path& dir);

} // namespace swa
