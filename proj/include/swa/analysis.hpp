#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "swa/evaluation.hpp"
#include "swa/model.hpp"
#include "swa/timeutil.hpp"

namespace swa {

/// Per-log (p(x=0), p(x=1)) at the final Gibbs state, indexed like
/// Corpus::log_artist.
struct LogPosterior {
  std::vector<std::array<double, 2>> p;
};

/// Leave-one-out mode conditionals of every training log. Throws
/// ContractError under variant=session.
LogPosterior compute_log_posteriors(const ModelState& state);

enum class ReportKey { user, artist, topic, hour_of_day, day_of_week };
std::string to_string(ReportKey key);

struct ReportEntry {
  std::string key;
  double taste_ratio = 0.0;
  double addiction_ratio = 0.0;
  std::size_t support = 0;
  /// Raw sums of p0 / p1 before normalization (temporal, artist reports).
  double taste_strength = 0.0;
  double addiction_strength = 0.0;
  /// Topic report: fewer than the requested number of artists were usable.
  bool flagged = false;
  std::vector<std::string> top_artists;
};

struct AddictionReport {
  ReportKey key = ReportKey::user;
  std::vector<ReportEntry> entries;
  /// Keys that had no support and were left out.
  std::vector<std::string> omitted;
};

/// Bins [0, 1/B), [1/B, 2/B), ..., [(B-1)/B, 1].
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t bin_of(double value) const;
};
Histogram make_histogram(std::span<const double> values, std::size_t bins = 10);
/// Histogram of the entries' addiction ratios.
Histogram histogram_of(const AddictionReport& report, std::size_t bins = 10);

struct UserAddiction {
  AddictionReport report;
  Histogram histogram;
};

/// Per-user (lambda0, lambda1) with the user's log count as support, and the
/// histogram of lambda1 across users.
UserAddiction user_addiction_report(const PointEstimates& est, std::size_t bins = 10);

enum class Period { hour_of_day, day_of_week };

/// Sums p0 and p1 over training logs in each local hour (or weekday), then
/// normalizes each bucket. `days`, when given, keeps only logs on those
/// weekdays (0 = Monday).
AddictionReport temporal_addiction_report(const ModelState& state, const LogPosterior& post,
                                          Period period, UtcOffset tz = {},
                                          const std::optional<std::set<int>>& days = {});

/// Per-artist normalized (sum p0, sum p1) over the artist's training logs.
AddictionReport artist_addiction_report(const ModelState& state, const LogPosterior& post);

struct TopArtists {
  std::vector<Index> artists;
  /// Requested more artists than exist.
  bool truncated = false;
};

/// The n artists with largest phi_k, descending; ties go to the smaller
/// artist index (= lexicographic id order).
TopArtists top_artists_for_topic(const PointEstimates& est, std::size_t topic, std::size_t n);

/// For each topic: the top_n artists by phi_k among those above the topic's
/// smoothing floor, their per-artist ratios averaged and renormalized.
/// Entries are sorted by ascending addiction ratio.
AddictionReport topic_addiction_report(const ModelState& state, const PointEstimates& est,
                                       const LogPosterior& post, std::size_t top_n = 20);

/// Columns: key, taste_ratio, addiction_ratio, support (+ flagged,
/// top_artists for topic reports).
void write_report(const std::filesystem::path& path, const AddictionReport& report,
                  std::span<const std::string> provenance = {});
void write_histogram(const std::filesystem::path& path, const Histogram& hist,
                     std::span<const std::string> provenance = {});

} // namespace swa
