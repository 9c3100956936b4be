#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swa/ingest.hpp"

namespace swa {

using Index = std::uint32_t;

/// Integer-indexed, flattened view of a SessionizedDataset used by the
/// sampler. Sessions are numbered globally in (user, ordinal) order and logs
/// in (session, position) order, so a user's sessions and a session's logs
/// are contiguous ranges.
struct Corpus {
  std::vector<std::string> user_ids;
  std::vector<std::string> artist_ids;
  std::vector<Index> user_session_begin; // size U + 1
  std::vector<Index> session_log_begin;  // size S + 1
  std::vector<Index> session_user;       // size S
  std::vector<Index> log_session;        // size L
  std::vector<Index> log_artist;         // size L
  std::vector<Timestamp> log_time;       // size L

  /// Artist vocabulary defaults to the dataset's own artists. A supplied
  /// vocabulary must contain every artist of the dataset.
  static Corpus from_dataset(const SessionizedDataset& data,
                             std::optional<std::vector<std::string>> vocabulary = {});

  /// Builds a corpus from artist indices: sessions[u][r] lists the artists of
  /// session r of user u. Ids become "u<i>"/"a<i>", timestamps are synthetic.
  static Corpus from_indices(std::size_t num_artists,
                             const std::vector<std::vector<std::vector<Index>>>& sessions);

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_artists() const { return artist_ids.size(); }
  std::size_t num_sessions() const { return session_user.size(); }
  std::size_t num_logs() const { return log_artist.size(); }

  std::size_t sessions_of(std::size_t u) const {
    return user_session_begin[u + 1] - user_session_begin[u];
  }
  std::size_t session_index(std::size_t u, std::size_t r) const {
    return user_session_begin[u] + r;
  }
  std::size_t session_size(std::size_t s) const {
    return session_log_begin[s + 1] - session_log_begin[s];
  }
  std::size_t log_index(std::size_t s, std::size_t j) const {
    return session_log_begin[s] + j;
  }
  std::size_t log_user(std::size_t l) const { return session_user[log_session[l]]; }

  /// FNV-1a over ids and structure; used to match checkpoints to data.
  std::uint64_t fingerprint() const;
};

} // namespace swa
