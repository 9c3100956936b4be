#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swa/timeutil.hpp"

namespace swa {

/// One play event: user `user_id` played a song by `artist_id` at `timestamp`.
struct PlayLog {
  std::string user_id;
  std::string artist_id;
  Timestamp timestamp = 0;

  friend bool operator==(const PlayLog&, const PlayLog&) = default;
};

enum class TimestampFormat { iso8601, unix_seconds };

/// Column layout of a delimiter-separated play-log file. Column indices are
/// zero-based.
struct FormatConfig {
  char delimiter = '\t';
  std::size_t user_column = 0;
  std::size_t timestamp_column = 1;
  std::size_t artist_column = 2;
  /// Used when the artist column is empty (Last.fm: MBID missing -> name).
  std::optional<std::size_t> artist_fallback_column;
  TimestampFormat timestamp_format = TimestampFormat::iso8601;

  /// Last.fm 1K-users dump: user, timestamp, artist MBID, artist name,
  /// track MBID, track name.
  static FormatConfig lastfm1k();
  /// user, timestamp, artist.
  static FormatConfig generic();
  /// Parses "user=0,timestamp=1,artist=2[,artist_fallback=3]". Unnamed keys
  /// keep their previous value. Throws ConfigError.
  void apply_columns(const std::string& spec);
};

struct ParseResult {
  std::vector<PlayLog> logs;
  std::size_t malformed = 0;
  /// 1-based line number and text of the first malformed line, if any.
  std::size_t first_malformed_line = 0;
  std::string first_malformed_text;
};

/// Parses play logs, one per line. Blank lines and lines starting with '#'
/// are ignored. Malformed lines are skipped and counted; if more than half of
/// the non-ignored lines are malformed a FormatError naming the first
/// offending line is thrown. A stream in a failed state throws IoError.
ParseResult parse_play_logs(std::istream& in, const FormatConfig& format);

/// Drops every log whose artist was played by `min_users` or fewer distinct
/// users. Survivor order is preserved.
std::vector<PlayLog> filter_rare_artists(std::span<const PlayLog> logs,
                                         std::size_t min_users = 3);

struct Session {
  std::string user_id;
  std::vector<PlayLog> logs;
};

/// Per-user chronologically ordered sessions. Users and artists are kept in
/// lexicographic id order; `sessions[i]` belongs to `users[i]`.
struct SessionizedDataset {
  std::vector<std::string> users;
  std::vector<std::string> artists;
  std::vector<std::vector<Session>> sessions;

  std::size_t num_users() const { return users.size(); }
  std::size_t num_artists() const { return artists.size(); }
  std::size_t num_sessions() const;
  std::size_t num_logs() const;
  bool empty() const { return num_logs() == 0; }

  /// Flattened logs in user, session, position order.
  std::vector<PlayLog> all_logs() const;
};

inline constexpr Timestamp kDefaultSessionGap = 30 * kSecondsPerMinute;

/// Splits each user's logs into sessions: after a stable sort by timestamp,
/// adjacent logs less than `gap` seconds apart share a session.
SessionizedDataset segment_sessions(std::span<const PlayLog> logs,
                                    Timestamp gap = kDefaultSessionGap);

struct TrainTestSplit {
  std::vector<PlayLog> train;
  std::vector<PlayLog> test;
  std::vector<std::string> warnings;
};

/// train: timestamp < boundary; test: timestamp >= boundary. An empty side
/// produces a warning, not an error.
TrainTestSplit split_train_test(std::span<const PlayLog> logs, Timestamp boundary);

/// Line format: user, session ordinal, position, artist, ISO-8601 timestamp,
/// tab-separated, with a header line. `provenance` lines are written first,
/// each prefixed with "# ".
void write_sessionized(std::ostream& out, const SessionizedDataset& data,
                       std::span<const std::string> provenance = {});

/// Reads the format written by write_sessionized. Throws FormatError.
SessionizedDataset read_sessionized(std::istream& in);

} // namespace swa
