#include "swa/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "swa/errors.hpp"

namespace swa {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::optional<Timestamp> parse_timestamp(std::string_view text, TimestampFormat fmt) {
  if (fmt == TimestampFormat::iso8601) return parse_iso8601(text);
  Timestamp t = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), t);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return t;
}

std::optional<PlayLog> parse_line(std::string_view line, const FormatConfig& fmt) {
  const auto fields = split_fields(line, fmt.delimiter);
  auto field = [&](std::size_t i) -> std::optional<std::string_view> {
    if (i >= fields.size()) return std::nullopt;
    return fields[i];
  };
  const auto user = field(fmt.user_column);
  const auto ts = field(fmt.timestamp_column);
  auto artist = field(fmt.artist_column);
  if (!user || !ts || user->empty()) return std::nullopt;
  if ((!artist || artist->empty()) && fmt.artist_fallback_column)
    artist = field(*fmt.artist_fallback_column);
  if (!artist || artist->empty()) return std::nullopt;
  const auto t = parse_timestamp(*ts, fmt.timestamp_format);
  if (!t) return std::nullopt;
  return PlayLog{std::string(*user), std::string(*artist), *t};
}

} // namespace

FormatConfig FormatConfig::lastfm1k() {
  FormatConfig f;
  f.user_column = 0;
  f.timestamp_column = 1;
  f.artist_column = 2;
  f.artist_fallback_column = 3;
  return f;
}

FormatConfig FormatConfig::generic() { return FormatConfig{}; }

void FormatConfig::apply_columns(const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("columns", "expected key=index, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t idx = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), idx);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
      throw ConfigError("columns", "bad column index '" + value + "'");
    if (key == "user") user_column = idx;
    else if (key == "timestamp") timestamp_column = idx;
    else if (key == "artist") artist_column = idx;
    else if (key == "artist_fallback") artist_fallback_column = idx;
    else throw ConfigError("columns", "unknown column key '" + key + "'");
  }
}

ParseResult parse_play_logs(std::istream& in, const FormatConfig& format) {
  if (!in) throw IoError("play-log stream is not readable");
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t considered = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = strip_cr(line);
    if (view.empty() || view.front() == '#') continue;
    ++considered;
    if (auto log = parse_line(view, format)) {
      result.logs.push_back(std::move(*log));
    } else {
      if (result.malformed == 0) {
        result.first_malformed_line = line_no;
        result.first_malformed_text = std::string(view);
      }
      ++result.malformed;
    }
  }
  if (in.bad()) throw IoError("read error on play-log stream");
  if (considered > 0 && 2 * result.malformed > considered) {
    throw FormatError("format mismatch: " + std::to_string(result.malformed) + " of " +
                      std::to_string(considered) + " lines malformed; first at line " +
                      std::to_string(result.first_malformed_line) + ": " +
                      result.first_malformed_text);
  }
  return result;
}

std::vector<PlayLog> filter_rare_artists(std::span<const PlayLog> logs,
                                         std::size_t min_users) {
  std::unordered_map<std::string_view, std::unordered_set<std::string_view>> listeners;
  for (const auto& log : logs) listeners[log.artist_id].insert(log.user_id);
  std::vector<PlayLog> kept;
  kept.reserve(logs.size());
  for (const auto& log : logs)
    if (listeners[log.artist_id].size() > min_users) kept.push_back(log);
  return kept;
}

std::size_t SessionizedDataset::num_sessions() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.size();
  return n;
}

std::size_t SessionizedDataset::num_logs() const {
  std::size_t n = 0;
  for (const auto& user : sessions)
    for (const auto& s : user) n += s.logs.size();
  return n;
}

std::vector<PlayLog> SessionizedDataset::all_logs() const {
  std::vector<PlayLog> out;
  out.reserve(num_logs());
  for (const auto& user : sessions)
    for (const auto& s : user) out.insert(out.end(), s.logs.begin(), s.logs.end());
  return out;
}

SessionizedDataset segment_sessions(std::span<const PlayLog> logs, Timestamp gap) {
  if (gap <= 0) throw ConfigError("gap", "session gap must be positive");
  std::map<std::string, std::vector<const PlayLog*>> by_user;
  std::set<std::string> artists;
  for (const auto& log : logs) {
    by_user[log.user_id].push_back(&log);
    artists.insert(log.artist_id);
  }

  SessionizedDataset data;
  data.artists.assign(artists.begin(), artists.end());
  data.users.reserve(by_user.size());
  data.sessions.reserve(by_user.size());
  for (auto& [user, user_logs] : by_user) {
    std::stable_sort(user_logs.begin(), user_logs.end(),
                     [](const PlayLog* a, const PlayLog* b) {
                       return a->timestamp < b->timestamp;
                     });
    std::vector<Session> sessions;
    for (std::size_t i = 0; i < user_logs.size(); ++i) {
      if (i == 0 || user_logs[i]->timestamp - user_logs[i - 1]->timestamp >= gap)
        sessions.push_back(Session{user, {}});
      sessions.back().logs.push_back(*user_logs[i]);
    }
    data.users.push_back(user);
    data.sessions.push_back(std::move(sessions));
  }
  return data;
}

TrainTestSplit split_train_test(std::span<const PlayLog> logs, Timestamp boundary) {
  TrainTestSplit split;
  for (const auto& log : logs)
    (log.timestamp < boundary ? split.train : split.test).push_back(log);
  if (split.train.empty())
    split.warnings.push_back("training split is empty (boundary " +
                             format_iso8601(boundary) + " precedes all logs)");
  if (split.test.empty())
    split.warnings.push_back("test split is empty (boundary " +
                             format_iso8601(boundary) + " follows all logs)");
  return split;
}

void write_sessionized(std::ostream& out, const SessionizedDataset& data,
                       std::span<const std::string> provenance) {
  for (const auto& line : provenance) out << "# " << line << '\n';
  out << "user\tsession\tposition\tartist\ttimestamp\n";
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    const auto& sessions = data.sessions[u];
    for (std::size_t r = 0; r < sessions.size(); ++r)
      for (std::size_t j = 0; j < sessions[r].logs.size(); ++j) {
        const auto& log = sessions[r].logs[j];
        out << log.user_id << '\t' << r << '\t' << j << '\t' << log.artist_id << '\t'
            << format_iso8601(log.timestamp) << '\n';
      }
  }
  if (!out) throw IoError("failed writing sessionized dataset");
}

SessionizedDataset read_sessionized(std::istream& in) {
  if (!in) throw IoError("sessionized dataset stream is not readable");
  std::map<std::string, std::vector<Session>> by_user;
  std::set<std::string> artists;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto fail = [&](const std::string& why) {
    throw FormatError("sessionized dataset line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = strip_cr(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (view.substr(0, 5) == "user\t") continue;
    }
    const auto f = split_fields(view, '\t');
    if (f.size() != 5) fail("expected 5 fields");
    std::size_t r = 0, j = 0;
    if (std::from_chars(f[1].data(), f[1].data() + f[1].size(), r).ec != std::errc{} ||
        std::from_chars(f[2].data(), f[2].data() + f[2].size(), j).ec != std::errc{})
      fail("bad session/position index");
    const auto t = parse_iso8601(f[4]);
    if (!t || f[0].empty() || f[3].empty()) fail("bad field");
    auto& sessions = by_user[std::string(f[0])];
    if (r > sessions.size()) fail("session ordinals must be contiguous");
    if (r == sessions.size()) sessions.push_back(Session{std::string(f[0]), {}});
    if (r + 1 != sessions.size()) fail("session rows must be grouped");
    if (j != sessions[r].logs.size()) fail("positions must be contiguous");
    sessions[r].logs.push_back(PlayLog{std::string(f[0]), std::string(f[3]), *t});
    artists.emplace(f[3]);
  }
  if (in.bad()) throw IoError("read error on sessionized dataset");
  SessionizedDataset data;
  data.artists.assign(artists.begin(), artists.end());
  for (auto& [user, sessions] : by_user) {
    data.users.push_back(user);
    data.sessions.push_back(std::move(sessions));
  }
  return data;
}

} // namespace swa
