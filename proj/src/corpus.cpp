#include "swa/corpus.hpp"

#include <algorithm>
#include <unordered_map>

#include "swa/errors.hpp"

namespace swa {

Corpus Corpus::from_dataset(const SessionizedDataset& data,
                            std::optional<std::vector<std::string>> vocabulary) {
  Corpus c;
  c.artist_ids = vocabulary ? std::move(*vocabulary) : data.artists;
  std::unordered_map<std::string, Index> artist_index;
  artist_index.reserve(c.artist_ids.size());
  for (std::size_t i = 0; i < c.artist_ids.size(); ++i)
    artist_index.emplace(c.artist_ids[i], static_cast<Index>(i));

  c.user_ids = data.users;
  c.user_session_begin.push_back(0);
  c.session_log_begin.push_back(0);
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    for (const auto& session : data.sessions[u]) {
      const auto s = static_cast<Index>(c.session_user.size());
      for (const auto& log : session.logs) {
        auto it = artist_index.find(log.artist_id);
        if (it == artist_index.end())
          throw LookupError("artist '" + log.artist_id + "' missing from vocabulary");
        c.log_session.push_back(s);
        c.log_artist.push_back(it->second);
        c.log_time.push_back(log.timestamp);
      }
      c.session_user.push_back(static_cast<Index>(u));
      c.session_log_begin.push_back(static_cast<Index>(c.log_artist.size()));
    }
    c.user_session_begin.push_back(static_cast<Index>(c.session_user.size()));
  }
  return c;
}

Corpus Corpus::from_indices(std::size_t num_artists,
                            const std::vector<std::vector<std::vector<Index>>>& sessions) {
  Corpus c;
  for (std::size_t a = 0; a < num_artists; ++a) c.artist_ids.push_back("a" + std::to_string(a));
  c.user_session_begin.push_back(0);
  c.session_log_begin.push_back(0);
  Timestamp t = 0;
  for (std::size_t u = 0; u < sessions.size(); ++u) {
    c.user_ids.push_back("u" + std::to_string(u));
    for (const auto& session : sessions[u]) {
      const auto s = static_cast<Index>(c.session_user.size());
      for (Index a : session) {
        if (a >= num_artists) throw LookupError("artist index out of range");
        c.log_session.push_back(s);
        c.log_artist.push_back(a);
        c.log_time.push_back(t);
        t += 60;
      }
      t += 3600;
      c.session_user.push_back(static_cast<Index>(u));
      c.session_log_begin.push_back(static_cast<Index>(c.log_artist.size()));
    }
    c.user_session_begin.push_back(static_cast<Index>(c.session_user.size()));
  }
  return c;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void byte(unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u64(s.size());
    for (char ch : s) byte(static_cast<unsigned char>(ch));
  }
};

} // namespace

std::uint64_t Corpus::fingerprint() const {
  Fnv1a f;
  f.u64(user_ids.size());
  for (const auto& s : user_ids) f.str(s);
  f.u64(artist_ids.size());
  for (const auto& s : artist_ids) f.str(s);
  for (Index v : user_session_begin) f.u64(v);
  for (Index v : session_log_begin) f.u64(v);
  for (Index v : log_artist) f.u64(v);
  for (Timestamp v : log_time) f.u64(static_cast<std::uint64_t>(v));
  return f.h;
}

} // namespace swa
