#include "swa/analysis.hpp"

#include <algorithm>
#include <numeric>

#include "swa/errors.hpp"
#include "swa/io.hpp"

namespace swa {

namespace {

constexpr const char* kWeekdays[7] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

struct Strength {
  double p0 = 0.0;
  double p1 = 0.0;
  std::size_t n = 0;
};

ReportEntry normalized_entry(std::string key, const Strength& s) {
  ReportEntry e;
  e.key = std::move(key);
  e.taste_strength = s.p0;
  e.addiction_strength = s.p1;
  const double total = s.p0 + s.p1;
  e.taste_ratio = s.p0 / total;
  e.addiction_ratio = s.p1 / total;
  e.support = s.n;
  return e;
}

std::vector<Strength> artist_strengths(const ModelState& state, const LogPosterior& post) {
  const Corpus& c = state.corpus();
  std::vector<Strength> by_artist(c.num_artists());
  for (std::size_t l = 0; l < c.num_logs(); ++l) {
    auto& s = by_artist[c.log_artist[l]];
    s.p0 += post.p[l][0];
    s.p1 += post.p[l][1];
    ++s.n;
  }
  return by_artist;
}

void check_posteriors(const ModelState& state, const LogPosterior& post) {
  if (post.p.size() != state.corpus().num_logs())
    throw ContractError("posteriors do not match the model's logs");
}

} // namespace

LogPosterior compute_log_posteriors(const ModelState& state) {
  if (state.hyperparameters().variant != Variant::swa)
    throw ContractError("log posteriors require variant=swa");
  LogPosterior post;
  post.p.resize(state.corpus().num_logs());
  for (std::size_t l = 0; l < post.p.size(); ++l) post.p[l] = x_conditional(state, l);
  return post;
}

std::string to_string(ReportKey key) {
  switch (key) {
  case ReportKey::user: return "user";
  case ReportKey::artist: return "artist";
  case ReportKey::topic: return "topic";
  case ReportKey::hour_of_day: return "hour";
  case ReportKey::day_of_week: return "weekday";
  }
  return "?";
}

std::size_t Histogram::bin_of(double value) const {
  const std::size_t bins = counts.size();
  // Largest i with edges[i] <= value; the last bin is closed on the right.
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(bins), value) -
      edges.begin());
  if (i == 0) return 0;
  return std::min(i - 1, bins - 1);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw ConfigError("bins", "at least 2 bins required");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

Histogram histogram_of(const AddictionReport& report, std::size_t bins) {
  std::vector<double> v;
  v.reserve(report.entries.size());
  for (const auto& e : report.entries) v.push_back(e.addiction_ratio);
  return make_histogram(v, bins);
}

UserAddiction user_addiction_report(const PointEstimates& est, std::size_t bins) {
  UserAddiction out;
  out.report.key = ReportKey::user;
  std::vector<double> lambdas;
  for (std::size_t u = 0; u < est.num_users(); ++u) {
    if (est.user_logs[u] <= 0) {
      out.report.omitted.push_back(est.user_ids[u]);
      continue;
    }
    ReportEntry e;
    e.key = est.user_ids[u];
    e.taste_ratio = est.lambda0[u];
    e.addiction_ratio = est.lambda1[u];
    e.support = static_cast<std::size_t>(est.user_logs[u]);
    out.report.entries.push_back(std::move(e));
    lambdas.push_back(est.lambda1[u]);
  }
  out.histogram = make_histogram(lambdas, bins);
  return out;
}

AddictionReport temporal_addiction_report(const ModelState& state, const LogPosterior& post,
                                          Period period, UtcOffset tz,
                                          const std::optional<std::set<int>>& days) {
  check_posteriors(state, post);
  const Corpus& c = state.corpus();
  const std::size_t buckets = period == Period::hour_of_day ? 24 : 7;
  std::vector<Strength> acc(buckets);
  for (std::size_t l = 0; l < c.num_logs(); ++l) {
    const Timestamp t = c.log_time[l];
    if (days && !days->contains(tz.day_of_week(t))) continue;
    const int b = period == Period::hour_of_day ? tz.hour_of_day(t) : tz.day_of_week(t);
    auto& s = acc[static_cast<std::size_t>(b)];
    s.p0 += post.p[l][0];
    s.p1 += post.p[l][1];
    ++s.n;
  }
  AddictionReport report;
  report.key = period == Period::hour_of_day ? ReportKey::hour_of_day : ReportKey::day_of_week;
  for (std::size_t b = 0; b < buckets; ++b) {
    std::string key = period == Period::hour_of_day ? std::to_string(b) : kWeekdays[b];
    if (acc[b].n == 0) report.omitted.push_back(std::move(key));
    else report.entries.push_back(normalized_entry(std::move(key), acc[b]));
  }
  return report;
}

AddictionReport artist_addiction_report(const ModelState& state, const LogPosterior& post) {
  check_posteriors(state, post);
  const auto strengths = artist_strengths(state, post);
  AddictionReport report;
  report.key = ReportKey::artist;
  const auto& ids = state.corpus().artist_ids;
  for (std::size_t a = 0; a < strengths.size(); ++a) {
    if (strengths[a].n == 0) report.omitted.push_back(ids[a]);
    else report.entries.push_back(normalized_entry(ids[a], strengths[a]));
  }
  return report;
}

TopArtists top_artists_for_topic(const PointEstimates& est, std::size_t topic, std::size_t n) {
  if (topic >= est.num_topics()) throw LookupError("topic out of range");
  const std::size_t A = est.num_artists();
  TopArtists out;
  out.truncated = n > A;
  const std::size_t take = std::min(n, A);
  std::vector<Index> order(A);
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](Index a, Index b) {
                      const double pa = est.phi_at(topic, a), pb = est.phi_at(topic, b);
                      return pa != pb ? pa > pb : a < b;
                    });
  order.resize(take);
  out.artists = std::move(order);
  return out;
}

AddictionReport topic_addiction_report(const ModelState& state, const PointEstimates& est,
                                       const LogPosterior& post, std::size_t top_n) {
  check_posteriors(state, post);
  if (top_n < 1) throw ConfigError("top_n", "must be at least 1");
  const auto strengths = artist_strengths(state, post);
  AddictionReport report;
  report.key = ReportKey::topic;
  for (std::size_t k = 0; k < est.num_topics(); ++k) {
    const TopArtists top = top_artists_for_topic(est, k, top_n);
    ReportEntry e;
    e.key = std::to_string(k);
    double taste = 0.0, addiction = 0.0;
    std::size_t used = 0;
    for (Index a : top.artists) {
      // Artists at the smoothing floor have no taste-mode plays in this topic.
      if (!(est.phi_at(k, a) > est.phi_floor[k])) break;
      const Strength& s = strengths[a];
      if (s.n == 0) continue;
      taste += s.p0 / (s.p0 + s.p1);
      addiction += s.p1 / (s.p0 + s.p1);
      e.support += s.n;
      e.top_artists.push_back(est.artist_ids[a]);
      ++used;
    }
    if (used == 0) {
      report.omitted.push_back(e.key);
      continue;
    }
    e.flagged = used < top_n;
    e.taste_strength = taste / static_cast<double>(used);
    e.addiction_strength = addiction / static_cast<double>(used);
    const double total = e.taste_strength + e.addiction_strength;
    e.taste_ratio = e.taste_strength / total;
    e.addiction_ratio = e.addiction_strength / total;
    report.entries.push_back(std::move(e));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const ReportEntry& a, const ReportEntry& b) {
                     return a.addiction_ratio < b.addiction_ratio;
                   });
  return report;
}

void write_report(const std::filesystem::path& path, const AddictionReport& report,
                  std::span<const std::string> provenance) {
  auto out = io::open_output(path);
  io::write_provenance(out, provenance);
  for (const auto& key : report.omitted) out << "# omitted (no support): " << key << '\n';
  const bool topic = report.key == ReportKey::topic;
  out << to_string(report.key) << "\ttaste_ratio\taddiction_ratio\tsupport";
  if (topic) out << "\tflagged\ttop_artists";
  out << '\n';
  for (const auto& e : report.entries) {
    out << e.key << '\t' << io::format_double(e.taste_ratio) << '\t'
        << io::format_double(e.addiction_ratio) << '\t' << e.support;
    if (topic) {
      out << '\t' << (e.flagged ? 1 : 0) << '\t';
      for (std::size_t i = 0; i < e.top_artists.size(); ++i)
        out << (i ? "|" : "") << e.top_artists[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_histogram(const std::filesystem::path& path, const Histogram& hist,
                     std::span<const std::string> provenance) {
  auto out = io::open_output(path);
  io::write_provenance(out, provenance);
  out << "bin_low\tbin_high\tcount\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out << io::format_double(hist.edges[i]) << '\t' << io::format_double(hist.edges[i + 1]) << '\t'
        << hist.counts[i] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

} // namespace swa
