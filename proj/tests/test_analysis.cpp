#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>

#include "oracle.hpp"
#include "swa/analysis.hpp"
#include "swa/errors.hpp"
#include "swa/synth.hpp"
#include "swa/training.hpp"

using namespace swa;

namespace {

struct Fixture {
  std::shared_ptr<const Corpus> corpus;
  ModelState state;
};

Fixture state_from_logs(const std::vector<PlayLog>& logs, std::size_t K = 2) {
  auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(segment_sessions(logs)));
  auto state =
      init_assignments(corpus, Hyperparameters::defaults(K, corpus->num_artists(), Variant::swa), 3);
  return {corpus, std::move(state)};
}

std::vector<PlayLog> random_logs(Rng& rng, std::size_t n, std::size_t users, std::size_t artists) {
  std::vector<PlayLog> logs;
  for (std::size_t i = 0; i < n; ++i)
    logs.push_back(PlayLog{"u" + std::to_string(rng.below(users)),
                           "a" + std::to_string(rng.below(artists)),
                           1356998400 + static_cast<Timestamp>(rng.below(14 * kSecondsPerDay))});
  return logs;
}

LogPosterior random_posterior(Rng& rng, std::size_t n) {
  LogPosterior post;
  for (std::size_t i = 0; i < n; ++i) {
    const double p1 = rng.uniform();
    post.p.push_back({1.0 - p1, p1});
  }
  return post;
}

void expect_well_formed(const AddictionReport& r) {
  for (const auto& e : r.entries) {
    EXPECT_GE(e.taste_ratio, 0.0);
    EXPECT_GE(e.addiction_ratio, 0.0);
    EXPECT_NEAR(e.taste_ratio + e.addiction_ratio, 1.0, 1e-9);
    EXPECT_GT(e.support, 0u);
  }
}

const ReportEntry* find(const AddictionReport& r, const std::string& key) {
  for (const auto& e : r.entries)
    if (e.key == key) return &e;
  return nullptr;
}

} // namespace

TEST(LogPosteriors, NormalizedAndMatchOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    const auto inst = oracle::random_tiny_instance(rng);
    auto corpus = std::make_shared<const Corpus>(Corpus::from_indices(inst.num_artists, inst.sessions));
    auto state = init_assignments(corpus, inst.hp, seed);
    const auto post = compute_log_posteriors(state);
    ASSERT_EQ(post.p.size(), corpus->num_logs());
    for (std::size_t l = 0; l < corpus->num_logs(); ++l) {
      EXPECT_NEAR(post.p[l][0] + post.p[l][1], 1.0, 1e-12);
      const auto want = oracle::exact_x_conditional(*corpus, inst.hp, state.assignments().z,
                                                    state.assignments().x, l);
      EXPECT_NEAR(post.p[l][1], want[1], 1e-9);
    }
  }
}

TEST(LogPosteriors, SessionVariantRejected) {
  auto corpus = std::make_shared<const Corpus>(Corpus::from_indices(2, {{{0, 1}}}));
  auto state = init_assignments(corpus, Hyperparameters::defaults(2, 2, Variant::session), 0);
  EXPECT_THROW(compute_log_posteriors(state), ContractError);
}

TEST(LogPosteriors, AddictionProbabilityMonotoneInGamma) {
  // Log 0 plays artist 0, which the user never plays in addiction mode
  // elsewhere; the other addiction plays keep N_u1 > 0.
  auto corpus = std::make_shared<const Corpus>(Corpus::from_indices(3, {{{0, 1, 2, 1}}}));
  double previous = 1.0;
  for (double gamma : {1.0, 0.1, 0.01, 1e-3, 1e-6}) {
    Hyperparameters hp;
    hp.num_topics = 1;
    hp.gamma = gamma;
    ModelState state(corpus, hp, Assignments{{0}, {0, 1, 1, 1}}, 0);
    const double p1 = compute_log_posteriors(state).p[0][1];
    EXPECT_LT(p1, previous);
    previous = p1;
  }
  EXPECT_LT(previous, 1e-5);
}

TEST(Histogram, BinsAreLeftClosed) {
  const std::vector<double> v = {0.0, 0.05, 0.1, 0.5, 0.9, 0.95, 1.0};
  const auto h = make_histogram(v);
  ASSERT_EQ(h.counts.size(), 10u);
  ASSERT_EQ(h.edges.size(), 11u);
  EXPECT_EQ(h.bin_of(0.1), 1u);
  EXPECT_EQ(h.bin_of(0.0999), 0u);
  EXPECT_EQ(h.bin_of(1.0), 9u);
  EXPECT_EQ(h.counts[0], 2u);
  EXPECT_EQ(h.counts[1], 1u);
  EXPECT_EQ(h.counts[5], 1u);
  EXPECT_EQ(h.counts[9], 3u);
  EXPECT_THROW(make_histogram(v, 1), ConfigError);
}

TEST(UserAddiction, ConstantPopulationFillsFirstBin) {
  PointEstimates est;
  est.hp.num_topics = 1;
  est.user_ids = {"a", "b", "c", "idle"};
  est.lambda0 = {0.95, 0.95, 0.95, 0.5};
  est.lambda1 = {0.05, 0.05, 0.05, 0.5};
  est.user_logs = {10, 3, 1, 0};
  const auto r = user_addiction_report(est);
  ASSERT_EQ(r.report.entries.size(), 3u);
  EXPECT_EQ(r.report.omitted, std::vector<std::string>{"idle"});
  EXPECT_EQ(r.histogram.counts[0], 3u);
  EXPECT_EQ(r.report.entries[0].support, 10u);
  expect_well_formed(r.report);
}

TEST(TemporalReport, SingleLogAndUniformPosteriors) {
  const Timestamp t = *parse_iso8601("2013-01-07T09:30:00Z");
  auto f = state_from_logs({{"u", "a", t}});
  const auto r = temporal_addiction_report(f.state, LogPosterior{{{0.2, 0.8}}}, Period::hour_of_day);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].key, "9");
  EXPECT_DOUBLE_EQ(r.entries[0].taste_ratio, 0.2);
  EXPECT_DOUBLE_EQ(r.entries[0].addiction_ratio, 0.8);
  EXPECT_EQ(r.omitted.size(), 23u);

  const auto w = temporal_addiction_report(f.state, LogPosterior{{{0.2, 0.8}}}, Period::day_of_week);
  ASSERT_EQ(w.entries.size(), 1u);
  EXPECT_EQ(w.entries[0].key, "Mon");

  Rng rng(4);
  auto g = state_from_logs(random_logs(rng, 2000, 5, 10));
  LogPosterior half{std::vector<std::array<double, 2>>(g.corpus->num_logs(), {0.5, 0.5})};
  const auto h = temporal_addiction_report(g.state, half, Period::hour_of_day);
  EXPECT_EQ(h.entries.size(), 24u);
  for (const auto& e : h.entries) EXPECT_DOUBLE_EQ(e.addiction_ratio, 0.5);
}

TEST(TemporalReport, TimezoneShiftRotatesBuckets) {
  Rng rng(5);
  auto f = state_from_logs(random_logs(rng, 1500, 4, 8));
  const auto post = random_posterior(rng, f.corpus->num_logs());
  const auto utc = temporal_addiction_report(f.state, post, Period::hour_of_day);
  const auto plus1 =
      temporal_addiction_report(f.state, post, Period::hour_of_day, UtcOffset::parse("+01:00"));
  expect_well_formed(utc);
  for (const auto& e : utc.entries) {
    const auto* shifted = find(plus1, std::to_string((std::stoi(e.key) + 1) % 24));
    ASSERT_NE(shifted, nullptr);
    EXPECT_DOUBLE_EQ(shifted->addiction_ratio, e.addiction_ratio);
    EXPECT_EQ(shifted->support, e.support);
  }
}

TEST(TemporalReport, DayFilterKeepsOnlyChosenDays) {
  Rng rng(6);
  auto f = state_from_logs(random_logs(rng, 800, 3, 5));
  const auto post = random_posterior(rng, f.corpus->num_logs());
  const auto all = temporal_addiction_report(f.state, post, Period::day_of_week);
  const auto weekend = temporal_addiction_report(f.state, post, Period::day_of_week, {},
                                                 std::set<int>{5, 6});
  ASSERT_EQ(weekend.entries.size(), 2u);
  EXPECT_EQ(weekend.entries[0].key, "Sat");
  EXPECT_EQ(weekend.entries[1].key, "Sun");
  EXPECT_DOUBLE_EQ(weekend.entries[0].addiction_ratio, find(all, "Sat")->addiction_ratio);
}

TEST(ArtistReport, SingletonAndConservation) {
  auto one = state_from_logs({{"u", "solo", 0}});
  const auto r1 = artist_addiction_report(one.state, LogPosterior{{{0.3, 0.7}}});
  ASSERT_EQ(r1.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(r1.entries[0].addiction_ratio, 0.7);
  EXPECT_EQ(r1.entries[0].support, 1u);

  Rng rng(7);
  auto logs = random_logs(rng, 900, 6, 25);
  auto f = state_from_logs(logs);
  const auto post = random_posterior(rng, f.corpus->num_logs());
  const auto r = artist_addiction_report(f.state, post);
  expect_well_formed(r);
  double total = 0;
  std::size_t support = 0;
  for (const auto& e : r.entries) {
    total += e.taste_strength + e.addiction_strength;
    support += e.support;
  }
  EXPECT_NEAR(total, double(f.corpus->num_logs()), 1e-9);
  EXPECT_EQ(support, f.corpus->num_logs());
  EXPECT_THROW(artist_addiction_report(f.state, LogPosterior{}), ContractError);
}

TEST(TopArtists, MatchesFullSortAndTieBreak) {
  PointEstimates est;
  est.hp.num_topics = 1;
  est.artist_ids = {"a", "b", "c", "d", "e"};
  est.phi.assign(5, 0.2);
  auto top = top_artists_for_topic(est, 0, 3);
  EXPECT_EQ(top.artists, (std::vector<Index>{0, 1, 2}));
  EXPECT_FALSE(top.truncated);
  est.phi = {0.025, 0.025, 0.9, 0.025, 0.025};
  top = top_artists_for_topic(est, 0, 9);
  EXPECT_EQ(top.artists.front(), 2u);
  EXPECT_EQ(top.artists.size(), 5u);
  EXPECT_TRUE(top.truncated);
  EXPECT_THROW(top_artists_for_topic(est, 1, 1), LookupError);

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    PointEstimates r;
    r.hp.num_topics = 2;
    const std::size_t A = 1 + rng.below(60);
    r.artist_ids.resize(A);
    for (std::size_t i = 0; i < 2 * A; ++i) r.phi.push_back(double(rng.below(6)) / 8.0);
    const std::size_t n = 1 + rng.below(A + 5);
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<std::pair<double, Index>> all;
      for (std::size_t a = 0; a < A; ++a) all.emplace_back(-r.phi_at(k, a), Index(a));
      std::sort(all.begin(), all.end());
      std::vector<Index> want;
      for (std::size_t i = 0; i < std::min(n, A); ++i) want.push_back(all[i].second);
      EXPECT_EQ(top_artists_for_topic(r, k, n).artists, want);
    }
  }
}

TEST(TopicReport, AveragesPerArtistRatios) {
  // Two topics with disjoint artists; every log of artist a gets a fixed
  // posterior, so topic entries are averages of per-artist ratios.
  auto corpus = std::make_shared<const Corpus>(
      Corpus::from_indices(4, {{{0, 1, 0}, {2, 3}}, {{1, 1}, {3}}}));
  Hyperparameters hp = Hyperparameters::defaults(2, 4, Variant::swa);
  hp.beta = 0.01;
  ModelState state(corpus, hp, Assignments{{0, 1, 0, 1}, {0, 0, 0, 0, 0, 0, 0, 0}}, 0);
  const auto est = estimate_parameters(state);
  const double by_artist[4] = {0.2, 0.4, 0.6, 0.9};
  LogPosterior post;
  for (std::size_t l = 0; l < corpus->num_logs(); ++l) {
    const double p1 = by_artist[corpus->log_artist[l]];
    post.p.push_back({1 - p1, p1});
  }
  const auto r = topic_addiction_report(state, est, post, 2);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].key, "0");
  EXPECT_NEAR(r.entries[0].addiction_ratio, 0.3, 1e-12);
  EXPECT_EQ(r.entries[0].top_artists, (std::vector<std::string>{"a1", "a0"}));
  EXPECT_FALSE(r.entries[0].flagged);
  EXPECT_EQ(r.entries[1].key, "1");
  EXPECT_NEAR(r.entries[1].addiction_ratio, 0.75, 1e-12);
  expect_well_formed(r);

  // Only two artists sit above the floor in each topic.
  const auto wide = topic_addiction_report(state, est, post, 20);
  for (const auto& e : wide.entries) {
    EXPECT_TRUE(e.flagged);
    EXPECT_EQ(e.top_artists.size(), 2u);
  }

  LogPosterior constant{std::vector<std::array<double, 2>>(corpus->num_logs(), {0.4, 0.6})};
  for (const auto& e : topic_addiction_report(state, est, constant).entries)
    EXPECT_NEAR(e.addiction_ratio, 0.6, 1e-12);
}

TEST(Reports, WrittenAsTables) {
  AddictionReport r;
  r.key = ReportKey::topic;
  r.entries.push_back(ReportEntry{"3", 0.25, 0.75, 12, 0, 0, true, {"x", "y"}});
  r.omitted = {"7"};
  const auto path = std::filesystem::temp_directory_path() / "swa_report_test.tsv";
  const std::string prov[] = {"seed=1"};
  write_report(path, r, prov);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text,
            "# seed=1\n# omitted (no support): 7\n"
            "topic\ttaste_ratio\taddiction_ratio\tsupport\tflagged\ttop_artists\n"
            "3\t0.25\t0.75\t12\t1\tx|y\n");
  std::filesystem::remove(path);
}

namespace {

// Trains on a synthetic truth and returns the chain with its posteriors.
struct Trained {
  TrainResult result;
  LogPosterior post;
};

Trained train_on(const GroundTruth& truth, std::size_t K, std::uint64_t sweeps) {
  const auto data = generate_dataset(truth, 17);
  auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(data.dataset));
  TrainOptions opt;
  opt.sweeps = sweeps;
  opt.burn_in = sweeps / 2;
  opt.seed = 9;
  auto result = train(corpus, Hyperparameters::defaults(K, corpus->num_artists(), Variant::swa), opt);
  auto post = compute_log_posteriors(result.state);
  return {std::move(result), std::move(post)};
}

GroundTruth small_truth(std::size_t users, std::size_t artists, std::size_t sessions,
                        std::uint64_t seed) {
  TruthConfig cfg;
  cfg.num_users = users;
  cfg.num_artists = artists;
  cfg.num_topics = 3;
  cfg.sessions_per_user = sessions;
  return sample_ground_truth(cfg, seed);
}

} // namespace

TEST(Recovery, PerUserPosteriorMassTracksLambda) {
  auto truth = small_truth(4, 30, 130, 1);
  const auto t = train_on(truth, 3, 150);
  const auto& c = t.result.state.corpus();
  const auto& est = t.result.estimates;
  std::size_t checked = 0;
  for (std::size_t u = 0; u < c.num_users(); ++u) {
    if (est.user_logs[u] < 500) continue;
    double p0 = 0, p1 = 0;
    for (std::size_t l = 0; l < c.num_logs(); ++l)
      if (c.log_user(l) == u) {
        p0 += t.post.p[l][0];
        p1 += t.post.p[l][1];
      }
    EXPECT_NEAR(p1 / (p0 + p1), est.lambda1[u], 0.05) << c.user_ids[u];
    ++checked;
  }
  EXPECT_GE(checked, 2u);
}

TEST(Recovery, FanDrivenArtistLeansAddiction) {
  // Artist 0 never appears in a topic; half the users are heavy-addiction and
  // put a third of their addiction mass on it.
  GroundTruth truth;
  truth.num_users = 20;
  truth.num_artists = 30;
  truth.num_topics = 3;
  truth.theta.assign(20 * 3, 1.0 / 3);
  truth.phi.assign(3 * 30, 0.0);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t a = 1 + k * 9; a < 1 + (k + 1) * 9 + 2 && a < 30; ++a) truth.phi[k * 30 + a] = 1;
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0;
    for (std::size_t a = 0; a < 30; ++a) s += truth.phi[k * 30 + a];
    for (std::size_t a = 0; a < 30; ++a) truth.phi[k * 30 + a] /= s;
  }
  truth.psi.assign(20 * 30, 0.0);
  for (std::size_t u = 0; u < 20; ++u) {
    Rng rng(u);
    if (u < 10) truth.psi[u * 30] = 1.0 / 3;
    std::vector<std::size_t> favs;
    while (favs.size() < 4) {
      const std::size_t a = 1 + rng.below(29);
      if (std::find(favs.begin(), favs.end(), a) == favs.end()) favs.push_back(a);
    }
    for (std::size_t a : favs) truth.psi[u * 30 + a] = (u < 10 ? 2.0 / 3 : 1.0) / 4;
  }
  truth.lambda1.resize(20);
  for (std::size_t u = 0; u < 20; ++u) truth.lambda1[u] = u < 10 ? 0.9 : 0.1;
  truth.sessions_per_user.assign(20, 40);
  const auto t = train_on(truth, 3, 150);
  const auto r = artist_addiction_report(t.result.state, t.post);
  std::vector<double> ratios;
  for (const auto& e : r.entries) ratios.push_back(e.addiction_ratio);
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  const double median = ratios[ratios.size() / 2];
  const auto* fan = find(r, truth.artist_id(0));
  ASSERT_NE(fan, nullptr);
  EXPECT_GT(fan->addiction_ratio, median);
}

TEST(Recovery, TopicRatiosSpreadOnHeterogeneousData) {
  // Ten topics over disjoint artist blocks. Heavy-addiction users favour
  // topics 0-4 and repeat artists from those blocks; light users the rest.
  const std::size_t U = 60, A = 100, K = 10, block = A / K;
  GroundTruth truth;
  truth.num_users = U;
  truth.num_artists = A;
  truth.num_topics = K;
  truth.phi.assign(K * A, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t a = k * block; a < (k + 1) * block; ++a) truth.phi[k * A + a] = 1.0 / block;
  truth.theta.assign(U * K, 0.0);
  truth.psi.assign(U * A, 0.0);
  truth.lambda1.resize(U);
  for (std::size_t u = 0; u < U; ++u) {
    const bool heavy = u < U / 2;
    const std::size_t first = heavy ? 0 : K / 2;
    for (std::size_t k = first; k < first + K / 2; ++k) truth.theta[u * K + k] = 1.0 / (K / 2);
    const std::size_t fav = (first + u % (K / 2)) * block;
    for (std::size_t a = fav; a < fav + 3; ++a) truth.psi[u * A + a] = 1.0 / 3;
    truth.lambda1[u] = heavy ? 0.8 : 0.1;
  }
  truth.sessions_per_user.assign(U, 25);
  const auto t = train_on(truth, K, 200);
  const auto r = topic_addiction_report(t.result.state, t.result.estimates, t.post);
  ASSERT_GE(r.entries.size(), 2u);
  expect_well_formed(r);
  EXPECT_GT(r.entries.back().addiction_ratio - r.entries.front().addiction_ratio, 0.1);
  for (std::size_t i = 1; i < r.entries.size(); ++i)
    EXPECT_LE(r.entries[i - 1].addiction_ratio, r.entries[i].addiction_ratio);
}
