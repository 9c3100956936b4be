// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "swa/analysis.hpp"
#include "swa/evaluation.hpp"
#include "swa/ingest.hpp"
#include "swa/synth.hpp"
#include "swa/training.hpp"

namespace fs = std::filesystem;
using namespace swa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ------------------------------------------------------------ shared data

struct Split {
  SessionizedDataset train, test;
};

// One continuous stream per user, split in time, then filtered and
// sessionized per split.
Split make_split(const GroundTruth& truth, std::uint64_t seed, Timestamp boundary) {
  const auto data = generate_dataset(truth, seed);
  const auto split = split_train_test(data.dataset.all_logs(), boundary);
  return {segment_sessions(filter_rare_artists(split.train, 3)),
          segment_sessions(filter_rare_artists(split.test, 3))};
}

constexpr Timestamp kBoundary = 1356998400 + 10 * kSecondsPerDay; // 2013-01-11

TrainResult fit(const SessionizedDataset& train_data, std::size_t K, Variant v, std::uint64_t seed,
                std::uint64_t sweeps = 1000, std::uint64_t burn_in = 800) {
  auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(train_data));
  TrainOptions opt;
  opt.sweeps = sweeps;
  opt.burn_in = burn_in;
  opt.seed = seed;
  return train(corpus, Hyperparameters::defaults(K, corpus->num_artists(), v), opt);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = 0.5 * double(i + j) + 1.0;
    i = j + 1;
  }
  return rank;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Estimates collected from the trained chains for the normalization check.
std::vector<PointEstimates> g_trained;

// The two-group model is shared by criteria 4 and 6.
struct TwoGroupRun {
  GroundTruth truth;
  SessionizedDataset data;
  PointEstimates est;
};
std::unique_ptr<TwoGroupRun> g_two_groups;

const TwoGroupRun& two_group_run() {
  if (!g_two_groups) {
    TruthConfig cfg;
    cfg.lambda_prior = LambdaPrior::two_groups;
    cfg.sessions_per_user = 40;
    auto run = std::make_unique<TwoGroupRun>();
    run->truth = sample_ground_truth(cfg, 404);
    run->data = generate_dataset(run->truth, 405).dataset;
    run->est = fit(run->data, 10, Variant::swa, 406).estimates;
    g_trained.push_back(run->est);
    g_two_groups = std::move(run);
  }
  return *g_two_groups;
}

// ------------------------------------------------------------ criteria

Outcome oracle_equivalence() {
  double max_diff = 0.0;
  std::size_t instances = 0, states = 0, freq_failures = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed * 7919 + 1);
    const Variant v = seed % 4 == 3 ? Variant::session : Variant::swa;
    const auto inst = oracle::random_tiny_instance(rng, v);
    auto corpus =
        std::make_shared<const Corpus>(Corpus::from_indices(inst.num_artists, inst.sessions));
    ++instances;
    auto state = init_assignments(corpus, inst.hp, seed);
    for (int step = 0; step < 5; ++step, gibbs_sweep(state)) {
      ++states;
      const auto& asg = state.assignments();
      for (std::size_t s = 0; s < corpus->num_sessions(); ++s) {
        const auto got = topic_conditional(state, s);
        const auto want = oracle::exact_topic_conditional(*corpus, inst.hp, asg.z, asg.x, s);
        for (std::size_t k = 0; k < got.size(); ++k)
          max_diff = std::max(max_diff, std::abs(got[k] - want[k]));
      }
      if (v == Variant::swa)
        for (std::size_t l = 0; l < corpus->num_logs(); ++l) {
          const auto got = x_conditional(state, l);
          const auto want = oracle::exact_x_conditional(*corpus, inst.hp, asg.z, asg.x, l);
          max_diff = std::max({max_diff, std::abs(got[0] - want[0]), std::abs(got[1] - want[1])});
        }
    }
    // The samplers draw from those conditionals: empirical frequencies of
    // repeated draws from a fixed state stay within 5 standard errors.
    if (seed < 8) {
      const std::size_t draws = 20000;
      const std::size_t s = 0;
      const auto want = oracle::exact_topic_conditional(*corpus, inst.hp, state.assignments().z,
                                                        state.assignments().x, s);
      std::vector<double> hits(inst.hp.num_topics, 0.0);
      Rng draw_rng(seed);
      ModelState probe = state;
      for (std::size_t i = 0; i < draws; ++i) hits[sample_topic(probe, s, draw_rng)] += 1;
      for (std::size_t k = 0; k < hits.size(); ++k) {
        const double se = std::sqrt(double(draws) * want[k] * (1 - want[k])) + 1e-12;
        if (std::abs(hits[k] - double(draws) * want[k]) > 5 * se) ++freq_failures;
      }
      if (v == Variant::swa) {
        const std::size_t l = corpus->num_logs() - 1;
        const auto wx = oracle::exact_x_conditional(*corpus, inst.hp, probe.assignments().z,
                                                    probe.assignments().x, l);
        double ones = 0;
        for (std::size_t i = 0; i < draws; ++i) ones += sample_x(probe, l, draw_rng);
        const double se = std::sqrt(double(draws) * wx[1] * (1 - wx[1])) + 1e-12;
        if (std::abs(ones - double(draws) * wx[1]) > 5 * se) ++freq_failures;
      }
    }
  }
  return {max_diff <= 1e-9 && instances >= 20 && freq_failures == 0,
          std::to_string(instances) + " instances, " + std::to_string(states) +
              " states, max |diff| = " + fmt(max_diff, 3) + " (tolerance 1e-9), " +
              std::to_string(freq_failures) + " sampler frequency deviations"};
}

Outcome count_fuzz() {
  std::size_t ops = 0, mismatches = 0, sweeps = 0;
  Rng rng(2024);
  const std::size_t target = 10000;
  while (ops < target) {
    // Fresh random corpus and variant every 500 operations.
    const std::size_t A = 1 + rng.below(12);
    std::vector<std::vector<std::vector<Index>>> sessions(1 + rng.below(6));
    for (auto& user : sessions) {
      const std::size_t n = 1 + rng.below(5);
      for (std::size_t r = 0; r < n; ++r) {
        std::vector<Index> s(1 + rng.below(6));
        for (auto& a : s) a = static_cast<Index>(rng.below(A));
        user.push_back(s);
      }
    }
    auto corpus = std::make_shared<const Corpus>(Corpus::from_indices(A, sessions));
    Hyperparameters hp;
    hp.num_topics = 1 + rng.below(5);
    hp.alpha = 0.05 + rng.uniform();
    hp.beta = 0.05 + rng.uniform();
    hp.gamma = 0.05 + rng.uniform();
    hp.rho = 0.05 + rng.uniform();
    hp.variant = rng.bernoulli(0.5) ? Variant::swa : Variant::session;
    auto state = init_assignments(corpus, hp, rng.below(1u << 30));
    const bool swa = hp.variant == Variant::swa;
    for (std::size_t i = 0; i < 500 && ops < target; ++i, ++ops) {
      const std::size_t S = corpus->num_sessions(), L = corpus->num_logs();
      switch (rng.below(7)) {
      case 0: { // remove and re-add a session under a random topic
        const std::size_t s = rng.below(S);
        state.detach_session(s);
        state.attach_session(s, static_cast<std::uint32_t>(rng.below(hp.num_topics)));
        break;
      }
      case 1: { // remove and re-add a log under a random flag
        const std::size_t l = rng.below(L);
        state.detach_log(l);
        state.attach_log(l, swa ? static_cast<std::uint8_t>(rng.below(2)) : 0);
        break;
      }
      case 2:
        state.set_topic(rng.below(S), static_cast<std::uint32_t>(rng.below(hp.num_topics)));
        break;
      case 3:
        if (swa) state.set_x(rng.below(L), static_cast<std::uint8_t>(rng.below(2)));
        break;
      case 4: sample_topic(state, rng.below(S), state.rng()); break;
      case 5:
        if (swa) sample_x(state, rng.below(L), state.rng());
        break;
      case 6:
        gibbs_sweep(state);
        ++sweeps;
        break;
      }
      if (!(state.counts() == recount(*corpus, hp.num_topics, state.assignments()))) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(ops) + " operations (" + std::to_string(sweeps) +
                               " sweeps), " + std::to_string(mismatches) + " mismatches"};
}

Outcome perplexity_ordering() {
  TruthConfig cfg; // 200 users, 300 artists, K = 10, lambda1 ~ Beta(0.5, 0.5)
  cfg.sessions_per_user = 30;
  const auto truth = sample_ground_truth(cfg, 303);
  const auto split = make_split(truth, 304, kBoundary);
  bool pass = true;
  std::string detail = std::to_string(split.train.num_logs()) + " train / " +
                       std::to_string(split.test.num_logs()) + " test logs;";
  for (std::size_t K : {5, 10, 20}) {
    const auto session = fit(split.train, K, Variant::session, 10 + K);
    const auto swa = fit(split.train, K, Variant::swa, 10 + K);
    g_trained.push_back(session.estimates);
    g_trained.push_back(swa.estimates);
    const double ps = perplexity(split.test, session.estimates).perplexity;
    const double pw = perplexity(split.test, swa.estimates).perplexity;
    const double gain = (ps - pw) / ps;
    pass = pass && gain >= 0.01;
    detail += " K=" + std::to_string(K) + ": session " + fmt(ps, 5) + ", swa " + fmt(pw, 5) +
              " (" + fmt(100 * gain, 3) + "% lower);";
  }
  detail.pop_back();
  return {pass, detail};
}

Outcome lambda_recovery() {
  const auto& run = two_group_run();
  std::vector<double> truth, learned;
  double low_sum = 0, high_sum = 0;
  std::size_t low_n = 0, high_n = 0;
  std::int64_t min_logs = std::numeric_limits<std::int64_t>::max();
  for (std::size_t u = 0; u < run.est.num_users(); ++u) {
    const auto& id = run.est.user_ids[u];
    const std::size_t t = std::stoul(id.substr(1));
    const double true_l = run.truth.lambda1[t];
    truth.push_back(true_l);
    learned.push_back(run.est.lambda1[u]);
    min_logs = std::min(min_logs, run.est.user_logs[u]);
    if (true_l < 0.5) low_sum += run.est.lambda1[u], ++low_n;
    else high_sum += run.est.lambda1[u], ++high_n;
  }
  const double low = low_sum / double(low_n), high = high_sum / double(high_n);
  const double rho = spearman(truth, learned);
  return {min_logs >= 100 && high - low > 0.3 && rho > 0.7,
          "min logs/user " + std::to_string(min_logs) + ", group means " + fmt(low) + " vs " +
              fmt(high) + " (gap " + fmt(high - low) + " > 0.3), Spearman " + fmt(rho) + " > 0.7"};
}

Outcome degeneracy() {
  TruthConfig cfg;
  cfg.lambda_prior = LambdaPrior::fixed;
  cfg.group_low = 0.0;
  cfg.sessions_per_user = 30;
  const auto truth = sample_ground_truth(cfg, 505);
  const auto split = make_split(truth, 506, kBoundary);
  const auto swa = fit(split.train, 10, Variant::swa, 507);
  const auto session = fit(split.train, 10, Variant::session, 507);
  g_trained.push_back(swa.estimates);
  g_trained.push_back(session.estimates);
  const auto& l1 = swa.estimates.lambda1;
  const double mean = std::accumulate(l1.begin(), l1.end(), 0.0) / double(l1.size());
  const double pw = perplexity(split.test, swa.estimates).perplexity;
  const double ps = perplexity(split.test, session.estimates).perplexity;
  const double rel = std::abs(ps - pw) / pw;
  return {mean < 0.25 && rel <= 0.05,
          "mean lambda1 " + fmt(mean) + " < 0.25; perplexity session " + fmt(ps, 5) + " vs swa " +
              fmt(pw, 5) + " (" + fmt(100 * rel, 3) + "% apart, limit 5%)"};
}

Outcome analysis_fidelity() {
  TruthConfig cfg;
  cfg.lambda_prior = LambdaPrior::fixed;
  cfg.group_low = 0.5;
  cfg.sessions_per_user = 30;
  auto truth = sample_ground_truth(cfg, 606);
  truth.hour_lambda_shift = morning_schedule(0.4);
  const auto data = generate_dataset(truth, 607).dataset;
  const auto trained = fit(data, 10, Variant::swa, 608);
  g_trained.push_back(trained.estimates);
  const auto post = compute_log_posteriors(trained.state);
  const auto hours = temporal_addiction_report(trained.state, post, Period::hour_of_day);
  double morning_min = 1, evening_max = 0;
  for (const auto& e : hours.entries) {
    const int h = std::stoi(e.key);
    if (h >= 5 && h <= 11) morning_min = std::min(morning_min, e.addiction_ratio);
    if (h >= 17 && h <= 23) evening_max = std::max(evening_max, e.addiction_ratio);
  }
  const bool temporal = hours.entries.size() == 24 && morning_min > evening_max;

  const auto& run = two_group_run();
  const auto users = user_addiction_report(run.est);
  const auto& counts = users.histogram.counts;
  const double total = double(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double extreme = double(counts.front() + counts.back()) / total;
  return {temporal && extreme > 0.5,
          "hour buckets " + std::to_string(hours.entries.size()) +
              ", lowest morning (05-11) addiction ratio " + fmt(morning_min) +
              " vs highest evening (17-23) " + fmt(evening_max) + "; extreme lambda1 bins hold " +
              fmt(100 * extreme, 3) + "% of users (> 50%)"};
}

Outcome normalization() {
  // Chains trained by earlier criteria plus a few short random ones.
  std::vector<PointEstimates> all = g_trained;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    TruthConfig cfg;
    cfg.num_users = 30;
    cfg.num_artists = 40 + 10 * seed;
    cfg.num_topics = 4;
    cfg.sessions_per_user = 6;
    const auto data = generate_dataset(sample_ground_truth(cfg, seed), seed).dataset;
    all.push_back(fit(data, 1 + seed, seed % 2 ? Variant::session : Variant::swa, seed, 30, 10).estimates);
  }
  double worst = 0.0;
  for (const auto& est : all) {
    const std::size_t K = est.num_topics(), A = est.num_artists();
    for (std::size_t u = 0; u < est.num_users(); ++u) {
      double t = 0, p = 0;
      for (std::size_t k = 0; k < K; ++k) t += est.theta_at(u, k);
      for (std::size_t a = 0; a < A; ++a) p += est.psi_at(u, static_cast<Index>(a));
      worst = std::max({worst, std::abs(t - 1), std::abs(p - 1),
                        std::abs(est.lambda0[u] + est.lambda1[u] - 1)});
    }
    for (std::size_t k = 0; k < K; ++k) {
      double f = 0;
      for (std::size_t a = 0; a < A; ++a) f += est.phi_at(k, a);
      worst = std::max(worst, std::abs(f - 1));
    }
  }
  // Uniform predictor: K = 1, phi = 1/|A|, lambda = (1, 0).
  const std::size_t A = 300;
  PointEstimates uniform;
  uniform.hp.num_topics = 1;
  uniform.user_ids = {"u0", "u1", "u2"};
  for (std::size_t a = 0; a < A; ++a) uniform.artist_ids.push_back("a" + std::to_string(a));
  uniform.theta.assign(3, 1.0);
  uniform.phi.assign(A, 1.0 / double(A));
  uniform.phi_floor = {1.0 / double(A)};
  uniform.psi_floor.assign(3, 1.0 / double(A));
  uniform.psi_entries.assign(3, {});
  uniform.lambda0.assign(3, 1.0);
  uniform.lambda1.assign(3, 0.0);
  uniform.user_logs.assign(3, 0);
  uniform.index_ids();
  Rng rng(7);
  std::vector<PlayLog> logs;
  for (int i = 0; i < 5000; ++i)
    logs.push_back({"u" + std::to_string(rng.below(3)), "a" + std::to_string(rng.below(A)),
                    static_cast<Timestamp>(rng.below(30 * kSecondsPerDay))});
  const double ppl = perplexity(segment_sessions(logs), uniform).perplexity;
  return {worst <= 1e-9 && std::abs(ppl - double(A)) <= 1e-6,
          std::to_string(all.size()) + " trained estimate sets, worst row-sum error " +
              fmt(worst, 3) + " (<= 1e-9); uniform perplexity " + fmt(ppl, 12) + " vs |A| = " +
              std::to_string(A)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Byte-compares two directory trees; returns the number of files compared or
// -1 on any difference.
long compare_trees(const fs::path& a, const fs::path& b, std::string& diff) {
  long files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) {
      diff = rel.string();
      return -1;
    }
    ++files;
  }
  return files;
}

void library_pipeline(const fs::path& dir) {
  TruthConfig cfg;
  cfg.num_users = 60;
  cfg.num_artists = 80;
  cfg.num_topics = 5;
  cfg.sessions_per_user = 12;
  const auto data = generate_dataset(sample_ground_truth(cfg, 808), 809).dataset;
  auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(data));
  TrainOptions opt;
  opt.sweeps = 200;
  opt.burn_in = 100;
  opt.seed = 810;
  const auto r = train(corpus, Hyperparameters::defaults(5, corpus->num_artists(), Variant::swa), opt);
  const std::vector<std::string> prov = {"acceptance determinism run"};
  {
    auto out = std::ofstream(dir / "checkpoint.bin", std::ios::binary);
    save_checkpoint(out, r.state, "acceptance");
  }
  write_estimates(dir / "model", r.estimates, prov);
  const auto post = compute_log_posteriors(r.state);
  write_report(dir / "users.tsv", user_addiction_report(r.estimates).report, prov);
  write_report(dir / "hours.tsv", temporal_addiction_report(r.state, post, Period::hour_of_day), prov);
  write_report(dir / "artists.tsv", artist_addiction_report(r.state, post), prov);
  write_report(dir / "topics.tsv", topic_addiction_report(r.state, r.estimates, post), prov);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "swa_acceptance_determinism";
  fs::remove_all(root);
  std::string diff;
  long lib_files = 0, cli_files = 0;
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / "lib" / run);
    library_pipeline(root / "lib" / run);
  }
  lib_files = compare_trees(root / "lib" / "a", root / "lib" / "b", diff);

#ifdef SWA_CLI_PATH
  // The same through the command line: simulate, ingest, train, analyze,
  // each run writing into the same directory names.
  const std::string cli = SWA_CLI_PATH;
  bool cli_ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path work = root / "cli" / run;
    fs::create_directories(work);
    const std::string cd = "cd '" + work.string() + "' && ";
    const std::string q = " --quiet";
    const std::string cmds[] = {
        cli + " simulate --users 40 --artists 60 --topics 4 --sessions-per-user 10 --seed 5 --out-dir sim" + q,
        cli + " ingest sim/logs.tsv --format generic --out-dir data" + q,
        cli + " train data/train.tsv --topics 4 --sweeps 100 --burn-in 50 --seed 6 --out-dir model" + q,
        cli + " analyze data/train.tsv --checkpoint model/checkpoint.bin --out-dir reports" + q};
    for (const auto& c : cmds)
      if (std::system((cd + c).c_str()) != 0) cli_ok = false;
  }
  if (cli_ok && lib_files >= 0)
    cli_files = compare_trees(root / "cli" / "a", root / "cli" / "b", diff);
  const bool pass = cli_ok && lib_files > 0 && cli_files > 0;
#else
  const bool pass = lib_files > 0;
#endif
  fs::remove_all(root);
  return {pass, "library run: " + std::to_string(std::max(lib_files, 0L)) +
                    " identical files; CLI run: " + std::to_string(std::max(cli_files, 0L)) +
                    " identical files" + (diff.empty() ? "" : "; first difference in " + diff)};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", 60, oracle_equivalence},
      {2, "count-consistency fuzz", 60, count_fuzz},
      {3, "perplexity ordering", 900, perplexity_ordering},
      {4, "lambda recovery", 600, lambda_recovery},
      {5, "degeneracy", 600, degeneracy},
      {6, "analysis pipeline fidelity", 600, analysis_fidelity},
      {7, "estimator normalization", 60, normalization},
      {8, "determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " " << c.name << ": "
              << o.detail << " [" << fmt(secs, 3) << " s, limit " << c.limit_seconds << " s"
              << (in_time ? "" : ", over time") << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
