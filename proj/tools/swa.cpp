// swa: ingest play logs, train session/SWA models, evaluate perplexity,
// run addiction analyses and generate synthetic data.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "swa/analysis.hpp"
#include "swa/errors.hpp"
#include "swa/evaluation.hpp"
#include "swa/ingest.hpp"
#include "swa/io.hpp"
#include "swa/synth.hpp"
#include "swa/training.hpp"

namespace fs = std::filesystem;
using namespace swa;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kFailure = 1, kMissingInput = 2, kInvalidConfig = 3 };

struct MissingInput : Error {
  MissingInput(std::string f, const std::string& path)
      : Error("no such file: " + path), field(std::move(f)), path(path) {}
  std::string field;
  std::string path;
};

void report_error(const std::string& kind, const std::string& field, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!field.empty()) j["field"] = field;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

// Every option is registered with its string storage so the resolved
// configuration can be written into provenance headers.
class Options {
public:
  Options(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {}

  CLI::Option* add(const std::string& flag, std::string& value, const std::string& help) {
    const std::string name = flag.substr(2);
    std::string env = "SWA_";
    for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    entries_.emplace_back(name, &value);
    return app_->add_option(flag, value, help)->envname(env)->capture_default_str();
  }

  CLI::Option* positional(const std::string& name, std::string& value, const std::string& help) {
    entries_.emplace_back(name, &value);
    return app_->add_option(name, value, help);
  }

  std::vector<std::string> provenance() const {
    std::vector<std::string> lines = {std::string("swa ") + kVersion + " " + command_};
    for (const auto& [name, value] : entries_) lines.push_back(name + "=" + *value);
    return lines;
  }

  CLI::App* app() const { return app_; }

private:
  CLI::App* app_;
  std::string command_;
  std::vector<std::pair<std::string, std::string*>> entries_;
};

std::string joined(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::uint64_t to_u64(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end)
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return v;
}

std::size_t to_count(const std::string& field, const std::string& text, std::size_t min) {
  const auto v = to_u64(field, text);
  if (v < min) throw ConfigError(field, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

double to_double(const std::string& field, const std::string& text) {
  try {
    return io::parse_double(text);
  } catch (const Error&) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
}

double to_probability(const std::string& field, const std::string& text) {
  const double v = to_double(field, text);
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
  return v;
}

double to_positive(const std::string& field, const std::string& text) {
  const double v = to_double(field, text);
  if (!(v > 0.0)) throw ConfigError(field, "must be positive");
  return v;
}

std::optional<double> to_optional_positive(const std::string& field, const std::string& text) {
  if (text.empty()) return std::nullopt;
  return to_positive(field, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

UtcOffset to_timezone(const std::string& text) {
  try {
    return UtcOffset::parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("timezone", e.what());
  }
}

Variant to_variant(const std::string& text) {
  try {
    return parse_variant(text);
  } catch (const ConfigError& e) {
    throw ConfigError("variant", e.what());
  }
}

void require_input(const std::string& field, const std::string& path) {
  if (path.empty() || !fs::exists(path)) throw MissingInput(field, path);
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

SessionizedDataset load_sessionized(const std::string& path) {
  auto in = io::open_input(path);
  return read_sessionized(in);
}

// Hyperparameter flags shared by train and eval.
struct HyperFlags {
  std::string alpha, beta, gamma, rho;

  void add(Options& o) {
    o.add("--alpha", alpha, "user-topic Dirichlet concentration (default 1/K)");
    o.add("--beta", beta, "topic-artist Dirichlet concentration (default 50/|A|)");
    o.add("--gamma", gamma, "user-artist Dirichlet concentration (default 50/|A|)");
    o.add("--rho", rho, "taste/addiction Beta concentration (default 0.5)");
  }

  Hyperparameters resolve(std::size_t K, std::size_t num_artists, Variant v) const {
    Hyperparameters hp = Hyperparameters::defaults(K, num_artists, v);
    if (auto a = to_optional_positive("alpha", alpha)) hp.alpha = *a;
    if (auto b = to_optional_positive("beta", beta)) hp.beta = *b;
    if (auto g = to_optional_positive("gamma", gamma)) hp.gamma = *g;
    if (auto r = to_optional_positive("rho", rho)) hp.rho = *r;
    hp.validate();
    return hp;
  }
};

struct SweepFlags {
  std::string sweeps = "1000", burn_in = "800", seed = "0";

  void add(Options& o) {
    o.add("--sweeps", sweeps, "Gibbs sweeps");
    o.add("--burn-in", burn_in, "sweeps excluded from the reported mean log joint");
    o.add("--seed", seed, "master random seed");
  }

  std::uint64_t sweep_count() const {
    const auto n = to_count("sweeps", sweeps, 1);
    if (n <= burn_in_count()) throw ConfigError("burn-in", "must be smaller than --sweeps");
    return n;
  }
  std::uint64_t burn_in_count() const { return to_u64("burn-in", burn_in); }
  std::uint64_t seed_value() const { return to_u64("seed", seed); }
};

class Progress {
public:
  Progress(bool quiet, std::string label, std::uint64_t total)
      : quiet_(quiet), label_(std::move(label)), total_(total) {}

  void operator()(std::uint64_t sweep, const SweepStats& stats) {
    elapsed_ += stats.elapsed;
    if (quiet_) return;
    const std::uint64_t every = std::max<std::uint64_t>(1, total_ / 10);
    if (sweep % every != 0 && sweep != total_) return;
    const double ms = std::chrono::duration<double, std::milli>(elapsed_).count();
    std::lock_guard lock(mutex());
    std::cerr << "[" << label_ << "] sweep " << sweep << "/" << total_ << " log_joint "
              << std::setprecision(10) << stats.log_joint << " (" << std::setprecision(3)
              << ms / static_cast<double>(sweep) << " ms/sweep)\n";
  }

  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }

private:
  bool quiet_;
  std::string label_;
  std::uint64_t total_;
  std::chrono::nanoseconds elapsed_{0};
};

void note(bool quiet, const std::string& text) {
  if (quiet) return;
  std::lock_guard lock(Progress::mutex());
  std::cerr << text << '\n';
}

// ---------------------------------------------------------------- ingest

struct IngestCommand {
  std::string input, format = "lastfm1k", columns, delimiter, timestamp_format,
              gap_minutes = "30", min_users = "3", split_at, out_dir = "out";
  bool quiet = false;

  void attach(Options& o) {
    o.positional("input", input, "raw play-log file");
    o.add("--format", format, "input preset: lastfm1k or generic");
    o.add("--columns", columns, "column overrides, e.g. user=0,timestamp=1,artist=2");
    o.add("--delimiter", delimiter, "field delimiter (single character or 'tab')");
    o.add("--timestamp-format", timestamp_format, "iso8601 or unix");
    o.add("--gap-minutes", gap_minutes, "session gap in minutes");
    o.add("--min-users-per-artist", min_users, "drop artists played by at most this many users");
    o.add("--split-at", split_at, "train/test boundary (ISO-8601 instant); empty = no split");
    o.add("--out-dir", out_dir, "output directory");
    o.app()->add_flag("--quiet", quiet, "suppress progress output");
  }

  int run(const Options& o) const {
    FormatConfig fmt;
    if (format == "lastfm1k") fmt = FormatConfig::lastfm1k();
    else if (format == "generic") fmt = FormatConfig::generic();
    else throw ConfigError("format", "expected 'lastfm1k' or 'generic', got '" + format + "'");
    if (!columns.empty()) fmt.apply_columns(columns);
    if (!delimiter.empty()) {
      if (delimiter == "tab") fmt.delimiter = '\t';
      else if (delimiter.size() == 1) fmt.delimiter = delimiter[0];
      else throw ConfigError("delimiter", "expected one character or 'tab'");
    }
    if (timestamp_format == "iso8601") fmt.timestamp_format = TimestampFormat::iso8601;
    else if (timestamp_format == "unix") fmt.timestamp_format = TimestampFormat::unix_seconds;
    else if (!timestamp_format.empty())
      throw ConfigError("timestamp-format", "expected 'iso8601' or 'unix'");
    const auto gap = static_cast<Timestamp>(to_count("gap-minutes", gap_minutes, 1)) * 60;
    const auto min_users_count = to_count("min-users-per-artist", min_users, 0);
    std::optional<Timestamp> boundary;
    if (!split_at.empty()) {
      boundary = parse_iso8601(split_at);
      if (!boundary) throw ConfigError("split-at", "not an ISO-8601 instant: '" + split_at + "'");
    }
    require_input("input", input);

    auto in = io::open_input(input);
    ParseResult parsed = parse_play_logs(in, fmt);
    note(quiet, "parsed " + std::to_string(parsed.logs.size()) + " logs, " +
                    std::to_string(parsed.malformed) + " malformed lines skipped");
    if (parsed.malformed > 0)
      note(quiet, "first malformed line " + std::to_string(parsed.first_malformed_line) + ": " +
                      parsed.first_malformed_text);

    const auto prov = o.provenance();
    std::vector<std::pair<std::string, SessionizedDataset>> parts;
    std::map<std::string, std::size_t> filtered;
    auto build = [&](const std::string& name, std::vector<PlayLog> logs) {
      auto kept = filter_rare_artists(logs, min_users_count);
      filtered[name] = logs.size() - kept.size();
      parts.emplace_back(name, segment_sessions(kept, gap));
    };
    if (boundary) {
      auto split = split_train_test(parsed.logs, *boundary);
      for (const auto& w : split.warnings) note(quiet, "warning: " + w);
      build("train", std::move(split.train));
      build("test", std::move(split.test));
    } else {
      build("train", std::move(parsed.logs));
    }
    const fs::path dir = out_dir;
    auto summary = io::open_output(dir / "ingest_summary.tsv");
    io::write_provenance(summary, prov);
    summary << "split\tlogs\tfiltered_logs\tusers\tartists\tsessions\n";
    for (const auto& [name, data] : parts) {
      auto out = io::open_output(dir / (name + ".tsv"));
      write_sessionized(out, data, prov);
      if (!out) throw IoError("failed writing " + (dir / (name + ".tsv")).string());
      summary << name << '\t' << data.num_logs() << '\t' << filtered[name] << '\t'
              << data.users.size() << '\t' << data.artists.size() << '\t' << data.num_sessions()
              << '\n';
      note(quiet, name + ": " + std::to_string(data.num_logs()) + " logs, " +
                      std::to_string(data.users.size()) + " users, " +
                      std::to_string(data.artists.size()) + " artists, " +
                      std::to_string(data.num_sessions()) + " sessions");
    }
    summary << "# malformed_lines=" << parsed.malformed << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- train

struct TrainCommand {
  std::string data, topics = "10", variant = "swa", resume, out_dir = "out";
  SweepFlags sweeps;
  HyperFlags hyper;
  bool quiet = false;

  void attach(Options& o) {
    o.positional("data", data, "sessionized training file written by 'swa ingest'");
    o.add("--topics", topics, "number of topics K");
    o.add("--variant", variant, "session or swa");
    sweeps.add(o);
    hyper.add(o);
    o.add("--resume", resume, "continue from this checkpoint up to --sweeps total sweeps");
    o.add("--out-dir", out_dir, "output directory");
    o.app()->add_flag("--quiet", quiet, "suppress progress output");
  }

  int run(const Options& o) const {
    const auto K = to_count("topics", topics, 1);
    const Variant v = to_variant(variant);
    const auto total = sweeps.sweep_count();
    const auto burn_in = sweeps.burn_in_count();
    const auto seed = sweeps.seed_value();
    require_input("data", data);
    if (!resume.empty()) require_input("resume", resume);

    auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(load_sessionized(data)));
    const Hyperparameters hp = hyper.resolve(K, corpus->num_artists(), v);
    std::optional<ModelState> state;
    if (!resume.empty()) {
      auto in = io::open_input(resume);
      state.emplace(load_checkpoint(in, corpus));
      if (!(state->hyperparameters() == hp))
        throw ConfigError("resume", "checkpoint hyperparameters differ from the requested ones");
      if (state->sweeps_done() > total)
        throw ConfigError("sweeps", "checkpoint already has more sweeps than requested");
    } else {
      if (corpus->num_logs() == 0) throw ConfigError("data", "training data has no logs");
      state.emplace(init_assignments(corpus, hp, seed));
    }
    const std::uint64_t start = state->sweeps_done();
    note(quiet, "training K=" + std::to_string(K) + " variant=" + to_string(v) + " on " +
                    std::to_string(corpus->num_logs()) + " logs, " +
                    std::to_string(corpus->num_users()) + " users, " +
                    std::to_string(corpus->num_artists()) + " artists");
    Progress progress(quiet, "train", total);
    const auto trace = run_sweeps(*state, total - start, std::ref(progress));

    const auto prov = o.provenance();
    const fs::path dir = out_dir;
    {
      auto out = io::open_output(dir / "checkpoint.bin");
      save_checkpoint(out, *state, joined(prov));
    }
    write_estimates(dir / "model", estimate_parameters(*state), prov);
    {
      auto out = io::open_output(dir / "trace.tsv");
      io::write_provenance(out, prov);
      out << "sweep\tlog_joint\n";
      for (std::size_t i = 0; i < trace.size(); ++i)
        out << start + i + 1 << '\t' << io::format_double(trace[i]) << '\n';
    }
    {
      auto out = io::open_output(dir / "train_summary.tsv");
      io::write_provenance(out, prov);
      out << "key\tvalue\n";
      out << "sweeps_done\t" << state->sweeps_done() << '\n';
      out << "corpus_fingerprint\t" << hex(corpus->fingerprint()) << '\n';
      out << "final_log_joint\t" << io::format_double(joint_log_prob(*state)) << '\n';
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < trace.size(); ++i)
        if (start + i >= burn_in) sum += trace[i], ++n;
      if (n > 0) out << "post_burn_in_mean_log_joint\t" << io::format_double(sum / double(n)) << '\n';
    }
    return kOk;
  }
};

// ---------------------------------------------------------------- eval

struct EvalCommand {
  std::string train, test, model, topics = "5,10,20,30,40,50,100,200,300", variant = "session,swa",
              jobs = "1", out_dir = "out";
  SweepFlags sweeps;
  HyperFlags hyper;
  bool quiet = false;

  void attach(Options& o) {
    o.add("--train", train, "sessionized training file");
    o.add("--test", test, "sessionized test file");
    o.add("--model", model, "evaluate saved estimates from this directory instead of training");
    o.add("--topics", topics, "comma-separated list of K");
    o.add("--variant", variant, "comma-separated list of variants");
    sweeps.add(o);
    hyper.add(o);
    o.add("--jobs", jobs, "chains trained in parallel");
    o.add("--out-dir", out_dir, "output directory");
    o.app()->add_flag("--quiet", quiet, "suppress progress output");
  }

  struct Row {
    std::size_t K = 0;
    Variant variant = Variant::swa;
    std::uint64_t seed = 0;
    PerplexityResult result;
  };

  int run(const Options& o) const {
    require_input("test", test);
    if (!model.empty()) return run_saved(o);
    std::vector<std::size_t> Ks;
    for (const auto& k : split_list(topics)) Ks.push_back(to_count("topics", k, 1));
    if (Ks.empty()) throw ConfigError("topics", "empty topic list");
    std::vector<Variant> variants;
    for (const auto& v : split_list(variant)) variants.push_back(to_variant(v));
    if (variants.empty()) throw ConfigError("variant", "empty variant list");
    const auto total = sweeps.sweep_count();
    const auto burn_in = sweeps.burn_in_count();
    const auto seed = sweeps.seed_value();
    const auto workers = to_count("jobs", jobs, 1);
    require_input("train", train);

    auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(load_sessionized(train)));
    const auto test_data = load_sessionized(test);
    const auto test_fp = Corpus::from_dataset(test_data).fingerprint();
    for (std::size_t K : Ks) hyper.resolve(K, corpus->num_artists(), Variant::swa);

    std::vector<Row> rows;
    for (std::size_t K : Ks)
      for (Variant v : variants) {
        Row r;
        r.K = K;
        r.variant = v;
        r.seed = Rng::derive_seed(Rng::derive_seed(seed, K), v == Variant::swa ? 1 : 0);
        rows.push_back(r);
      }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(rows.size());
    auto worker = [&] {
      for (std::size_t i; (i = next++) < rows.size();) {
        try {
          Row& r = rows[i];
          TrainOptions opt;
          opt.sweeps = total;
          opt.burn_in = burn_in;
          opt.seed = r.seed;
          Progress progress(quiet, "K=" + std::to_string(r.K) + " " + to_string(r.variant), total);
          opt.on_sweep = std::ref(progress);
          const auto trained =
              swa::train(corpus, hyper.resolve(r.K, corpus->num_artists(), r.variant), opt);
          r.result = perplexity(test_data, trained.estimates);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(workers, rows.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    const auto prov = o.provenance();
    const fs::path dir = out_dir;
    {
      auto out = io::open_output(dir / "perplexity.tsv");
      io::write_provenance(out, prov);
      out << "train_fingerprint\ttest_fingerprint\ttopics\tvariant\tseed\tperplexity\tevaluated"
             "\tskipped_unknown_user\tskipped_unknown_artist\n";
      for (const auto& r : rows)
        out << hex(corpus->fingerprint()) << '\t' << hex(test_fp) << '\t' << r.K << '\t'
            << to_string(r.variant) << '\t' << r.seed << '\t'
            << io::format_double(r.result.perplexity) << '\t' << r.result.evaluated << '\t'
            << r.result.skipped_unknown_user << '\t' << r.result.skipped_unknown_artist << '\n';
    }
    // Wide table: one row per K, one column per variant.
    std::ostringstream table;
    table << "topics";
    for (Variant v : variants) table << '\t' << to_string(v);
    table << '\n';
    for (std::size_t i = 0; i < Ks.size(); ++i) {
      table << Ks[i];
      for (std::size_t j = 0; j < variants.size(); ++j)
        table << '\t' << io::format_double(rows[i * variants.size() + j].result.perplexity);
      table << '\n';
    }
    {
      auto out = io::open_output(dir / "perplexity_table.tsv");
      io::write_provenance(out, prov);
      out << table.str();
    }
    std::cout << table.str();
    return kOk;
  }

  int run_saved(const Options& o) const {
    require_input("model", model);
    const auto est = read_estimates(model);
    const auto test_data = load_sessionized(test);
    const auto r = perplexity(test_data, est);
    const auto prov = o.provenance();
    auto out = io::open_output(fs::path(out_dir) / "perplexity.tsv");
    io::write_provenance(out, prov);
    out << "test_fingerprint\ttopics\tvariant\tperplexity\tevaluated\tskipped_unknown_user"
           "\tskipped_unknown_artist\n";
    out << hex(Corpus::from_dataset(test_data).fingerprint()) << '\t' << est.num_topics() << '\t'
        << to_string(est.hp.variant) << '\t' << io::format_double(r.perplexity) << '\t'
        << r.evaluated << '\t' << r.skipped_unknown_user << '\t' << r.skipped_unknown_artist
        << '\n';
    std::cout << "perplexity\t" << io::format_double(r.perplexity) << '\n';
    return kOk;
  }
};

// ---------------------------------------------------------------- analyze

struct AnalyzeCommand {
  std::string data, checkpoint, timezone = "UTC", days, top_n = "20", bins = "10",
              out_dir = "out";
  bool quiet = false;

  void attach(Options& o) {
    o.positional("data", data, "sessionized training file the model was trained on");
    o.add("--checkpoint", checkpoint, "checkpoint written by 'swa train' (variant=swa)");
    o.add("--timezone", timezone, "fixed UTC offset for hour/weekday buckets");
    o.add("--days", days, "restrict temporal reports to these weekdays, e.g. Mon,Tue or 0,1");
    o.add("--top-n", top_n, "artists per topic in the topic report");
    o.add("--bins", bins, "histogram bins");
    o.add("--out-dir", out_dir, "output directory");
    o.app()->add_flag("--quiet", quiet, "suppress progress output");
  }

  static std::optional<std::set<int>> parse_days(const std::string& text) {
    if (text.empty()) return std::nullopt;
    static const char* names[] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
    std::set<int> out;
    for (auto item : split_list(text)) {
      for (char& c : item) c = static_cast<char>(std::tolower(c));
      int d = -1;
      for (int i = 0; i < 7; ++i)
        if (item == names[i] || item == std::to_string(i)) d = i;
      if (d < 0) throw ConfigError("days", "unknown weekday '" + item + "'");
      out.insert(d);
    }
    return out;
  }

  int run(const Options& o) const {
    const UtcOffset tz = to_timezone(timezone);
    const auto day_filter = parse_days(days);
    const auto n = to_count("top-n", top_n, 1);
    const auto bin_count = to_count("bins", bins, 2);
    require_input("data", data);
    require_input("checkpoint", checkpoint);

    auto corpus = std::make_shared<const Corpus>(Corpus::from_dataset(load_sessionized(data)));
    auto in = io::open_input(checkpoint);
    const ModelState state = load_checkpoint(in, corpus);
    if (state.hyperparameters().variant != Variant::swa)
      throw ConfigError("variant", "analyze needs a checkpoint trained with variant=swa");
    const auto est = estimate_parameters(state);
    const auto post = compute_log_posteriors(state);
    note(quiet, "computed mode posteriors for " + std::to_string(post.p.size()) + " logs");

    const auto prov = o.provenance();
    const fs::path dir = out_dir;
    const auto users = user_addiction_report(est, bin_count);
    write_report(dir / "users.tsv", users.report, prov);
    write_histogram(dir / "users_histogram.tsv", users.histogram, prov);
    write_report(dir / "hours.tsv",
                 temporal_addiction_report(state, post, Period::hour_of_day, tz, day_filter), prov);
    write_report(dir / "weekdays.tsv",
                 temporal_addiction_report(state, post, Period::day_of_week, tz, day_filter),
                 prov);
    const auto artists = artist_addiction_report(state, post);
    write_report(dir / "artists.tsv", artists, prov);
    write_histogram(dir / "artists_histogram.tsv", histogram_of(artists, bin_count), prov);
    write_report(dir / "topics.tsv", topic_addiction_report(state, est, post, n), prov);
    return kOk;
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCommand {
  std::string users = "200", artists = "300", topics = "10", sessions = "20", true_alpha = "0.1",
              true_beta = "0.05", true_gamma = "0.05", lambda_prior = "beta", lambda_a = "0.5",
              lambda_b = "0.5", group_low = "0.05", group_high = "0.95", morning_shift = "0",
              session_length_p = "0.2", max_session_length = "30", timezone = "UTC", seed = "0",
              out_dir = "out";
  bool quiet = false;

  void attach(Options& o) {
    o.add("--users", users, "number of users");
    o.add("--artists", artists, "number of artists");
    o.add("--topics", topics, "true number of topics");
    o.add("--sessions-per-user", sessions, "sessions generated per user");
    o.add("--true-alpha", true_alpha, "Dirichlet concentration of true theta rows");
    o.add("--true-beta", true_beta, "Dirichlet concentration of true phi rows");
    o.add("--true-gamma", true_gamma, "Dirichlet concentration of true psi rows");
    o.add("--lambda-prior", lambda_prior, "beta, two-groups or fixed");
    o.add("--lambda-a", lambda_a, "Beta(a, b) shape a of lambda1");
    o.add("--lambda-b", lambda_b, "Beta(a, b) shape b of lambda1");
    o.add("--group-low", group_low, "lambda1 of the first half of users (two-groups, fixed)");
    o.add("--group-high", group_high, "lambda1 of the second half of users (two-groups)");
    o.add("--morning-shift", morning_shift,
          "add this to lambda1 for local hours 5-11 and subtract it for 17-23");
    o.add("--session-length-p", session_length_p, "geometric session length parameter");
    o.add("--max-session-length", max_session_length, "longest generated session");
    o.add("--timezone", timezone, "fixed UTC offset used by the hour schedule");
    o.add("--seed", seed, "random seed");
    o.add("--out-dir", out_dir, "output directory");
    o.app()->add_flag("--quiet", quiet, "suppress progress output");
  }

  int run(const Options& o) const {
    TruthConfig cfg;
    cfg.num_users = to_count("users", users, 1);
    cfg.num_artists = to_count("artists", artists, 1);
    cfg.num_topics = to_count("topics", topics, 1);
    cfg.sessions_per_user = to_count("sessions-per-user", sessions, 0);
    cfg.alpha = to_positive("true-alpha", true_alpha);
    cfg.beta = to_positive("true-beta", true_beta);
    cfg.gamma = to_positive("true-gamma", true_gamma);
    if (lambda_prior == "beta") cfg.lambda_prior = LambdaPrior::beta;
    else if (lambda_prior == "two-groups") cfg.lambda_prior = LambdaPrior::two_groups;
    else if (lambda_prior == "fixed") cfg.lambda_prior = LambdaPrior::fixed;
    else throw ConfigError("lambda-prior", "expected beta, two-groups or fixed");
    cfg.lambda_a = to_positive("lambda-a", lambda_a);
    cfg.lambda_b = to_positive("lambda-b", lambda_b);
    cfg.group_low = to_probability("group-low", group_low);
    cfg.group_high = to_probability("group-high", group_high);
    cfg.session_length_p = to_double("session-length-p", session_length_p);
    if (!(cfg.session_length_p > 0.0 && cfg.session_length_p <= 1.0))
      throw ConfigError("session-length-p", "must lie in (0, 1]");
    cfg.max_session_length = to_count("max-session-length", max_session_length, 1);
    const double shift = to_double("morning-shift", morning_shift);
    const UtcOffset tz = to_timezone(timezone);
    const auto s = to_u64("seed", seed);

    GroundTruth truth = sample_ground_truth(cfg, s);
    truth.timezone = tz;
    if (shift != 0.0) truth.hour_lambda_shift = morning_schedule(shift);
    const auto data = generate_dataset(truth, Rng::derive_seed(s, 100));
    write_synthetic(out_dir, truth, data, o.provenance());
    note(quiet, "generated " + std::to_string(data.dataset.num_logs()) + " logs in " +
                    std::to_string(data.dataset.num_sessions()) + " sessions for " +
                    std::to_string(data.dataset.users.size()) + " users");
    return kOk;
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infer taste- vs. addiction-driven song selection from play logs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  IngestCommand ingest;
  TrainCommand train_cmd;
  EvalCommand eval;
  AnalyzeCommand analyze;
  SimulateCommand simulate;
  Options ingest_opts(app.add_subcommand("ingest", "parse, filter, split and sessionize play logs"),
                      "ingest");
  Options train_opts(app.add_subcommand("train", "fit a session or SWA model by Gibbs sampling"),
                     "train");
  Options eval_opts(app.add_subcommand("eval", "test-set perplexity over a grid of K and variants"),
                    "eval");
  Options analyze_opts(app.add_subcommand("analyze", "addiction-ratio reports of a trained model"),
                       "analyze");
  Options simulate_opts(app.add_subcommand("simulate", "generate synthetic play logs with known truth"),
                        "simulate");
  ingest.attach(ingest_opts);
  train_cmd.attach(train_opts);
  eval.attach(eval_opts);
  analyze.attach(analyze_opts);
  simulate.attach(simulate_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("invalid_config", "arguments", e.what());
    return kInvalidConfig;
  }

  try {
    if (ingest_opts.app()->parsed()) return ingest.run(ingest_opts);
    if (train_opts.app()->parsed()) return train_cmd.run(train_opts);
    if (eval_opts.app()->parsed()) return eval.run(eval_opts);
    if (analyze_opts.app()->parsed()) return analyze.run(analyze_opts);
    if (simulate_opts.app()->parsed()) return simulate.run(simulate_opts);
  } catch (const MissingInput& e) {
    report_error("missing_input", e.field, e.what());
    return kMissingInput;
  } catch (const ConfigError& e) {
    report_error("invalid_config", e.field, e.what());
    return kInvalidConfig;
  } catch (const FormatError& e) {
    report_error("format", "", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    report_error("failure", "", e.what());
    return kFailure;
  }
  return kFailure;
}
