#include "swa/training.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "swa/errors.hpp"

namespace swa {

std::vector<double> run_sweeps(
    ModelState& state, std::uint64_t sweeps,
    const std::function<void(std::uint64_t, const SweepStats&)>& on_sweep) {
  std::vector<double> trace;
  trace.reserve(sweeps);
  for (std::uint64_t i = 0; i < sweeps; ++i) {
    const SweepStats stats = gibbs_sweep(state);
    trace.push_back(stats.log_joint);
    if (on_sweep) on_sweep(state.sweeps_done(), stats);
  }
  return trace;
}

TrainResult train(std::shared_ptr<const Corpus> corpus, const Hyperparameters& hp,
                  const TrainOptions& options) {
  if (options.sweeps <= options.burn_in)
    throw ConfigError("sweeps", "sweeps must exceed burn-in");
  ModelState state = init_assignments(std::move(corpus), hp, options.seed);
  std::vector<double> trace = run_sweeps(state, options.sweeps, options.on_sweep);
  double mean = 0.0;
  for (std::size_t i = options.burn_in; i < trace.size(); ++i) mean += trace[i];
  mean /= static_cast<double>(trace.size() - options.burn_in);
  PointEstimates est = estimate_parameters(state);
  return TrainResult{std::move(state), std::move(est), std::move(trace), mean};
}

namespace {

constexpr char kMagic[8] = {'S', 'W', 'A', 'C', 'K', 'P', 'T', '1'};

// Fixed little-endian encoding regardless of host order.
void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }
std::string get_str(std::istream& in, std::uint64_t limit = 1ULL << 30) {
  const std::uint64_t n = get_u64(in);
  if (n > limit) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint truncated");
  return s;
}

} // namespace

void save_checkpoint(std::ostream& out, const ModelState& state, const std::string& provenance) {
  const Hyperparameters& hp = state.hyperparameters();
  out.write(kMagic, sizeof kMagic);
  put_str(out, provenance);
  put_u64(out, hp.num_topics);
  put_f64(out, hp.alpha);
  put_f64(out, hp.beta);
  put_f64(out, hp.gamma);
  put_f64(out, hp.rho);
  put_u64(out, hp.variant == Variant::swa ? 1 : 0);
  put_u64(out, state.seed());
  put_u64(out, state.sweeps_done());
  put_u64(out, state.corpus().fingerprint());
  put_u64(out, state.x_frozen() ? 1 : 0);
  put_str(out, state.rng().serialize());
  const Assignments& asg = state.assignments();
  put_u64(out, asg.z.size());
  for (auto k : asg.z) put_u64(out, k);
  put_u64(out, asg.x.size());
  out.write(reinterpret_cast<const char*>(asg.x.data()), static_cast<std::streamsize>(asg.x.size()));
  if (!out) throw IoError("failed writing checkpoint");
}

ModelState load_checkpoint(std::istream& in, std::shared_ptr<const Corpus> corpus,
                           std::string* provenance) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("not a checkpoint file");
  std::string prov = get_str(in);
  if (provenance) *provenance = prov;
  Hyperparameters hp;
  hp.num_topics = get_u64(in);
  hp.alpha = get_f64(in);
  hp.beta = get_f64(in);
  hp.gamma = get_f64(in);
  hp.rho = get_f64(in);
  hp.variant = get_u64(in) == 1 ? Variant::swa : Variant::session;
  const std::uint64_t seed = get_u64(in);
  const std::uint64_t sweeps = get_u64(in);
  const std::uint64_t fingerprint = get_u64(in);
  const bool frozen = get_u64(in) != 0;
  const std::string rng_state = get_str(in);
  if (fingerprint != corpus->fingerprint())
    throw FormatError("checkpoint was written for a different dataset");
  Assignments asg;
  const std::uint64_t nz = get_u64(in);
  if (nz != corpus->num_sessions()) throw FormatError("checkpoint session count mismatch");
  asg.z.resize(nz);
  for (auto& k : asg.z) k = static_cast<std::uint32_t>(get_u64(in));
  const std::uint64_t nx = get_u64(in);
  if (nx != corpus->num_logs()) throw FormatError("checkpoint log count mismatch");
  asg.x.resize(nx);
  if (!in.read(reinterpret_cast<char*>(asg.x.data()), static_cast<std::streamsize>(nx)))
    throw FormatError("checkpoint truncated");
  ModelState state(std::move(corpus), hp, std::move(asg), seed);
  state.set_sweeps_done(sweeps);
  state.set_x_frozen(frozen);
  state.rng().deserialize(rng_state);
  return state;
}

} // namespace swa
