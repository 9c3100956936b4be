#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "swa/evaluation.hpp"
#include "swa/model.hpp"

namespace swa {

struct TrainOptions {
  std::uint64_t sweeps = 1000;
  /// Sweeps before this index are excluded from `TrainResult::post_burn_in_mean`.
  std::uint64_t burn_in = 800;
  std::uint64_t seed = 0;
  /// Called after every sweep with the 1-based sweep number.
  std::function<void(std::uint64_t, const SweepStats&)> on_sweep;
};

struct TrainResult {
  ModelState state;
  PointEstimates estimates;
  /// joint_log_prob after each sweep.
  std::vector<double> trace;
  double post_burn_in_mean = 0.0;
};

/// init_assignments followed by `sweeps` Gibbs sweeps; estimates come from
/// the final state only.
TrainResult train(std::shared_ptr<const Corpus> corpus, const Hyperparameters& hp,
                  const TrainOptions& options);

/// Continues an existing chain for `sweeps` more sweeps and returns their
/// log-joint trace.
std::vector<double> run_sweeps(ModelState& state, std::uint64_t sweeps,
                               const std::function<void(std::uint64_t, const SweepStats&)>&
                                   on_sweep = {});

/// Binary checkpoint: hyperparameters, seed, sweep counter, corpus
/// fingerprint, RNG state and all assignments, plus a free-text provenance
/// block. Reloading against the same corpus resumes the chain exactly.
void save_checkpoint(std::ostream& out, const ModelState& state,
                     const std::string& provenance = {});
ModelState load_checkpoint(std::istream& in, std::shared_ptr<const Corpus> corpus,
                           std::string* provenance = nullptr);

} // namespace swa
