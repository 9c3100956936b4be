#include "swa/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "swa/errors.hpp"
#include "swa/numerics.hpp"

namespace swa {

std::string to_string(Variant v) { return v == Variant::session ? "session" : "swa"; }

Variant parse_variant(const std::string& text) {
  if (text == "session") return Variant::session;
  if (text == "swa") return Variant::swa;
  throw ConfigError("variant", "expected 'session' or 'swa', got '" + text + "'");
}

Hyperparameters Hyperparameters::defaults(std::size_t num_topics, std::size_t num_artists,
                                          Variant variant) {
  Hyperparameters hp;
  hp.num_topics = num_topics;
  hp.variant = variant;
  hp.alpha = num_topics > 0 ? 1.0 / static_cast<double>(num_topics) : 0.0;
  const double per_artist = num_artists > 0 ? 50.0 / static_cast<double>(num_artists) : 0.0;
  hp.beta = per_artist;
  hp.gamma = per_artist;
  hp.rho = 0.5;
  return hp;
}

void Hyperparameters::validate() const {
  if (num_topics < 1) throw ConfigError("topics", "K must be at least 1");
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(name, "must be a positive finite number");
  };
  positive("alpha", alpha);
  positive("beta", beta);
  positive("gamma", gamma);
  positive("rho", rho);
}

CountTables recount(const Corpus& corpus, std::size_t num_topics, const Assignments& asg) {
  const std::size_t U = corpus.num_users();
  const std::size_t A = corpus.num_artists();
  CountTables c;
  c.num_topics = num_topics;
  c.num_artists = A;
  c.n_u0.assign(U, 0);
  c.n_u1.assign(U, 0);
  c.n_u.assign(U, 0);
  c.n_u1a.assign(U, {});
  c.n_ka.assign(num_topics * A, 0);
  c.n_k.assign(num_topics, 0);
  c.r_uk.assign(U * num_topics, 0);
  c.r_u.assign(U, 0);
  for (std::size_t s = 0; s < corpus.num_sessions(); ++s) {
    const std::size_t u = corpus.session_user[s];
    const std::size_t k = asg.z[s];
    ++c.r_uk[u * num_topics + k];
    ++c.r_u[u];
    for (std::size_t l = corpus.session_log_begin[s]; l < corpus.session_log_begin[s + 1]; ++l) {
      const Index a = corpus.log_artist[l];
      ++c.n_u[u];
      if (asg.x[l] == 0) {
        ++c.n_u0[u];
        ++c.n_ka[k * A + a];
        ++c.n_k[k];
      } else {
        ++c.n_u1[u];
        ++c.n_u1a[u][a];
      }
    }
  }
  return c;
}

ModelState::ModelState(std::shared_ptr<const Corpus> corpus, Hyperparameters hp,
                       Assignments asg, std::uint64_t seed)
    : corpus_(std::move(corpus)), hp_(hp), asg_(std::move(asg)), seed_(seed), rng_(seed) {
  hp_.validate();
  if (asg_.z.size() != corpus_->num_sessions() || asg_.x.size() != corpus_->num_logs())
    throw ContractError("assignment sizes do not match the corpus");
  for (auto k : asg_.z)
    if (k >= hp_.num_topics) throw ContractError("topic assignment out of range");
  for (auto x : asg_.x) {
    if (x > 1) throw ContractError("mode flag must be 0 or 1");
    if (x == 1 && hp_.variant == Variant::session)
      throw ContractError("session model cannot hold x = 1");
  }
  counts_ = recount(*corpus_, hp_.num_topics, asg_);
}

void ModelState::detach_session(std::size_t s) {
  const Corpus& c = *corpus_;
  const std::size_t u = c.session_user[s];
  const std::size_t k = asg_.z[s];
  const std::size_t A = c.num_artists();
  --counts_.r_uk[u * hp_.num_topics + k];
  --counts_.r_u[u];
  for (std::size_t l = c.session_log_begin[s]; l < c.session_log_begin[s + 1]; ++l) {
    if (asg_.x[l] != 0) continue;
    --counts_.n_ka[k * A + c.log_artist[l]];
    --counts_.n_k[k];
  }
}

void ModelState::attach_session(std::size_t s, std::uint32_t topic) {
  if (topic >= hp_.num_topics) throw ContractError("topic out of range");
  const Corpus& c = *corpus_;
  const std::size_t u = c.session_user[s];
  const std::size_t A = c.num_artists();
  asg_.z[s] = topic;
  ++counts_.r_uk[u * hp_.num_topics + topic];
  ++counts_.r_u[u];
  for (std::size_t l = c.session_log_begin[s]; l < c.session_log_begin[s + 1]; ++l) {
    if (asg_.x[l] != 0) continue;
    ++counts_.n_ka[topic * A + c.log_artist[l]];
    ++counts_.n_k[topic];
  }
}

void ModelState::detach_log(std::size_t l) {
  const Corpus& c = *corpus_;
  const std::size_t s = c.log_session[l];
  const std::size_t u = c.session_user[s];
  const Index a = c.log_artist[l];
  --counts_.n_u[u];
  if (asg_.x[l] == 0) {
    const std::size_t k = asg_.z[s];
    --counts_.n_u0[u];
    --counts_.n_ka[k * c.num_artists() + a];
    --counts_.n_k[k];
  } else {
    --counts_.n_u1[u];
    auto it = counts_.n_u1a[u].find(a);
    if (--it->second == 0) counts_.n_u1a[u].erase(it);
  }
}

void ModelState::attach_log(std::size_t l, std::uint8_t flag) {
  if (flag > 1) throw ContractError("mode flag must be 0 or 1");
  if (flag == 1 && hp_.variant == Variant::session)
    throw ContractError("session model cannot hold x = 1");
  const Corpus& c = *corpus_;
  const std::size_t s = c.log_session[l];
  const std::size_t u = c.session_user[s];
  const Index a = c.log_artist[l];
  asg_.x[l] = flag;
  ++counts_.n_u[u];
  if (flag == 0) {
    const std::size_t k = asg_.z[s];
    ++counts_.n_u0[u];
    ++counts_.n_ka[k * c.num_artists() + a];
    ++counts_.n_k[k];
  } else {
    ++counts_.n_u1[u];
    ++counts_.n_u1a[u][a];
  }
}

void ModelState::set_topic(std::size_t s, std::uint32_t topic) {
  if (topic >= hp_.num_topics) throw ContractError("topic out of range");
  detach_session(s);
  attach_session(s, topic);
}

void ModelState::set_x(std::size_t l, std::uint8_t flag) {
  if (flag > 1) throw ContractError("mode flag must be 0 or 1");
  if (flag == 1 && hp_.variant == Variant::session)
    throw ContractError("session model cannot hold x = 1");
  detach_log(l);
  attach_log(l, flag);
}

bool ModelState::counts_consistent() const {
  return counts_ == recount(*corpus_, hp_.num_topics, asg_);
}

ModelState init_assignments(std::shared_ptr<const Corpus> corpus, const Hyperparameters& hp,
                            std::uint64_t seed) {
  hp.validate();
  if (!corpus || corpus->num_logs() == 0)
    throw ContractError("cannot initialize a model on an empty dataset");
  Rng init_rng = Rng(seed).split(0);
  Assignments asg;
  asg.z.resize(corpus->num_sessions());
  asg.x.resize(corpus->num_logs());
  for (auto& k : asg.z) k = static_cast<std::uint32_t>(init_rng.below(hp.num_topics));
  if (hp.variant == Variant::swa)
    for (auto& x : asg.x) x = static_cast<std::uint8_t>(init_rng.below(2));
  // The sampling stream is distinct from the initialization stream.
  return ModelState(std::move(corpus), hp, std::move(asg), seed);
}

double joint_log_prob(const ModelState& state) {
  const Corpus& corpus = state.corpus();
  const CountTables& c = state.counts();
  const Hyperparameters& hp = state.hyperparameters();
  const double U = static_cast<double>(corpus.num_users());
  const double A = static_cast<double>(corpus.num_artists());
  const std::size_t K = hp.num_topics;
  const double Kd = static_cast<double>(K);

  double lp = 0.0;
  if (hp.variant == Variant::swa) {
    // Taste/addiction mixture (Beta-Bernoulli per user).
    lp += U * (std::lgamma(2.0 * hp.rho) - 2.0 * std::lgamma(hp.rho));
    // User-artist addiction distributions.
    lp += U * std::lgamma(hp.gamma * A);
    const double lg_gamma = std::lgamma(hp.gamma);
    for (std::size_t u = 0; u < corpus.num_users(); ++u) {
      lp += std::lgamma(hp.rho + static_cast<double>(c.n_u0[u])) +
            std::lgamma(hp.rho + static_cast<double>(c.n_u1[u])) -
            std::lgamma(2.0 * hp.rho + static_cast<double>(c.n_u[u]));
      // Zero entries contribute Γ(γ)/Γ(γ) = 1, so only stored counts matter.
      // Sum in artist order so the value does not depend on hash layout.
      std::vector<std::pair<Index, std::int64_t>> row(c.n_u1a[u].begin(), c.n_u1a[u].end());
      std::sort(row.begin(), row.end());
      for (const auto& [a, n] : row) lp += std::lgamma(static_cast<double>(n) + hp.gamma) - lg_gamma;
      lp -= std::lgamma(static_cast<double>(c.n_u1[u]) + hp.gamma * A);
    }
  }
  // Topic-artist distributions.
  lp += Kd * std::lgamma(hp.beta * A);
  const double lg_beta = std::lgamma(hp.beta);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < corpus.num_artists(); ++a) {
      const std::int64_t n = c.ka(k, a);
      if (n != 0) lp += std::lgamma(static_cast<double>(n) + hp.beta) - lg_beta;
    }
    lp -= std::lgamma(static_cast<double>(c.n_k[k]) + hp.beta * A);
  }
  // User-topic distributions.
  lp += U * (std::lgamma(hp.alpha * Kd) - Kd * std::lgamma(hp.alpha));
  for (std::size_t u = 0; u < corpus.num_users(); ++u) {
    for (std::size_t k = 0; k < K; ++k)
      lp += std::lgamma(static_cast<double>(c.uk(u, k)) + hp.alpha);
    lp -= std::lgamma(static_cast<double>(c.r_u[u]) + hp.alpha * Kd);
  }
  return lp;
}

std::vector<double> topic_log_weights(const ModelState& state, std::size_t s) {
  const Corpus& corpus = state.corpus();
  const CountTables& c = state.counts();
  const Hyperparameters& hp = state.hyperparameters();
  const Assignments& asg = state.assignments();
  const std::size_t K = hp.num_topics;
  const std::size_t u = corpus.session_user[s];
  const std::size_t current = asg.z[s];
  const double A = static_cast<double>(corpus.num_artists());

  // Distinct artists among the session's x = 0 plays, with multiplicities.
  std::vector<Index> artists;
  for (std::size_t l = corpus.session_log_begin[s]; l < corpus.session_log_begin[s + 1]; ++l)
    if (asg.x[l] == 0) artists.push_back(corpus.log_artist[l]);
  const auto n_session = static_cast<std::int64_t>(artists.size());
  std::sort(artists.begin(), artists.end());
  std::vector<std::pair<Index, std::int64_t>> runs;
  for (Index a : artists) {
    if (!runs.empty() && runs.back().first == a) ++runs.back().second;
    else runs.emplace_back(a, 1);
  }

  const double log_denominator =
      std::log(static_cast<double>(c.r_u[u] - 1) + hp.alpha * static_cast<double>(K));
  std::vector<double> w(K);
  for (std::size_t k = 0; k < K; ++k) {
    const bool own = (k == current);
    const auto r_excl = static_cast<double>(c.uk(u, k) - (own ? 1 : 0));
    double lw = std::log(r_excl + hp.alpha) - log_denominator;
    if (n_session > 0) {
      const std::int64_t nk_excl = c.n_k[k] - (own ? n_session : 0);
      lw -= log_rising(static_cast<double>(nk_excl) + hp.beta * A, n_session);
      for (const auto& [a, n] : runs) {
        const std::int64_t nka_excl = c.ka(k, a) - (own ? n : 0);
        lw += log_rising(static_cast<double>(nka_excl) + hp.beta, n);
      }
    }
    w[k] = lw;
  }
  return w;
}

std::vector<double> topic_conditional(const ModelState& state, std::size_t s) {
  std::vector<double> w = topic_log_weights(state, s);
  const double mx = *std::max_element(w.begin(), w.end());
  double total = 0.0;
  for (double& v : w) total += (v = std::exp(v - mx));
  for (double& v : w) v /= total;
  return w;
}

std::array<double, 2> x_conditional(const ModelState& state, std::size_t l) {
  const Hyperparameters& hp = state.hyperparameters();
  if (hp.variant != Variant::swa)
    throw ContractError("mode flags exist only under variant=swa");
  const Corpus& corpus = state.corpus();
  const CountTables& c = state.counts();
  const Assignments& asg = state.assignments();
  const std::size_t s = corpus.log_session[l];
  const std::size_t u = corpus.session_user[s];
  const std::size_t k = asg.z[s];
  const Index a = corpus.log_artist[l];
  const int was0 = asg.x[l] == 0 ? 1 : 0;
  const int was1 = 1 - was0;
  const double A = static_cast<double>(corpus.num_artists());

  const double n_u0 = static_cast<double>(c.n_u0[u] - was0);
  const double n_u1 = static_cast<double>(c.n_u1[u] - was1);
  const double denom = 2.0 * hp.rho + static_cast<double>(c.n_u[u] - 1);
  const double n_ka = static_cast<double>(c.ka(k, a) - was0);
  const double n_k = static_cast<double>(c.n_k[k] - was0);
  const double n_u1a = static_cast<double>(c.u1a(u, a) - was1);

  const double w0 = (hp.rho + n_u0) / denom * (n_ka + hp.beta) / (n_k + hp.beta * A);
  const double w1 = (hp.rho + n_u1) / denom * (n_u1a + hp.gamma) / (n_u1 + hp.gamma * A);
  const double total = w0 + w1;
  return {w0 / total, w1 / total};
}

std::uint32_t sample_topic(ModelState& state, std::size_t s, Rng& rng) {
  const std::vector<double> lw = topic_log_weights(state, s);
  const auto k = static_cast<std::uint32_t>(rng.categorical_log(lw));
  if (k != state.assignments().z[s]) state.set_topic(s, k);
  return k;
}

std::uint32_t sample_topic(ModelState& state, std::size_t user, std::size_t ordinal,
                           Rng& rng) {
  if (user >= state.corpus().num_users() || ordinal >= state.corpus().sessions_of(user))
    throw LookupError("no such session");
  return sample_topic(state, state.corpus().session_index(user, ordinal), rng);
}

std::uint8_t sample_x(ModelState& state, std::size_t l, Rng& rng) {
  const auto p = x_conditional(state, l);
  const auto flag = static_cast<std::uint8_t>(rng.uniform() < p[1] ? 1 : 0);
  if (flag != state.assignments().x[l]) state.set_x(l, flag);
  return flag;
}

std::uint8_t sample_x(ModelState& state, std::size_t user, std::size_t ordinal,
                      std::size_t position, Rng& rng) {
  const Corpus& c = state.corpus();
  if (user >= c.num_users() || ordinal >= c.sessions_of(user))
    throw LookupError("no such session");
  const std::size_t s = c.session_index(user, ordinal);
  if (position >= c.session_size(s)) throw LookupError("no such log position");
  return sample_x(state, c.log_index(s, position), rng);
}

SweepStats gibbs_sweep(ModelState& state) {
  const auto start = std::chrono::steady_clock::now();
  const Corpus& corpus = state.corpus();
  const bool sample_flags =
      state.hyperparameters().variant == Variant::swa && !state.x_frozen();
  Rng& rng = state.rng();
  for (std::size_t s = 0; s < corpus.num_sessions(); ++s) {
    sample_topic(state, s, rng);
    if (!sample_flags) continue;
    for (std::size_t l = corpus.session_log_begin[s]; l < corpus.session_log_begin[s + 1]; ++l)
      sample_x(state, l, rng);
  }
  state.set_sweeps_done(state.sweeps_done() + 1);
  SweepStats stats;
  stats.log_joint = joint_log_prob(state);
  stats.elapsed = std::chrono::steady_clock::now() - start;
  return stats;
}

} // namespace swa
