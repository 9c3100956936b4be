#include "swa/synth.hpp"

#include <algorithm>
#include <cmath>

#include "swa/errors.hpp"
#include "swa/io.hpp"
#include "swa/rng.hpp"

namespace swa {

namespace {

std::string padded(char prefix, std::size_t i, std::size_t count) {
  std::size_t width = 4;
  for (std::size_t n = count; n >= 10000; n /= 10) ++width;
  std::string digits = std::to_string(i);
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

void dirichlet_row(Rng& rng, double concentration, std::span<double> out) {
  double mx = -INFINITY;
  for (double& v : out) mx = std::max(mx, v = rng.log_gamma_variate(concentration));
  double total = 0.0;
  for (double& v : out) total += (v = std::exp(v - mx));
  for (double& v : out) v /= total;
}

double beta_variate(Rng& rng, double a, double b) {
  const double la = rng.log_gamma_variate(a);
  const double lb = rng.log_gamma_variate(b);
  const double m = std::max(la, lb);
  const double ea = std::exp(la - m), eb = std::exp(lb - m);
  return ea / (ea + eb);
}

void check_rows(const std::vector<double>& m, std::size_t rows, std::size_t cols,
                const char* name) {
  if (m.size() != rows * cols) throw ConfigError(name, "wrong shape");
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = m[r * cols + c];
      if (!(v >= 0.0)) throw ConfigError(name, "negative or NaN entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError(name, "row does not sum to 1");
  }
}

} // namespace

std::string GroundTruth::user_id(std::size_t u) const { return padded('u', u, num_users); }
std::string GroundTruth::artist_id(std::size_t a) const { return padded('a', a, num_artists); }

void GroundTruth::validate() const {
  if (num_users == 0 || num_artists == 0 || num_topics == 0)
    throw ConfigError("truth", "empty dimensions");
  check_rows(theta, num_users, num_topics, "theta");
  check_rows(phi, num_topics, num_artists, "phi");
  check_rows(psi, num_users, num_artists, "psi");
  if (lambda1.size() != num_users) throw ConfigError("lambda", "wrong shape");
  for (double l : lambda1)
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda", "outside [0, 1]");
  if (sessions_per_user.size() != num_users)
    throw ConfigError("sessions_per_user", "wrong shape");
  if (!(session_length_p > 0.0 && session_length_p <= 1.0) || max_session_length == 0)
    throw ConfigError("session_length", "invalid session length distribution");
  if (min_play_gap < 0 || max_play_gap < min_play_gap || max_play_gap >= kDefaultSessionGap)
    throw ConfigError("play_gap", "play gaps must lie in [0, 30 min)");
}

GroundTruth sample_ground_truth(const TruthConfig& cfg, std::uint64_t seed) {
  GroundTruth t;
  t.num_users = cfg.num_users;
  t.num_artists = cfg.num_artists;
  t.num_topics = cfg.num_topics;
  t.session_length_p = cfg.session_length_p;
  t.max_session_length = cfg.max_session_length;
  const Rng master(seed);

  Rng theta_rng = master.split(1);
  t.theta.resize(t.num_users * t.num_topics);
  for (std::size_t u = 0; u < t.num_users; ++u)
    dirichlet_row(theta_rng, cfg.alpha,
                  std::span<double>(t.theta).subspan(u * t.num_topics, t.num_topics));

  Rng phi_rng = master.split(2);
  t.phi.resize(t.num_topics * t.num_artists);
  for (std::size_t k = 0; k < t.num_topics; ++k)
    dirichlet_row(phi_rng, cfg.beta,
                  std::span<double>(t.phi).subspan(k * t.num_artists, t.num_artists));

  Rng psi_rng = master.split(3);
  t.psi.resize(t.num_users * t.num_artists);
  for (std::size_t u = 0; u < t.num_users; ++u)
    dirichlet_row(psi_rng, cfg.gamma,
                  std::span<double>(t.psi).subspan(u * t.num_artists, t.num_artists));

  Rng lambda_rng = master.split(4);
  t.lambda1.resize(t.num_users);
  for (std::size_t u = 0; u < t.num_users; ++u) {
    switch (cfg.lambda_prior) {
    case LambdaPrior::beta: t.lambda1[u] = beta_variate(lambda_rng, cfg.lambda_a, cfg.lambda_b); break;
    case LambdaPrior::two_groups: t.lambda1[u] = u < t.num_users / 2 ? cfg.group_low : cfg.group_high; break;
    case LambdaPrior::fixed: t.lambda1[u] = cfg.group_low; break;
    }
  }
  t.sessions_per_user.assign(t.num_users, cfg.sessions_per_user);
  t.validate();
  return t;
}

SyntheticData generate_dataset(const GroundTruth& truth, std::uint64_t seed) {
  truth.validate();
  const std::size_t A = truth.num_artists;
  const std::size_t K = truth.num_topics;
  const Rng master(seed);
  SyntheticData out;
  std::vector<std::string> artist_names(A);
  for (std::size_t a = 0; a < A; ++a) artist_names[a] = truth.artist_id(a);
  std::vector<bool> used(A, false);

  for (std::size_t u = 0; u < truth.num_users; ++u) {
    Rng rng = master.split(u);
    const std::string uid = truth.user_id(u);
    const std::span<const double> theta(truth.theta.data() + u * K, K);
    const std::span<const double> psi(truth.psi.data() + u * A, A);
    std::vector<Session> sessions;
    Timestamp cursor = truth.start_time + static_cast<Timestamp>(rng.below(kSecondsPerDay));
    for (std::size_t r = 0; r < truth.sessions_per_user[u]; ++r) {
      if (r > 0)
        cursor += kDefaultSessionGap + static_cast<Timestamp>(rng.below(kSecondsPerDay));
      std::size_t length = 1;
      while (length < truth.max_session_length && !rng.bernoulli(truth.session_length_p))
        ++length;
      const auto z = static_cast<std::uint32_t>(rng.categorical(theta));
      const std::span<const double> phi(truth.phi.data() + z * A, A);
      Session session{uid, {}};
      for (std::size_t j = 0; j < length; ++j) {
        if (j > 0)
          cursor += truth.min_play_gap + static_cast<Timestamp>(rng.below(
                        static_cast<std::uint64_t>(truth.max_play_gap - truth.min_play_gap + 1)));
        double lambda = truth.lambda1[u];
        if (truth.hour_lambda_shift)
          lambda = std::clamp(
              lambda + (*truth.hour_lambda_shift)[static_cast<std::size_t>(
                           truth.timezone.hour_of_day(cursor))],
              0.0, 1.0);
        const bool addicted = rng.bernoulli(lambda);
        const std::size_t a = rng.categorical(addicted ? psi : phi);
        used[a] = true;
        session.logs.push_back(PlayLog{uid, artist_names[a], cursor});
        out.true_x.push_back(addicted ? 1 : 0);
      }
      out.true_z.push_back(z);
      sessions.push_back(std::move(session));
    }
    if (sessions.empty()) continue;
    out.dataset.users.push_back(uid);
    out.dataset.sessions.push_back(std::move(sessions));
  }
  for (std::size_t a = 0; a < A; ++a)
    if (used[a]) out.dataset.artists.push_back(artist_names[a]);
  return out;
}

std::array<double, 24> morning_schedule(double amplitude) {
  std::array<double, 24> shift{};
  for (int h = 5; h <= 11; ++h) shift[static_cast<std::size_t>(h)] = amplitude;
  for (int h = 17; h <= 23; ++h) shift[static_cast<std::size_t>(h)] = -amplitude;
  return shift;
}

double true_song_prob(const GroundTruth& truth, std::size_t u, std::size_t a) {
  double taste = 0.0;
  for (std::size_t k = 0; k < truth.num_topics; ++k)
    taste += truth.theta[u * truth.num_topics + k] * truth.phi[k * truth.num_artists + a];
  const double l1 = truth.lambda1[u];
  return (1.0 - l1) * taste + l1 * truth.psi[u * truth.num_artists + a];
}

void write_synthetic(const std::filesystem::path& dir, const GroundTruth& truth,
                     const SyntheticData& data, std::span<const std::string> provenance) {
  using io::format_double;
  {
    auto out = io::open_output(dir / "logs.tsv");
    io::write_provenance(out, provenance);
    for (const auto& user : data.dataset.sessions)
      for (const auto& s : user)
        for (const auto& log : s.logs)
          out << log.user_id << '\t' << format_iso8601(log.timestamp) << '\t' << log.artist_id
              << '\n';
  }
  {
    auto out = io::open_output(dir / "truth_z.tsv");
    io::write_provenance(out, provenance);
    out << "user\tsession\ttopic\n";
    std::size_t s = 0;
    for (std::size_t u = 0; u < data.dataset.users.size(); ++u)
      for (std::size_t r = 0; r < data.dataset.sessions[u].size(); ++r)
        out << data.dataset.users[u] << '\t' << r << '\t' << data.true_z[s++] << '\n';
  }
  {
    auto out = io::open_output(dir / "truth_x.tsv");
    io::write_provenance(out, provenance);
    out << "user\tsession\tposition\tx\n";
    std::size_t l = 0;
    for (std::size_t u = 0; u < data.dataset.users.size(); ++u)
      for (std::size_t r = 0; r < data.dataset.sessions[u].size(); ++r)
        for (std::size_t j = 0; j < data.dataset.sessions[u][r].logs.size(); ++j)
          out << data.dataset.users[u] << '\t' << r << '\t' << j << '\t'
              << int(data.true_x[l++]) << '\n';
  }
  auto write_matrix = [&](const char* name, const char* row_key, const std::vector<double>& m,
                          std::size_t rows, std::size_t cols, auto row_name, auto col_name) {
    auto out = io::open_output(dir / name);
    io::write_provenance(out, provenance);
    out << row_key << "\tcolumn\tvalue\n";
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (m[r * cols + c] > 0.0)
          out << row_name(r) << '\t' << col_name(c) << '\t' << format_double(m[r * cols + c])
              << '\n';
  };
  auto uname = [&](std::size_t u) { return truth.user_id(u); };
  auto aname = [&](std::size_t a) { return truth.artist_id(a); };
  auto kname = [](std::size_t k) { return std::to_string(k); };
  write_matrix("truth_theta.tsv", "user", truth.theta, truth.num_users, truth.num_topics, uname, kname);
  write_matrix("truth_phi.tsv", "topic", truth.phi, truth.num_topics, truth.num_artists, kname, aname);
  write_matrix("truth_psi.tsv", "user", truth.psi, truth.num_users, truth.num_artists, uname, aname);
  {
    auto out = io::open_output(dir / "truth_lambda.tsv");
    io::write_provenance(out, provenance);
    out << "user\tlambda0\tlambda1\n";
    for (std::size_t u = 0; u < truth.num_users; ++u)
      out << truth.user_id(u) << '\t' << format_double(1.0 - truth.lambda1[u]) << '\t'
          << format_double(truth.lambda1[u]) << '\n';
  }
}

} // namespace swa
