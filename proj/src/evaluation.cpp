#include "swa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "swa/errors.hpp"
#include "swa/io.hpp"

namespace swa {

double PointEstimates::psi_at(std::size_t u, Index a) const {
  const auto& row = psi_entries[u];
  auto it = std::lower_bound(row.begin(), row.end(), a,
                             [](const auto& e, Index v) { return e.first < v; });
  return (it != row.end() && it->first == a) ? it->second : psi_floor[u];
}

std::optional<std::size_t> PointEstimates::user_index(const std::string& id) const {
  auto it = user_lookup_.find(id);
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> PointEstimates::artist_index(const std::string& id) const {
  auto it = artist_lookup_.find(id);
  if (it == artist_lookup_.end()) return std::nullopt;
  return it->second;
}

void PointEstimates::index_ids() {
  user_lookup_.clear();
  artist_lookup_.clear();
  for (std::size_t i = 0; i < user_ids.size(); ++i) user_lookup_.emplace(user_ids[i], i);
  for (std::size_t i = 0; i < artist_ids.size(); ++i) artist_lookup_.emplace(artist_ids[i], i);
}

PointEstimates estimate_parameters(const ModelState& state) {
  const Corpus& corpus = state.corpus();
  const CountTables& c = state.counts();
  const Hyperparameters& hp = state.hyperparameters();
  const std::size_t U = corpus.num_users();
  const std::size_t A = corpus.num_artists();
  const std::size_t K = hp.num_topics;
  const double Ad = static_cast<double>(A);
  const double Kd = static_cast<double>(K);

  PointEstimates est;
  est.hp = hp;
  est.user_ids = corpus.user_ids;
  est.artist_ids = corpus.artist_ids;
  est.user_logs = c.n_u;

  est.theta.resize(U * K);
  for (std::size_t u = 0; u < U; ++u) {
    const double denom = static_cast<double>(c.r_u[u]) + hp.alpha * Kd;
    for (std::size_t k = 0; k < K; ++k)
      est.theta[u * K + k] = (static_cast<double>(c.uk(u, k)) + hp.alpha) / denom;
  }

  est.phi.resize(K * A);
  est.phi_floor.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = static_cast<double>(c.n_k[k]) + hp.beta * Ad;
    est.phi_floor[k] = hp.beta / denom;
    for (std::size_t a = 0; a < A; ++a)
      est.phi[k * A + a] = (static_cast<double>(c.ka(k, a)) + hp.beta) / denom;
  }

  est.psi_floor.resize(U);
  est.psi_entries.resize(U);
  est.lambda0.resize(U);
  est.lambda1.resize(U);
  for (std::size_t u = 0; u < U; ++u) {
    if (hp.variant == Variant::session) {
      est.psi_floor[u] = 1.0 / Ad;
      est.lambda0[u] = 1.0;
      est.lambda1[u] = 0.0;
      continue;
    }
    const double denom = static_cast<double>(c.n_u1[u]) + hp.gamma * Ad;
    est.psi_floor[u] = hp.gamma / denom;
    auto& row = est.psi_entries[u];
    for (const auto& [a, n] : c.n_u1a[u])
      row.emplace_back(a, (static_cast<double>(n) + hp.gamma) / denom);
    std::sort(row.begin(), row.end());
    const double lambda_denom = static_cast<double>(c.n_u[u]) + 2.0 * hp.rho;
    est.lambda0[u] = (static_cast<double>(c.n_u0[u]) + hp.rho) / lambda_denom;
    est.lambda1[u] = (static_cast<double>(c.n_u1[u]) + hp.rho) / lambda_denom;
  }
  est.index_ids();
  return est;
}

double song_prob(std::size_t u, std::size_t a, const PointEstimates& est) {
  const std::size_t K = est.num_topics();
  double taste = 0.0;
  for (std::size_t k = 0; k < K; ++k) taste += est.theta_at(u, k) * est.phi_at(k, a);
  double p = est.lambda0[u] * taste;
  if (est.lambda1[u] != 0.0) p += est.lambda1[u] * est.psi_at(u, static_cast<Index>(a));
  return p;
}

double song_prob(const std::string& user, const std::string& artist,
                 const PointEstimates& est) {
  const auto u = est.user_index(user);
  if (!u) throw LookupError("unknown user '" + user + "'");
  const auto a = est.artist_index(artist);
  if (!a) throw LookupError("unknown artist '" + artist + "'");
  return song_prob(*u, *a, est);
}

PerplexityResult perplexity(const SessionizedDataset& test, const PointEstimates& est) {
  PerplexityResult result;
  double log_sum = 0.0;
  for (std::size_t i = 0; i < test.users.size(); ++i) {
    const auto u = est.user_index(test.users[i]);
    for (const auto& session : test.sessions[i]) {
      for (const auto& log : session.logs) {
        if (!u) {
          ++result.skipped_unknown_user;
          continue;
        }
        const auto a = est.artist_index(log.artist_id);
        if (!a) {
          ++result.skipped_unknown_artist;
          continue;
        }
        log_sum += std::log(song_prob(*u, *a, est));
        ++result.evaluated;
      }
    }
  }
  if (result.evaluated == 0) throw Error("perplexity: no evaluable test logs");
  result.perplexity = std::exp(-log_sum / static_cast<double>(result.evaluated));
  return result;
}

void write_estimates(const std::filesystem::path& dir, const PointEstimates& est,
                     std::span<const std::string> provenance) {
  using io::format_double;
  const std::size_t K = est.num_topics();
  {
    auto out = io::open_output(dir / "model.tsv");
    io::write_provenance(out, provenance);
    out << "key\tvalue\n"
        << "variant\t" << to_string(est.hp.variant) << '\n'
        << "topics\t" << K << '\n'
        << "alpha\t" << format_double(est.hp.alpha) << '\n'
        << "beta\t" << format_double(est.hp.beta) << '\n'
        << "gamma\t" << format_double(est.hp.gamma) << '\n'
        << "rho\t" << format_double(est.hp.rho) << '\n'
        << "users\t" << est.num_users() << '\n'
        << "artists\t" << est.num_artists() << '\n';
  }
  {
    auto out = io::open_output(dir / "artists.tsv");
    io::write_provenance(out, provenance);
    out << "artist\n";
    for (const auto& a : est.artist_ids) out << a << '\n';
  }
  {
    auto out = io::open_output(dir / "theta.tsv");
    io::write_provenance(out, provenance);
    out << "user";
    for (std::size_t k = 0; k < K; ++k) out << "\ttopic" << k;
    out << '\n';
    for (std::size_t u = 0; u < est.num_users(); ++u) {
      out << est.user_ids[u];
      for (std::size_t k = 0; k < K; ++k) out << '\t' << format_double(est.theta_at(u, k));
      out << '\n';
    }
  }
  {
    auto out = io::open_output(dir / "phi.tsv");
    io::write_provenance(out, provenance);
    out << "topic\tartist\tvalue\n";
    for (std::size_t k = 0; k < K; ++k) {
      out << k << "\t*\t" << format_double(est.phi_floor[k]) << '\n';
      for (std::size_t a = 0; a < est.num_artists(); ++a)
        if (est.phi_at(k, a) != est.phi_floor[k])
          out << k << '\t' << est.artist_ids[a] << '\t' << format_double(est.phi_at(k, a))
              << '\n';
    }
  }
  {
    auto out = io::open_output(dir / "psi.tsv");
    io::write_provenance(out, provenance);
    out << "user\tartist\tvalue\n";
    for (std::size_t u = 0; u < est.num_users(); ++u) {
      out << est.user_ids[u] << "\t*\t" << format_double(est.psi_floor[u]) << '\n';
      for (const auto& [a, v] : est.psi_entries[u])
        out << est.user_ids[u] << '\t' << est.artist_ids[a] << '\t' << format_double(v) << '\n';
    }
  }
  {
    auto out = io::open_output(dir / "lambda.tsv");
    io::write_provenance(out, provenance);
    out << "user\tlambda0\tlambda1\tlogs\n";
    for (std::size_t u = 0; u < est.num_users(); ++u)
      out << est.user_ids[u] << '\t' << format_double(est.lambda0[u]) << '\t'
          << format_double(est.lambda1[u]) << '\t' << est.user_logs[u] << '\n';
  }
}

PointEstimates read_estimates(const std::filesystem::path& dir) {
  PointEstimates est;
  std::map<std::string, std::string> meta;
  {
    const auto t = io::read_table(dir / "model.tsv");
    for (const auto& row : t.rows) meta[row[0]] = row[1];
  }
  auto get = [&](const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError(std::string("model.tsv: missing ") + key);
    return it->second;
  };
  est.hp.variant = parse_variant(get("variant"));
  est.hp.num_topics = io::parse_size(get("topics"));
  est.hp.alpha = io::parse_double(get("alpha"));
  est.hp.beta = io::parse_double(get("beta"));
  est.hp.gamma = io::parse_double(get("gamma"));
  est.hp.rho = io::parse_double(get("rho"));
  const std::size_t K = est.hp.num_topics;

  {
    const auto t = io::read_table(dir / "lambda.tsv");
    for (const auto& row : t.rows) {
      est.user_ids.push_back(row[0]);
      est.lambda0.push_back(io::parse_double(row[1]));
      est.lambda1.push_back(io::parse_double(row[2]));
      est.user_logs.push_back(static_cast<std::int64_t>(io::parse_size(row[3])));
    }
  }
  {
    const auto phi = io::read_table(dir / "phi.tsv");
    const auto psi = io::read_table(dir / "psi.tsv");
    const auto artists = io::read_table(dir / "artists.tsv");
    for (const auto& row : artists.rows) est.artist_ids.push_back(row[0]);
    if (est.artist_ids.size() != io::parse_size(get("artists")))
      throw FormatError("artists.tsv: count does not match model.tsv");
    est.index_ids();
    const std::size_t A = est.artist_ids.size();

    est.phi.assign(K * A, 0.0);
    est.phi_floor.assign(K, 0.0);
    std::vector<bool> seen(K * A, false);
    for (const auto& row : phi.rows) {
      const std::size_t k = io::parse_size(row[0]);
      if (k >= K) throw FormatError("phi.tsv: topic out of range");
      const double v = io::parse_double(row[2]);
      if (row[1] == "*") {
        est.phi_floor[k] = v;
      } else {
        const auto a_idx = est.artist_index(row[1]);
        if (!a_idx) throw FormatError("phi.tsv: unknown artist '" + row[1] + "'");
        const std::size_t a = *a_idx;
        est.phi[k * A + a] = v;
        seen[k * A + a] = true;
      }
    }
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t a = 0; a < A; ++a)
        if (!seen[k * A + a]) est.phi[k * A + a] = est.phi_floor[k];

    const std::size_t U = est.user_ids.size();
    est.psi_floor.assign(U, 0.0);
    est.psi_entries.assign(U, {});
    for (const auto& row : psi.rows) {
      const auto u = est.user_index(row[0]);
      if (!u) throw FormatError("psi.tsv: unknown user '" + row[0] + "'");
      const double v = io::parse_double(row[2]);
      if (row[1] == "*") est.psi_floor[*u] = v;
      else if (const auto a = est.artist_index(row[1]))
        est.psi_entries[*u].emplace_back(static_cast<Index>(*a), v);
      else
        throw FormatError("psi.tsv: unknown artist '" + row[1] + "'");
    }
    for (auto& row : est.psi_entries) std::sort(row.begin(), row.end());
  }
  {
    const auto t = io::read_table(dir / "theta.tsv");
    if (t.rows.size() != est.user_ids.size() || t.header.size() != K + 1)
      throw FormatError("theta.tsv: shape mismatch");
    est.theta.resize(est.user_ids.size() * K);
    for (std::size_t u = 0; u < t.rows.size(); ++u) {
      if (t.rows[u][0] != est.user_ids[u]) throw FormatError("theta.tsv: user order mismatch");
      for (std::size_t k = 0; k < K; ++k) est.theta[u * K + k] = io::parse_double(t.rows[u][k + 1]);
    }
  }
  return est;
}

} // namespace swa
