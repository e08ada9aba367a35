#ifndef SPINFACT_MONTECARLO_HPP
#define SPINFACT_MONTECARLO_HPP

#include "spinfact/gibbs.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace spinfact {

struct ChainConfig {
  std::uint64_t seed = 0;
  long n_sweeps = 10000;   // one sweep = N attempted single-spin flips
  long burn_in = 1000;
  int n_chains = 2;
  int thinning = 1;        // sweeps between recorded samples
};

enum class EstimateMethod { Exact, MC };

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  EstimateMethod method = EstimateMethod::MC;
  bool stale = false;  // between-chain spread exceeded 4 combined sigma
};

struct Observables {
  bool energy_density = false;     // key "h"
  bool energy_density_sq = false;  // key "h2"
  std::vector<std::pair<int, int>> pairs;  // keys "s_i_j" (0-based)
};

// Mean and standard error of the mean by blocked jackknife.
inline std::pair<double, double> blocked_jackknife(const std::vector<double>& samples,
                                                   int n_blocks = 20) {
  const long n = static_cast<long>(samples.size());
  if (n < n_blocks) n_blocks = std::max<long>(2, n);
  const long block = n / n_blocks;
  const long used = block * n_blocks;
  double total = 0.0;
  std::vector<double> block_sums(n_blocks, 0.0);
  for (long i = 0; i < used; ++i) {
    total += samples[i];
    block_sums[i / block] += samples[i];
  }
  double mean = total / used;
  double var = 0.0;
  for (int b = 0; b < n_blocks; ++b) {
    double loo = (total - block_sums[b]) / (used - block);  // leave-one-block-out
    var += (loo - mean) * (loo - mean);
  }
  var *= double(n_blocks - 1) / n_blocks;
  return {mean, std::sqrt(var)};
}

namespace detail {

// one Metropolis sweep: n attempted single-spin flips with cached fields
inline void metropolis_sweep(const InteractionMatrix& m, double beta,
                             std::vector<double>& s, Eigen::VectorXd& f,
                             std::mt19937_64& rng,
                             std::uniform_int_distribution<int>& pick,
                             std::uniform_real_distribution<double>& unif) {
  const int n = m.n;
  for (int t = 0; t < n; ++t) {
    int k = pick(rng);
    double delta = 2.0 * s[k] * (f(k) - m.entries(k, k) * s[k]);
    if (delta <= 0.0 || unif(rng) < std::exp(-beta * delta)) {
      s[k] = -s[k];
      f += (2.0 * s[k]) * m.entries.col(k);
    }
  }
}

struct ChainResult {
  std::map<std::string, std::pair<double, double>> estimates;  // mean, se
  long n_samples = 0;
};

inline ChainResult run_single_chain(const GibbsContext& ctx, const ChainConfig& cfg,
                                    const Observables& obs, std::uint64_t seed) {
  const InteractionMatrix& m = ctx.matrix;
  const int n = m.n;
  const double beta = ctx.beta;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = (rng() & 1u) ? 1.0 : -1.0;

  // cached local fields f_i = sum_j J_ij s_j
  Eigen::Map<Eigen::VectorXd> sv(s.data(), n);
  Eigen::VectorXd f = m.entries * sv;

  std::vector<std::string> keys;
  if (obs.energy_density) keys.push_back("h");
  if (obs.energy_density_sq) keys.push_back("h2");
  for (auto& p : obs.pairs) {
    if (p.first < 0 || p.first >= n || p.second < 0 || p.second >= n)
      throw std::invalid_argument("run_chain: pair index out of range");
    keys.push_back("s_" + std::to_string(p.first) + "_" + std::to_string(p.second));
  }
  if (keys.empty()) throw std::invalid_argument("run_chain: no observables requested");
  if (cfg.n_sweeps <= cfg.burn_in)
    throw std::invalid_argument("run_chain: n_sweeps must exceed burn_in");

  std::map<std::string, std::vector<double>> samples;
  for (auto& k : keys) samples[k] = {};

  const double diag_const =
      m.self_interaction == SelfInteraction::KeepDiagonal ? 0.5 * m.entries.trace() : 0.0;
  const double shift = ctx.shifted ? 0.5 : 0.0;

  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    metropolis_sweep(m, beta, s, f, rng, pick, unif);
    if ((sweep + 1) % 10000 == 0) {
      // cache integrity: fields must match a from-scratch recompute
      Eigen::VectorXd fresh = m.entries * sv;
      if ((fresh - f).cwiseAbs().maxCoeff() > 1e-9)
        throw std::logic_error("run_chain: local-field cache drifted");
      f = fresh;
    }
    if (sweep < cfg.burn_in) continue;
    if ((sweep - cfg.burn_in) % cfg.thinning != 0) continue;

    if (obs.energy_density || obs.energy_density_sq) {
      double h_off = -0.5 * (sv.dot(f) - m.entries.diagonal().dot(sv.cwiseAbs2()));
      double h = (h_off - diag_const + shift) / n;
      if (obs.energy_density) samples["h"].push_back(h);
      if (obs.energy_density_sq) samples["h2"].push_back(h * h);
    }
    for (std::size_t p = 0; p < obs.pairs.size(); ++p) {
      auto [i, j] = obs.pairs[p];
      samples[keys[(obs.energy_density ? 1 : 0) + (obs.energy_density_sq ? 1 : 0) + p]]
          .push_back(s[i] * s[j]);
    }
  }

  ChainResult res;
  for (auto& [k, v] : samples) {
    res.estimates[k] = blocked_jackknife(v);
    res.n_samples = static_cast<long>(v.size());
  }
  return res;
}

}  // namespace detail

// Metropolis single-spin-flip sampling. Chains are independent streams
// (seed + chain index); estimates are chain averages with jackknife errors
// combined in quadrature. The stale flag marks between-chain disagreement
// beyond 4 combined standard errors (expected in the glassy regime).
inline std::map<std::string, Estimate> run_chain(const GibbsContext& ctx,
                                                 const ChainConfig& cfg,
                                                 const Observables& obs) {
  if (ctx.matrix.n < 2) throw std::invalid_argument("run_chain: n >= 2 required");
  if (cfg.n_chains < 2) throw std::invalid_argument("run_chain: n_chains >= 2 required");

  std::vector<detail::ChainResult> chains;
  chains.reserve(cfg.n_chains);
  for (int c = 0; c < cfg.n_chains; ++c)
    chains.push_back(detail::run_single_chain(ctx, cfg, obs, cfg.seed + c));

  std::map<std::string, Estimate> out;
  for (auto& [key, first] : chains[0].estimates) {
    Estimate est;
    est.method = EstimateMethod::MC;
    double se2 = 0.0;
    for (auto& ch : chains) {
      est.value += ch.estimates.at(key).first;
      se2 += ch.estimates.at(key).second * ch.estimates.at(key).second;
      est.n_samples += ch.n_samples;
    }
    est.value /= cfg.n_chains;
    est.std_error = std::sqrt(se2) / cfg.n_chains;
    for (int a = 0; a < cfg.n_chains && !est.stale; ++a)
      for (int b = a + 1; b < cfg.n_chains; ++b) {
        auto [va, sa] = chains[a].estimates.at(key);
        auto [vb, sb] = chains[b].estimates.at(key);
        double comb = std::sqrt(sa * sa + sb * sb);
        if (comb > 0.0 && std::abs(va - vb) > 4.0 * comb) {
          est.stale = true;
          break;
        }
      }
    out[key] = est;
  }
  return out;
}

// Empirical visit counts over all 2^n configurations from a single chain,
// for stationarity diagnostics at small n. Bit b of the index is spin b
// (set = +1), matching SpinConfiguration.
inline std::vector<long> state_histogram(const GibbsContext& ctx, std::uint64_t seed,
                                         long n_sweeps, long burn_in) {
  const InteractionMatrix& m = ctx.matrix;
  const int n = m.n;
  if (n > 16) throw capacity_error("state_histogram: n <= 16 required");
  if (n_sweeps <= burn_in)
    throw std::invalid_argument("state_histogram: n_sweeps must exceed burn_in");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = (rng() & 1u) ? 1.0 : -1.0;
  Eigen::Map<Eigen::VectorXd> sv(s.data(), n);
  Eigen::VectorXd f = m.entries * sv;

  std::vector<long> counts(std::size_t(1) << n, 0);
  for (long sweep = 0; sweep < n_sweeps; ++sweep) {
    detail::metropolis_sweep(m, ctx.beta, s, f, rng, pick, unif);
    if (sweep < burn_in) continue;
    std::uint32_t bits = 0;
    for (int i = 0; i < n; ++i)
      if (s[i] > 0.0) bits |= 1u << i;
    ++counts[bits];
  }
  return counts;
}

}  // namespace spinfact

#endif
