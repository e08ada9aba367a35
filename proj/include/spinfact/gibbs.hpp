#ifndef SPINFACT_GIBBS_HPP
#define SPINFACT_GIBBS_HPP

#include "spinfact/interactions.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spinfact {

// Hard cap for full enumeration: the configuration index must fit a word
// and 2^n evaluations must stay desk-scale.
inline constexpr int kEnumerationCap = 30;

struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpinConfiguration {
  int n = 0;
  std::uint32_t bits = 0;  // bit i set <=> sigma_{i+1} = +1

  int spin(int i) const { return (bits >> i) & 1u ? +1 : -1; }
};

struct GibbsContext {
  InteractionMatrix matrix;
  double beta = 0.0;
  bool shifted = false;  // add +1/2 to H (zero-diagonal reading of the orthogonal model)
};

inline double energy(const GibbsContext& ctx, const SpinConfiguration& sigma) {
  const InteractionMatrix& m = ctx.matrix;
  if (sigma.n != m.n) throw std::invalid_argument("energy: dimension mismatch");
  double sum = 0.0;  // sum_{i<j} J_ij s_i s_j
  for (int i = 0; i < m.n; ++i) {
    double si = sigma.spin(i);
    for (int j = i + 1; j < m.n; ++j) sum += m.entries(i, j) * si * sigma.spin(j);
  }
  double h = -sum;
  if (m.self_interaction == SelfInteraction::KeepDiagonal)
    h -= 0.5 * m.entries.diagonal().sum();  // -(1/2) sum_{i,j} = -sum_{i<j} - (1/2) tr J
  if (ctx.shifted) h += 0.5;
  return h;
}

namespace detail {

// Streaming log-sum-exp accumulator.
struct LogSum {
  double max_x = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double x) {
    if (x <= max_x) {
      sum += std::exp(x - max_x);
    } else {
      sum = sum * std::exp(max_x - x) + 1.0;
      max_x = x;
    }
  }
  double value() const { return max_x + std::log(sum); }
};

// Visits all 2^n configurations in Gray-code order, keeping the energy
// incrementally: flipping spin b changes H by 2*s_b*(local field at b).
// f(bits, H) is called once per configuration. The energy is re-anchored
// from scratch periodically so rounding cannot drift over long runs.
template <class F>
void for_each_config(const GibbsContext& ctx, F&& f) {
  const InteractionMatrix& m = ctx.matrix;
  const int n = m.n;
  if (n > kEnumerationCap)
    throw capacity_error("enumeration limited to n <= " + std::to_string(kEnumerationCap));

  std::vector<double> s(n, -1.0);  // config 0: all spins down
  SpinConfiguration cfg{n, 0};
  double e = energy(ctx, cfg);
  std::uint64_t total = std::uint64_t(1) << n;
  std::uint32_t bits = 0;

  f(bits, e);
  for (std::uint64_t k = 1; k < total; ++k) {
    int b = std::countr_zero(k);
    double field = 0.0;
    for (int j = 0; j < n; ++j) field += m.entries(b, j) * s[j];
    field -= m.entries(b, b) * s[b];
    e += 2.0 * s[b] * field;
    s[b] = -s[b];
    bits ^= (std::uint32_t(1) << b);
    if ((k & 0xFFFF) == 0) e = energy(ctx, SpinConfiguration{n, bits});
    f(bits, e);
  }
}

}  // namespace detail

struct EnsembleSummary {
  int n = 0;
  double beta = 0.0;
  std::string model;
  double log_z = 0.0;
  std::vector<double> moments;  // moments[k-1] = <h^k>
  Eigen::MatrixXd two_point;    // empty unless requested
  double mag_mean = 0.0;        // <M_N>
  double mag_sq_mean = 0.0;     // <M_N^2>

  bool has_two_point() const { return two_point.size() > 0; }
  double moment(int k) const { return moments.at(k - 1); }
};

inline double log_partition_function(const GibbsContext& ctx) {
  detail::LogSum ls;
  const double beta = ctx.beta;
  detail::for_each_config(ctx, [&](std::uint32_t, double e) { ls.add(-beta * e); });
  return ls.value();
}

// Exact Gibbs summary by full enumeration. Single pass with a fixed
// exponent offset when beta*n <= 50, two passes (normalizing by the exact
// log Z) beyond that.
inline EnsembleSummary enumerate(const GibbsContext& ctx, int k_max = 2,
                                 bool want_two_point = false) {
  const int n = ctx.matrix.n;
  if (n > kEnumerationCap)
    throw capacity_error("enumerate: n exceeds the enumeration cap");
  if (k_max < 1 || k_max > 6)
    throw std::invalid_argument("enumerate: k_max must be in 1..6");
  const double beta = ctx.beta;

  EnsembleSummary out;
  out.n = n;
  out.beta = beta;
  out.model = kind_name(ctx.matrix.kind);
  out.moments.assign(k_max, 0.0);

  const bool two_pass = beta * n > 50.0;
  double offset;  // subtracted from every exponent before exp()
  if (two_pass) {
    offset = log_partition_function(ctx);
    out.log_z = offset;
  } else {
    offset = std::abs(beta) * (0.5 * n + 0.5);  // |H| <= n/2 (+ shift)
  }

  double z = 0.0;
  std::vector<double> mom(k_max, 0.0);
  std::vector<double> tp;
  if (want_two_point) tp.assign(std::size_t(n) * n, 0.0);
  double mag1 = 0.0, mag2 = 0.0;
  std::vector<double> s(n);

  detail::for_each_config(ctx, [&](std::uint32_t bits, double e) {
    double w = std::exp(-beta * e - offset);
    z += w;
    double h = e / n;
    double p = w;
    for (int k = 0; k < k_max; ++k) {
      p *= h;
      mom[k] += p;
    }
    double mg = 2.0 * std::popcount(bits) - n;
    mag1 += w * mg;
    mag2 += w * mg * mg;
    if (want_two_point) {
      for (int i = 0; i < n; ++i) s[i] = (bits >> i) & 1u ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) {
        double ws = w * s[i];
        double* row = tp.data() + std::size_t(i) * n;
        for (int j = i + 1; j < n; ++j) row[j] += ws * s[j];
      }
    }
  });

  if (!two_pass) out.log_z = offset + std::log(z);
  for (int k = 0; k < k_max; ++k) out.moments[k] = mom[k] / z;
  out.mag_mean = mag1 / z;
  out.mag_sq_mean = mag2 / z;
  if (want_two_point) {
    out.two_point.resize(n, n);
    for (int i = 0; i < n; ++i) {
      out.two_point(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        double v = tp[std::size_t(i) * n + j] / z;
        out.two_point(i, j) = v;
        out.two_point(j, i) = v;
      }
    }
  }
  return out;
}

inline double mean_energy_density(const EnsembleSummary& summary) {
  if (summary.moments.empty())
    throw std::invalid_argument("mean_energy_density: need k_max >= 1");
  return summary.moments[0];
}

// Moment -> cumulant recursion; cumulants[k-1] is the k-th cumulant of h_N,
// so cumulants[1] = Var h_N.
inline std::vector<double> cumulants(const EnsembleSummary& summary, int n_max) {
  if (n_max > static_cast<int>(summary.moments.size()))
    throw std::invalid_argument("cumulants: n_max exceeds available moments");
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  std::vector<double> kap(n_max, 0.0);
  for (int k = 1; k <= n_max; ++k) {
    double v = summary.moments[k - 1];
    for (int j = 1; j < k; ++j)
      v -= binom(k - 1, j - 1) * kap[j - 1] * summary.moments[k - j - 1];
    kap[k - 1] = v;
  }
  return kap;
}

// Both sides of <e^{-lambda h}> = Z(beta + lambda/n)/Z(beta), computed by
// distinct numerical routes (weighted average vs. two log-Z enumerations).
inline std::pair<double, double> mgf_check(const GibbsContext& ctx, double lambda) {
  const int n = ctx.matrix.n;
  if (n > 24) throw capacity_error("mgf_check: n <= 24 required");
  const double log_z = log_partition_function(ctx);
  const double beta = ctx.beta;

  double lhs = 0.0;
  detail::for_each_config(ctx, [&](std::uint32_t, double e) {
    lhs += std::exp(-beta * e - log_z) * std::exp(-lambda * e / n);
  });

  GibbsContext shifted_ctx = ctx;
  shifted_ctx.beta = beta + lambda / n;
  double rhs = std::exp(log_partition_function(shifted_ctx) - log_z);
  return {lhs, rhs};
}

// Exhaustive min/max of H over all configurations.
inline std::pair<double, double> energy_bounds_check(const GibbsContext& ctx) {
  if (ctx.matrix.n > 24) throw capacity_error("energy_bounds_check: n <= 24 required");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  detail::for_each_config(ctx, [&](std::uint32_t, double e) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  });
  return {lo, hi};
}

}  // namespace spinfact

#endif
