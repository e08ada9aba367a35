#ifndef SPINFACT_CORRELATIONS_HPP
#define SPINFACT_CORRELATIONS_HPP

#include "spinfact/gibbs.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <vector>

namespace spinfact {

// Fat diagonal D_r(N): tuples in which at least two indices coincide.
inline bool on_fat_diagonal(std::span<const int> idx) {
  for (std::size_t a = 0; a + 1 < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      if (idx[a] == idx[b]) return true;
  return false;
}

// |complement of D_r(N)| = N (N-1) ... (N-r+1)
inline std::uint64_t off_diagonal_count(int r, int n) {
  std::uint64_t c = 1;
  for (int k = 0; k < r; ++k) c *= std::uint64_t(n - k);
  return c;
}

// Exact 4-point (and optionally 6-point) correlation tensors from full
// enumeration, together with the two-point matrix they extend. Tensors are
// stored at strictly increasing index tuples; the accessor reduces repeated
// indices (sigma^2 = 1) before lookup.
struct CorrelationAccessor {
  EnsembleSummary summary;  // carries two_point
  InteractionMatrix matrix;
  int order = 2;            // highest stored tensor: 2, 4 or 6
  std::vector<double> four; // dense n^4, filled at i<j<l<m
  std::vector<double> six;  // dense n^6, filled at sorted tuples

  double two(int i, int j) const { return summary.two_point(i, j); }

  // <sigma_{idx_1} ... sigma_{idx_k}> for up to 6 surviving indices
  double expectation(std::vector<int> idx) const {
    std::sort(idx.begin(), idx.end());
    std::vector<int> kept;
    for (std::size_t a = 0; a < idx.size();) {
      std::size_t b = a;
      while (b < idx.size() && idx[b] == idx[a]) ++b;
      if ((b - a) % 2) kept.push_back(idx[a]);
      a = b;
    }
    switch (kept.size()) {
      case 0: return 1.0;
      case 2: return two(kept[0], kept[1]);
      case 4: {
        if (order < 4) throw capacity_error("expectation: 4-point tensor not accumulated");
        const int n = summary.n;
        return four[((std::size_t(kept[0]) * n + kept[1]) * n + kept[2]) * n + kept[3]];
      }
      case 6: {
        if (order < 6) throw capacity_error("expectation: 6-point tensor not accumulated");
        const std::size_t n = summary.n;
        std::size_t ix = 0;
        for (int v : kept) ix = ix * n + std::size_t(v);
        return six[ix];
      }
      default:
        if (kept.size() % 2) return 0.0;  // odd products vanish at zero field
        throw capacity_error("expectation: more than 6 distinct indices");
    }
  }
};

inline CorrelationAccessor accumulate_higher_moments(const GibbsContext& ctx, int order) {
  const int n = ctx.matrix.n;
  if (order != 4 && order != 6)
    throw std::invalid_argument("accumulate_higher_moments: order must be 4 or 6");
  if (order == 4 && n > 12) throw capacity_error("order-4 tensor requires n <= 12");
  if (order == 6 && n > 8) throw capacity_error("order-6 tensor requires n <= 8");

  CorrelationAccessor acc;
  acc.summary = enumerate(ctx, 3, /*want_two_point=*/true);
  acc.matrix = ctx.matrix;
  acc.order = order;
  const std::size_t nn = std::size_t(n);
  acc.four.assign(nn * nn * nn * nn, 0.0);
  if (order == 6) acc.six.assign(nn * nn * nn * nn * nn * nn, 0.0);

  const double beta = ctx.beta;
  const double log_z = acc.summary.log_z;
  std::vector<double> s(n);

  detail::for_each_config(ctx, [&](std::uint32_t bits, double e) {
    double w = std::exp(-beta * e - log_z);
    for (int i = 0; i < n; ++i) s[i] = (bits >> i) & 1u ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double wij = w * s[i] * s[j];
        for (int l = j + 1; l < n; ++l) {
          double wijl = wij * s[l];
          for (int m = l + 1; m < n; ++m) {
            acc.four[((nn * i + j) * nn + l) * nn + m] += wijl * s[m];
            if (order == 6) {
              double wijlm = wijl * s[m];
              for (int p = m + 1; p < n; ++p) {
                double w5 = wijlm * s[p];
                for (int q = p + 1; q < n; ++q)
                  acc.six[((((nn * i + j) * nn + l) * nn + m) * nn + p) * nn + q] += w5 * s[q];
              }
            }
          }
        }
      }
  });
  return acc;
}

// B = sum_{i != j} J_ij <sigma_i sigma_j>
inline double weighted_two_point_sum(const InteractionMatrix& m,
                                     const Eigen::MatrixXd& two_point) {
  double b = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      if (i != j) b += m.entries(i, j) * two_point(i, j);
  return b;
}

enum class GapMethod { Oracle, Contraction };

namespace detail {

// sum over tuples outside D_4 of J_ij J_lm <sigma_i sigma_j sigma_l sigma_m>
inline double off_diagonal_four_sum(const CorrelationAccessor& acc) {
  const int n = acc.summary.n;
  const InteractionMatrix& m = acc.matrix;
  double d = 0.0;
  std::vector<int> idx(4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double jij = m.entries(i, j);
      for (int l = 0; l < n; ++l) {
        if (l == i || l == j) continue;
        for (int q = 0; q < n; ++q) {
          if (q == i || q == j || q == l) continue;
          idx = {i, j, l, q};
          d += jij * m.entries(l, q) * acc.expectation(idx);
        }
      }
    }
  return d;
}

}  // namespace detail

inline double factorization_gap_contraction(const GibbsContext& ctx,
                                             const EnsembleSummary& sum);

// |LHS of the weighted factorization rule|: the off-fat-diagonal 4-point sum
// minus the product of off-diagonal 2-point sums, both weighted by J and
// divided by N^2. Oracle sums the exact 4-point tensor directly; Contraction
// reconstructs the same quantity from energy moments, the two-point matrix
// and J^2 by inclusion-exclusion over index-coincidence patterns.
inline double factorization_gap(const GibbsContext& ctx, GapMethod method) {
  const int n = ctx.matrix.n;
  const double nd = n;
  if (method == GapMethod::Oracle) {
    if (n > 12) throw capacity_error("factorization_gap(Oracle): n <= 12");
    CorrelationAccessor acc = accumulate_higher_moments(ctx, 4);
    double d = detail::off_diagonal_four_sum(acc);
    double b = weighted_two_point_sum(ctx.matrix, acc.summary.two_point);
    return std::abs((d - b * b) / (nd * nd));
  }

  if (n > 24) throw capacity_error("factorization_gap(Contraction): n <= 24");
  EnsembleSummary sum = enumerate(ctx, 2, /*want_two_point=*/true);
  return factorization_gap_contraction(ctx, sum);
}

// Contraction route from a precomputed summary (k_max >= 2, two_point set).
inline double factorization_gap_contraction(const GibbsContext& ctx,
                                            const EnsembleSummary& sum) {
  const int n = ctx.matrix.n;
  const double nd = n;
  const Eigen::MatrixXd& c = sum.two_point;
  const Eigen::MatrixXd& j = ctx.matrix.entries;
  const double shift = ctx.shifted ? 0.5 : 0.0;
  const double tr =
      ctx.matrix.self_interaction == SelfInteraction::KeepDiagonal ? j.trace() : 0.0;

  // A := sum_{i != j} J_ij s_i s_j = -2 H_raw - tr J, H_raw = n h - shift
  const double lin = 2.0 * shift - tr;  // A = -2 n h + lin
  double a2 = 4.0 * nd * nd * sum.moment(2) - 4.0 * nd * lin * sum.moment(1) + lin * lin;

  Eigen::MatrixXd j2 = j * j;
  double r = (j2.array() * c.array()).sum();              // sum_{j,m} (J^2)_jm c_jm
  double td = 0.0, qd = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    qd += j(i, i) * j(i, i);
    for (int m = 0; m < n; ++m) {
      td += j(i, i) * j(i, m) * c(i, m);
      if (m != i) s2 += j(i, m) * j(i, m);
    }
  }
  double s1p = r - 2.0 * td + qd;  // single-coincidence sum incl. j=m terms
  double d = a2 - 4.0 * s1p + 2.0 * s2;
  double b = weighted_two_point_sum(ctx.matrix, c);
  return std::abs((d - b * b) / (nd * nd));
}

// |(1/N^2) sum_{i,l,m} J_ii J_lm <sigma_l sigma_m>| ("<= 1/(2N)" bound)
inline double lemma_trace_term(const InteractionMatrix& m, const Eigen::MatrixXd& two_point) {
  double full = (m.entries.array() * two_point.array()).sum();  // includes diagonal
  return std::abs(m.entries.trace() * full) / (double(m.n) * m.n);
}

inline double lemma_trace_term(const GibbsContext& ctx) {
  if (ctx.matrix.n > 24) throw capacity_error("lemma_trace_term: n <= 24");
  EnsembleSummary sum = enumerate(ctx, 1, /*want_two_point=*/true);
  return lemma_trace_term(ctx.matrix, sum.two_point);
}

// (1/N^2) sum_{i,j,m} J_ij J_jm <sigma_i sigma_m> ("= 1/N" identity when
// J^2 = I; computed honestly through the enumerated two-point matrix)
inline double lemma_resolvent_term(const InteractionMatrix& m,
                                   const Eigen::MatrixXd& two_point) {
  Eigen::MatrixXd j2 = m.entries * m.entries;
  return (j2.array() * two_point.array()).sum() / (double(m.n) * m.n);
}

inline double lemma_resolvent_term(const GibbsContext& ctx) {
  if (ctx.matrix.n > 24) throw capacity_error("lemma_resolvent_term: n <= 24");
  EnsembleSummary sum = enumerate(ctx, 1, /*want_two_point=*/true);
  return lemma_resolvent_term(ctx.matrix, sum.two_point);
}

// Pairwise connected correlation of 1..3 spin pairs (joint cumulant of the
// products p_k = sigma_{i_k} sigma_{j_k}), expanded in raw expectations.
inline double connected_correlation(const CorrelationAccessor& acc,
                                    const std::vector<std::pair<int, int>>& pairs) {
  auto join = [&](std::initializer_list<int> which) {
    std::vector<int> idx;
    for (int k : which) {
      idx.push_back(pairs[k].first);
      idx.push_back(pairs[k].second);
    }
    return acc.expectation(std::move(idx));
  };
  switch (pairs.size()) {
    case 1:
      return join({0});
    case 2:
      return join({0, 1}) - join({0}) * join({1});
    case 3: {
      double e1 = join({0}), e2 = join({1}), e3 = join({2});
      return join({0, 1, 2}) - join({0, 1}) * e3 - join({0, 2}) * e2 -
             join({1, 2}) * e1 + 2.0 * e1 * e2 * e3;
    }
    default:
      throw std::invalid_argument("connected_correlation: 1..3 pairs supported");
  }
}

// (1/N^n) sum over all index tuples of J...J <p_1,...,p_n>_c. By
// multilinearity of joint cumulants this equals (-2)^n times the n-th
// cumulant of h_N; the direct-summation oracle below checks that route.
inline double weighted_cumulant_sum(const GibbsContext& ctx, int order) {
  if (order != 2 && order != 3)
    throw std::invalid_argument("weighted_cumulant_sum: order must be 2 or 3");
  if (ctx.matrix.n > 24) throw capacity_error("weighted_cumulant_sum: n <= 24");
  EnsembleSummary sum = enumerate(ctx, order, false);
  std::vector<double> kap = cumulants(sum, order);
  double sign = order % 2 ? -1.0 : 1.0;
  return sign * std::pow(2.0, order) * kap[order - 1];
}

inline double weighted_cumulant_sum_direct(const CorrelationAccessor& acc, int order) {
  const int n = acc.summary.n;
  const Eigen::MatrixXd& j = acc.matrix.entries;
  double total = 0.0;
  std::vector<std::pair<int, int>> pairs;
  if (order == 2) {
    if (acc.order < 4) throw capacity_error("need the order-4 tensor");
    for (int i1 = 0; i1 < n; ++i1)
      for (int j1 = 0; j1 < n; ++j1)
        for (int i2 = 0; i2 < n; ++i2)
          for (int j2 = 0; j2 < n; ++j2) {
            pairs = {{i1, j1}, {i2, j2}};
            total += j(i1, j1) * j(i2, j2) * connected_correlation(acc, pairs);
          }
    return total / (double(n) * n);
  }
  if (order == 3) {
    if (acc.order < 6) throw capacity_error("need the order-6 tensor");
    for (int i1 = 0; i1 < n; ++i1)
      for (int j1 = 0; j1 < n; ++j1)
        for (int i2 = 0; i2 < n; ++i2)
          for (int j2 = 0; j2 < n; ++j2)
            for (int i3 = 0; i3 < n; ++i3)
              for (int j3 = 0; j3 < n; ++j3) {
                pairs = {{i1, j1}, {i2, j2}, {i3, j3}};
                total += j(i1, j1) * j(i2, j2) * j(i3, j3) *
                         connected_correlation(acc, pairs);
              }
    return total / (double(n) * n * n);
  }
  throw std::invalid_argument("weighted_cumulant_sum_direct: order must be 2 or 3");
}

// Starred sum: expand the connected correlation in raw expectations, then
// restrict each expectation's indices to be pairwise distinct. The order-3
// expansion carries coefficient +2 on the triple product term.
inline double starred_sum(const GibbsContext& ctx, int order) {
  const int n = ctx.matrix.n;
  const double nd = n;
  if (order == 2) {
    if (n > 12) throw capacity_error("starred_sum order 2: n <= 12");
    CorrelationAccessor acc = accumulate_higher_moments(ctx, 4);
    double d = detail::off_diagonal_four_sum(acc);
    double b = weighted_two_point_sum(ctx.matrix, acc.summary.two_point);
    return (d - b * b) / (nd * nd);
  }
  if (order == 3) {
    if (n > 8) throw capacity_error("starred_sum order 3: n <= 8");
    CorrelationAccessor acc = accumulate_higher_moments(ctx, 6);
    const Eigen::MatrixXd& j = ctx.matrix.entries;
    double u6 = 0.0;
    std::array<int, 6> t{};
    std::vector<int> idx(6);
    for (t[0] = 0; t[0] < n; ++t[0])
      for (t[1] = 0; t[1] < n; ++t[1])
        for (t[2] = 0; t[2] < n; ++t[2])
          for (t[3] = 0; t[3] < n; ++t[3])
            for (t[4] = 0; t[4] < n; ++t[4])
              for (t[5] = 0; t[5] < n; ++t[5]) {
                if (on_fat_diagonal(std::span<const int>(t.data(), 6))) continue;
                idx.assign(t.begin(), t.end());
                u6 += j(t[0], t[1]) * j(t[2], t[3]) * j(t[4], t[5]) *
                      acc.expectation(idx);
              }
    double u4 = detail::off_diagonal_four_sum(acc);
    double b = weighted_two_point_sum(ctx.matrix, acc.summary.two_point);
    return (u6 - 3.0 * u4 * b + 2.0 * b * b * b) / (nd * nd * nd);
  }
  throw std::invalid_argument("starred_sum: order must be 2 or 3");
}

}  // namespace spinfact

#endif
