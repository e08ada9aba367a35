#ifndef SPINFACT_ANALYTICS_HPP
#define SPINFACT_ANALYTICS_HPP

#include "spinfact/gibbs.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace spinfact {

struct ScalingSeries {
  std::vector<std::pair<int, double>> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// High-temperature Curie-Weiss limit of G_N = log Z_N - N log 2.
inline double cw_free_energy_limit(double beta) {
  if (beta < 0.0 || beta >= 1.0)
    throw std::domain_error("cw_free_energy_limit: requires 0 <= beta < 1");
  return -beta / 2.0 - std::log(std::sqrt(1.0 - beta));
}

// Variant with self-interaction included (diagonal kept in the CW matrix).
inline double cw_free_energy_limit_self(double beta) {
  if (beta < 0.0 || beta >= 1.0)
    throw std::domain_error("cw_free_energy_limit_self: requires 0 <= beta < 1");
  return -std::log(std::sqrt(1.0 - beta));
}

// Orthogonal-model limit of G_N = (log Z_N - N log 2)/N.
inline double om_free_energy_limit(double beta) {
  double r = std::sqrt(1.0 + 4.0 * beta * beta);
  return 0.25 * (r - std::log((1.0 + r) / 2.0) - 1.0);
}

// <h> = -G'(beta) for the orthogonal model.
inline double om_mean_energy_limit(double beta) {
  return -beta / (1.0 + std::sqrt(1.0 + 4.0 * beta * beta));
}

// Least-squares line on (log n, log |value|); exact zeros are dropped.
inline ScalingSeries fit_decay(const std::vector<std::pair<int, double>>& points) {
  ScalingSeries out;
  out.points = points;
  std::vector<std::pair<double, double>> xy;
  for (auto& [n, v] : points)
    if (v != 0.0) xy.emplace_back(std::log(double(n)), std::log(std::abs(v)));
  if (xy.size() < 4)
    throw std::invalid_argument("fit_decay: need >= 4 nonzero points");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto& [x, y] : xy) {
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double m = static_cast<double>(xy.size());
  double cxx = sxx - sx * sx / m;
  double cxy = sxy - sx * sy / m;
  double cyy = syy - sy * sy / m;
  out.slope = cxy / cxx;
  out.intercept = (sy - out.slope * sx) / m;
  out.r_squared = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return out;
}

struct SubadditivityRow {
  double beta = 0.0;
  int n = 0;
  double lhs = 0.0;   // (1/2n) log Z_{2n}
  double rhs = 0.0;   // (1/n) log Z_n
  double violation = 0.0;  // lhs - rhs, must be <= tolerance
};

// Checks (1/2n) log Z_{2n} <= (1/n) log Z_n for the Curie-Weiss model.
inline std::vector<SubadditivityRow> subadditivity_report(const std::vector<double>& betas,
                                                          const std::vector<int>& ns) {
  std::vector<SubadditivityRow> rows;
  for (int n : ns) {
    if (2 * n > kEnumerationCap)
      throw capacity_error("subadditivity_report: 2n exceeds enumeration cap");
    InteractionMatrix jn = build_curie_weiss(n);
    InteractionMatrix j2n = build_curie_weiss(2 * n);
    for (double beta : betas) {
      SubadditivityRow row;
      row.beta = beta;
      row.n = n;
      row.rhs = log_partition_function({jn, beta}) / n;
      row.lhs = log_partition_function({j2n, beta}) / (2.0 * n);
      row.violation = row.lhs - row.rhs;
      rows.push_back(row);
    }
  }
  return rows;
}

// Var h_N versus N for a model family, with its log-log decay fit.
inline ScalingSeries variance_vanishing_report(
    const std::function<InteractionMatrix(int)>& model, double beta,
    const std::vector<int>& ns) {
  std::vector<std::pair<int, double>> pts;
  for (int n : ns) {
    EnsembleSummary s = enumerate({model(n), beta}, 2, false);
    std::vector<double> kap = cumulants(s, 2);
    pts.emplace_back(n, kap[1]);
  }
  return fit_decay(pts);
}

}  // namespace spinfact

#endif
