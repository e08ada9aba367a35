#ifndef SPINFACT_INTERACTIONS_HPP
#define SPINFACT_INTERACTIONS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinfact {

enum class Kind { CurieWeiss, Sine, RandomOrthogonal, Custom };

// Whether the diagonal of J enters the Hamiltonian.
enum class SelfInteraction { ZeroDiagonal, KeepDiagonal };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::CurieWeiss:       return "curie_weiss";
    case Kind::Sine:             return "sine";
    case Kind::RandomOrthogonal: return "random_orthogonal";
    case Kind::Custom:           return "custom";
  }
  return "unknown";
}

// Symmetric real coupling matrix, immutable after construction.
struct InteractionMatrix {
  int n = 0;
  Eigen::MatrixXd entries;
  Kind kind = Kind::Custom;
  SelfInteraction self_interaction = SelfInteraction::ZeroDiagonal;

  double operator()(int i, int j) const { return entries(i, j); }
};

inline InteractionMatrix build_curie_weiss(int n) {
  if (n < 2) throw std::invalid_argument("build_curie_weiss: need n >= 2");
  InteractionMatrix m;
  m.n = n;
  m.entries = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  m.entries.diagonal().setZero();
  m.kind = Kind::CurieWeiss;
  m.self_interaction = SelfInteraction::ZeroDiagonal;
  return m;
}

// J_ij = 2/sqrt(2n+1) * sin(2*pi*i*j/(2n+1)), indices 1..n.
// Orthogonal for every n; the diagonal is part of the model.
inline InteractionMatrix build_sine(int n) {
  if (n < 2) throw std::invalid_argument("build_sine: need n >= 2");
  InteractionMatrix m;
  m.n = n;
  m.entries.resize(n, n);
  const double q = 2.0 * n + 1.0;
  const double amp = 2.0 / std::sqrt(q);
  const double two_pi = 2.0 * M_PI;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // angle reduced mod 2N+1 before multiplying by 2*pi to keep
      // the argument small at large n
      double prod = std::fmod(double(i + 1) * double(j + 1), q);
      double v = amp * std::sin(two_pi * prod / q);
      m.entries(i, j) = v;
      m.entries(j, i) = v;
    }
  }
  m.kind = Kind::Sine;
  m.self_interaction = SelfInteraction::KeepDiagonal;
  return m;
}

// J = O diag(signs) O^T with O Haar-distributed: Gaussian matrix,
// QR, R-diagonal sign normalization. Deterministic for a fixed seed.
inline InteractionMatrix build_random_orthogonal(int n, const std::vector<int>& signs,
                                                 std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("build_random_orthogonal: need n >= 2");
  if (static_cast<int>(signs.size()) != n)
    throw std::invalid_argument("build_random_orthogonal: signs must have length n");
  for (int s : signs)
    if (s != 1 && s != -1)
      throw std::invalid_argument("build_random_orthogonal: signs entries must be +-1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd o = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) o.col(j) = -o.col(j);

  Eigen::VectorXd l(n);
  for (int i = 0; i < n; ++i) l(i) = signs[i];
  Eigen::MatrixXd j = o * l.asDiagonal() * o.transpose();
  j = ((j + j.transpose()) / 2.0).eval();  // exact symmetry

  InteractionMatrix m;
  m.n = n;
  m.entries = std::move(j);
  m.kind = Kind::RandomOrthogonal;
  m.self_interaction = SelfInteraction::KeepDiagonal;
  return m;
}

inline InteractionMatrix make_custom(Eigen::MatrixXd entries, SelfInteraction si) {
  if (entries.rows() != entries.cols() || entries.rows() < 2)
    throw std::invalid_argument("make_custom: need a square matrix, n >= 2");
  Eigen::MatrixXd sym = ((entries + entries.transpose()) / 2.0).eval();
  InteractionMatrix m;
  m.n = static_cast<int>(sym.rows());
  m.entries = std::move(sym);
  m.kind = Kind::Custom;
  m.self_interaction = si;
  return m;
}

// max-norm of J J^T - I
inline double orthogonality_defect(const InteractionMatrix& m) {
  Eigen::MatrixXd d = m.entries * m.entries.transpose()
                    - Eigen::MatrixXd::Identity(m.n, m.n);
  return d.cwiseAbs().maxCoeff();
}

struct TracePair {
  double trace = 0.0;
  double trace_of_squares = 0.0;
};

inline TracePair trace_identities(const InteractionMatrix& m) {
  TracePair t;
  for (int i = 0; i < m.n; ++i) {
    double d = m.entries(i, i);
    t.trace += d;
    t.trace_of_squares += d * d;
  }
  return t;
}

namespace detail {
inline std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_matrix_csv(const InteractionMatrix& m, std::ostream& os) {
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      if (j) os << ',';
      os << detail::g17(m.entries(i, j));
    }
    os << '\n';
  }
}

inline void write_matrix_csv(const InteractionMatrix& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  write_matrix_csv(m, f);
}

inline InteractionMatrix read_matrix_csv(std::istream& is,
                                         SelfInteraction si = SelfInteraction::KeepDiagonal) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd e(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw std::runtime_error("read_matrix_csv: ragged or non-square matrix");
    for (int j = 0; j < n; ++j) e(i, j) = rows[i][j];
  }
  return make_custom(std::move(e), si);
}

inline InteractionMatrix read_matrix_csv(const std::string& path,
                                         SelfInteraction si = SelfInteraction::KeepDiagonal) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_matrix_csv: cannot open " + path);
  return read_matrix_csv(f, si);
}

}  // namespace spinfact

#endif
