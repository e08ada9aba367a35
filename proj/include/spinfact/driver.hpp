#ifndef SPINFACT_DRIVER_HPP
#define SPINFACT_DRIVER_HPP

#include "spinfact/analytics.hpp"
#include "spinfact/correlations.hpp"
#include "spinfact/montecarlo.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

namespace spinfact {

enum class Engine { Exact, MC, Auto };

struct spec_parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  Kind model = Kind::Sine;
  std::uint64_t seed = 1;
  std::vector<int> signs;  // random_orthogonal only; defaults to alternating +-1
  std::vector<double> betas;
  std::vector<int> ns;
  Engine engine = Engine::Auto;
  std::set<std::string> outputs;
  double lambda = 1.0;  // mgf_check
  bool shifted = false;
  long mc_sweeps = 100000;
  long mc_burn_in = -1;  // -1: max(1000, 10 n)
  int mc_chains = 2;
  int mc_thinning = 1;
};

inline const std::set<std::string>& known_outputs() {
  static const std::set<std::string> k = {
      "log_z",         "h_mean",       "h_var",       "factorization_gap",
      "starred_sum_2", "starred_sum_3", "lemma_terms", "subadditivity",
      "mgf_check"};
  return k;
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, F&& conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(conv(cell));
  }
  return out;
}

}  // namespace detail

// Flat `key = value` grammar; lists are comma-separated, '#' starts a comment.
inline SweepSpec parse_spec(std::istream& is) {
  SweepSpec spec;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw spec_parse_error("spec line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key = value`");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (val.empty()) fail("empty value for key `" + key + "`");

    try {
      if (key == "model") {
        if (val == "curie_weiss") spec.model = Kind::CurieWeiss;
        else if (val == "sine") spec.model = Kind::Sine;
        else if (val == "random_orthogonal") spec.model = Kind::RandomOrthogonal;
        else fail("unknown model `" + val + "`");
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else if (key == "signs") {
        spec.signs = detail::parse_list<int>(val, [](const std::string& c) { return std::stoi(c); });
      } else if (key == "betas") {
        spec.betas = detail::parse_list<double>(val, [](const std::string& c) { return std::stod(c); });
      } else if (key == "ns") {
        spec.ns = detail::parse_list<int>(val, [](const std::string& c) { return std::stoi(c); });
      } else if (key == "engine") {
        if (val == "exact") spec.engine = Engine::Exact;
        else if (val == "mc") spec.engine = Engine::MC;
        else if (val == "auto") spec.engine = Engine::Auto;
        else fail("unknown engine `" + val + "`");
      } else if (key == "outputs") {
        auto list = detail::parse_list<std::string>(val, [](const std::string& c) { return c; });
        for (auto& o : list) {
          if (!known_outputs().count(o)) fail("unknown output `" + o + "`");
          spec.outputs.insert(o);
        }
      } else if (key == "lambda") {
        spec.lambda = std::stod(val);
      } else if (key == "shifted") {
        spec.shifted = (val == "true" || val == "1");
      } else if (key == "mc_sweeps") {
        spec.mc_sweeps = std::stol(val);
      } else if (key == "mc_burn_in") {
        spec.mc_burn_in = std::stol(val);
      } else if (key == "mc_chains") {
        spec.mc_chains = std::stoi(val);
      } else if (key == "mc_thinning") {
        spec.mc_thinning = std::stoi(val);
      } else {
        fail("unknown key `" + key + "`");
      }
    } catch (const spec_parse_error&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("bad value: ") + e.what());
    }
  }
  if (spec.betas.empty()) throw spec_parse_error("spec: `betas` is required");
  if (spec.ns.empty()) throw spec_parse_error("spec: `ns` is required");
  if (spec.outputs.empty()) throw spec_parse_error("spec: `outputs` is required");
  return spec;
}

inline SweepSpec parse_spec_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw spec_parse_error("cannot open spec file " + path);
  return parse_spec(f);
}

struct ResultRow {
  std::string model;
  double beta = 0.0;
  int n = 0;
  std::string quantity;
  double value = 0.0;
  std::string method;  // "exact" | "mc"
  double std_error = 0.0;
};

struct FitRecord {
  std::string quantity;
  double beta = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n_points = 0;
};

struct VerifyResult {
  int exit_code = 0;
  std::vector<ResultRow> rows;
  std::vector<FitRecord> fits;
  std::vector<std::string> summary;     // human-readable pass/fail lines
  std::vector<std::string> capacity_errors;
};

namespace detail {

inline InteractionMatrix build_model(const SweepSpec& spec, int n) {
  switch (spec.model) {
    case Kind::CurieWeiss: return build_curie_weiss(n);
    case Kind::Sine:       return build_sine(n);
    case Kind::RandomOrthogonal: {
      std::vector<int> signs = spec.signs;
      if (signs.empty()) {
        signs.resize(n);
        for (int i = 0; i < n; ++i) signs[i] = i % 2 ? -1 : 1;
      }
      if (static_cast<int>(signs.size()) != n)
        throw capacity_error("signs length does not match n=" + std::to_string(n));
      return build_random_orthogonal(n, signs, spec.seed);
    }
    default:
      throw std::invalid_argument("build_model: unsupported model");
  }
}

inline Engine effective_engine(const SweepSpec& spec, int n) {
  if (spec.engine != Engine::Auto) return spec.engine;
  return n <= 20 ? Engine::Exact : Engine::MC;
}

// capacity cap for a quantity under the exact engine; -1 = unsupported
inline int exact_cap(const std::string& q) {
  if (q == "log_z" || q == "h_mean" || q == "h_var") return kEnumerationCap;
  if (q == "factorization_gap" || q == "lemma_terms" || q == "mgf_check") return 24;
  if (q == "starred_sum_2") return 12;
  if (q == "starred_sum_3") return 8;
  if (q == "subadditivity") return kEnumerationCap / 2;
  return -1;
}

inline bool mc_supports(const std::string& q) {
  return q == "h_mean" || q == "h_var";
}

}  // namespace detail

// Runs every requested check over the (beta, n) grid. Capacity-infeasible
// (quantity, n) combinations are reported and skipped; feasible work still
// runs so partial results are written. Exit codes: 0 pass, 2 capacity,
// 3 invariant or slope-band failure.
inline VerifyResult run_verify(const SweepSpec& spec, int threads = 1) {
  VerifyResult out;

  struct Point { double beta; int n; };
  std::vector<Point> grid;
  for (int n : spec.ns)
    for (double beta : spec.betas) grid.push_back({beta, n});

  // capacity pre-check
  std::set<std::pair<std::string, int>> skip;
  for (int n : spec.ns) {
    Engine eng = detail::effective_engine(spec, n);
    for (const std::string& q : spec.outputs) {
      if (eng == Engine::MC) {
        if (!detail::mc_supports(q)) {
          out.capacity_errors.push_back("capacity: `" + q + "` is not available from the MC engine (n=" +
                                        std::to_string(n) + ")");
          skip.insert({q, n});
        }
        continue;
      }
      int cap = detail::exact_cap(q);
      if (n > cap) {
        out.capacity_errors.push_back("capacity: `" + q + "` requires n <= " + std::to_string(cap) +
                                      ", got n=" + std::to_string(n));
        skip.insert({q, n});
      }
    }
  }

  std::vector<std::vector<ResultRow>> point_rows(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mtx;
  std::vector<std::string> worker_errors;

  auto work = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= grid.size()) return;
      const auto [beta, n] = grid[idx];
      std::vector<ResultRow>& rows = point_rows[idx];
      try {
        Engine eng = detail::effective_engine(spec, n);
        InteractionMatrix mat = detail::build_model(spec, n);
        GibbsContext ctx{mat, beta, spec.shifted};
        const std::string model = kind_name(mat.kind);
        auto want = [&](const std::string& q) {
          return spec.outputs.count(q) && !skip.count({q, n});
        };
        auto push = [&](const std::string& q, double v, const std::string& meth,
                        double se) {
          rows.push_back({model, beta, n, q, v, meth, se});
        };

        if (eng == Engine::Exact) {
          bool need_tp = want("factorization_gap") || want("lemma_terms");
          bool need_any = want("log_z") || want("h_mean") || want("h_var") || need_tp;
          EnsembleSummary sum;
          if (need_any) sum = enumerate(ctx, 2, need_tp);
          if (want("log_z")) push("log_z", sum.log_z, "exact", 0.0);
          if (want("h_mean")) push("h_mean", sum.moment(1), "exact", 0.0);
          if (want("h_var")) push("h_var", cumulants(sum, 2)[1], "exact", 0.0);
          if (want("factorization_gap")) {
            double g = n <= 12 ? factorization_gap(ctx, GapMethod::Oracle)
                               : factorization_gap_contraction(ctx, sum);
            push("factorization_gap", g, "exact", 0.0);
          }
          if (want("lemma_terms")) {
            push("lemma_trace_term", lemma_trace_term(mat, sum.two_point), "exact", 0.0);
            push("lemma_resolvent_term", lemma_resolvent_term(mat, sum.two_point), "exact", 0.0);
          }
          if (want("starred_sum_2")) push("starred_sum_2", starred_sum(ctx, 2), "exact", 0.0);
          if (want("starred_sum_3")) push("starred_sum_3", starred_sum(ctx, 3), "exact", 0.0);
          if (want("mgf_check")) {
            auto [lhs, rhs] = mgf_check(ctx, spec.lambda);
            push("mgf_abs_diff", std::abs(lhs - rhs), "exact", 0.0);
          }
          if (want("subadditivity")) {
            GibbsContext big{detail::build_model(spec, 2 * n), beta, spec.shifted};
            double lhs = log_partition_function(big) / (2.0 * n);
            double rhs = (need_any ? sum.log_z : log_partition_function(ctx)) / n;
            push("subadditivity_violation", lhs - rhs, "exact", 0.0);
          }
        } else {
          ChainConfig cfg;
          cfg.seed = spec.seed;
          cfg.n_sweeps = spec.mc_sweeps;
          cfg.burn_in = spec.mc_burn_in >= 0 ? spec.mc_burn_in
                                             : std::max<long>(1000, 10L * n);
          cfg.n_chains = spec.mc_chains;
          cfg.thinning = spec.mc_thinning;
          Observables obs;
          obs.energy_density = true;
          obs.energy_density_sq = want("h_var");
          auto est = run_chain(ctx, cfg, obs);
          if (want("h_mean"))
            push("h_mean", est["h"].value, "mc", est["h"].std_error);
          if (want("h_var")) {
            double h = est["h"].value, h2 = est["h2"].value;
            double se = std::sqrt(est["h2"].std_error * est["h2"].std_error +
                                  4.0 * h * h * est["h"].std_error * est["h"].std_error);
            push("h_var", h2 - h * h, "mc", se);
          }
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mtx);
        worker_errors.push_back("grid point beta=" + std::to_string(beta) + " n=" +
                                std::to_string(n) + ": " + e.what());
      }
    }
  };

  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& rows : point_rows)
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  for (auto& e : worker_errors) out.capacity_errors.push_back(e);

  // fits over n per (quantity, beta)
  const std::map<std::string, std::pair<double, double>> slope_bands = {
      {"factorization_gap", {-1.6, -0.6}},
      {"h_var", {-1.5, -0.7}},
      {"starred_sum_2", {-1.8, -0.6}},
      {"starred_sum_3", {-1.8, -0.6}},
  };
  bool all_pass = true;
  auto note = [&](bool ok, const std::string& what) {
    out.summary.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
    if (!ok) all_pass = false;
  };

  for (auto& [q, band] : slope_bands) {
    for (double beta : spec.betas) {
      std::vector<std::pair<int, double>> pts;
      for (auto& r : out.rows)
        if (r.quantity == q && r.beta == beta) pts.emplace_back(r.n, r.value);
      std::set<int> distinct;
      for (auto& p : pts) if (p.second != 0.0) distinct.insert(p.first);
      if (distinct.size() < 4) continue;
      ScalingSeries fit = fit_decay(pts);
      out.fits.push_back({q, beta, fit.slope, fit.intercept, fit.r_squared,
                          static_cast<int>(pts.size())});
      std::ostringstream msg;
      msg << q << " beta=" << beta << " slope=" << fit.slope << " in ["
          << band.first << ", " << band.second << "]";
      note(fit.slope >= band.first && fit.slope <= band.second, msg.str());
    }
  }

  for (auto& r : out.rows) {
    std::ostringstream tag;
    tag << r.quantity << " model=" << r.model << " beta=" << r.beta << " n=" << r.n;
    if (r.quantity == "mgf_abs_diff")
      note(r.value <= 1e-10, tag.str() + " |lhs-rhs|<=1e-10");
    else if (r.quantity == "lemma_resolvent_term" && r.model != "curie_weiss")
      note(std::abs(r.value - 1.0 / r.n) <= 1e-10, tag.str() + " == 1/n");
    else if (r.quantity == "lemma_trace_term" && r.model != "curie_weiss")
      // |tr J| <= 1 and |s^T J s| <= n for orthogonal J, so the term is
      // bounded by 1/n (not 1/(2n): the quadratic form is not the Hamiltonian)
      note(r.value <= 1.0 / r.n + 1e-12, tag.str() + " <= 1/n");
    else if (r.quantity == "subadditivity_violation" && r.model == "curie_weiss")
      note(r.value <= 1e-12, tag.str() + " <= 1e-12");
  }

  if (!out.capacity_errors.empty())
    out.exit_code = 2;
  else if (!all_pass)
    out.exit_code = 3;
  return out;
}

inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << "model,beta,n,quantity,value,method,std_error\n";
  for (auto& r : rows)
    os << r.model << ',' << detail::g17(r.beta) << ',' << r.n << ',' << r.quantity
       << ',' << detail::g17(r.value) << ',' << r.method << ','
       << detail::g17(r.std_error) << '\n';
}

inline void write_fits_json(const std::vector<FitRecord>& fits, std::ostream& os) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto& f : fits)
    arr.push_back({{"quantity", f.quantity},
                   {"beta", f.beta},
                   {"slope", f.slope},
                   {"intercept", f.intercept},
                   {"r2", f.r2},
                   {"n_points", f.n_points}});
  os << arr.dump(2) << '\n';
}

inline nlohmann::json summary_to_json(const EnsembleSummary& s) {
  nlohmann::json j{{"n", s.n},       {"beta", s.beta},   {"model", s.model},
                   {"log_z", s.log_z}, {"moments", s.moments}};
  if (s.has_two_point()) {
    std::vector<double> flat;
    flat.reserve(std::size_t(s.n) * s.n);
    for (int i = 0; i < s.n; ++i)
      for (int k = 0; k < s.n; ++k) flat.push_back(s.two_point(i, k));
    j["two_point"] = flat;
  }
  return j;
}

inline int cmd_verify(const SweepSpec& spec, const std::string& out_dir,
                      int threads = 1, bool verbose = false,
                      std::ostream& log = std::cout) {
  std::filesystem::create_directories(out_dir);
  VerifyResult res = run_verify(spec, threads);

  {
    std::ofstream f(out_dir + "/results.csv");
    write_results_csv(res.rows, f);
  }
  {
    std::ofstream f(out_dir + "/fits.json");
    write_fits_json(res.fits, f);
  }
  {
    std::ofstream f(out_dir + "/summary.txt");
    for (auto& e : res.capacity_errors) f << "CAPACITY " << e << '\n';
    for (auto& s : res.summary) f << s << '\n';
    f << (res.exit_code == 0 ? "ALL PASS" : "EXIT " + std::to_string(res.exit_code)) << '\n';
  }
  for (auto& e : res.capacity_errors) log << "CAPACITY " << e << '\n';
  for (auto& s : res.summary)
    if (verbose || s.rfind("FAIL", 0) == 0) log << s << '\n';
  log << (res.exit_code == 0 ? "verify: all checks passed"
                             : "verify: exit code " + std::to_string(res.exit_code))
      << '\n';
  return res.exit_code;
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<ResultRow> rows;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ResultRow r;
    std::string cell;
    std::getline(ss, r.model, ',');
    std::getline(ss, cell, ','); r.beta = std::stod(cell);
    std::getline(ss, cell, ','); r.n = std::stoi(cell);
    std::getline(ss, r.quantity, ',');
    std::getline(ss, cell, ','); r.value = std::stod(cell);
    std::getline(ss, r.method, ',');
    std::getline(ss, cell, ','); r.std_error = std::stod(cell);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Renders results.csv as an aligned table and emits per-quantity
// `<quantity>_vs_n.dat` files (one `n value` line per row, beta blocks
// separated by a blank line) next to it.
inline int cmd_table(const std::string& results_path, const std::string& out_dir,
                     std::ostream& os = std::cout) {
  std::vector<ResultRow> rows;
  try {
    rows = read_results_csv(results_path);
  } catch (const std::exception& e) {
    os << "error: " << e.what() << '\n';
    return 1;
  }
  if (rows.empty()) {
    os << "error: no result rows in " << results_path << '\n';
    return 1;
  }

  os << std::left << std::setw(20) << "model" << std::setw(10) << "beta"
     << std::setw(6) << "n" << std::setw(26) << "quantity" << std::setw(26)
     << "value" << std::setw(8) << "method" << "std_error\n";
  for (auto& r : rows)
    os << std::left << std::setw(20) << r.model << std::setw(10) << r.beta
       << std::setw(6) << r.n << std::setw(26) << r.quantity << std::setw(26)
       << detail::g17(r.value) << std::setw(8) << r.method << r.std_error << '\n';

  std::map<std::string, std::map<double, std::vector<std::pair<int, double>>>> by_q;
  for (auto& r : rows) by_q[r.quantity][r.beta].emplace_back(r.n, r.value);
  std::filesystem::create_directories(out_dir);
  for (auto& [q, betas] : by_q) {
    std::ofstream f(out_dir + "/" + q + "_vs_n.dat");
    for (auto& [beta, pts] : betas) {
      f << "# beta = " << detail::g17(beta) << '\n';
      auto sorted = pts;
      std::sort(sorted.begin(), sorted.end());
      for (auto& [n, v] : sorted) f << n << ' ' << detail::g17(v) << '\n';
      f << '\n';
    }
  }
  return 0;
}

}  // namespace spinfact

#endif
