#include "spinfact/gibbs.hpp"

#include <catch_amalgamated.hpp>

using namespace spinfact;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// independent from-scratch oracle: natural binary order, direct energy
double log_z_natural_order(const GibbsContext& ctx) {
  const int n = ctx.matrix.n;
  detail::LogSum ls;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits)
    ls.add(-ctx.beta * energy(ctx, SpinConfiguration{n, bits}));
  return ls.value();
}

}  // namespace

TEST_CASE("energy of hand-checked configurations") {
  GibbsContext cw2{build_curie_weiss(2), 1.0};
  CHECK_THAT(energy(cw2, {2, 0b11}), WithinAbs(-0.5, 1e-15));
  CHECK_THAT(energy(cw2, {2, 0b01}), WithinAbs(0.5, 1e-15));

  // CW: H = -M^2/(2n) + 1/2 - 1/2 shift-free form; all-up gives -(n-1)/2
  for (int n : {4, 7, 10}) {
    GibbsContext cw{build_curie_weiss(n), 1.0};
    CHECK_THAT(energy(cw, {n, (1u << n) - 1}), WithinAbs(-(n - 1) / 2.0, 1e-12));
    for (std::uint32_t bits : {0x3u, 0x5u, 0x9u}) {
      double m = 2.0 * std::popcount(bits) - n;
      CHECK_THAT(energy(cw, {n, bits}), WithinAbs(-m * m / (2.0 * n) + 0.5, 1e-12));
    }
  }

  GibbsContext bad{build_curie_weiss(3), 1.0};
  CHECK_THROWS_AS(energy(bad, {4, 0}), std::invalid_argument);
}

TEST_CASE("sine-model energies respect the orthogonality bounds") {
  GibbsContext ctx{build_sine(10), 1.0};
  auto [lo, hi] = energy_bounds_check(ctx);
  CHECK(lo >= -5.0);
  CHECK(hi <= 5.0);
}

TEST_CASE("exhaustive energy bounds for curie-weiss") {
  auto [lo6, hi6] = energy_bounds_check({build_curie_weiss(6), 1.0});
  CHECK_THAT(lo6, WithinAbs(-2.5, 1e-12));
  CHECK_THAT(hi6, WithinAbs(0.5, 1e-12));

  auto [lo2, hi2] = energy_bounds_check({build_curie_weiss(2), 1.0});
  CHECK_THAT(lo2, WithinAbs(-0.5, 1e-15));
  CHECK_THAT(hi2, WithinAbs(0.5, 1e-15));
}

TEST_CASE("two-spin curie-weiss has a closed-form partition function") {
  for (double beta : {0.0, 0.3, 1.2, 4.0}) {
    GibbsContext ctx{build_curie_weiss(2), beta};
    auto s = enumerate(ctx, 2, true);
    CHECK_THAT(s.log_z, WithinAbs(std::log(4.0 * std::cosh(beta / 2.0)), 1e-12));
    CHECK_THAT(s.two_point(0, 1), WithinAbs(std::tanh(beta / 2.0), 1e-12));
  }
}

TEST_CASE("infinite temperature reduces to the product measure") {
  for (auto m : {build_curie_weiss(8), build_sine(8)}) {
    auto s = enumerate({m, 0.0}, 3, true);
    double diag = m.self_interaction == SelfInteraction::KeepDiagonal
                      ? -0.5 * m.entries.trace() / 8.0
                      : 0.0;
    CHECK_THAT(s.log_z, WithinAbs(8.0 * std::log(2.0), 1e-12));
    CHECK_THAT(s.moment(1), WithinAbs(diag, 1e-12));
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j)
        CHECK_THAT(s.two_point(i, j), WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("gray-code incremental energy matches recomputation") {
  for (auto m : {build_curie_weiss(10), build_sine(10)}) {
    GibbsContext ctx{m, 0.7};
    double worst = 0.0;
    detail::for_each_config(ctx, [&](std::uint32_t bits, double e) {
      worst = std::max(worst, std::abs(e - energy(ctx, {10, bits})));
    });
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("log z is independent of enumeration order") {
  for (double beta : {0.2, 1.0, 3.0}) {
    GibbsContext ctx{build_sine(12), beta};
    CHECK_THAT(log_partition_function(ctx), WithinAbs(log_z_natural_order(ctx), 1e-10));
  }
}

TEST_CASE("two-point invariants") {
  GibbsContext ctx{build_curie_weiss(8), 0.7};
  auto s = enumerate(ctx, 2, true);
  for (int i = 0; i < 8; ++i) CHECK(s.two_point(i, i) == 1.0);
  double mn = 1.0, mx = -1.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(s.two_point(i, j)) <= 1.0);
      if (i != j) {
        mn = std::min(mn, s.two_point(i, j));
        mx = std::max(mx, s.two_point(i, j));
      }
    }
  // CW permutation symmetry
  CHECK(mx - mn <= 1e-12);
  // global spin-flip symmetry: <M> = 0
  CHECK_THAT(s.mag_mean, WithinAbs(0.0, 1e-12));
}

TEST_CASE("mean energy density ties to the pair correlation for CW") {
  for (int n : {6, 10}) {
    GibbsContext ctx{build_curie_weiss(n), 0.8};
    auto s = enumerate(ctx, 1, true);
    double expected = -((n - 1) / (2.0 * n)) * s.two_point(0, 1);
    CHECK_THAT(mean_energy_density(s), WithinAbs(expected, 1e-12));
  }
}

TEST_CASE("cumulants from moments") {
  GibbsContext ctx{build_sine(10), 0.5};
  auto s = enumerate(ctx, 4, false);
  auto kap = cumulants(s, 4);
  CHECK(kap[0] == s.moment(1));
  CHECK(kap[1] >= 0.0);
  CHECK_THAT(kap[1], WithinAbs(s.moment(2) - s.moment(1) * s.moment(1), 1e-14));
  CHECK_THROWS_AS(cumulants(s, 5), std::invalid_argument);
}

TEST_CASE("variance equals the second log-z derivative") {
  const double step = 1e-3;
  for (auto m : {build_curie_weiss(10), build_sine(10)}) {
    for (double beta : {0.4, 1.1}) {
      auto s = enumerate({m, beta}, 2, false);
      double var = cumulants(s, 2)[1];
      double d2 = (log_partition_function({m, beta + step}) - 2.0 * s.log_z +
                   log_partition_function({m, beta - step})) /
                  (step * step);
      CHECK_THAT(var, WithinRel(d2 / 100.0, 1e-6));
    }
  }
}

TEST_CASE("variance at infinite temperature matches a brute-force oracle") {
  // beta = 0, n = 4 CW: enumerate the 16 configurations by hand
  InteractionMatrix m = build_curie_weiss(4);
  double sum_h = 0.0, sum_h2 = 0.0;
  for (std::uint32_t bits = 0; bits < 16; ++bits) {
    double mg = 2.0 * std::popcount(bits) - 4.0;
    double h = (-mg * mg / 8.0 + 0.5) / 4.0;
    sum_h += h / 16.0;
    sum_h2 += h * h / 16.0;
  }
  auto s = enumerate({m, 0.0}, 2, false);
  CHECK_THAT(cumulants(s, 2)[1], WithinAbs(sum_h2 - sum_h * sum_h, 1e-14));
}

TEST_CASE("mgf identity holds exactly at finite n") {
  {
    GibbsContext ctx{build_curie_weiss(10), 0.5};
    auto [l0, r0] = mgf_check(ctx, 0.0);
    CHECK_THAT(l0, WithinAbs(1.0, 1e-13));
    CHECK(r0 == 1.0);
    auto [lhs, rhs] = mgf_check(ctx, 1.0);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
  {
    GibbsContext ctx{build_sine(12), 0.8};
    auto [lhs, rhs] = mgf_check(ctx, -2.0);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("the +1/2 shift only moves constants") {
  InteractionMatrix m = build_sine(8);
  auto plain = enumerate({m, 0.9, false}, 2, true);
  auto shifted = enumerate({m, 0.9, true}, 2, true);
  CHECK_THAT(shifted.log_z, WithinAbs(plain.log_z - 0.9 * 0.5, 1e-10));
  CHECK_THAT(shifted.moment(1), WithinAbs(plain.moment(1) + 0.5 / 8.0, 1e-12));
  CHECK((shifted.two_point - plain.two_point).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THAT(cumulants(shifted, 2)[1], WithinAbs(cumulants(plain, 2)[1], 1e-14));
}

TEST_CASE("large-beta-n accumulation stays finite (two-pass path)") {
  GibbsContext ctx{build_curie_weiss(14), 6.0};  // beta*n = 84 > 50
  auto s = enumerate(ctx, 2, false);
  CHECK(std::isfinite(s.log_z));
  // dominated by the two aligned states: log Z ~ log(2 e^{beta (n-1)/2})
  CHECK(s.log_z >= 6.0 * 6.5);
  CHECK_THAT(s.moment(1), WithinAbs(-13.0 / 28.0, 1e-3));
}

TEST_CASE("capacity limits are enforced") {
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(31, 31);
  GibbsContext ctx{make_custom(big, SelfInteraction::ZeroDiagonal), 1.0};
  CHECK_THROWS_AS(enumerate(ctx, 2, false), capacity_error);
  CHECK_THROWS_AS(enumerate({build_sine(8), 1.0}, 0, false), std::invalid_argument);
}
