#include <doctest.h>

#include <cmath>
#include <vector>

#include "nivtest/nulldist.hpp"
#include "nivtest/rng.hpp"
#include "oracles.hpp"

using namespace nivtest;
using nulldist::MixtureWeights;
using Eigen::VectorXd;

namespace {

MixtureWeights weights(std::initializer_list<double> vals) {
  VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return MixtureWeights(v);
}

constexpr double kChi1Q95 = 3.8414588206941254;  // chi^2(1) 0.95 quantile
constexpr double kChi2Q95 = 5.9914645471079799;  // chi^2(2) 0.95 quantile

}  // namespace

TEST_SUITE("nulldist") {

TEST_CASE("MixtureWeights validation and ordering") {
  const auto w = weights({0.5, 2.0, 1.0});
  CHECK(w.lambdas()(0) == 2.0);
  CHECK(w.lambdas()(2) == 0.5);
  CHECK(!w.degenerate());
  CHECK(weights({0.0, 0.0}).degenerate());
  VectorXd neg(2);
  neg << 1.0, -0.1;
  CHECK_THROWS_AS(MixtureWeights{neg}, Error);
}

TEST_CASE("mixture_survival matches the chi-square(1) closed form") {
  const auto w = weights({1.0});
  // P(chi2_1 > x) = erfc(sqrt(x/2))
  for (double x : {0.1, 0.5, 1.0, 2.0, 3.8414588206941254, 6.0, 10.0}) {
    const double oracle = std::erfc(std::sqrt(0.5 * x));
    CHECK(std::abs(nulldist::mixture_survival(w, x) - oracle) <= 2e-7);
  }
  CHECK(nulldist::mixture_survival(w, 0.0) == 1.0);
  CHECK(nulldist::mixture_survival(w, -1.0) == 1.0);
}

TEST_CASE("mixture_survival matches the chi-square(2) closed form") {
  const auto w = weights({1.0, 1.0});
  // P(chi2_2 > x) = exp(-x/2)
  for (double x : {0.2, 1.0, 3.0, 5.9914645471079799, 9.0, 14.0}) {
    CHECK(std::abs(nulldist::mixture_survival(w, x) - std::exp(-0.5 * x)) <=
          2e-7);
  }
}

TEST_CASE("mixture_survival agrees with the Ruben series oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(500 + seed);
    const int m = 1 + static_cast<int>(rng.next_u64() % 6);
    std::vector<double> lam(m);
    VectorXd lamv(m);
    for (int j = 0; j < m; ++j) {
      lam[j] = 0.3 + 1.7 * rng.next_uniform();
      lamv(j) = lam[j];
    }
    const MixtureWeights w{lamv};
    double total = 0.0;
    for (double l : lam) total += l;
    for (double frac : {0.3, 1.0, 2.5}) {
      const double x = frac * total;
      const double mine = nulldist::mixture_survival(w, x);
      const double ref = oracles::ruben_survival(lam, x);
      CHECK(std::abs(mine - ref) <= 1e-7);
    }
  }
}

TEST_CASE("mixture_survival shape properties") {
  const auto w = weights({1.5, 0.7, 0.1});
  double prev = 1.0;
  for (double x = 0.0; x <= 30.0; x += 0.5) {
    const double s = nulldist::mixture_survival(w, x);
    CHECK(s <= prev + 1e-9);
    prev = s;
  }
  const double total = 2.3;
  CHECK(nulldist::mixture_survival(w, total * 1e3) <= 1e-9);
  CHECK_THROWS_AS((void)nulldist::mixture_survival(weights({0.0}), 1.0), Error);
}

TEST_CASE("appending zero weights changes nothing") {
  const auto w1 = weights({1.3, 0.4});
  const auto w2 = weights({1.3, 0.4, 0.0, 0.0, 0.0});
  for (double x : {0.5, 2.0, 6.0}) {
    CHECK(std::abs(nulldist::mixture_survival(w1, x) -
                   nulldist::mixture_survival(w2, x)) <= 1e-9);
  }
  CHECK(std::abs(nulldist::mixture_quantile(w1, 0.05) -
                 nulldist::mixture_quantile(w2, 0.05)) <= 1e-9);
}

TEST_CASE("mixture_quantile on chi-square cases") {
  CHECK(std::abs(nulldist::mixture_quantile(weights({1.0}), 0.05) - kChi1Q95) <=
        1e-3);
  CHECK(std::abs(nulldist::mixture_quantile(weights({2.0}), 0.05) -
                 2.0 * kChi1Q95) <= 2e-3);
  CHECK(std::abs(nulldist::mixture_quantile(weights({1.0, 1.0}), 0.05) -
                 kChi2Q95) <= 1e-3);
  CHECK_THROWS_AS((void)nulldist::mixture_quantile(weights({0.0}), 0.05),
                  Error);
  CHECK_THROWS_AS((void)nulldist::mixture_quantile(weights({1.0}), 0.0), Error);
}

TEST_CASE("mixture_quantile scale equivariance") {
  CounterRng rng(77);
  for (int rep = 0; rep < 5; ++rep) {
    const int m = 1 + static_cast<int>(rng.next_u64() % 5);
    VectorXd lam(m);
    for (int j = 0; j < m; ++j) lam(j) = 0.1 + 2.0 * rng.next_uniform();
    const double c = 0.3 + 4.0 * rng.next_uniform();
    const double q1 = nulldist::mixture_quantile(MixtureWeights{lam}, 0.05);
    const double qc =
        nulldist::mixture_quantile(MixtureWeights{(c * lam).eval()}, 0.05);
    CHECK(std::abs(qc - c * q1) <= 1e-5 * std::abs(c * q1));
  }
}

TEST_CASE("quantile solves survival = alpha within 1e-6") {
  const auto w = weights({1.7, 0.9, 0.3, 0.05});
  for (double alpha : {0.01, 0.05, 0.2, 0.7}) {
    const double q = nulldist::mixture_quantile(w, alpha);
    CHECK(std::abs(nulldist::mixture_survival(w, q) - alpha) <= 1e-6);
  }
}

TEST_CASE("mixture_quantile_mc basics") {
  const auto w = weights({1.0});
  const double q = nulldist::mixture_quantile_mc(w, 0.05, 200000, 9);
  CHECK(std::abs(q - kChi1Q95) <= 0.02 * kChi1Q95);

  // a single draw is its own empirical quantile
  const double single = nulldist::mixture_quantile_mc(w, 0.05, 1, 42);
  CounterRng rng(42);
  const double g = rng.next_normal();
  CHECK(single == g * g);

  // zero weights draw nothing, so padding is bit-identical
  CHECK(nulldist::mixture_quantile_mc(weights({0.0, 0.0, 1.0}), 0.05, 1000, 7) ==
        nulldist::mixture_quantile_mc(weights({1.0}), 0.05, 1000, 7));

  // deterministic in the seed
  CHECK(nulldist::mixture_quantile_mc(w, 0.1, 5000, 3) ==
        nulldist::mixture_quantile_mc(w, 0.1, 5000, 3));

  CHECK_THROWS_AS((void)nulldist::mixture_quantile_mc(w, 0.05, 0, 1), Error);
}

TEST_CASE("Imhof vs Monte Carlo on random mixtures") {
  // lighter version of the acceptance sweep: 6 mixtures, 1e5 draws
  CounterRng rng(2024);
  for (int rep = 0; rep < 6; ++rep) {
    const int m = 1 + static_cast<int>(rng.next_u64() % 30);
    VectorXd lam(m);
    for (int j = 0; j < m; ++j) lam(j) = 2.0 * rng.next_uniform();
    lam(0) = std::max(lam(0), 0.05);
    const MixtureWeights w{lam};
    const double q = nulldist::mixture_quantile(w, 0.05);
    const double qmc = nulldist::mixture_quantile_mc(w, 0.05, 100000, rep + 10);
    CHECK(std::abs(q - qmc) <= 0.035 * q);
  }
}

TEST_CASE("normal_quantile") {
  CHECK(nulldist::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(nulldist::normal_quantile(0.05) -
                 oracles::normal_upper_quantile_erfc(0.05)) <= 1e-8);
  CHECK(std::abs(nulldist::normal_quantile(0.05) - 1.6448536269514722) <= 1e-8);
  CHECK(std::abs(nulldist::normal_quantile(0.025) - 1.959963984540054) <= 1e-8);
  CHECK(std::abs(nulldist::normal_quantile(0.999) -
                 oracles::normal_upper_quantile_erfc(0.999)) <= 1e-8);
  CHECK_THROWS_AS((void)nulldist::normal_quantile(0.0), Error);
  CHECK_THROWS_AS((void)nulldist::normal_quantile(1.0), Error);
}

TEST_CASE("ruben oracle self-check against chi-square closed forms") {
  CHECK(std::abs(oracles::ruben_survival({1.0}, 3.0) -
                 std::erfc(std::sqrt(1.5))) <= 1e-11);
  CHECK(std::abs(oracles::ruben_survival({1.0, 1.0}, 5.0) - std::exp(-2.5)) <=
        1e-11);
  CHECK(std::abs(oracles::ruben_survival({2.0, 2.0, 2.0, 2.0}, 10.0) -
                 (1.0 + 2.5) * std::exp(-2.5)) <= 1e-11);
}

}  // TEST_SUITE
