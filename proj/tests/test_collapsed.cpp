#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bpatch/collapsed.hpp"
#include "bpatch/rng.hpp"
#include "oracles.hpp"

using namespace bpatch;

namespace {

// quadrature of the Beta-Binomial column marginal:
// integral of qt^c (1-qt)^(N-c) dBeta(qt; q', sigma2)
double quad_marginal(int c, int n, double q, double sigma2) {
  const double qp = q_prime(q, sigma2);
  return oracle::beta_integral(qp + c, sigma2 + n - c) / oracle::beta_integral(qp, sigma2);
}

double quad_qtilde_mean(int c, int n, double q, double sigma2) {
  const double a = q_prime(q, sigma2) + c, b = sigma2 + n - c;
  return oracle::beta_integral(a + 1.0, b) / oracle::beta_integral(a, b);
}

// mean of the x-th Dirichlet(g + e_x) coordinate via its Beta marginal
double quad_dirichlet_mean(std::span<const double> g, int x) {
  double total = 0;
  for (double v : g) total += v;
  const double a = g[x] + 1.0, b = total - g[x];
  return oracle::beta_integral(a + 1.0, b) / oracle::beta_integral(a, b);
}

}  // namespace

TEST_CASE("beta-binomial column marginal", "[collapsed]") {
  SECTION("worked two-case column") {
    // N=2, c=1, sigma2=1, q=1/2 makes q'=1 and the marginal B(2,2)/B(1,1)=1/6
    const double lm = log_marginal_w_column(1, 2, 0.5, 1.0);
    REQUIRE_THAT(lm, Catch::Matchers::WithinAbs(std::log(1.0 / 6.0), 1e-12));
    REQUIRE_THAT(lm, Catch::Matchers::WithinAbs(std::log(quad_marginal(1, 2, 0.5, 1.0)), 1e-9));
  }
  SECTION("all-zeros column is a positive Beta ratio") {
    for (double q : {0.1, 0.5, 0.9}) {
      const double lm = log_marginal_w_column(0, 6, q, 2.0);
      const double qp = q_prime(q, 2.0);
      REQUIRE_THAT(lm, Catch::Matchers::WithinAbs(log_beta(qp, 2.0 + 6) - log_beta(qp, 2.0), 1e-12));
      REQUIRE(std::isfinite(lm));
      REQUIRE(lm < 0.0);
    }
  }
  SECTION("single-row column recovers q exactly") {
    for (double q : {0.07, 0.4, 0.83}) {
      const double pr_one = std::exp(log_marginal_w_column(1, 1, q, 1.7));
      REQUIRE_THAT(pr_one, Catch::Matchers::WithinAbs(q, 1e-12));
    }
  }
  SECTION("matches quadrature on random inputs") {
    Rng rng(42);
    for (int rep = 0; rep < 250; ++rep) {
      const double q = 0.02 + 0.96 * rng.uniform();
      const double sigma2 = 0.3 + 5.0 * rng.uniform();
      const int n = 1 + static_cast<int>(rng.uniform_int(40));
      const int c = static_cast<int>(rng.uniform_int(n + 1));
      const double expected = quad_marginal(c, n, q, sigma2);
      REQUIRE_THAT(std::exp(log_marginal_w_column(c, n, q, sigma2)),
                   Catch::Matchers::WithinAbs(expected, 1e-8));
    }
  }
  SECTION("input validation") {
    REQUIRE_THROWS_AS(log_marginal_w_column(0, 2, 0.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(log_marginal_w_column(0, 2, 1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(log_marginal_w_column(3, 2, 0.5, 1.0), std::invalid_argument);
  }
  SECTION("binary column span overload") {
    std::vector<std::uint8_t> col{1, 0, 1, 1};
    REQUIRE(log_marginal_w_column(col, 0.3, 1.0) == log_marginal_w_column(3, 4, 0.3, 1.0));
  }
}

TEST_CASE("collapsed predictives", "[collapsed]") {
  SECTION("worked examples") {
    std::vector<double> g{4.001, 0.001, 0.001};
    REQUIRE_THAT(predictive_x(g, 0), Catch::Matchers::WithinAbs(5.001 / 5.003, 1e-12));
    std::vector<double> flat{0.001, 0.001, 0.001, 0.001};
    REQUIRE_THAT(predictive_x(flat, 2),
                 Catch::Matchers::WithinAbs(1.001 / 1.004, 1e-12));
    std::vector<double> two{1.0, 1.0};
    REQUIRE_THAT(predictive_x(two, 1), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  }
  SECTION("label predictive worked examples") {
    std::vector<double> h{0.001, 3.001};
    REQUIRE_THAT(predictive_y(h, 1), Catch::Matchers::WithinAbs(4.001 / 4.002, 1e-12));
    std::vector<double> h0{0.25, 0.25};
    REQUIRE_THAT(predictive_y(h0, 0), Catch::Matchers::WithinAbs(1.25 / 1.5, 1e-12));
    std::vector<double> h2{2.0, 1.0};
    REQUIRE_THAT(predictive_y(h2, 0), Catch::Matchers::WithinAbs(0.75, 1e-12));
  }
  SECTION("matches the posterior-mean quadrature route") {
    Rng rng(43);
    for (int rep = 0; rep < 250; ++rep) {
      const int v = 2 + static_cast<int>(rng.uniform_int(5));
      std::vector<double> g(v);
      for (auto& gv : g) gv = 0.001 + 8.0 * rng.uniform();
      const int x = static_cast<int>(rng.uniform_int(v));
      REQUIRE_THAT(predictive_x(g, x),
                   Catch::Matchers::WithinAbs(quad_dirichlet_mean(g, x), 1e-8));
    }
  }
  SECTION("input validation") {
    std::vector<double> g{1.0, 2.0};
    REQUIRE_THROWS_AS(predictive_x(g, 2), std::invalid_argument);
    std::vector<double> bad{1.0, 0.0};
    REQUIRE_THROWS_AS(predictive_x(bad, 0), std::invalid_argument);
  }
}

TEST_CASE("posterior mean of qtilde", "[collapsed]") {
  SECTION("worked example") {
    REQUIRE_THAT(posterior_mean_qtilde(0, 2, 0.5, 1.0), Catch::Matchers::WithinAbs(0.25, 1e-12));
  }
  SECTION("full column stays below one") {
    for (int n : {1, 5, 20}) {
      const double m = posterior_mean_qtilde(n, n, 0.4, 2.0);
      const double qp = q_prime(0.4, 2.0);
      REQUIRE_THAT(m, Catch::Matchers::WithinAbs((qp + n) / (qp + 2.0 + n), 1e-12));
      REQUIRE(m < 1.0);
    }
  }
  SECTION("matches quadrature on random inputs") {
    Rng rng(44);
    for (int rep = 0; rep < 200; ++rep) {
      const double q = 0.05 + 0.9 * rng.uniform();
      const double sigma2 = 0.4 + 4.0 * rng.uniform();
      const int n = 1 + static_cast<int>(rng.uniform_int(30));
      const int c = static_cast<int>(rng.uniform_int(n + 1));
      REQUIRE_THAT(posterior_mean_qtilde(c, n, q, sigma2),
                   Catch::Matchers::WithinAbs(quad_qtilde_mean(c, n, q, sigma2), 1e-10));
    }
  }
}
