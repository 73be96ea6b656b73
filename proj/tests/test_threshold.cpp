#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "bridgepath/threshold.hpp"
#include "test_support.hpp"

using namespace bridgepath;
using Catch::Approx;
using testsupport::grid_oracle_min;
using testsupport::penalized_scalar_objective;

TEST_CASE("threshold constants match both closed forms") {
  SECTION("q = 1/2, lam = 1") {
    const auto c = threshold_constants(0.5, 1.0);
    CHECK(c.theta_q_lam == Approx(1.0).margin(1e-14));
    CHECK(c.t_q_lam == Approx(1.5).margin(1e-14));
    CHECK(c.c_q == Approx(1.5).margin(1e-14));
  }
  SECTION("q = 1/2, lam = 8: t = 1.5 * 8^{2/3} = 6") {
    const auto c = threshold_constants(0.5, 8.0);
    CHECK(c.t_q_lam == Approx(6.0).epsilon(1e-12));
    CHECK(c.t_q_lam == Approx(c.c_q * std::pow(8.0, 1.0 / 1.5)).epsilon(1e-12));
  }
  SECTION("q = 2/3: direct and rewritten threshold locations agree") {
    const auto c = threshold_constants(2.0 / 3.0, 1.0);
    const double theta = std::pow(2.0 / 3.0, 0.75);
    CHECK(c.theta_q_lam == Approx(theta).epsilon(1e-12));
    CHECK(c.t_q_lam == Approx(theta + (2.0 / 3.0) * std::pow(theta, -1.0 / 3.0)).epsilon(1e-12));
    // at q = 2/3 the penalty term at the jump equals the jump itself
    CHECK(c.t_q_lam == Approx(2.0 * theta).epsilon(1e-12));
    CHECK(c.t_q_lam == Approx(c.c_q).epsilon(1e-12));
  }
  SECTION("rewritten form agrees across random (q, lam)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uq(0.05, 0.95), ul(-3.0, 2.0);
    for (int k = 0; k < 200; ++k) {
      const double q = uq(rng), lam = std::pow(10.0, ul(rng));
      const auto c = threshold_constants(q, lam);
      CHECK(c.t_q_lam == Approx(c.c_q * std::pow(lam, 1.0 / (2.0 - q))).epsilon(1e-12));
      CHECK(c.t_q_lam > c.theta_q_lam);
    }
  }
  SECTION("domain validation") {
    CHECK_THROWS_AS(threshold_constants(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_constants(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_constants(0.5, 0.0), std::invalid_argument);
  }
}

TEST_CASE("root solver") {
  SECTION("q = 1/2, lam = 1, z = 3") {
    const double root = solve_root(0.5, 1.0, 3.0);
    CHECK(root == Approx(2.69545).margin(2e-4));
    CHECK(root + 0.5 * std::pow(root, -0.5) == Approx(3.0).margin(1e-12));
    CHECK(root == Approx(half_threshold_closed(1.0, 3.0)).margin(1e-10));
  }
  SECTION("boundary |z| = t has no root") {
    CHECK_THROWS_AS(solve_root(0.5, 1.0, 1.5), no_root_error);
    CHECK_THROWS_AS(solve_root(0.5, 1.0, 1.0), no_root_error);
  }
  SECTION("vanishing penalty: root approaches |z|") {
    for (double q : {0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.9}) {
      const double root = solve_root(q, 1e-12, 5.0);
      CHECK(root == Approx(5.0).margin(1e-9));
    }
  }
  SECTION("residual tolerance across random inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uq(0.05, 0.95), ul(0.05, 5.0), uz(1.0, 4.0);
    for (int k = 0; k < 500; ++k) {
      const double q = uq(rng), lam = ul(rng);
      const auto c = threshold_constants(q, lam);
      const double z = c.t_q_lam * uz(rng) * (1.0 + 1e-6);
      const double root = solve_root(q, lam, z);
      CHECK(root > c.theta_q_lam);
      CHECK(root < z);
      CHECK(std::abs(root + lam * q * std::pow(root, q - 1.0) - z) <= 1e-12 * (1.0 + z));
    }
  }
}

TEST_CASE("scalar thresholding operator") {
  SECTION("q = 1/2, lam w = 1 dead zone and active value") {
    CHECK(scalar_threshold({0.5, 1.0, 1.0}, 1.4) == 0.0);
    CHECK(scalar_threshold({0.5, 1.0, 1.0}, 1.5) == 0.0);  // tie resolves to 0
    CHECK(scalar_threshold({0.5, 1.0, 1.0}, 3.0) == Approx(2.69545).margin(2e-4));
  }
  SECTION("q = 1 recovers the soft threshold") {
    CHECK(scalar_threshold({1.0, 1.0, 1.0}, 2.0) == Approx(1.0));
    CHECK(scalar_threshold({1.0, 1.0, 1.0}, 0.5) == 0.0);
    CHECK(scalar_threshold({1.0, 1.0, 1.0}, -2.0) == Approx(-1.0));
  }
  SECTION("zero input and zero penalty") {
    CHECK(scalar_threshold({0.3, 2.0, 1.0}, 0.0) == 0.0);
    CHECK(scalar_threshold({0.3, 0.0, 1.0}, 1.7) == 1.7);
  }
  SECTION("parameter validation") {
    CHECK_THROWS_AS(scalar_threshold({0.0, 1.0, 1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scalar_threshold({1.1, 1.0, 1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scalar_threshold({0.5, -1.0, 1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scalar_threshold({0.5, 1.0, 0.0}, 1.0), std::invalid_argument);
  }
}

TEST_CASE("half-exponent closed form") {
  const double expected = 2.0 * (1.0 + std::cos(2.0 * M_PI / 3.0 -
                                                (2.0 / 3.0) * std::acos(0.25)));
  CHECK(half_threshold_closed(1.0, 3.0) == Approx(expected).epsilon(1e-14));
  CHECK(half_threshold_closed(1.0, -3.0) == Approx(-expected).epsilon(1e-14));
  CHECK(half_threshold_closed(1.0, 1.5) == 0.0);

  SECTION("agrees with the general root path on random inputs") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ul(0.1, 10.0), uz(1.0, 10.0);
    for (int k = 0; k < 1000; ++k) {
      const double lam = ul(rng);
      const double t = threshold_constants(0.5, lam).t_q_lam;
      const double z = t * (1.0 + uz(rng) * 0.3);
      CHECK(std::abs(half_threshold_closed(lam, z) - solve_root(0.5, lam, z)) <= 1e-10);
    }
  }
}

TEST_CASE("hard threshold limit (testing hook)") {
  CHECK(hard_threshold(2.0, 2.1) == Approx(2.1));
  CHECK(hard_threshold(2.0, 1.9) == 0.0);
  CHECK(hard_threshold(2.0, 2.0) == 0.0);  // tie to zero at sqrt(2*2) = 2
}

TEST_CASE("vector thresholding") {
  SECTION("soft per coordinate") {
    VectorXd z(2), q(2), lw(2);
    z << 2.0, 0.5;
    q << 1.0, 1.0;
    lw << 1.0, 1.0;
    const VectorXd out = vector_threshold(z, q, lw);
    CHECK(out[0] == Approx(1.0));
    CHECK(out[1] == 0.0);
  }
  SECTION("bridge per coordinate") {
    VectorXd z(2), q(2), lw(2);
    z << 1.4, 3.0;
    q << 0.5, 0.5;
    lw << 1.0, 1.0;
    const VectorXd out = vector_threshold(z, q, lw);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == Approx(2.69545).margin(2e-4));
  }
  SECTION("zero penalty is the identity") {
    std::mt19937_64 rng(17);
    const VectorXd z = testsupport::random_vector(6, rng, 3.0);
    const VectorXd out = vector_threshold(z, VectorXd::Constant(6, 0.5), VectorXd::Zero(6));
    CHECK((out - z).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(vector_threshold(VectorXd::Zero(3), VectorXd::Ones(2), VectorXd::Ones(3)),
                    std::invalid_argument);
  }
  SECTION("grouped overload uses one exponent per block") {
    GroupedVector z(BlockLayout({1, 1}), (VectorXd(2) << 2.0, 3.0).finished());
    VectorXd bq(2), lw(2);
    bq << 1.0, 0.5;
    lw << 1.0, 1.0;
    const GroupedVector out = vector_threshold(z, bq, lw);
    CHECK(out.flat()[0] == Approx(1.0));
    CHECK(out.flat()[1] == Approx(half_threshold_closed(1.0, 3.0)).epsilon(1e-14));
  }
}

TEST_CASE("operator properties against the grid oracle") {
  std::mt19937_64 rng(19);
  const double qs[] = {0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.9, 1.0};
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> ul(0.05, 5.0), uz(-6.0, 6.0);

  SECTION("output attains the grid minimum") {
    for (int k = 0; k < 300; ++k) {
      const double q = qs[pick(rng)], lw = ul(rng), z = uz(rng);
      const double out = scalar_threshold({q, lw, 1.0}, z);
      const double vout = penalized_scalar_objective(z, lw, q, out);
      CHECK(vout <= grid_oracle_min(z, lw, q) + 1e-9);
    }
  }
  SECTION("odd symmetry is exact") {
    for (int k = 0; k < 300; ++k) {
      const double q = qs[pick(rng)], lw = ul(rng), z = uz(rng);
      CHECK(scalar_threshold({q, lw, 1.0}, -z) == -scalar_threshold({q, lw, 1.0}, z));
    }
  }
  SECTION("dead zone: outputs jump past theta_q_lam") {
    for (int k = 0; k < 300; ++k) {
      const double q = qs[pick(rng)], lw = ul(rng), z = uz(rng);
      if (q == 1.0) continue;
      const double out = std::abs(scalar_threshold({q, lw, 1.0}, z));
      const double theta = threshold_constants(q, lw).theta_q_lam;
      CHECK((out == 0.0 || out >= theta - 1e-9));
    }
  }
  SECTION("shrinkage bound and vanishing gap for large inputs") {
    for (int k = 0; k < 300; ++k) {
      const double q = qs[pick(rng)], lw = ul(rng), z = uz(rng);
      CHECK(std::abs(scalar_threshold({q, lw, 1.0}, z)) <= std::abs(z) + 1e-12);
    }
    const double big = scalar_threshold({0.5, 1.0, 1.0}, 1e3);
    CHECK(1e3 - big > 0.0);
    CHECK(1e3 - big < 0.02);
  }
  SECTION("q near one approaches the soft threshold") {
    for (double z : {3.0, -3.0, 5.0, -5.0, 10.0, -10.0}) {
      const double tq = scalar_threshold({0.999, 1.0, 1.0}, z);
      CHECK(std::abs(tq - soft_threshold(1.0, z)) < 0.02);
    }
  }
}
