#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "bridgepath/glm.hpp"
#include "test_support.hpp"

using namespace bridgepath;
using Catch::Approx;

namespace {

double sample_corr(const VectorXd& a, const VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const VectorXd ca = a.array() - ma, cb = b.array() - mb;
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace

TEST_CASE("design generation") {
  SECTION("independent columns at rho = 0") {
    std::mt19937_64 rng(79);
    const MatrixXd x = gen_design(4000, 4, 0.0, rng);
    for (Index j = 1; j < 4; ++j)
      CHECK(std::abs(sample_corr(x.col(0), x.col(j))) < 3.0 / std::sqrt(4000.0));
  }
  SECTION("AR(1) correlation structure at rho = 0.5") {
    std::mt19937_64 rng(83);
    const Index n = 10000;
    const MatrixXd x = gen_design(n, 3, 0.5, rng);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    CHECK(sample_corr(x.col(0), x.col(1)) == Approx(0.5).margin(3.0 * se));
    CHECK(sample_corr(x.col(1), x.col(2)) == Approx(0.5).margin(3.0 * se));
    CHECK(sample_corr(x.col(0), x.col(2)) == Approx(0.25).margin(3.0 * se));
    CHECK(std::abs(x.col(1).squaredNorm() / n - 1.0) < 0.1);
  }
  SECTION("invalid correlation") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(gen_design(10, 2, 1.0, rng), std::invalid_argument);
  }
  SECTION("deterministic given the seed") {
    std::mt19937_64 a(5), b(5);
    CHECK((gen_design(20, 3, 0.5, a) - gen_design(20, 3, 0.5, b)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sparse coefficient generation") {
  std::mt19937_64 rng(89);
  const VectorXd theta = gen_sparse_coef(500, 346, 10.0, 0.5, rng);
  Index nonzero = 0;
  for (Index j = 0; j < 500; ++j) {
    if (theta[j] != 0.0) {
      ++nonzero;
      CHECK(std::abs(theta[j]) >= 0.5);
      CHECK(std::abs(theta[j]) <= 10.0);
    }
  }
  CHECK(nonzero == 154);

  const VectorXd single = gen_sparse_coef(5, 4, 10.0, 0.5, rng);
  Index nz = 0;
  for (Index j = 0; j < 5; ++j) nz += single[j] != 0.0 ? 1 : 0;
  CHECK(nz == 1);

  const VectorXd degenerate = gen_sparse_coef(6, 2, 10.0, 10.0, rng);
  for (Index j = 0; j < 6; ++j)
    if (degenerate[j] != 0.0) CHECK(std::abs(degenerate[j]) == Approx(10.0));

  CHECK_THROWS_AS(gen_sparse_coef(5, 5, 10.0, 0.5, rng), std::invalid_argument);
}

TEST_CASE("generated responses carry the declared noise level") {
  std::mt19937_64 rng(97);
  const VectorXd theta0 = gen_sparse_coef(20, 10, 5.0, 0.5, rng);
  const RegressionProblem prob = gen_regression(4000, theta0, 2.0, 0.5, rng);
  const VectorXd resid = prob.y - prob.x * theta0;
  const double var = resid.squaredNorm() / resid.size();
  CHECK(var == Approx(4.0).margin(4.0 * 3.0 * std::sqrt(2.0 / 4000.0)));
}

TEST_CASE("regression path") {
  SECTION("noiseless problems are recovered at small lambda") {
    std::mt19937_64 rng(101);
    const VectorXd theta0 = gen_sparse_coef(8, 4, 5.0, 1.0, rng);
    const RegressionProblem prob = gen_regression(200, theta0, 0.0, 0.3, rng);
    SolverConfig cfg;
    cfg.tol_rel = 1e-12;
    const GlmFit fit = fit_regression_path(prob, 1.0, VectorXd::Ones(8), 40, 1e-6, cfg);
    CHECK((fit.path.estimates.back().flat() - theta0).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(fit.path.estimates.front().flat().cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("matches an independent coordinate-descent lasso") {
    std::mt19937_64 rng(103);
    const VectorXd theta0 = gen_sparse_coef(5, 2, 5.0, 1.0, rng);
    const RegressionProblem prob = gen_regression(60, theta0, 1.0, 0.5, rng);
    SolverConfig cfg;
    cfg.tol_rel = 1e-12;
    cfg.max_iter = 100000;
    const GlmFit fit = fit_regression_path(prob, 1.0, VectorXd::Ones(5), 12, 1e-2, cfg);
    for (std::size_t k = 0; k < fit.path.lambdas.size(); ++k) {
      const VectorXd oracle = testsupport::cd_lasso_oracle(prob.x, prob.y, fit.path.lambdas[k],
                                                           VectorXd::Ones(5));
      CHECK((fit.path.estimates[k].flat() - oracle).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SECTION("quadratic-approximation and direct least-squares routes agree") {
    std::mt19937_64 rng(107);
    const VectorXd theta0 = gen_sparse_coef(6, 3, 5.0, 1.0, rng);
    const RegressionProblem prob = gen_regression(80, theta0, 1.0, 0.4, rng);
    SolverConfig cfg;
    cfg.tol_rel = 1e-12;
    cfg.max_iter = 100000;

    RegressionLoss direct(prob.x, prob.y);
    const VectorXd ols = ols_fit(prob.x, prob.y);
    QuadraticLSALoss quad(prob.x.transpose() * prob.x, ols);

    for (double q : {1.0, 0.5}) {
      const PenaltySpec pen = PenaltySpec::uniform(6, q, 0.0);
      const double lm = lambda_max_for(quad, pen, Algorithm::apg);
      for (double lam : {0.5 * lm, 0.1 * lm}) {
        const SolverResult a =
            apg_solve(direct, pen.with_lambda(lam), GroupedVector::zero(direct.layout()), cfg);
        const SolverResult b =
            apg_solve(quad, pen.with_lambda(lam), GroupedVector::zero(quad.layout()), cfg);
        const double direct_obj_of_b = objective_value(direct, pen.with_lambda(lam),
                                                        b.theta_hat.flat());
        CHECK(std::abs(a.objective - direct_obj_of_b) <= 1e-8 * (1.0 + std::abs(a.objective)));
      }
    }
  }
  SECTION("singular designs are rejected") {
    MatrixXd x(3, 2);
    x << 1, 1, 2, 2, 3, 3;  // rank one
    RegressionProblem prob{x, VectorXd::Ones(3), VectorXd::Zero(2), 0.0};
    CHECK_THROWS_AS(fit_regression_path(prob, 1.0, VectorXd::Ones(2), 10, 1e-2),
                    singular_matrix_error);
  }
}

TEST_CASE("one-step LLA weights") {
  VectorXd tilde(3);
  tilde << 1.0, 4.0, 0.0;
  const VectorXd w_half = lla_weights(tilde, 0.5);
  CHECK(w_half[0] == Approx(1.0));
  CHECK(w_half[1] == Approx(0.5));
  CHECK(w_half[2] == Approx(1e12));
  const VectorXd w_one = lla_weights(tilde, 1.0);
  CHECK(w_one[0] == Approx(1.0));
  CHECK(w_one[1] == Approx(1.0));
}

TEST_CASE("cross validation") {
  SECTION("noiseless identifiable problems pick a small lambda") {
    std::mt19937_64 rng(109);
    const VectorXd theta0 = gen_sparse_coef(6, 2, 5.0, 1.0, rng);
    const RegressionProblem prob = gen_regression(120, theta0, 0.0, 0.3, rng);
    const GlmFit fit = fit_regression_path(prob, 1.0, VectorXd::Ones(6), 20, 1e-4);
    const CvResult cv = cross_validate(prob, {1.0, WeightsMode::unweighted, 0.0},
                                       fit.path.lambdas, 5, 11);
    CHECK(cv.chosen >= fit.path.lambdas.size() - 3);
  }
  SECTION("pure-noise problems pick a large lambda") {
    std::mt19937_64 rng(113);
    const VectorXd theta0 = VectorXd::Zero(6);
    const RegressionProblem prob = gen_regression(150, theta0, 2.0, 0.3, rng);
    const GlmFit fit = fit_regression_path(prob, 1.0, VectorXd::Ones(6), 20, 1e-3);
    const CvResult cv = cross_validate(prob, {1.0, WeightsMode::unweighted, 0.0},
                                       fit.path.lambdas, 5, 13);
    CHECK(cv.chosen_lambda >= 0.2 * fit.lambda_max);
  }
  SECTION("fold assignment is deterministic") {
    std::mt19937_64 rng(127);
    const VectorXd theta0 = gen_sparse_coef(5, 2, 5.0, 1.0, rng);
    const RegressionProblem prob = gen_regression(60, theta0, 1.0, 0.3, rng);
    const GlmFit fit = fit_regression_path(prob, 1.0, VectorXd::Ones(5), 10, 1e-2);
    const CvResult a = cross_validate(prob, {1.0, WeightsMode::unweighted, 0.0},
                                      fit.path.lambdas, 4, 17);
    const CvResult b = cross_validate(prob, {1.0, WeightsMode::unweighted, 0.0},
                                      fit.path.lambdas, 4, 17);
    CHECK((a.cv_mse - b.cv_mse).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.chosen == b.chosen);
  }
}

TEST_CASE("glm replicate produces the test-error curve shape") {
  GlmConfig cfg;
  cfg.p = 12;
  cfg.n_train = 100;
  cfg.n_test = 100;
  cfg.n_zero = 8;
  cfg.sigma = 2.0;
  cfg.grid_size = 15;
  cfg.reps = 1;
  cfg.seed = 3;
  cfg.threads = 1;

  std::mt19937_64 rng(cfg.seed);
  const VectorXd theta0 = gen_sparse_coef(cfg.p, cfg.n_zero, cfg.coef_max, cfg.coef_min_mag, rng);
  const RegressionProblem train = gen_regression(cfg.n_train, theta0, cfg.sigma, cfg.rho, rng);
  const RegressionProblem test = gen_regression(cfg.n_test, theta0, cfg.sigma, cfg.rho, rng);
  const GlmFit fit = fit_regression_path(train, 0.5, VectorXd::Ones(cfg.p), cfg.grid_size,
                                         cfg.grid_ratio);

  const double null_mse = test.y.squaredNorm() / test.y.size();
  CHECK(prediction_mse(test.x, test.y, fit.path.estimates.front().flat()) == Approx(null_mse));
  for (const auto& est : fit.path.estimates) {
    const double mse = prediction_mse(test.x, test.y, est.flat());
    CHECK(std::isfinite(mse));
    CHECK(mse >= cfg.sigma * cfg.sigma * 0.5);  // noise floor up to Monte Carlo slack
  }

  const GlmReplicate rep = run_glm_replicate(cfg, cfg.seed);
  CHECK(std::isfinite(rep.bridge.test_mse));
  CHECK(std::isfinite(rep.lla.test_mse));
  CHECK(std::isfinite(rep.lasso.test_mse));
  CHECK(rep.bridge.chosen_lambda > 0.0);
}
