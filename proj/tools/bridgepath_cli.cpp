// bridgepath command-line tool: thresholding tables, pathwise solves and the
// two simulation studies, with CSV/JSON/SVG outputs.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bridgepath/bridgepath.hpp"

namespace bp = bridgepath;
namespace fs = std::filesystem;

namespace {

constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

struct ProxArgs {
  double q = 0.5, lam = 1.0, w = 1.0;
  std::vector<double> z;
  double zmin = -5.0, zmax = 5.0;
  int zcount = 1001;
  std::string out;
  bool plot = false;
};

int cmd_prox(const ProxArgs& a) {
  std::vector<double> zs = a.z;
  if (zs.empty()) {
    for (int k = 0; k < a.zcount; ++k)
      zs.push_back(a.zmin + (a.zmax - a.zmin) * k / (a.zcount - 1));
  }
  bp::CsvBuilder csv({"z", "T"});
  std::vector<double> vals;
  for (double z : zs) {
    const double v = bp::scalar_threshold({a.q, a.lam, a.w}, z);
    vals.push_back(v);
    csv.row({bp::format_double(z), bp::format_double(v)});
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    ensure_dir(a.out);
    bp::write_text_file(join(a.out, "prox.csv"), csv.str());
    if (a.plot) {
      bp::LinePlot plot("q-thresholding operator (q=" + std::to_string(a.q) + ")", "z", "T(z)");
      plot.add({zs, vals, "#1f6feb", false, "operator"});
      plot.add({zs, zs, "#999999", true, "bisector"});
      bp::write_text_file(join(a.out, "prox.svg"), plot.render());
    }
  }
  return 0;
}

struct PathArgs {
  std::string problem;
  std::string algo = "apg";
  int grid_size = 100;
  double grid_ratio = 1e-3;
  double tol = 1e-8;
  int max_iter = 10000;
  std::string out = ".";
  bool plot = false;
};

bp::Algorithm parse_algo(const std::string& s) {
  if (s == "apg") return bp::Algorithm::apg;
  if (s == "palm") return bp::Algorithm::palm;
  if (s == "cd") return bp::Algorithm::cd;
  throw CLI::ValidationError("--algo must be apg, palm or cd");
}

int cmd_path(const PathArgs& a) {
  const bp::QuadraticProblem prob = bp::problem_from_json(bp::load_json_file(a.problem));
  const bp::Algorithm algo = parse_algo(a.algo);
  bp::SolverConfig cfg;
  cfg.tol_rel = a.tol;
  cfg.max_iter = a.max_iter;
  const double lmax = bp::lambda_max_for(prob.loss, prob.penalty, algo);
  if (!(lmax > 0.0)) {
    std::cerr << "path: the zero vector already minimizes the smooth loss (lambda_max = 0)\n";
    return exit_numeric;
  }
  const std::vector<double> grid = bp::make_grid(lmax, a.grid_size, a.grid_ratio);
  const bp::PathResult path = bp::solve_path(prob.loss, prob.penalty, grid, algo, cfg);
  const bp::PathDiagnostics diag = bp::path_diagnostics(path);

  ensure_dir(a.out);
  bp::write_text_file(join(a.out, "path.csv"), bp::path_to_csv(path));
  bp::write_json_file(join(a.out, "path.json"), bp::path_to_json(path));

  bp::json jd;
  jd["zero_prefix"] = diag.zero_prefix;
  jd["support_sizes"] = diag.support_sizes;
  bp::json jumps = bp::json::array();
  for (const auto& j : diag.jumps)
    jumps.push_back({{"grid_index", j.grid_index},
                     {"coordinate", j.coordinate},
                     {"magnitude_gap", j.magnitude_gap},
                     {"entering", j.entering}});
  jd["jumps"] = std::move(jumps);
  int failures = 0;
  for (const auto& m : path.meta) failures += m.failed ? 1 : 0;
  jd["failed_lambdas"] = failures;
  bp::write_json_file(join(a.out, "diagnostics.json"), jd);

  if (a.plot) {
    bp::LinePlot plot("coefficient path", "lambda / lambda_max", "theta_j");
    const Eigen::Index p = prob.loss.layout().total();
    std::vector<double> xs;
    for (double lam : path.lambdas) xs.push_back(lam / path.lambda_max);
    const char* colors[] = {"#1f6feb", "#d73a49", "#28a745", "#6f42c1", "#f66a0a", "#005cc5"};
    for (Eigen::Index j = 0; j < p; ++j) {
      std::vector<double> ys;
      for (const auto& est : path.estimates) ys.push_back(est.flat()[j]);
      plot.add({xs, ys, colors[j % 6], false, ""});
    }
    bp::write_text_file(join(a.out, "path.svg"), plot.render());
  }
  std::cout << "path: " << path.lambdas.size() << " lambdas, " << diag.jumps.size()
            << " jumps, zero prefix " << diag.zero_prefix << ", " << failures << " failures\n";
  return 0;
}

struct GlmArgs {
  bp::GlmConfig cfg;
  std::string out = ".";
  bool plot = false;
};

int cmd_glm(const GlmArgs& a) {
  const bp::GlmStudyResult study = bp::run_glm_study(a.cfg);
  ensure_dir(a.out);

  bp::json res;
  res["config"] = {{"n", a.cfg.n_train},      {"n_test", a.cfg.n_test}, {"p", a.cfg.p},
                   {"nzero", a.cfg.n_zero},   {"sigma", a.cfg.sigma},   {"rho", a.cfg.rho},
                   {"q", a.cfg.q},            {"folds", a.cfg.folds},   {"seed", a.cfg.seed},
                   {"grid_size", a.cfg.grid_size}, {"reps", a.cfg.reps}};
  res["test_mse"] = {{"bridge", study.mean_bridge},
                     {"lla", study.mean_lla},
                     {"lasso", study.mean_lasso}};
  bp::json reps = bp::json::array();
  for (const auto& r : study.replicates)
    reps.push_back({{"bridge", r.bridge.test_mse},
                    {"lla", r.lla.test_mse},
                    {"lasso", r.lasso.test_mse},
                    {"bridge_lambda", r.bridge.chosen_lambda},
                    {"lla_lambda", r.lla.chosen_lambda},
                    {"lasso_lambda", r.lasso.chosen_lambda}});
  res["replicates"] = std::move(reps);
  bp::write_json_file(join(a.out, "results.json"), res);

  // First replicate: CV curves, the bridge path and test error along the grid.
  const bp::GlmReplicate& r0 = study.replicates.front();
  bp::CsvBuilder cv({"lambda", "lambda_tilde", "bridge_cv_mse", "lla_cv_mse", "lasso_cv_mse"});
  for (std::size_t k = 0; k < r0.bridge.cv.grid.size(); ++k)
    cv.row({bp::format_double(r0.bridge.cv.grid[k]),
            bp::format_double(r0.bridge.cv.grid[k] / r0.bridge.lambda_max),
            bp::format_double(r0.bridge.cv.cv_mse[static_cast<Eigen::Index>(k)]),
            bp::format_double(r0.lla.cv.cv_mse[static_cast<Eigen::Index>(k)]),
            bp::format_double(r0.lasso.cv.cv_mse[static_cast<Eigen::Index>(k)])});
  bp::write_text_file(join(a.out, "cv_curve.csv"), cv.str());

  std::mt19937_64 rng(a.cfg.seed);
  const Eigen::VectorXd theta0 =
      bp::gen_sparse_coef(a.cfg.p, a.cfg.n_zero, a.cfg.coef_max, a.cfg.coef_min_mag, rng);
  bp::RegressionProblem train =
      bp::gen_regression(a.cfg.n_train, theta0, a.cfg.sigma, a.cfg.rho, rng);
  bp::RegressionProblem test =
      bp::gen_regression(a.cfg.n_test, theta0, a.cfg.sigma, a.cfg.rho, rng);
  const bp::GlmFit bridge_fit =
      bp::fit_regression_path(train, a.cfg.q, Eigen::VectorXd::Ones(a.cfg.p), a.cfg.grid_size,
                              a.cfg.grid_ratio, a.cfg.solver);
  bp::write_text_file(join(a.out, "path.csv"), bp::path_to_csv(bridge_fit.path));

  const bp::GlmFit lasso_fit =
      bp::fit_regression_path(train, 1.0, Eigen::VectorXd::Ones(a.cfg.p), a.cfg.grid_size,
                              a.cfg.grid_ratio, a.cfg.solver);
  bp::CsvBuilder tc({"lambda_tilde", "bridge_test_mse", "lasso_test_mse"});
  std::vector<double> xs, yb, yl;
  for (std::size_t k = 0; k < bridge_fit.path.lambdas.size(); ++k) {
    const double lt = bridge_fit.path.lambdas[k] / bridge_fit.lambda_max;
    const double mb = bp::prediction_mse(test.x, test.y, bridge_fit.path.estimates[k].flat());
    const double ml = bp::prediction_mse(test.x, test.y, lasso_fit.path.estimates[k].flat());
    tc.row({bp::format_double(lt), bp::format_double(mb), bp::format_double(ml)});
    xs.push_back(lt);
    yb.push_back(mb);
    yl.push_back(ml);
  }
  bp::write_text_file(join(a.out, "test_curve.csv"), tc.str());
  if (a.plot) {
    bp::LinePlot plot("test error along the path", "lambda / lambda_max", "test MSE");
    plot.add({xs, yb, "#1f6feb", false, "bridge"});
    plot.add({xs, yl, "#d73a49", true, "lasso"});
    bp::write_text_file(join(a.out, "glm_test_error.svg"), plot.render());
  }

  std::cout << "glm-sim: mean test MSE bridge " << study.mean_bridge << ", LLA " << study.mean_lla
            << ", lasso " << study.mean_lasso << "\n";
  return 0;
}

struct SdeArgs {
  bp::SdeStudyConfig cfg;
  std::string algo = "apg";
  std::string out = ".";
  bool plot = false;
  int dump_paths = 0;
  int grid_size = 20;
};

int cmd_sde(const SdeArgs& a) {
  bp::SdeStudyConfig cfg = a.cfg;
  cfg.metrics_algo = parse_algo(a.algo);
  if (cfg.lambda_tilde_grid.empty()) {
    for (int k = a.grid_size; k >= 1; --k)
      cfg.lambda_tilde_grid.push_back(static_cast<double>(k) / a.grid_size);
  }
  const bp::SdeStudyResult study = bp::run_monte_carlo_study(cfg);
  ensure_dir(a.out);

  bp::CsvBuilder metrics({"estimator", "lambda_tilde", "mse_rel", "p0", "p0_approx"});
  metrics.row({"qmle", "", bp::format_double(study.qmle_mse_rel), "", ""});
  auto emit = [&](const char* name, const bp::SdeStudyAggregates& agg) {
    for (std::size_t k = 0; k < study.lambda_tilde.size(); ++k)
      metrics.row({name, bp::format_double(study.lambda_tilde[k]),
                   bp::format_double(agg.mse_rel[k]), bp::format_double(agg.p0[k]),
                   bp::format_double(agg.p0_approx[k])});
  };
  emit("lasso", study.lasso);
  emit("bridge", study.bridge);
  bp::write_text_file(join(a.out, "metrics.csv"), metrics.str());

  bp::CsvBuilder iters({"estimator", "lambda_tilde", "apg", "palm", "cd"});
  auto emit_iters = [&](const char* name, const bp::SdeStudyAggregates& agg) {
    for (std::size_t k = 0; k < study.lambda_tilde.size(); ++k)
      iters.row({name, bp::format_double(study.lambda_tilde[k]),
                 bp::format_double(agg.iter_apg[k]), bp::format_double(agg.iter_palm[k]),
                 bp::format_double(agg.iter_cd[k])});
  };
  emit_iters("lasso", study.lasso);
  emit_iters("bridge", study.bridge);
  bp::write_text_file(join(a.out, "iterations.csv"), iters.str());

  bp::CsvBuilder sel({"lambda_tilde", "bridge_p0", "bridge_p0_approx", "lasso_p0",
                      "lasso_p0_approx"});
  for (std::size_t k = 0; k < study.lambda_tilde.size(); ++k)
    sel.row({bp::format_double(study.lambda_tilde[k]), bp::format_double(study.bridge.p0[k]),
             bp::format_double(study.bridge.p0_approx[k]), bp::format_double(study.lasso.p0[k]),
             bp::format_double(study.lasso.p0_approx[k])});
  bp::write_text_file(join(a.out, "selection_curve.csv"), sel.str());

  if (a.plot) {
    bp::LinePlot plot("model selection proportions", "lambda / lambda_max", "proportion");
    plot.add({study.lambda_tilde, study.bridge.p0, "#1f6feb", false, "bridge P0"});
    plot.add({study.lambda_tilde, study.lasso.p0, "#d73a49", true, "lasso P0"});
    bp::write_text_file(join(a.out, "selection.svg"), plot.render());

    bp::LinePlot ip("solver iterations along the path", "lambda / lambda_max", "iterations");
    ip.add({study.lambda_tilde, study.bridge.iter_apg, "#1f6feb", false, "APG"});
    ip.add({study.lambda_tilde, study.bridge.iter_palm, "#28a745", false, "PALM"});
    ip.add({study.lambda_tilde, study.bridge.iter_cd, "#d73a49", false, "CD"});
    bp::write_text_file(join(a.out, "iterations.svg"), ip.render());
  }

  for (int r = 0; r < a.dump_paths && r < cfg.reps; ++r) {
    const bp::LinearSdeModel truth = bp::experiment_model(cfg.d);
    const bp::SamplingScheme scheme{cfg.n, cfg.delta};
    const Eigen::MatrixXd states =
        bp::simulate_with_burnin(truth, scheme, cfg.seed + static_cast<std::uint64_t>(r),
                                 cfg.burn_frac);
    std::vector<std::string> header{"t"};
    for (Eigen::Index k = 0; k < cfg.d; ++k) header.push_back("x" + std::to_string(k + 1));
    bp::CsvBuilder traj(header);
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      std::vector<std::string> cells{bp::format_double(i * cfg.delta)};
      for (Eigen::Index k = 0; k < cfg.d; ++k) cells.push_back(bp::format_double(states(i, k)));
      traj.row(cells);
    }
    bp::write_text_file(join(a.out, "trajectory_rep" + std::to_string(r) + ".csv"), traj.str());
  }

  std::cout << "sde-sim: " << cfg.reps << " replicates, " << study.failures
            << " failures, QMLE rel MSE " << study.qmle_mse_rel << ", best bridge "
            << study.bridge.best_rel_err_mean << ", best lasso " << study.lasso.best_rel_err_mean
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathwise solvers for grouped weighted l^q penalized estimation"};
  app.require_subcommand(1);

  ProxArgs prox;
  CLI::App* sp = app.add_subcommand("prox", "evaluate the scalar thresholding operator");
  sp->add_option("--q", prox.q, "exponent in (0,1]");
  sp->add_option("--lam", prox.lam, "penalty scale");
  sp->add_option("--w", prox.w, "weight");
  sp->add_option("--z", prox.z, "input values (repeatable)");
  sp->add_option("--z-min", prox.zmin);
  sp->add_option("--z-max", prox.zmax);
  sp->add_option("--z-count", prox.zcount);
  sp->add_option("--out", prox.out, "output directory (default: stdout)");
  sp->add_flag("--plot", prox.plot, "write an SVG of the operator curve");

  PathArgs path;
  CLI::App* pp = app.add_subcommand("path", "pathwise solve of a quadratic problem file");
  pp->add_option("--problem", path.problem, "problem JSON file")->required();
  pp->add_option("--algo", path.algo, "apg | palm | cd");
  pp->add_option("--grid-size", path.grid_size);
  pp->add_option("--grid-ratio", path.grid_ratio);
  pp->add_option("--tol", path.tol);
  pp->add_option("--max-iter", path.max_iter);
  pp->add_option("--out", path.out);
  pp->add_flag("--plot", path.plot);

  GlmArgs glm;
  CLI::App* gp = app.add_subcommand("glm-sim", "penalized Gaussian regression study");
  gp->add_option("--n", glm.cfg.n_train, "training points");
  gp->add_option("--ntest", glm.cfg.n_test, "test points");
  gp->add_option("--p", glm.cfg.p, "predictors");
  gp->add_option("--nzero", glm.cfg.n_zero, "zero coefficients");
  gp->add_option("--sigma", glm.cfg.sigma, "noise standard deviation");
  gp->add_option("--rho", glm.cfg.rho, "design AR(1) correlation");
  gp->add_option("--q", glm.cfg.q, "bridge exponent");
  gp->add_option("--folds", glm.cfg.folds, "CV folds");
  gp->add_option("--seed", glm.cfg.seed);
  gp->add_option("--grid-size", glm.cfg.grid_size);
  gp->add_option("--reps", glm.cfg.reps, "replicates");
  gp->add_option("--threads", glm.cfg.threads);
  gp->add_option("--out", glm.out);
  gp->add_flag("--plot", glm.plot);

  SdeArgs sde;
  CLI::App* dp = app.add_subcommand("sde-sim", "linear diffusion Monte Carlo study");
  dp->add_option("--n", sde.cfg.n, "increments per replicate");
  dp->add_option("--delta", sde.cfg.delta, "sampling step");
  dp->add_option("--reps", sde.cfg.reps);
  dp->add_option("--q1", sde.cfg.q1, "drift-block exponent");
  dp->add_option("--q2", sde.cfg.q2, "diffusion-block exponent");
  dp->add_option("--delta1", sde.cfg.delta1, "drift adaptive-weight exponent");
  dp->add_option("--delta2", sde.cfg.delta2, "diffusion adaptive-weight exponent");
  dp->add_option("--algo", sde.algo, "algorithm for the reported metrics");
  dp->add_option("--seed", sde.cfg.seed);
  dp->add_option("--grid-size", sde.grid_size, "lambda_tilde grid points");
  dp->add_option("--threads", sde.cfg.threads);
  dp->add_option("--dump-paths", sde.dump_paths, "write the first K simulated trajectories");
  dp->add_option("--out", sde.out);
  dp->add_flag("--plot", sde.plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_usage;
  }

  try {
    if (sp->parsed()) return cmd_prox(prox);
    if (pp->parsed()) return cmd_path(path);
    if (gp->parsed()) return cmd_glm(glm);
    if (dp->parsed()) return cmd_sde(sde);
  } catch (const bp::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  }
  return exit_usage;
}
