// Benchmark harness: generate instances, run solvers and baselines, validate
// parameter schedules, tune inner iteration counts, certify solutions and
// plot trajectories.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

#include "rapopt/baselines.hpp"
#include "rapopt/bench.hpp"
#include "rapopt/generators.hpp"
#include "rapopt/io.hpp"
#include "rapopt/rapdual.hpp"
#include "rapopt/rapgrad.hpp"

namespace {

int cmd_gen(const rapopt::GenSpec& spec, const std::string& out_dir) {
  std::string digest;
  if (spec.family == "scad-ls") {
    digest = rapopt::save_instance(out_dir, rapopt::gen_scad_ls(spec));
  } else {
    digest = rapopt::save_instance(out_dir, rapopt::gen_compressed_sensing(spec));
  }
  std::cout << digest << "\n";
  return 0;
}

int cmd_validate(const std::string& kind, long long m, double L, double mu,
                 double abar) {
  nlohmann::json out;
  rapopt::ScheduleReport report;
  if (kind == "ragrad") {
    const auto sch = rapopt::compute_ragrad_schedule(m, L, mu);
    report = rapopt::validate_ragrad_schedule(sch, m, mu);
    out["schedule"] = {{"alpha", sch.alpha}, {"tau", sch.tau},
                       {"eta", sch.eta},     {"s", sch.s},
                       {"mtilde", sch.mtilde}, {"c", sch.c},
                       {"lhat", sch.lhat}};
  } else if (kind == "radual") {
    const auto sch = rapopt::compute_radual_schedule(m, L, mu, abar);
    report = rapopt::validate_radual_schedule(sch, m, mu);
    out["schedule"] = {{"alpha", sch.alpha}, {"alpha_t", sch.alpha_t},
                       {"tau", sch.tau},     {"eta", sch.eta},
                       {"s", sch.s},         {"mhat", sch.mhat},
                       {"c", sch.c},         {"abar", sch.abar},
                       {"mu_bar", sch.mu_bar}, {"lhat", sch.lhat}};
  } else {
    std::cerr << "validate: kind must be ragrad or radual\n";
    return 2;
  }
  out["pass"] = report.pass;
  out["violations"] = report.violations;
  std::cout << out.dump(2) << "\n";
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark harness for randomized accelerated proximal methods"};
  app.require_subcommand(1);

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a random instance");
  rapopt::GenSpec spec;
  spec.family = "scad-ls";
  std::string gen_out = rapopt::default_out_dir();
  gen->add_option("--family", spec.family, "scad-ls or compressed-sensing");
  gen->add_option("--m", spec.m, "components / blocks")->required();
  gen->add_option("--n", spec.n, "dimension")->required();
  gen->add_option("--block-dim", spec.block_dim, "block width");
  gen->add_option("--sparsity", spec.sparsity, "block matrix density");
  auto* nnz_opt = gen->add_option("--nnz", spec.nnz_signal,
                                  "planted signal nonzeros (default 20; 200 "
                                  "for compressed sensing)");
  gen->add_option("--seed", spec.seed, "instance seed");
  gen->add_option("--lambda", spec.scad.lambda, "penalty knot");
  gen->add_option("--gamma", spec.scad.gamma, "penalty flattening factor");
  gen->add_option("--eps", spec.scad.eps, "penalty smoothing");
  gen->add_option("--rho", spec.scad.rho, "penalty weight (least squares)");
  gen->add_option("--weight", spec.penalty_weight, "penalty weight (multi-block)");
  gen->add_option("--out", gen_out, "output directory");

  // run -------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run a solver on an instance");
  rapopt::ExperimentConfig ecfg;
  std::string run_config_path;
  std::vector<std::uint64_t> run_seeds;
  run->add_option("--config", run_config_path, "JSON experiment config");
  run->add_option("--problem", ecfg.problem_path, "problem descriptor JSON");
  run->add_option("--method", ecfg.method,
                  "rapgrad | batch-rapgrad | svrg | ag | rapdual | batch-rapdual | admm");
  run->add_option("--k", ecfg.outer_iterations, "outer iterations");
  run->add_option("--s-factor", ecfg.s_factor, "scale on the theoretical inner count");
  long long s_override = -1;
  run->add_option("--s", s_override, "explicit inner iteration count");
  run->add_option("--stop-tol", ecfg.stop_tol, "stop when ||grad f||^2 falls below");
  run->add_option("--max-passes", ecfg.max_passes, "pass budget");
  run->add_option("--rho", ecfg.admm_rho, "penalty for admm (default L^2)");
  run->add_option("--ag-policy", ecfg.ag_policy, "bracket | growing");
  run->add_option("--seeds", run_seeds, "seed list");
  run->add_option("--out", ecfg.out_dir, "output directory");
  run->add_option("--label", ecfg.label, "output file stem");
  run->add_flag("--certify", ecfg.certify, "attach a solution-quality certificate");
  run->add_option("--certify-tol", ecfg.certify_tol, "certificate solver tolerance");

  // tune ------------------------------------------------------------------
  auto* tune = app.add_subcommand("tune", "pick the best inner iteration factor");
  std::string tune_problem;
  std::vector<double> tune_factors{1.0, 0.1, 0.01};
  double tune_budget = 100.0;
  std::uint64_t tune_seed = 0;
  tune->add_option("--problem", tune_problem, "problem descriptor JSON")->required();
  tune->add_option("--factors", tune_factors, "candidate factors");
  tune->add_option("--budget-passes", tune_budget, "pass budget per candidate");
  tune->add_option("--seed", tune_seed, "run seed");

  // validate ---------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "check a parameter schedule");
  std::string val_kind;
  long long val_m = 0;
  double val_L = 0, val_mu = 0, val_abar = 1.0;
  validate->add_option("--kind", val_kind, "ragrad | radual")->required();
  validate->add_option("--m", val_m, "components / blocks")->required();
  validate->add_option("--L", val_L, "smoothness constant")->required();
  validate->add_option("--mu", val_mu, "lower-curvature constant")->required();
  validate->add_option("--abar", val_abar, "max block operator norm (radual)");

  // plot --------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "render trajectory CSVs as SVG");
  rapopt::PlotConfig pcfg;
  plot->add_option("--csv", pcfg.csv_paths, "input CSVs")->required();
  plot->add_option("--y", pcfg.y_column, "objective | grad_norm_sq | feasibility_sq");
  plot->add_flag("--logy", pcfg.log_y, "log-scale the y axis");
  plot->add_option("--out", pcfg.out_path, "output SVG path")->required();
  plot->add_option("--title", pcfg.title, "chart title");

  // certify -----------------------------------------------------------------
  auto* certify = app.add_subcommand("certify", "run and certify solution quality");
  std::string cert_problem;
  long long cert_k = 10;
  double cert_sfactor = 1.0;
  std::uint64_t cert_seed = 0;
  double cert_tol = 1e-12;
  certify->add_option("--problem", cert_problem, "problem descriptor JSON")->required();
  certify->add_option("--k", cert_k, "outer iterations");
  certify->add_option("--s-factor", cert_sfactor, "inner count scale");
  certify->add_option("--seed", cert_seed, "run seed");
  certify->add_option("--tol", cert_tol, "certificate solver tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (spec.family == "compressed-sensing" && nnz_opt->count() == 0) {
        const long long total = (spec.m - 1) * spec.block_dim + spec.n;
        spec.nnz_signal = std::min<long long>(200, total);
      }
      return cmd_gen(spec, gen_out);
    }
    if (run->parsed()) {
      if (!run_config_path.empty()) {
        const auto j = nlohmann::json::parse(rapopt::read_text_file(run_config_path));
        if (j.contains("problem")) ecfg.problem_path = j["problem"];
        if (j.contains("method")) ecfg.method = j["method"];
        if (j.contains("k")) ecfg.outer_iterations = j["k"];
        if (j.contains("s_factor")) ecfg.s_factor = j["s_factor"];
        if (j.contains("s")) ecfg.s_override = j["s"].get<long long>();
        if (j.contains("stop_tol")) ecfg.stop_tol = j["stop_tol"];
        if (j.contains("max_passes")) ecfg.max_passes = j["max_passes"];
        if (j.contains("rho")) ecfg.admm_rho = j["rho"];
        if (j.contains("ag_policy")) ecfg.ag_policy = j["ag_policy"];
        if (j.contains("seeds")) ecfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("out")) ecfg.out_dir = j["out"];
        if (j.contains("label")) ecfg.label = j["label"];
        if (j.contains("certify")) ecfg.certify = j["certify"];
      }
      if (!run_seeds.empty()) ecfg.seeds = run_seeds;
      if (s_override >= 0) ecfg.s_override = s_override;
      try {
        ecfg.validate();
      } catch (const std::invalid_argument& e) {
        std::cerr << "rapbench run: " << e.what() << "\n";
        return 2;
      }
      const auto outcome = rapopt::run_experiment(ecfg);
      std::cout << outcome.summary_path << "\n";
      return 0;
    }
    if (tune->parsed()) {
      const auto lp = rapopt::load_problem(tune_problem);
      if (!lp.scad_ls) {
        std::cerr << "rapbench tune: needs a finite-sum problem\n";
        return 2;
      }
      const auto out = rapopt::tune_inner_iterations(lp.scad_ls->problem,
                                                     tune_factors, tune_budget,
                                                     tune_seed);
      nlohmann::json j;
      j["best_factor"] = out.best_factor;
      for (const auto& [factor, gns] : out.results) {
        j["results"].push_back({{"factor", factor}, {"final_grad_norm_sq", gns}});
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (validate->parsed()) {
      return cmd_validate(val_kind, val_m, val_L, val_mu, val_abar);
    }
    if (plot->parsed()) {
      rapopt::write_plot_svg(pcfg);
      std::cout << pcfg.out_path << "\n";
      return 0;
    }
    if (certify->parsed()) {
      const auto lp = rapopt::load_problem(cert_problem);
      if (!lp.scad_ls) {
        std::cerr << "rapbench certify: needs a finite-sum problem\n";
        return 2;
      }
      rapopt::RapGradConfig rc;
      rc.outer_iterations = cert_k;
      rc.s_factor = cert_sfactor;
      rc.seed = cert_seed;
      const auto res = rapopt::rapgrad_run(lp.scad_ls->problem, rc);
      rapopt::EvalCounters counters;
      const auto cert = rapopt::eps_delta_certificate(
          lp.scad_ls->problem, res.x_out, res.record.selected_center, cert_tol,
          &counters);
      nlohmann::json j = {{"eps_hat", cert.eps_hat},
                          {"delta_hat", cert.delta_hat},
                          {"selected_outer", res.record.selected_outer},
                          {"oracle_grad_evals", counters.component_grad_evals},
                          {"tol", cert_tol}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "rapbench: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rapbench: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
