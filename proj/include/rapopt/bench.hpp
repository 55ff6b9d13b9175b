#ifndef RAPOPT_BENCH_HPP
#define RAPOPT_BENCH_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "rapopt/io.hpp"
#include "rapopt/metrics.hpp"

namespace rapopt {

// One benchmark experiment: a problem descriptor, a method, and a list of
// seeds. Seeds run concurrently; outputs are one CSV per seed, a mean CSV,
// and a summary JSON with counters, schedule constants and stop reasons.
struct ExperimentConfig {
  std::string problem_path;
  std::string method;  // rapgrad, batch-rapgrad, svrg, ag, rapdual, batch-rapdual, admm
  long long outer_iterations = 20;
  double s_factor = 1.0;
  std::optional<long long> s_override;
  double stop_tol = 1e-10;
  double max_passes = 3e4;
  double admm_rho = 0.0;  // 0: L^2
  std::string ag_policy = "bracket";
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;
  std::string label;  // output file stem; defaults to the method name
  bool certify = false;
  double certify_tol = 1e-12;

  void validate() const;
};

struct ExperimentOutcome {
  std::vector<RunRecord> records;
  nlohmann::json summary;
  std::vector<std::string> csv_paths;
  std::string mean_csv_path;
  std::string summary_path;
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// Deterministic SVG line chart of one column of several trajectory CSVs.
struct PlotConfig {
  std::vector<std::string> csv_paths;
  std::string y_column = "objective";  // objective | grad_norm_sq | feasibility_sq
  bool log_y = false;
  std::string out_path;
  std::string title;
};

void write_plot_svg(const PlotConfig& cfg);

// Default output directory: $RAPOPT_OUT when set, else the current directory.
std::string default_out_dir();

}  // namespace rapopt

#endif
