#include "rapopt/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <sstream>
#include <stdexcept>

#include "rapopt/baselines.hpp"
#include "rapopt/generators.hpp"
#include "rapopt/rapdual.hpp"
#include "rapopt/rapgrad.hpp"

namespace rapopt {

void ExperimentConfig::validate() const {
  static const char* known[] = {"rapgrad", "batch-rapgrad", "svrg",  "ag",
                                "rapdual", "batch-rapdual", "admm"};
  if (std::find(std::begin(known), std::end(known), method) == std::end(known)) {
    throw std::invalid_argument("experiment: unknown method '" + method + "'");
  }
  if (seeds.empty()) throw std::invalid_argument("experiment: needs at least one seed");
  if (problem_path.empty()) throw std::invalid_argument("experiment: missing problem path");
  if (!(max_passes > 0.0)) throw std::invalid_argument("experiment: max_passes must be > 0");
  if (stop_tol < 0.0) throw std::invalid_argument("experiment: stop_tol must be >= 0");
}

std::string default_out_dir() {
  const char* env = std::getenv("RAPOPT_OUT");
  return env && *env ? std::string(env) : std::string(".");
}

namespace {

bool is_finite_sum_method(const std::string& method) {
  return method == "rapgrad" || method == "batch-rapgrad" || method == "svrg" ||
         method == "ag";
}

RunRecord run_one_seed(const ExperimentConfig& cfg, const LoadedProblem& lp,
                       const ReformulatedProblem* rp, std::uint64_t seed,
                       nlohmann::json* extra) {
  if (is_finite_sum_method(cfg.method)) {
    const FiniteSumProblem& p = lp.scad_ls->problem;
    if (cfg.method == "svrg") {
      SvrgConfig sc;
      sc.seed = seed;
      sc.stop_tol = cfg.stop_tol;
      sc.max_passes = cfg.max_passes;
      return run_svrg(p, sc).record;
    }
    if (cfg.method == "ag") {
      AgConfig ac;
      ac.policy = cfg.ag_policy == "growing" ? AgStepPolicy::kGrowing
                                             : AgStepPolicy::kBracket;
      ac.stop_tol = cfg.stop_tol;
      ac.max_passes = cfg.max_passes;
      return run_ag(p, ac).record;
    }
    RapGradConfig rc;
    rc.outer_iterations = cfg.outer_iterations;
    rc.s_factor = cfg.s_factor;
    rc.s_override = cfg.s_override;
    rc.seed = seed;
    rc.batch = cfg.method == "batch-rapgrad";
    rc.stop_tol = cfg.stop_tol;
    rc.max_passes = cfg.max_passes;
    RapGradResult res = rapgrad_run(p, rc);
    if (cfg.certify && extra) {
      EvalCounters cert_counters;
      const Certificate cert = eps_delta_certificate(
          p, res.x_out, res.record.selected_center, cfg.certify_tol,
          &cert_counters);
      (*extra)["certificate"] = {{"eps_hat", cert.eps_hat},
                                 {"delta_hat", cert.delta_hat},
                                 {"selected_outer", res.record.selected_outer},
                                 {"tol", cfg.certify_tol}};
    }
    return std::move(res.record);
  }

  if (cfg.method == "admm") {
    const MultiBlockProblem& p = lp.compressed_sensing->problem;
    const double rho = cfg.admm_rho > 0.0 ? cfg.admm_rho : p.L * p.L;
    AdmmConfig ac;
    ac.seed = seed;
    ac.stop_tol = cfg.stop_tol;
    ac.max_cycles = std::numeric_limits<long long>::max() / 4;
    ac.max_block_updates =
        cfg.max_passes * static_cast<double>(p.m() - 1);
    return run_admm(*rp, rho, ac).record;
  }

  RapDualConfig dc;
  dc.outer_iterations = cfg.outer_iterations;
  dc.s_factor = cfg.s_factor;
  dc.s_override = cfg.s_override;
  dc.seed = seed;
  dc.batch = cfg.method == "batch-rapdual";
  dc.stop_tol = cfg.stop_tol;
  dc.max_block_updates =
      cfg.max_passes * static_cast<double>(lp.compressed_sensing->problem.m() - 1);
  return rapdual_run(*rp, dc).record;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedProblem lp = load_problem(cfg.problem_path);
  if (is_finite_sum_method(cfg.method) && !lp.scad_ls) {
    throw std::invalid_argument("experiment: method " + cfg.method +
                                " needs a finite-sum problem");
  }
  if (!is_finite_sum_method(cfg.method) && !lp.compressed_sensing) {
    throw std::invalid_argument("experiment: method " + cfg.method +
                                " needs a multi-block problem");
  }

  std::optional<ReformulatedProblem> rp;
  if (!is_finite_sum_method(cfg.method)) {
    rp = reformulate(lp.compressed_sensing->problem);
  }

  const std::string out_dir = cfg.out_dir.empty() ? default_out_dir() : cfg.out_dir;
  std::filesystem::create_directories(out_dir);
  const std::string label = cfg.label.empty() ? cfg.method : cfg.label;

  ExperimentOutcome outcome;
  std::vector<nlohmann::json> extras(cfg.seeds.size());
  std::vector<std::future<RunRecord>> futures;
  futures.reserve(cfg.seeds.size());
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&, i]() {
      return run_one_seed(cfg, lp, rp ? &*rp : nullptr, cfg.seeds[i],
                          &extras[i]);
    }));
  }
  for (auto& f : futures) outcome.records.push_back(f.get());

  std::vector<std::vector<TrajectoryRow>> trajectories;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    const RunRecord& rec = outcome.records[i];
    std::ostringstream name;
    name << label << "_seed" << cfg.seeds[i] << ".csv";
    const std::string path = (std::filesystem::path(out_dir) / name.str()).string();
    write_trajectory_csv(path, rec.rows);
    outcome.csv_paths.push_back(path);
    trajectories.push_back(rec.rows);

    nlohmann::json entry = {
        {"seed", rec.seed},
        {"stop_reason", rec.stop_reason},
        {"final_pass", rec.rows.back().pass},
        {"final_objective", rec.rows.back().objective},
        {"final_grad_norm_sq", rec.rows.back().grad_norm_sq},
        {"component_grad_evals", rec.counters.component_grad_evals},
        {"block_updates", rec.counters.block_updates},
        {"selected_outer", rec.selected_outer},
        {"csv", outcome.csv_paths.back()},
    };
    if (!std::isnan(rec.rows.back().feasibility_sq)) {
      entry["final_feasibility_sq"] = rec.rows.back().feasibility_sq;
    }
    if (!extras[i].is_null()) entry.update(extras[i]);
    per_seed.push_back(entry);
  }

  outcome.mean_csv_path =
      (std::filesystem::path(out_dir) / (label + "_mean.csv")).string();
  write_trajectory_csv(outcome.mean_csv_path, mean_trajectory(trajectories));

  nlohmann::json summary;
  summary["method"] = cfg.method;
  summary["problem"] = cfg.problem_path;
  summary["problem_digest"] = lp.descriptor.value("digest", "");
  summary["stop_tol"] = cfg.stop_tol;
  summary["max_passes"] = cfg.max_passes;
  summary["outer_iterations"] = cfg.outer_iterations;
  summary["s_factor"] = cfg.s_factor;
  summary["seeds"] = cfg.seeds;
  summary["runs"] = per_seed;
  summary["mean_csv"] = outcome.mean_csv_path;
  // Every schedule constant is exposed so a run can be audited end to end.
  summary["config"] = outcome.records.front().config;
  outcome.summary = summary;

  outcome.summary_path =
      (std::filesystem::path(out_dir) / (label + "_summary.json")).string();
  write_text_file(outcome.summary_path, summary.dump(2) + "\n");
  return outcome;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> xs, ys;
};

}  // namespace

void write_plot_svg(const PlotConfig& cfg) {
  if (cfg.csv_paths.empty()) {
    throw std::invalid_argument("plot: needs at least one CSV");
  }
  std::vector<Series> series;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& path : cfg.csv_paths) {
    const auto rows = read_trajectory_csv(path);
    Series s;
    s.name = std::filesystem::path(path).stem().string();
    for (const auto& r : rows) {
      double y;
      if (cfg.y_column == "objective") {
        y = r.objective;
      } else if (cfg.y_column == "grad_norm_sq") {
        y = r.grad_norm_sq;
      } else if (cfg.y_column == "feasibility_sq") {
        y = r.feasibility_sq;
      } else {
        throw std::invalid_argument("plot: unknown column " + cfg.y_column);
      }
      if (std::isnan(y)) continue;
      if (cfg.log_y && !(y > 0.0)) y = 1e-300;  // clamp for the log axis
      s.xs.push_back(r.pass);
      s.ys.push_back(cfg.log_y ? std::log10(y) : y);
    }
    if (s.xs.empty()) throw std::runtime_error("plot: no plottable rows in " + path);
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
    series.push_back(std::move(s));
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double width = 820, height = 520;
  const double left = 70, right = 790, top = 40, bottom = 470;
  const auto sx = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (right - left);
  };
  const auto sy = [&](double y) {
    return bottom - (y - ymin) / (ymax - ymin) * (bottom - top);
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!cfg.title.empty()) {
    svg << "<text x=\"" << (width / 2)
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">"
        << cfg.title << "</text>\n";
  }
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / ticks;
    const double px = sx(fx);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << bottom << "\" x2=\""
        << fmt(px) << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << bottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / ticks;
    const double py = sy(fy);
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(py) << "\" x2=\""
        << left << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt(py + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << (cfg.log_y ? "1e" + fmt(fy) : fmt(fy)) << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << "passes</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + bottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << (top + bottom) / 2 << ")\">" << cfg.y_column
      << (cfg.log_y ? " (log10)" : "") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % (sizeof(palette) / sizeof(palette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].xs.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt(sx(series[k].xs[i])) << ',' << fmt(sy(series[k].ys[i]));
    }
    svg << "\"/>\n";
    const double ly = top + 16 * static_cast<double>(k);
    svg << "<line x1=\"" << right - 150 << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << right - 130 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << right - 125 << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[k].name
        << "</text>\n";
  }
  svg << "</svg>\n";
  write_text_file(cfg.out_path, svg.str());
}

}  // namespace rapopt
