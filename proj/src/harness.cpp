#include "apulse/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "apulse/bench.hpp"
#include "apulse/csv.hpp"
#include "apulse/dataset.hpp"
#include "apulse/numeric.hpp"
#include "apulse/selfcheck.hpp"
#include "apulse/svg.hpp"

namespace apulse {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

ExperimentConfig apply_overrides(ExperimentConfig config, const CliOverrides& o) {
  if (o.paper_scale) {
    config.repeats = 30;
    if (!config.problem.name.empty()) config.problem.budget.reset();
  }
  if (o.repeats) {
    if (*o.repeats < 1)
      throw ConfigError("--repeats: must be >= 1");
    config.repeats = *o.repeats;
  }
  if (o.seed) config.seed = *o.seed;
  if (o.out) {
    config.out_dir = *o.out;
  } else if (const char* env = std::getenv("APULSE_OUT");
             env != nullptr && *env != '\0') {
    config.out_dir = env;
  }
  if (config.out_dir.empty()) throw ConfigError("--out: empty output directory");
  return config;
}

namespace {

std::vector<std::uint64_t> make_seeds(std::uint64_t base, int repeats) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) seeds[static_cast<std::size_t>(i)] = base + i;
  return seeds;
}

// Tracks emitted files so a failure can flag everything written so far.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }
  void write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    write_text_file(p.string(), text);
    written_.push_back(p);
  }
  void flag_partial() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::rename(p, fs::path(p.string() + ".partial"), ec);
    }
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

ordered_json run_entry(const RunResult& r, double f1_target) {
  ordered_json j;
  j["mode"] = mode_name(r.mode);
  j["seed"] = r.seed;
  const auto reached = iterations_to_threshold(r.f1_curve, f1_target);
  if (reached) j["iterations_to_threshold"] = *reached;
  else j["iterations_to_threshold"] = nullptr;
  j["final_f1"] = r.f1_curve(r.f1_curve.size() - 1);
  return j;
}

ordered_json problem_entry(const ExperimentConfig& cfg, const Problem& p) {
  ordered_json j;
  if (!cfg.problem.name.empty()) {
    j["name"] = cfg.problem.name;
    j["kappa"] = cfg.problem.kappa;
  } else {
    j["dataset"] = cfg.problem.dataset;
    if (!cfg.problem.prior_dataset.empty())
      j["prior_dataset"] = cfg.problem.prior_dataset;
  }
  j["threshold"] = p.h;
  j["direction"] = p.direction == Direction::Super ? "super" : "sub";
  j["budget"] = p.budget_T;
  j["noise_sd"] = p.noise_sd;
  return j;
}

}  // namespace

int cmd_run(const ExperimentConfig& raw_config, const CliOverrides& overrides) {
  ExperimentConfig config;
  MaterializedExperiment exp;
  try {
    config = apply_overrides(raw_config, overrides);
    exp = materialize(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  OutputTracker out(config.out_dir);
  try {
    out.write("effective_config.ini", emit_effective_config(config));

    const auto seeds = make_seeds(config.seed, config.repeats);
    std::vector<RepeatStats> stats;
    for (const TransferMode mode : config.modes) {
      std::cerr << "running " << mode_name(mode) << " x " << config.repeats
                << " repeats (budget " << exp.problem.budget_T << ")...\n";
      stats.push_back(run_repeats(exp.problem, mode, exp.prior_factory, exp.acq,
                                  exp.gp, seeds, config.f1_target,
                                  overrides.workers));
      out.write(std::string("curve_") + mode_name(mode) + ".csv",
                curve_to_csv(stats.back()));
    }

    // combined comparison table
    {
      std::ostringstream cmp;
      cmp << "iteration";
      for (const TransferMode mode : config.modes)
        cmp << ',' << mode_name(mode) << "_mean_f1," << mode_name(mode)
            << "_stderr";
      cmp << '\n';
      for (int i = 0; i < exp.problem.budget_T; ++i) {
        cmp << (i + 1);
        for (const auto& s : stats)
          cmp << ',' << format_double(s.mean_curve(i)) << ','
              << format_double(s.stderr_curve(i));
        cmp << '\n';
      }
      out.write("comparison.csv", cmp.str());
    }

    // JSON summary
    {
      ordered_json j;
      j["problem"] = problem_entry(config, exp.problem);
      j["acquisition"] = acquisition_name(config.acq.kind);
      j["kernel"] = family_name(config.kernel);
      j["repeats"] = config.repeats;
      j["base_seed"] = config.seed;
      j["f1_target"] = config.f1_target;
      ordered_json modes = ordered_json::object();
      for (std::size_t m = 0; m < config.modes.size(); ++m) {
        const auto& s = stats[m];
        ordered_json entry;
        if (s.median_iters) entry["median_iters_to_target"] = *s.median_iters;
        else entry["median_iters_to_target"] = nullptr;
        if (s.mean_iters) entry["mean_iters_to_target"] = *s.mean_iters;
        else entry["mean_iters_to_target"] = nullptr;
        entry["final_mean_f1"] = s.mean_curve(s.mean_curve.size() - 1);
        modes[mode_name(config.modes[m])] = std::move(entry);
      }
      j["modes"] = std::move(modes);
      ordered_json runs = ordered_json::array();
      for (const auto& s : stats)
        for (const auto& r : s.runs) runs.push_back(run_entry(r, config.f1_target));
      j["runs"] = std::move(runs);
      out.write("summary.json", j.dump(2) + "\n");
    }

    // SVG chart derived from the aggregated curves
    {
      std::vector<SvgSeries> series;
      for (std::size_t m = 0; m < config.modes.size(); ++m)
        series.push_back(SvgSeries{mode_name(config.modes[m]),
                                   stats[m].mean_curve, stats[m].stderr_curve});
      const std::string title =
          (config.problem.name.empty() ? config.problem.dataset
                                       : config.problem.name) +
          " / " + acquisition_name(config.acq.kind);
      out.write("f1_curves.svg", render_f1_chart(title, series));
    }

    std::cerr << "wrote " << out.dir().string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    out.flag_partial();
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_sweep_kappa(const ExperimentConfig& raw_config,
                    const CliOverrides& overrides,
                    const std::vector<double>& kappas) {
  ExperimentConfig config;
  try {
    config = apply_overrides(raw_config, overrides);
    if (config.problem.name.empty())
      throw ConfigError("sweep-kappa requires a synthetic problem");
    if (kappas.empty()) throw ConfigError("--kappas: at least one value required");
    for (double k : kappas)
      if (!(k >= 0.0) || !std::isfinite(k))
        throw ConfigError("--kappas: values must be finite and >= 0");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  OutputTracker out(config.out_dir);
  try {
    const SyntheticName name = synthetic_from_name(config.problem.name);
    const auto seeds = make_seeds(config.seed, config.repeats);

    std::vector<double> similarity;
    // per mode, per kappa: median/mean iterations (or unset)
    std::vector<std::vector<std::optional<double>>> medians(config.modes.size());
    std::vector<std::vector<std::optional<double>>> means(config.modes.size());

    for (const double kappa : kappas) {
      ExperimentConfig variant = config;
      variant.problem.kappa = kappa;
      const MaterializedExperiment exp = materialize(variant);
      const std::vector<Label> prior_labels =
          synthetic_labels(SyntheticFunction{name, 0.0}, exp.problem.eval_grid,
                           exp.problem.h, exp.problem.direction);
      similarity.push_back(
          level_set_similarity(prior_labels, exp.problem.true_labels));
      for (std::size_t m = 0; m < config.modes.size(); ++m) {
        std::cerr << "kappa " << kappa << ", "
                  << mode_name(config.modes[m]) << "...\n";
        const RepeatStats s =
            run_repeats(exp.problem, config.modes[m], exp.prior_factory,
                        exp.acq, exp.gp, seeds, config.f1_target,
                        overrides.workers);
        medians[m].push_back(s.median_iters);
        means[m].push_back(s.mean_iters);
      }
    }

    std::ostringstream table;
    table << "metric,mode";
    for (const double k : kappas) table << ",kappa_" << format_double(k);
    table << '\n';
    table << "similarity,";
    for (const double s : similarity) table << ',' << format_double(s);
    table << '\n';
    const auto cell = [&](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string("NA");
    };
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
      table << "median_iters," << mode_name(config.modes[m]);
      for (const auto& v : medians[m]) table << ',' << cell(v);
      table << '\n';
      table << "mean_iters," << mode_name(config.modes[m]);
      for (const auto& v : means[m]) table << ',' << cell(v);
      table << '\n';
    }
    out.write("sweep_kappa.csv", table.str());
    std::cout << table.str();
    return kExitOk;
  } catch (const std::exception& e) {
    out.flag_partial();
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_selfcheck(std::uint64_t seed) {
  const SuiteReport reports[] = {
      theorem1_selfcheck(1000, seed),
      eq4_identity_suite(200, seed),
      gp_oracle_suite(200, seed),
      kernel_psd_suite(200, seed),
  };
  bool all_ok = true;
  for (const auto& r : reports) {
    std::cout << r.name << ": " << (r.ok() ? "PASS" : "FAIL") << " ("
              << r.passed << "/" << r.total << ", worst margin "
              << format_double(r.worst_margin) << ")\n";
    for (const auto& f : r.failures) std::cout << "  " << f << "\n";
    all_ok = all_ok && r.ok();
  }
  return all_ok ? kExitOk : kExitRuntime;
}

int cmd_ingest_check(const std::string& path) {
  try {
    const GridDataset data = load_grid_dataset(path);
    std::cout << "rows = " << data.points.rows() << "\n"
              << "dims = " << data.points.cols() << "\n"
              << "value range = [" << format_double(data.values.minCoeff())
              << ", " << format_double(data.values.maxCoeff()) << "]\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace apulse
