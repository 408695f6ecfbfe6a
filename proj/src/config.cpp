#include "apulse/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "apulse/bench.hpp"
#include "apulse/csv.hpp"
#include "apulse/dataset.hpp"
#include "apulse/numeric.hpp"

namespace apulse {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

double parse_real(const std::string& path, const std::string& v) {
  double out = 0.0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto r = std::from_chars(begin, end, out);
  if (r.ec != std::errc{} || r.ptr != end || !std::isfinite(out))
    bad(path, "expected a finite number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& path, const std::string& v) {
  long long out = 0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto r = std::from_chars(begin, end, out);
  if (r.ec != std::errc{} || r.ptr != end)
    bad(path, "expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& path, const std::string& v) {
  std::uint64_t out = 0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto r = std::from_chars(begin, end, out);
  if (r.ec != std::errc{} || r.ptr != end)
    bad(path, "expected a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& path, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad(path, "expected true or false, got '" + v + "'");
}

double default_kappa(SyntheticName name) {
  switch (name) {
    case SyntheticName::Bird: return 0.4;
    case SyntheticName::MC3D: return 0.3;
    case SyntheticName::Mishra03: return 0.4;
  }
  return 0.4;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig cfg;
  bool kappa_set = false;

  std::istringstream in(text);
  std::string line, section;
  std::unordered_set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "run" && section != "acquisition" && section != "gp")
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    const std::string path = section.empty() ? key : section + "." + key;
    if (!seen.insert(path).second) bad(path, "duplicate key");

    if (section.empty()) {
      if (key == "problem") {
        cfg.problem.name = value;
        try {
          synthetic_from_name(value);
        } catch (const std::exception&) {
          bad(path, "unknown problem '" + value +
                        "' (expected bird, mc3d, or mishra03)");
        }
      } else if (key == "kappa") {
        cfg.problem.kappa = parse_real(path, value);
        kappa_set = true;
        if (cfg.problem.kappa < 0.0) bad(path, "kappa must be >= 0");
      } else if (key == "dataset") {
        if (value.empty()) bad(path, "empty path");
        cfg.problem.dataset = value;
      } else if (key == "prior_dataset") {
        if (value.empty()) bad(path, "empty path");
        cfg.problem.prior_dataset = value;
      } else if (key == "threshold") {
        cfg.problem.threshold = parse_real(path, value);
      } else if (key == "direction") {
        if (value == "super") cfg.problem.direction = Direction::Super;
        else if (value == "sub") cfg.problem.direction = Direction::Sub;
        else bad(path, "expected super or sub, got '" + value + "'");
      } else if (key == "budget") {
        const long long b = parse_int(path, value);
        if (b < 1) bad(path, "budget must be >= 1");
        cfg.problem.budget = static_cast<int>(b);
      } else {
        bad(path, "unknown key");
      }
    } else if (section == "run") {
      if (key == "modes") {
        cfg.modes.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const std::string m = trim(item);
          try {
            cfg.modes.push_back(mode_from_name(m));
          } catch (const std::exception&) {
            bad(path, "unknown mode '" + m +
                          "' (expected scratch, vanilla, aplse, or diffgp)");
          }
        }
        if (cfg.modes.empty()) bad(path, "at least one mode required");
        std::unordered_set<int> uniq;
        for (auto m : cfg.modes)
          if (!uniq.insert(static_cast<int>(m)).second)
            bad(path, "duplicate mode '" + std::string(mode_name(m)) + "'");
      } else if (key == "repeats") {
        const long long r = parse_int(path, value);
        if (r < 1) bad(path, "repeats must be >= 1");
        cfg.repeats = static_cast<int>(r);
      } else if (key == "seed") {
        cfg.seed = parse_u64(path, value);
      } else if (key == "out_dir") {
        if (value.empty()) bad(path, "empty path");
        cfg.out_dir = value;
      } else if (key == "f1_target") {
        cfg.f1_target = parse_real(path, value);
        if (!(cfg.f1_target > 0.0 && cfg.f1_target <= 1.0))
          bad(path, "f1_target must be in (0, 1]");
      } else {
        bad(path, "unknown key");
      }
    } else if (section == "acquisition") {
      if (key == "kind") {
        try {
          cfg.acq.kind = acquisition_from_name(value);
        } catch (const std::exception&) {
          bad(path, "unknown acquisition '" + value +
                        "' (expected straddle, c2lse, or rmile)");
        }
      } else if (key == "epsilon") {
        cfg.acq.epsilon = parse_real(path, value);
      } else if (key == "delta") {
        cfg.acq.delta = parse_real(path, value);
      } else if (key == "lambda") {
        cfg.acq.lambda = parse_real(path, value);
      } else if (key == "mc_samples") {
        const long long m = parse_int(path, value);
        if (m < 1) bad(path, "mc_samples must be >= 1");
        cfg.acq.mc_samples = static_cast<int>(m);
      } else if (key == "allow_repeats") {
        cfg.acq.allow_repeats = parse_bool(path, value);
      } else {
        bad(path, "unknown key");
      }
    } else {  // gp
      if (key == "kernel") {
        try {
          cfg.kernel = family_from_name(value);
        } catch (const std::exception&) {
          bad(path, "unknown kernel '" + value +
                        "' (expected rbf, matern52, or imq)");
        }
      } else if (key == "fit_noise") {
        cfg.fit_noise = parse_bool(path, value);
      } else if (key == "noise_sd") {
        cfg.noise_sd = parse_real(path, value);
        if (cfg.noise_sd < 0.0) bad(path, "noise_sd must be >= 0");
      } else if (key == "refit_every") {
        const long long r = parse_int(path, value);
        if (r < 1) bad(path, "refit_every must be >= 1");
        cfg.refit_every = static_cast<int>(r);
      } else if (key == "refit_warmup") {
        const long long r = parse_int(path, value);
        if (r < 0) bad(path, "refit_warmup must be >= 0");
        cfg.refit_warmup = static_cast<int>(r);
      } else if (key == "beta") {
        cfg.beta = parse_real(path, value);
        if (!(cfg.beta > 0.0)) bad(path, "beta must be > 0");
      } else {
        bad(path, "unknown key");
      }
    }
  }

  // cross-field validation
  const bool synthetic = !cfg.problem.name.empty();
  const bool dataset = cfg.problem.is_dataset();
  if (synthetic == dataset)
    throw ConfigError(origin +
                      ": exactly one of 'problem' or 'dataset' is required");
  if (synthetic) {
    if (!cfg.problem.prior_dataset.empty())
      bad("prior_dataset", "only valid with a dataset problem");
    if (!kappa_set)
      cfg.problem.kappa = default_kappa(synthetic_from_name(cfg.problem.name));
  } else {
    if (kappa_set) bad("kappa", "only valid for synthetic problems");
    if (!cfg.problem.threshold)
      bad("threshold", "required for dataset problems");
    if (!cfg.problem.direction)
      bad("direction", "required for dataset problems");
  }
  try {
    validate(cfg.acq);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("acquisition: ") + e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file not found: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string emit_effective_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  if (!cfg.problem.name.empty()) {
    out << "problem = " << cfg.problem.name << "\n";
    out << "kappa = " << format_double(cfg.problem.kappa) << "\n";
  } else {
    out << "dataset = " << cfg.problem.dataset << "\n";
    if (!cfg.problem.prior_dataset.empty())
      out << "prior_dataset = " << cfg.problem.prior_dataset << "\n";
  }
  if (cfg.problem.threshold)
    out << "threshold = " << format_double(*cfg.problem.threshold) << "\n";
  if (cfg.problem.direction)
    out << "direction = "
        << (*cfg.problem.direction == Direction::Super ? "super" : "sub")
        << "\n";
  if (cfg.problem.budget) out << "budget = " << *cfg.problem.budget << "\n";

  out << "\n[run]\n";
  out << "modes = ";
  for (std::size_t i = 0; i < cfg.modes.size(); ++i)
    out << (i ? "," : "") << mode_name(cfg.modes[i]);
  out << "\n";
  out << "repeats = " << cfg.repeats << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "f1_target = " << format_double(cfg.f1_target) << "\n";

  out << "\n[acquisition]\n";
  out << "kind = " << acquisition_name(cfg.acq.kind) << "\n";
  out << "epsilon = " << format_double(cfg.acq.epsilon) << "\n";
  out << "delta = " << format_double(cfg.acq.delta) << "\n";
  out << "lambda = " << format_double(cfg.acq.lambda) << "\n";
  out << "mc_samples = " << cfg.acq.mc_samples << "\n";
  out << "allow_repeats = " << (cfg.acq.allow_repeats ? "true" : "false") << "\n";

  out << "\n[gp]\n";
  out << "kernel = " << family_name(cfg.kernel) << "\n";
  out << "fit_noise = " << (cfg.fit_noise ? "true" : "false") << "\n";
  out << "noise_sd = " << format_double(cfg.noise_sd) << "\n";
  out << "refit_every = " << cfg.refit_every << "\n";
  out << "refit_warmup = " << cfg.refit_warmup << "\n";
  out << "beta = " << format_double(cfg.beta) << "\n";
  return out.str();
}

namespace {

// Per-seed prior cache: one ML source fit is shared by every mode that runs
// the same seed. Guarded for the worker pool.
struct PriorMemo {
  std::mutex mu;
  std::unordered_map<std::uint64_t, PriorContext> cache;
};

GPConfig gp_from_config(const ExperimentConfig& cfg) {
  GPConfig gp;
  gp.kernel = cfg.kernel;
  gp.fit_noise = cfg.fit_noise;
  gp.noise_sd = cfg.noise_sd;
  gp.refit_every = cfg.refit_every;
  gp.refit_warmup = cfg.refit_warmup;
  gp.beta = cfg.beta;
  return gp;
}

double grid_range(const Eigen::MatrixXd& pts) {
  double r = 0.0;
  for (Eigen::Index d = 0; d < pts.cols(); ++d)
    r = std::max(r, pts.col(d).maxCoeff() - pts.col(d).minCoeff());
  return r;
}

PriorContext fit_source_context(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& Y, const GPConfig& gp,
                                double range, std::uint64_t seed) {
  FitOptions opts;
  opts.seed = seed;
  opts.fit_noise = gp.fit_noise;
  const KernelSpec defaults = gp.default_spec(range);
  const FitResult fit =
      fit_hyperparameters(X, Y, PriorFunction::zero(), defaults, opts);
  auto state = std::make_shared<GPState>(make_gp_state(X, Y, fit.spec));
  PriorContext ctx;
  ctx.u_p = PriorFunction::gp_mean(state);
  ctx.source = SourceData{X, Y};
  ctx.source_fit = fit.spec;
  return ctx;
}

}  // namespace

MaterializedExperiment materialize(const ExperimentConfig& cfg) {
  MaterializedExperiment exp;
  exp.gp = gp_from_config(cfg);
  exp.acq = cfg.acq;

  const bool wants_diffgp =
      std::find(cfg.modes.begin(), cfg.modes.end(), TransferMode::DiffGP) !=
      cfg.modes.end();

  if (!cfg.problem.name.empty()) {
    const SyntheticName name = synthetic_from_name(cfg.problem.name);
    SyntheticFunction target{name, cfg.problem.kappa};
    Problem p = make_problem(name, cfg.problem.kappa);
    const int source_count = p.budget_T;  // Table budget, before any override
    p.noise_sd = cfg.noise_sd;
    bool relabel = false;
    if (cfg.problem.threshold) {
      p.h = *cfg.problem.threshold;
      relabel = true;
    }
    if (cfg.problem.direction) {
      p.direction = *cfg.problem.direction;
      relabel = true;
    }
    if (relabel)
      p.true_labels = synthetic_labels(target, p.eval_grid, p.h, p.direction);
    if (cfg.problem.budget) p.budget_T = *cfg.problem.budget;
    exp.problem = std::move(p);

    const GPConfig gp = exp.gp;
    const auto box = synthetic_box(name);
    const double range = box.second - box.first;
    const double noise_sd = cfg.noise_sd;
    auto memo = std::make_shared<PriorMemo>();
    const SyntheticFunction source{name, 0.0};
    exp.prior_factory = [=](std::uint64_t seed) {
      {
        std::lock_guard<std::mutex> lock(memo->mu);
        const auto it = memo->cache.find(seed);
        if (it != memo->cache.end()) return it->second;
      }
      const SourceSample sample =
          sample_source_points(source, source_count, noise_sd, seed);
      PriorContext ctx =
          fit_source_context(sample.X, sample.Y, gp, range, seed);
      std::lock_guard<std::mutex> lock(memo->mu);
      return memo->cache.emplace(seed, std::move(ctx)).first->second;
    };
    return exp;
  }

  // Dataset problem: the target function is the mean of a GP fitted once on
  // the ingested grid; labels and the oracle both come from that frozen fit.
  const GridDataset data = load_grid_dataset(cfg.problem.dataset);
  const double range = grid_range(data.points);
  FitOptions opts;
  opts.seed = cfg.seed;
  opts.fit_noise = cfg.fit_noise;
  const FitResult target_fit =
      fit_hyperparameters(data.points, data.values, PriorFunction::zero(),
                          exp.gp.default_spec(range), opts);
  auto target_state = std::make_shared<GPState>(
      make_gp_state(data.points, data.values, target_fit.spec));

  Problem p;
  p.name = cfg.problem.dataset;
  p.h = *cfg.problem.threshold;
  p.direction = *cfg.problem.direction;
  p.noise_sd = cfg.noise_sd;
  p.candidate_grid = data.points;
  p.eval_grid = data.points;
  p.budget_T = cfg.problem.budget
                   ? *cfg.problem.budget
                   : std::min<int>(200, static_cast<int>(data.points.rows()));
  p.oracle = [target_state](const Eigen::VectorXd& x) {
    return posterior_zero_mean(*target_state, x).mu;
  };
  p.true_labels.resize(data.points.rows());
  for (Eigen::Index i = 0; i < data.points.rows(); ++i)
    p.true_labels[i] =
        hard_classify(p.oracle(data.points.row(i)), p.h, p.direction);
  exp.problem = std::move(p);

  if (!cfg.problem.prior_dataset.empty()) {
    const GridDataset prior_data = load_grid_dataset(cfg.problem.prior_dataset);
    const GPConfig gp = exp.gp;
    const double prior_range = grid_range(prior_data.points);
    const std::uint64_t fit_seed = cfg.seed;
    const PriorContext ctx = fit_source_context(
        prior_data.points, prior_data.values, gp, prior_range, fit_seed);
    exp.prior_factory = [ctx](std::uint64_t) { return ctx; };
  } else {
    if (wants_diffgp)
      throw ConfigError(
          "run.modes: diffgp requires prior_dataset for dataset problems");
    exp.prior_factory = [](std::uint64_t) { return PriorContext{}; };
  }
  return exp;
}

}  // namespace apulse
