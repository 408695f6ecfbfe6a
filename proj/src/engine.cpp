#include "apulse/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "apulse/numeric.hpp"

namespace apulse {

KernelSpec GPConfig::default_spec(double input_range) const {
  KernelSpec s;
  s.family = kernel;
  s.variance = 1.0;
  s.lengthscale = 0.2 * (input_range > 0.0 ? input_range : 1.0);
  s.noise_variance = noise_sd * noise_sd;
  return s;
}

void validate(const Problem& problem) {
  if (!problem.oracle) throw std::invalid_argument("Problem: oracle missing");
  if (problem.budget_T < 1)
    throw std::invalid_argument("Problem: budget_T must be >= 1");
  if (problem.noise_sd < 0.0)
    throw std::invalid_argument("Problem: noise_sd must be >= 0");
  if (problem.candidate_grid.rows() < 1)
    throw std::invalid_argument("Problem: empty candidate grid");
  if (problem.eval_grid.rows() !=
      static_cast<Eigen::Index>(problem.true_labels.size()))
    throw std::invalid_argument("Problem: eval_grid/true_labels length mismatch");
  if (problem.candidate_grid.cols() != problem.eval_grid.cols())
    throw std::invalid_argument("Problem: grid dimension mismatch");
}

Label classify_with_confidence(double mu, double sigma, double h, double beta,
                               Direction direction) {
  if (sigma < 0.0) throw std::invalid_argument("classify: sigma must be >= 0");
  if (!(beta > 0.0)) throw std::invalid_argument("classify: beta must be > 0");
  Label label;
  if (mu - beta * sigma > h) label = Label::InSet;
  else if (mu + beta * sigma < h) label = Label::OutOfSet;
  else return Label::Unclassified;
  if (direction == Direction::Sub)
    label = label == Label::InSet ? Label::OutOfSet : Label::InSet;
  return label;
}

Label hard_classify(double mu, double h, Direction direction) {
  if (direction == Direction::Super)
    return mu > h ? Label::InSet : Label::OutOfSet;
  return mu < h ? Label::InSet : Label::OutOfSet;
}

double f1_score(const std::vector<Label>& pred, const std::vector<Label>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("f1_score: length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::InSet;  // Unclassified counts as OutOfSet
    const bool t = truth[i] == Label::InSet;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

std::optional<int> iterations_to_threshold(const Eigen::VectorXd& f1_curve,
                                           double target) {
  for (Eigen::Index i = 0; i < f1_curve.size(); ++i)
    if (f1_curve(i) >= target) return static_cast<int>(i) + 1;
  return std::nullopt;
}

namespace {

bool should_refit(int t, const GPConfig& gp) {
  if (t < 2) return false;
  if (gp.refit_every <= 1) return true;
  if (t <= gp.refit_warmup) return true;
  return (t - gp.refit_warmup) % gp.refit_every == 0;
}

double noise_diag(const KernelSpec& spec) {
  double d = spec.noise_variance;
  if (spec.noise_variance < 1e-8) d += 1e-8 * spec.variance;
  return d;
}

// Fresh factorization with a single 10x-jitter retry before giving up.
Eigen::MatrixXd robust_chol(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd K = gram_matrix(spec, X);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  K.diagonal().array() += 10.0 * 1e-8 * spec.variance;
  llt.compute(K);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw std::runtime_error(
      "run_lse: Gram factorization failed even after the 10x jitter retry");
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
  Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(v);
}

bool same_grid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).squaredNorm() == 0.0;
}

// The whole mutable state of one run. All points live in P = [source; target]
// (source rows only for DiffGP); cross-covariance columns, the Eq-2 grid
// variance, and the factorization are kept in step with P. Between refits the
// variance is downdated by the exact one-point Schur complement instead of a
// full re-solve; any hyperparameter change triggers a full rebuild.
struct Loop {
  const Problem& prob;
  TransferMode mode;
  const PriorContext& prior;
  const GPConfig& gp;
  std::uint64_t seed;

  int s = 0;  // source rows (DiffGP only)
  int t = 0;  // target observations
  Eigen::MatrixXd P;       // (s+T) x d, rows 0..s+t-1 valid
  Eigen::VectorXd Yall;    // adjusted source values then target observations
  Eigen::VectorXd up_X;    // u_p at target points (Vanilla/APLSE)
  Eigen::VectorXd ms_X;    // source-GP mean at target points (DiffGP)
  KernelSpec spec;         // target kernel (DiffGP: fixed source kernel)
  KernelSpec diff_spec;    // DiffGP difference-model kernel
  Eigen::MatrixXd L;

  Eigen::MatrixXd Kc;      // G x (s+T) cross-covariance to the candidate grid
  Eigen::VectorXd var_c;
  Eigen::VectorXd up_c;
  Eigen::VectorXd mu_c;

  bool eval_same = true;
  Eigen::MatrixXd Ke;      // only when eval grid differs
  Eigen::VectorXd up_e;
  Eigen::VectorXd mu_e;
  Eigen::VectorXd var_e;

  int n() const { return s + t; }
  bool uses_prior() const {
    return mode == TransferMode::Vanilla || mode == TransferMode::APLSE;
  }

  void rebuild_cross_cov() {
    const int m = n();
    for (int j = 0; j < m; ++j) fill_cross_col(j);
  }

  void fill_cross_col(int j) {
    const Eigen::VectorXd x = P.row(j);
    for (Eigen::Index z = 0; z < Kc.rows(); ++z)
      Kc(z, j) = kernel_eval(spec, prob.candidate_grid.row(z), x);
    if (!eval_same)
      for (Eigen::Index z = 0; z < Ke.rows(); ++z)
        Ke(z, j) = kernel_eval(spec, prob.eval_grid.row(z), x);
  }

  // Full Eq-2 variance reset from the factorization (used at rebuilds).
  void reset_variance() {
    const int m = n();
    if (m == 0) {
      var_c.setConstant(spec.variance);
      if (!eval_same) var_e.setConstant(spec.variance);
      return;
    }
    const Eigen::MatrixXd V = L.triangularView<Eigen::Lower>().solve(
        Kc.leftCols(m).transpose().eval());
    for (Eigen::Index z = 0; z < var_c.size(); ++z)
      var_c(z) = std::clamp(spec.variance - V.col(z).squaredNorm(), 0.0,
                            spec.variance);
    if (!eval_same) {
      const Eigen::MatrixXd Ve = L.triangularView<Eigen::Lower>().solve(
          Ke.leftCols(m).transpose().eval());
      for (Eigen::Index z = 0; z < var_e.size(); ++z)
        var_e(z) = std::clamp(spec.variance - Ve.col(z).squaredNorm(), 0.0,
                              spec.variance);
    }
  }

  void refactorize() { L = robust_chol(spec, P.topRows(n())); }

  // Mode posterior mean over the grids; reuses the current factorization.
  void recompute_means() {
    const int m = n();
    if (m == 0) {
      mu_c = mode == TransferMode::Scratch ? Eigen::VectorXd::Zero(mu_c.size())
                                           : up_c;
      if (!eval_same)
        mu_e = mode == TransferMode::Scratch ? Eigen::VectorXd::Zero(mu_e.size())
                                             : up_e;
      return;
    }
    Eigen::VectorXd a;
    switch (mode) {
      case TransferMode::Scratch:
      case TransferMode::DiffGP:
        a = chol_solve(L, Yall.head(m));
        mu_c = Kc.leftCols(m) * a;
        if (!eval_same) mu_e = Ke.leftCols(m) * a;
        return;
      case TransferMode::Vanilla: {
        a = chol_solve(L, Yall.head(m) - up_X.head(m));
        mu_c = up_c + Kc.leftCols(m) * a;
        if (!eval_same) mu_e = up_e + Ke.leftCols(m) * a;
        return;
      }
      case TransferMode::APLSE: {
        const Eigen::VectorXd r1 = Yall.head(m) - up_X.head(m);
        const Eigen::VectorXd a1 = chol_solve(L, r1);
        // mu_bar at the training points uses the noiseless Gram
        const Eigen::MatrixXd Kt = kernel_matrix(spec, P.topRows(m), P.topRows(m));
        const Eigen::VectorXd mu_bar_X = up_X.head(m) + Kt * a1;
        const Eigen::VectorXd a2 = chol_solve(L, Yall.head(m) - mu_bar_X);
        a = a1 + a2;
        mu_c = up_c + Kc.leftCols(m) * a;
        if (!eval_same) mu_e = up_e + Ke.leftCols(m) * a;
        return;
      }
    }
  }
};

}  // namespace

RunResult run_lse(const Problem& problem, TransferMode mode,
                  const PriorContext& prior, const AcquisitionSpec& acq,
                  const GPConfig& gp, std::uint64_t seed) {
  validate(problem);
  validate(acq);
  if (mode == TransferMode::DiffGP && !prior.source)
    throw std::invalid_argument("run_lse: DiffGP mode requires source data");

  const Eigen::MatrixXd& cand = problem.candidate_grid;
  const Eigen::Index G = cand.rows();
  const int T = problem.budget_T;
  const bool super = problem.direction == Direction::Super;

  double range = 0.0;
  for (Eigen::Index d = 0; d < cand.cols(); ++d)
    range = std::max(range, cand.col(d).maxCoeff() - cand.col(d).minCoeff());

  Loop loop{problem, mode, prior, gp, seed};
  loop.spec = gp.default_spec(range);
  loop.diff_spec = loop.spec;
  loop.eval_same = same_grid(problem.eval_grid, cand);
  loop.s = mode == TransferMode::DiffGP ? static_cast<int>(prior.source->X.rows()) : 0;

  const int cap = loop.s + T;
  loop.P.resize(cap, cand.cols());
  loop.Yall.resize(cap);
  loop.up_X = Eigen::VectorXd::Zero(cap);
  loop.ms_X.resize(T);
  loop.Kc.resize(G, cap);
  loop.var_c.resize(G);
  loop.mu_c.resize(G);
  loop.up_c = loop.uses_prior() ? prior.u_p.eval(cand)
                                : Eigen::VectorXd::Zero(G).eval();
  if (!loop.eval_same) {
    loop.Ke.resize(problem.eval_grid.rows(), cap);
    loop.mu_e.resize(problem.eval_grid.rows());
    loop.var_e.resize(problem.eval_grid.rows());
    loop.up_e = loop.uses_prior() ? prior.u_p.eval(problem.eval_grid)
                                  : Eigen::VectorXd::Zero(problem.eval_grid.rows()).eval();
  }

  // DiffGP: condition on the raw source immediately (difference model is zero
  // until target data arrive); the union keeps the source-fitted kernel.
  std::optional<GPState> source_gp;
  if (mode == TransferMode::DiffGP) {
    const SourceData& src = *prior.source;
    KernelSpec src_spec;
    if (prior.source_fit) {
      src_spec = *prior.source_fit;
    } else {
      FitOptions opts;
      opts.seed = seed;
      opts.fit_noise = gp.fit_noise;
      src_spec = fit_hyperparameters(src.X, src.Y, PriorFunction::zero(),
                                     loop.spec, opts)
                     .spec;
    }
    source_gp = make_gp_state(src.X, src.Y, src_spec);
    loop.spec = src_spec;
    loop.P.topRows(loop.s) = src.X;
    loop.Yall.head(loop.s) = src.Y;
    loop.rebuild_cross_cov();
    loop.refactorize();
    loop.reset_variance();
  } else {
    loop.var_c.setConstant(loop.spec.variance);
    if (!loop.eval_same) loop.var_e.setConstant(loop.spec.variance);
  }
  loop.recompute_means();

  auto noise_rng = make_rng(seed, RngStream::observation_noise);
  auto tie_rng = make_rng(seed, RngStream::tie_break);
  std::unordered_set<Eigen::Index> chosen;

  RunResult result;
  result.seed = seed;
  result.mode = mode;
  result.selected_points.resize(T, cand.cols());
  result.observations.resize(T);
  result.f1_curve.resize(T);
  result.wall_ms.reserve(T);

  std::vector<Label> labels(problem.eval_grid.rows());

  for (int it = 1; it <= T; ++it) {
    const auto tick = std::chrono::steady_clock::now();

    // step 1: refit hyperparameters on the configured cadence
    if (should_refit(loop.t, gp)) {
      FitOptions opts;
      opts.seed = seed;
      opts.salt = static_cast<std::uint32_t>(loop.t);
      opts.fit_noise = gp.fit_noise;
      if (mode == TransferMode::DiffGP) {
        // difference model gets its own fit; union kernel stays source-fitted
        const Eigen::VectorXd diff_Y =
            loop.Yall.segment(loop.s, loop.t) - loop.ms_X.head(loop.t);
        loop.diff_spec = fit_hyperparameters(loop.P.middleRows(loop.s, loop.t),
                                             diff_Y, PriorFunction::zero(),
                                             loop.diff_spec, opts)
                             .spec;
        const GPState diff_gp = make_gp_state(loop.P.middleRows(loop.s, loop.t),
                                              diff_Y, loop.diff_spec);
        const Eigen::MatrixXd Kd =
            kernel_matrix(loop.diff_spec, prior.source->X,
                          loop.P.middleRows(loop.s, loop.t));
        loop.Yall.head(loop.s) = prior.source->Y + Kd * diff_gp.alpha_cache;
        loop.recompute_means();  // variance unaffected: same points, same kernel
      } else {
        const PriorFunction residual_prior =
            loop.uses_prior() ? prior.u_p : PriorFunction::zero();
        const KernelSpec fitted =
            fit_hyperparameters(loop.P.topRows(loop.t),
                                loop.Yall.head(loop.t), residual_prior,
                                loop.spec, opts)
                .spec;
        const bool changed = fitted.variance != loop.spec.variance ||
                             fitted.lengthscale != loop.spec.lengthscale ||
                             fitted.noise_variance != loop.spec.noise_variance;
        if (changed) {
          loop.spec = fitted;
          loop.rebuild_cross_cov();
          loop.refactorize();
          loop.reset_variance();
          loop.recompute_means();
        }
      }
    }

    // steps 3-4: acquisition over the candidate grid, argmax selection
    Eigen::VectorXd values(G);
    switch (acq.kind) {
      case AcquisitionKind::Straddle:
        for (Eigen::Index z = 0; z < G; ++z)
          values(z) = straddle_value(loop.mu_c(z), std::sqrt(loop.var_c(z)),
                                     problem.h);
        break;
      case AcquisitionKind::C2LSE:
        for (Eigen::Index z = 0; z < G; ++z)
          values(z) = c2lse_value(loop.mu_c(z), std::sqrt(loop.var_c(z)),
                                  problem.h, acq.epsilon);
        break;
      case AcquisitionKind::RMILE: {
        GPState view;
        view.X = loop.P.topRows(loop.n());
        view.Y = loop.Yall.head(loop.n());
        view.spec = loop.spec;
        view.chol = loop.L;
        GridPosterior post{loop.mu_c, loop.var_c.cwiseSqrt()};
        for (Eigen::Index z = 0; z < G; ++z)
          values(z) = rmile_value(view, cand, post, z, problem.h, super, acq,
                                  seed, static_cast<std::uint32_t>(it));
        break;
      }
    }
    Eigen::Index pick;
    if (!acq.allow_repeats && !chosen.empty()) {
      Eigen::VectorXd masked = values;
      bool all_masked = true;
      for (Eigen::Index z = 0; z < G; ++z) {
        if (chosen.count(z)) masked(z) = -std::numeric_limits<double>::infinity();
        else all_masked = false;
      }
      pick = select_next(all_masked ? values : masked, chosen, tie_rng);
    } else {
      pick = select_next(values, chosen, tie_rng);
    }
    chosen.insert(pick);
    const Eigen::VectorXd x_new = cand.row(pick);

    // exact one-point Schur downdate of the grid variance (old factorization)
    const int m = loop.n();
    Eigen::VectorXd kc_col(G);
    for (Eigen::Index z = 0; z < G; ++z)
      kc_col(z) = kernel_eval(loop.spec, cand.row(z), x_new);
    Eigen::VectorXd ke_col;
    if (!loop.eval_same) {
      ke_col.resize(loop.Ke.rows());
      for (Eigen::Index z = 0; z < loop.Ke.rows(); ++z)
        ke_col(z) = kernel_eval(loop.spec, problem.eval_grid.row(z), x_new);
    }
    Eigen::VectorXd cov = kc_col;
    Eigen::VectorXd cov_e = ke_col;
    if (m > 0) {
      Eigen::VectorXd kvec(m);
      for (int i = 0; i < m; ++i)
        kvec(i) = kernel_eval(loop.spec, loop.P.row(i), x_new);
      const Eigen::VectorXd w = chol_solve(loop.L, kvec);
      cov -= loop.Kc.leftCols(m) * w;
      if (!loop.eval_same) cov_e -= loop.Ke.leftCols(m) * w;
    }
    const double s_y = loop.var_c(pick) + noise_diag(loop.spec);
    for (Eigen::Index z = 0; z < G; ++z)
      loop.var_c(z) = std::clamp(loop.var_c(z) - cov(z) * cov(z) / s_y, 0.0,
                                 loop.spec.variance);
    if (!loop.eval_same)
      for (Eigen::Index z = 0; z < loop.var_e.size(); ++z)
        loop.var_e(z) = std::clamp(loop.var_e(z) - cov_e(z) * cov_e(z) / s_y,
                                   0.0, loop.spec.variance);

    // step 5: observe with fresh noise
    const double f_val = problem.oracle(x_new);
    if (!std::isfinite(f_val))
      throw std::runtime_error("run_lse: oracle returned a non-finite value at iteration " +
                               std::to_string(it));
    const double y = f_val + problem.noise_sd * normal_draw(noise_rng);

    // steps 6-7: append and refactorize from scratch
    loop.P.row(m) = x_new;
    loop.Yall(m) = y;
    if (loop.uses_prior()) loop.up_X(loop.t) = prior.u_p(x_new);
    if (mode == TransferMode::DiffGP)
      loop.ms_X(loop.t) = posterior_zero_mean(*source_gp, x_new).mu;
    loop.Kc.col(m) = kc_col;
    if (!loop.eval_same) loop.Ke.col(m) = ke_col;
    ++loop.t;
    loop.refactorize();
    loop.recompute_means();

    // record the beta-rule classification F1 on the eval grid
    const Eigen::VectorXd& mu_eval = loop.eval_same ? loop.mu_c : loop.mu_e;
    const Eigen::VectorXd& var_eval = loop.eval_same ? loop.var_c : loop.var_e;
    for (Eigen::Index z = 0; z < mu_eval.size(); ++z)
      labels[z] = classify_with_confidence(mu_eval(z), std::sqrt(var_eval(z)),
                                           problem.h, gp.beta,
                                           problem.direction);
    result.selected_points.row(it - 1) = x_new;
    result.observations(it - 1) = y;
    result.f1_curve(it - 1) = f1_score(labels, problem.true_labels);
    result.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  tick)
            .count());
  }
  result.final_labels = labels;
  return result;
}

RepeatStats run_repeats(const Problem& problem, TransferMode mode,
                        const PriorFactory& prior_factory,
                        const AcquisitionSpec& acq, const GPConfig& gp,
                        const std::vector<std::uint64_t>& seeds,
                        double f1_target, int workers) {
  if (seeds.empty()) throw std::invalid_argument("run_repeats: no seeds");
  const std::size_t n = seeds.size();
  std::vector<RunResult> runs(n);
  std::vector<std::string> errors(n);

  unsigned W = workers <= 0 ? std::thread::hardware_concurrency()
                            : static_cast<unsigned>(workers);
  W = std::clamp<unsigned>(W, 1, static_cast<unsigned>(n));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        // Scratch never reads the prior; skip the source fit entirely.
        const PriorContext prior = mode == TransferMode::Scratch
                                       ? PriorContext{}
                                       : prior_factory(seeds[i]);
        runs[i] = run_lse(problem, mode, prior, acq, gp, seeds[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (W == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < W; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("run_repeats: seed " + std::to_string(seeds[i]) +
                               " failed: " + errors[i]);

  RepeatStats stats;
  const int T = problem.budget_T;
  stats.mean_curve.resize(T);
  stats.stderr_curve.resize(T);
  for (int i = 0; i < T; ++i) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r.f1_curve(i);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : runs) {
      const double d = r.f1_curve(i) - mean;
      ss += d * d;
    }
    stats.mean_curve(i) = mean;
    stats.stderr_curve(i) =
        n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
              : 0.0;
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> iters;
  for (const auto& r : runs) {
    const auto reached = iterations_to_threshold(r.f1_curve, f1_target);
    stats.iters_to_target.push_back(reached);
    iters.push_back(reached ? static_cast<double>(*reached) : inf);
  }
  std::vector<double> sorted = iters;
  std::sort(sorted.begin(), sorted.end());
  if (n % 2 == 1) {
    const double m = sorted[n / 2];
    if (std::isfinite(m)) stats.median_iters = m;
  } else {
    const double lo = sorted[n / 2 - 1], hi = sorted[n / 2];
    if (std::isfinite(lo) && std::isfinite(hi)) stats.median_iters = 0.5 * (lo + hi);
  }
  if (std::all_of(iters.begin(), iters.end(),
                  [](double v) { return std::isfinite(v); })) {
    double mean = 0.0;
    for (double v : iters) mean += v;
    stats.mean_iters = mean / static_cast<double>(n);
  }
  stats.runs = std::move(runs);
  return stats;
}

}  // namespace apulse
