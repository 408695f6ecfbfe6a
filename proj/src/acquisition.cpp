#include "apulse/acquisition.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "apulse/numeric.hpp"

namespace apulse {

const char* acquisition_name(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::Straddle: return "straddle";
    case AcquisitionKind::C2LSE: return "c2lse";
    case AcquisitionKind::RMILE: return "rmile";
  }
  return "?";
}

AcquisitionKind acquisition_from_name(const std::string& name) {
  if (name == "straddle") return AcquisitionKind::Straddle;
  if (name == "c2lse") return AcquisitionKind::C2LSE;
  if (name == "rmile") return AcquisitionKind::RMILE;
  throw std::invalid_argument("unknown acquisition: " + name);
}

void validate(const AcquisitionSpec& spec) {
  if (!(spec.epsilon > 0.0))
    throw std::invalid_argument("AcquisitionSpec: epsilon must be > 0");
  if (!(spec.delta > 0.0 && spec.delta < 1.0))
    throw std::invalid_argument("AcquisitionSpec: delta must lie in (0,1)");
  if (!(spec.lambda > 0.0))
    throw std::invalid_argument("AcquisitionSpec: lambda must be > 0");
  if (spec.mc_samples < 1)
    throw std::invalid_argument("AcquisitionSpec: mc_samples must be >= 1");
}

double straddle_value(double mu, double sigma, double h) {
  return 1.96 * sigma - std::abs(mu - h);
}

double c2lse_value(double mu, double sigma, double h, double epsilon) {
  return sigma / std::max(epsilon, std::abs(mu - h));
}

double rmile_value(const GPState& state, const Eigen::MatrixXd& grid,
                   const GridPosterior& post, Eigen::Index candidate, double h,
                   bool superlevel, const AcquisitionSpec& spec,
                   std::uint64_t seed, std::uint32_t salt) {
  const Eigen::Index G = grid.rows();
  if (G == 0) throw std::invalid_argument("rmile_value: empty grid");
  if (candidate < 0 || candidate >= G)
    throw std::invalid_argument("rmile_value: candidate outside the grid");

  const double sign = superlevel ? 1.0 : -1.0;
  const double hh = sign * h;
  const double q_delta = normal_quantile(spec.delta);

  // |I_eps| under the current posterior: P(f > h - eps) > delta, which for
  // sd = 0 degenerates to the point-mass indicator.
  Eigen::Index i_eps = 0;
  for (Eigen::Index z = 0; z < G; ++z)
    if (sign * post.mu(z) - (hh - spec.epsilon) > post.sd(z) * q_delta) ++i_eps;

  // One-point conditioning at the candidate: posterior cross-covariance
  // cov(z,c) = k(z,c) - k_t(z)^T (K+s2 I)^-1 k_t(c).
  const Eigen::VectorXd xc = grid.row(candidate);
  Eigen::VectorXd cov(G);
  for (Eigen::Index z = 0; z < G; ++z)
    cov(z) = kernel_eval(state.spec, grid.row(z), xc);
  if (state.t() > 0) {
    Eigen::VectorXd kc(state.t());
    for (Eigen::Index i = 0; i < state.t(); ++i)
      kc(i) = kernel_eval(state.spec, state.X.row(i), xc);
    Eigen::VectorXd w = state.chol.triangularView<Eigen::Lower>().solve(kc);
    w = state.chol.transpose().triangularView<Eigen::Upper>().solve(w);
    for (Eigen::Index z = 0; z < G; ++z) {
      double kz_dot = 0.0;
      for (Eigen::Index i = 0; i < state.t(); ++i)
        kz_dot += kernel_eval(state.spec, state.X.row(i), grid.row(z)) * w(i);
      cov(z) -= kz_dot;
    }
  }

  double noise = state.spec.noise_variance;
  if (noise < 1e-8) noise += 1e-8 * state.spec.variance;
  const double var_c = post.sd(candidate) * post.sd(candidate);
  const double s_y = var_c + noise;

  Eigen::VectorXd weight(G), sd_plus(G), base(G);
  const double mc = sign * post.mu(candidate);
  for (Eigen::Index z = 0; z < G; ++z) {
    weight(z) = cov(z) / s_y;
    const double v = post.sd(z) * post.sd(z) - cov(z) * cov(z) / s_y;
    sd_plus(z) = std::sqrt(std::max(v, 0.0));
    base(z) = sign * post.mu(z);
  }

  auto count_iplus = [&](double y_draw) {
    Eigen::Index n = 0;
    const double shift = y_draw - mc;
    for (Eigen::Index z = 0; z < G; ++z)
      if (base(z) + weight(z) * shift - hh > sd_plus(z) * q_delta) ++n;
    return static_cast<double>(n);
  };

  double expectation;
  if (s_y < 1e-12) {
    expectation = count_iplus(mc);
  } else {
    auto rng = make_rng(seed, RngStream::rmile, salt);
    const double sd_y = std::sqrt(s_y);
    double acc = 0.0;
    for (int k = 0; k < spec.mc_samples; ++k)
      acc += count_iplus(mc + sd_y * normal_draw(rng));
    expectation = acc / spec.mc_samples;
  }

  return std::max(expectation - static_cast<double>(i_eps),
                  spec.lambda * post.sd(candidate));
}

Eigen::Index select_next(const Eigen::VectorXd& values,
                         [[maybe_unused]] const std::unordered_set<Eigen::Index>&
                             already_chosen,  // eligible by design
                         std::mt19937_64& rng) {
  if (values.size() < 1) throw std::invalid_argument("select_next: no candidates");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i))) continue;
    any = true;
    if (values(i) > best) best = values(i);
  }
  if (!any) throw std::runtime_error("select_next: all acquisition values non-finite");
  std::vector<Eigen::Index> ties;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) == best) ties.push_back(i);
  if (ties.size() == 1) return ties.front();
  return ties[uniform_index(rng, ties.size())];
}

}  // namespace apulse
