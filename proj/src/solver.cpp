#include "uwbinit/solver.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "uwbinit/error.hpp"
#include "uwbinit/geometry.hpp"

namespace uwbinit {

namespace {

constexpr double kRankThreshold = 1e-10;
constexpr double kMinPredictedRange = 1e-6;

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.allFinite(); }

AnchorEstimate make_estimate(std::span<const SyncedSample> samples, const Eigen::Vector4d& x) {
  AnchorEstimate est;
  est.position = x.head<3>();
  est.bias = x(3);
  const Eigen::VectorXd r = range_residuals(samples, est.position, est.bias);
  est.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  return est;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iterations < 1) throw Error(Errc::Config, "solver.max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0))
    throw Error(Errc::Config, "solver tolerances must be positive");
  if (!(lm_lambda_init > 0.0)) throw Error(Errc::Config, "solver.lm_lambda_init must be positive");
  if (!(lm_lambda_factor > 1.0)) throw Error(Errc::Config, "solver.lm_lambda_factor must be > 1");
  if (!(alpha_min < 2.0)) throw Error(Errc::Config, "solver.alpha_min must be < 2");
  if (alpha_update_period < 1) throw Error(Errc::Config, "solver.alpha_update_period must be >= 1");
  if (!(trunc_bound > 0.0)) throw Error(Errc::Config, "solver.trunc_bound must be positive");
}

LinearSystem build_linear_system(std::span<const SyncedSample> samples, std::size_t pivot) {
  if (pivot >= samples.size()) throw Error(Errc::InvalidArgument, "pivot index out of range");
  const std::size_t n = samples.size();
  LinearSystem sys;
  sys.pivot = pivot;
  sys.A.resize(static_cast<Eigen::Index>(n - 1), 4);
  sys.b.resize(static_cast<Eigen::Index>(n - 1));
  const Vec3& pj = samples[pivot].tag_pos;
  const double dj = samples[pivot].range;
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == pivot) continue;
    const Vec3& pk = samples[k].tag_pos;
    const double dk = samples[k].range;
    sys.A.row(row).head<3>() = -(pk - pj).transpose();
    sys.A(row, 3) = dk - dj;
    sys.b(row) = 0.5 * ((dk * dk - dj * dj) - (pk.squaredNorm() - pj.squaredNorm()));
    ++row;
  }
  return sys;
}

AnchorEstimate solve_ls(std::span<const SyncedSample> samples, std::optional<std::size_t> pivot) {
  if (samples.size() < 5) throw Error(Errc::InsufficientSamples, "solve_ls needs >= 5 samples");
  const LinearSystem sys = build_linear_system(samples, pivot.value_or(closest_index(samples)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankThreshold);
  const int rank = static_cast<int>(svd.rank());
  if (rank < 4) throw DegenerateGeometryError(rank, 4);
  const Eigen::Vector4d x = svd.solve(sys.b);
  if (!all_finite(x)) throw Error(Errc::Diverged, "non-finite linear solution");
  AnchorEstimate est = make_estimate(samples, x);
  est.converged = true;
  return est;
}

AnchorEstimate solve_ls_min_norm(std::span<const SyncedSample> samples) {
  if (samples.size() < 5) throw Error(Errc::InsufficientSamples, "solve_ls needs >= 5 samples");
  const LinearSystem sys = build_linear_system(samples, closest_index(samples));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankThreshold);
  const Eigen::Vector4d x = svd.solve(sys.b);
  AnchorEstimate est = make_estimate(samples, x);
  est.converged = svd.rank() == 4;
  return est;
}

Eigen::VectorXd range_residuals(std::span<const SyncedSample> samples, const Vec3& anchor, double bias) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    r(static_cast<Eigen::Index>(k)) = (samples[k].tag_pos - anchor).norm() + bias - samples[k].range;
  }
  return r;
}

namespace {

// Per-iteration loss bookkeeping for the three kernel modes.
class LossModel {
 public:
  LossModel(const KernelMode& mode, const SolverConfig& cfg) : cfg_(cfg) {
    if (const auto* f = std::get_if<kernel::Fixed>(&mode)) {
      kernel_ = f->kernel;
      robust_ = true;
    } else if (const auto* a = std::get_if<kernel::Adaptive>(&mode)) {
      kernel_ = {2.0, a->c};
      robust_ = true;
      adaptive_ = true;
    }
    if (robust_ && !(kernel_.c > 0.0)) throw Error(Errc::InvalidArgument, "kernel scale must be positive");
  }

  bool adaptive() const { return adaptive_; }
  bool robust() const { return robust_; }
  double alpha() const { return kernel_.alpha; }

  void adapt(const Eigen::VectorXd& r) {
    kernel_.alpha = adapt_alpha(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())),
                                kernel_.c, cfg_);
  }

  double cost(const Eigen::VectorXd& r) const {
    if (!robust_) return 0.5 * r.squaredNorm();
    double s = 0.0;
    for (Eigen::Index k = 0; k < r.size(); ++k) s += barron_loss(r(k), kernel_, cfg_.alpha_min);
    return s;
  }

  double weight(double r) const { return robust_ ? barron_weight(r, kernel_, cfg_.alpha_min) : 1.0; }

 private:
  const SolverConfig& cfg_;
  RobustKernel kernel_{};
  bool robust_{false};
  bool adaptive_{false};
};

}  // namespace

AnchorEstimate refine(std::span<const SyncedSample> samples, const AnchorEstimate& initial,
                      const KernelMode& mode, const SolverConfig& cfg) {
  cfg.validate();
  if (samples.size() < 5) throw Error(Errc::InsufficientSamples, "refine needs >= 5 samples");
  if (!initial.position.allFinite() || !std::isfinite(initial.bias))
    throw Error(Errc::InvalidArgument, "initial estimate is not finite");

  const auto n = static_cast<Eigen::Index>(samples.size());
  LossModel loss(mode, cfg);

  // Far from the optimum every residual looks like an outlier at scale c and
  // the alpha fit collapses onto the flat Welsch end, where LM stalls or
  // drifts. Settle the quadratic problem first and adapt from there.
  int warm_iterations = 0;
  Eigen::Vector4d theta;
  if (loss.adaptive()) {
    const AnchorEstimate warm = refine(samples, initial, kernel::None{}, cfg);
    warm_iterations = warm.iterations;
    theta << warm.position, warm.bias;
  } else {
    theta << initial.position, initial.bias;
  }

  // Unit directions anchor -> tag from the previous iterate; used when the
  // predicted range collapses and the direction is undefined.
  std::vector<Vec3> prev_dir(samples.size(), Vec3::UnitX());

  Eigen::VectorXd r(n);
  Eigen::MatrixXd J(n, 4);
  auto linearize = [&](const Eigen::Vector4d& th) {
    const Vec3 p = th.head<3>();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vec3 diff = samples[static_cast<std::size_t>(k)].tag_pos - p;
      const double dist = diff.norm();
      Vec3& dir = prev_dir[static_cast<std::size_t>(k)];
      if (dist >= kMinPredictedRange) dir = diff / dist;
      r(k) = dist + th(3) - samples[static_cast<std::size_t>(k)].range;
      J.row(k).head<3>() = -dir.transpose();
      J(k, 3) = 1.0;
    }
  };
  auto residuals_at = [&](const Eigen::Vector4d& th) { return range_residuals(samples, th.head<3>(), th(3)); };

  linearize(theta);
  if (!all_finite(r)) throw Error(Errc::Diverged, "non-finite residuals");
  if (loss.adaptive()) loss.adapt(r);
  double cost = loss.cost(r);

  double lambda = cfg.lm_lambda_init;
  bool converged = false;
  int iter = 0;
  Eigen::VectorXd w(n);
  while (iter < cfg.max_iterations) {
    ++iter;
    for (Eigen::Index k = 0; k < n; ++k) w(k) = loss.weight(r(k));
    const Eigen::Matrix4d H = J.transpose() * w.asDiagonal() * J;
    const Eigen::Vector4d g = J.transpose() * w.cwiseProduct(r);
    if (!H.allFinite() || !g.allFinite()) throw Error(Errc::Diverged, "non-finite normal equations");
    if (g.lpNorm<Eigen::Infinity>() < cfg.gradient_tolerance) {
      converged = true;
      break;
    }

    bool accepted = false;
    bool step_small = false;
    Eigen::Vector4d next;
    Eigen::VectorXd r_next;
    double cost_next = cost;
    while (!accepted) {
      Eigen::Matrix4d damped = H;
      damped.diagonal() += lambda * (H.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector4d delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) throw Error(Errc::Diverged, "non-finite step");
      if (delta.norm() < cfg.step_tolerance * (theta.norm() + cfg.step_tolerance)) {
        step_small = true;
        break;
      }
      next = theta + delta;
      r_next = residuals_at(next);
      if (!all_finite(r_next)) throw Error(Errc::Diverged, "non-finite residuals");
      cost_next = loss.cost(r_next);
      if (cost_next < cost) {
        accepted = true;
        lambda = std::max(lambda / cfg.lm_lambda_factor, 1e-15);
      } else {
        lambda *= cfg.lm_lambda_factor;
      }
    }
    if (step_small) {
      converged = true;
      break;
    }

    const double step = (next - theta).norm();
    theta = next;
    linearize(theta);
    cost = cost_next;
    if (loss.adaptive() && iter % cfg.alpha_update_period == 0) {
      loss.adapt(r);
      cost = loss.cost(r);
    }
    if (step < cfg.step_tolerance * (theta.norm() + cfg.step_tolerance)) {
      converged = true;
      break;
    }
  }

  AnchorEstimate est = make_estimate(samples, theta);
  est.iterations = warm_iterations + iter;
  est.converged = converged;
  if (loss.adaptive()) est.alpha_final = loss.alpha();
  return est;
}

}  // namespace uwbinit
