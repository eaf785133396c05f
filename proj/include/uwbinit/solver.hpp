#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>

#include "uwbinit/robust_kernel.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit {

/// Anchor position and constant range bias, with fit diagnostics.
struct AnchorEstimate {
  Vec3 position{Vec3::Zero()};
  double bias{0.0};
  double residual_rms{0.0};
  int iterations{0};
  bool converged{false};
  std::optional<double> alpha_final;
};

struct SolverConfig {
  int max_iterations{100};
  double gradient_tolerance{1e-10};
  double step_tolerance{1e-9};
  double lm_lambda_init{1e-3};
  double lm_lambda_factor{10.0};
  double alpha_min{kDefaultAlphaMin};
  int alpha_update_period{1};
  double trunc_bound{10.0};

  void validate() const;
};

namespace kernel {
struct None {};
struct Fixed {
  RobustKernel kernel;
};
struct Adaptive {
  double c{0.1};
};
}  // namespace kernel

using KernelMode = std::variant<kernel::None, kernel::Fixed, kernel::Adaptive>;

/// Pivot-differenced linear system of the range model with constant bias.
/// Rows: [-(p_k - p_j)^T, d_k - d_j] x = 0.5 ((d_k^2 - d_j^2) - (|p_k|^2 - |p_j|^2)).
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::size_t pivot{0};
};

LinearSystem build_linear_system(std::span<const SyncedSample> samples, std::size_t pivot);

/// Coarse closed-form solution of the differenced system. Defaults to the
/// closest-point pivot. Throws DegenerateGeometryError on rank loss.
AnchorEstimate solve_ls(std::span<const SyncedSample> samples,
                        std::optional<std::size_t> pivot = std::nullopt);

/// Minimum-norm solution of the same system; never throws on rank loss.
/// `converged` reports whether the system had full column rank.
AnchorEstimate solve_ls_min_norm(std::span<const SyncedSample> samples);

/// Range residuals |p_k - p_A| + bias - d_k.
Eigen::VectorXd range_residuals(std::span<const SyncedSample> samples, const Vec3& anchor, double bias);

/// Levenberg-Marquardt over (anchor, bias), optionally with IRLS weights from
/// a fixed or adaptive generalized robust kernel.
AnchorEstimate refine(std::span<const SyncedSample> samples, const AnchorEstimate& initial,
                      const KernelMode& mode, const SolverConfig& cfg = {});

}  // namespace uwbinit
