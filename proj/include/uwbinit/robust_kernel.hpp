#pragma once

#include <cmath>
#include <span>

namespace uwbinit {

/// Shape alpha at or below which the generalized loss is evaluated as its
/// alpha -> -infinity limit (Welsch).
inline constexpr double kDefaultAlphaMin = -10.0;

/// Shape/scale pair of the generalized robust loss.
struct RobustKernel {
  double alpha{2.0};
  double c{1.0};
};

/// Generalized robust loss rho(r, alpha, c). The removable singularities at
/// alpha = 2 and alpha = 0 use their closed-form limits.
template <typename Scalar>
Scalar barron_loss(Scalar r, const RobustKernel& k, double alpha_min = kDefaultAlphaMin) {
  const Scalar z = r / static_cast<Scalar>(k.c);
  const Scalar x = z * z;
  const double a = k.alpha;
  if (a == 2.0) return Scalar(0.5) * x;
  if (a == 0.0) return std::log1p(Scalar(0.5) * x);
  if (a <= alpha_min) return -std::expm1(Scalar(-0.5) * x);
  const Scalar b = static_cast<Scalar>(std::abs(a - 2.0));
  const Scalar as = static_cast<Scalar>(a);
  return (b / as) * std::expm1(Scalar(0.5) * as * std::log1p(x / b));
}

/// IRLS weight psi(r)/r of barron_loss.
template <typename Scalar>
Scalar barron_weight(Scalar r, const RobustKernel& k, double alpha_min = kDefaultAlphaMin) {
  const Scalar c = static_cast<Scalar>(k.c);
  const Scalar inv_c2 = Scalar(1) / (c * c);
  const Scalar x = (r / c) * (r / c);
  const double a = k.alpha;
  if (a == 2.0) return inv_c2;
  if (a == 0.0) return Scalar(2) / (r * r + Scalar(2) * c * c);
  if (a <= alpha_min) return inv_c2 * std::exp(Scalar(-0.5) * x);
  const Scalar b = static_cast<Scalar>(std::abs(a - 2.0));
  return inv_c2 * std::exp((Scalar(0.5) * static_cast<Scalar>(a) - Scalar(1)) * std::log1p(x / b));
}

struct SolverConfig;

/// log of the truncated partition function, integral over [-B, B] of
/// exp(-rho(u, alpha, 1)), by composite Simpson on 2001 nodes.
double log_partition(double alpha, double trunc_bound, double alpha_min = kDefaultAlphaMin);

/// Shape minimising sum_k rho(r_k, alpha, c) + n log Z(alpha) over
/// [alpha_min, 2]: 0.1 grid, then golden-section inside the best cell.
double adapt_alpha(std::span<const double> residuals, double c, const SolverConfig& cfg);

}  // namespace uwbinit
