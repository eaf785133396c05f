#include "uwbinit/robust_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "uwbinit/error.hpp"
#include "uwbinit/solver.hpp"

namespace uwbinit {

namespace {

constexpr int kSimpsonNodes = 2001;
constexpr double kGridStep = 0.1;
constexpr double kGoldenTol = 1e-4;

double simpson_log_partition(double alpha, double bound, double alpha_min) {
  // The integrand is even: integrate [0, B] on the 1001 non-negative nodes
  // and double, which equals Simpson on all 2001 nodes of [-B, B].
  const int half = (kSimpsonNodes - 1) / 2;
  const double h = bound / half;
  const RobustKernel k{alpha, 1.0};
  double sum = 0.0;
  for (int i = 0; i <= half; ++i) {
    const double f = std::exp(-barron_loss(i * h, k, alpha_min));
    const double w = (i == 0 || i == half) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * f;
  }
  return std::log(2.0 * sum * h / 3.0);
}

std::vector<double> alpha_grid(double alpha_min) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double a = alpha_min + i * kGridStep;
    if (a >= 2.0 - 1e-9) break;
    grid.push_back(a);
  }
  grid.push_back(2.0);
  return grid;
}

// log Z on the grid nodes, memoised per (alpha_min, bound).
const std::vector<double>& grid_log_partition(double alpha_min, double bound) {
  thread_local std::map<std::pair<double, double>, std::vector<double>> cache;
  auto [it, inserted] = cache.try_emplace({alpha_min, bound});
  if (inserted) {
    for (double a : alpha_grid(alpha_min)) it->second.push_back(simpson_log_partition(a, bound, alpha_min));
  }
  return it->second;
}

}  // namespace

double log_partition(double alpha, double trunc_bound, double alpha_min) {
  return simpson_log_partition(alpha, trunc_bound, alpha_min);
}

double adapt_alpha(std::span<const double> residuals, double c, const SolverConfig& cfg) {
  if (residuals.size() < 10) throw Error(Errc::InsufficientSamples, "adapt_alpha needs >= 10 residuals");
  if (!(c > 0.0)) throw Error(Errc::InvalidArgument, "kernel scale must be positive");
  const double n = static_cast<double>(residuals.size());
  const double amin = cfg.alpha_min;

  auto rho_sum = [&](double a) {
    const RobustKernel k{a, c};
    double s = 0.0;
    for (double r : residuals) s += barron_loss(r, k, amin);
    return s;
  };
  auto objective = [&](double a) { return rho_sum(a) + n * simpson_log_partition(a, cfg.trunc_bound, amin); };

  const std::vector<double> grid = alpha_grid(amin);
  const std::vector<double>& log_z = grid_log_partition(amin, cfg.trunc_bound);
  std::size_t best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = rho_sum(grid[i]) + n * log_z[i];
    if (f < best_f) {
      best_f = f;
      best = i;
    }
  }

  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > kGoldenTol) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double golden = f1 < f2 ? x1 : x2;
  const double golden_f = std::min(f1, f2);
  return golden_f < best_f ? golden : grid[best];
}

}  // namespace uwbinit
