#pragma once

#include <random>
#include <vector>

#include "uwbinit/types.hpp"

namespace uwbinit::testing {

inline SyncedSample at(double t, const Vec3& p, const Vec3& anchor, double bias = 0.0) {
  return {t, p, (p - anchor).norm() + bias};
}

inline std::vector<SyncedSample> spec_config() {
  return {{0.0, Vec3(1, 0, 0), 1.0},
          {1.0, Vec3(2, 2, 0), std::sqrt(8.0)},
          {2.0, Vec3(2, -2, 0), std::sqrt(8.0)},
          {3.0, Vec3(2, 0, 2), std::sqrt(8.0)}};
}

/// Noiseless samples on random points of a cube around `anchor`.
inline std::vector<SyncedSample> cloud(std::mt19937_64& rng, std::size_t n, const Vec3& anchor, double half = 5.0,
                                       double bias = 0.0) {
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<SyncedSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = anchor + Vec3(u(rng), u(rng), u(rng));
    out.push_back(at(static_cast<double>(i), p, anchor, bias));
  }
  return out;
}

}  // namespace uwbinit::testing
