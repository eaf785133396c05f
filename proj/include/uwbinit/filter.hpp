#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "uwbinit/error.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit {

/// Triangle-rule threshold tau in meters.
struct FilterConfig {
  double tau{0.1};

  /// 2 sigma_d when the noise level is known, 0.1 m otherwise.
  static FilterConfig from_sigma(std::optional<double> sigma_d) {
    return {sigma_d ? 2.0 * *sigma_d : 0.1};
  }
};

template <typename Scalar>
struct FilterStateT {
  std::optional<SyncedSampleT<Scalar>> last_accepted;
  std::optional<Scalar> last_ingested_t;
  std::uint64_t accepted{0};
  std::uint64_t rejected{0};
  /// Longest time between an ingested sample and the accepted sample it was
  /// compared against. The filter never resets on gaps; this is diagnostic only.
  Scalar max_gap{0};

  std::uint64_t total() const { return accepted + rejected; }
};

using FilterState = FilterStateT<double>;

/// |d_curr - d_prev| <= |p_curr - p_prev| + tau, inclusive.
template <typename Scalar>
bool check(const SyncedSampleT<Scalar>& prev, const SyncedSampleT<Scalar>& curr,
           const FilterConfig& cfg) {
  if (!(prev.t < curr.t)) throw Error(Errc::OutOfOrder);
  const Scalar dd = std::abs(curr.range - prev.range);
  const Scalar dp = (curr.tag_pos - prev.tag_pos).norm();
  return dd <= dp + static_cast<Scalar>(cfg.tau);
}

/// Runs one sample through the filter. The first sample is always accepted;
/// later ones are checked against the last accepted sample.
template <typename Scalar>
bool ingest(FilterStateT<Scalar>& state, const SyncedSampleT<Scalar>& curr, const FilterConfig& cfg) {
  if (state.last_ingested_t && !(curr.t > *state.last_ingested_t)) throw Error(Errc::OutOfOrder);
  state.last_ingested_t = curr.t;
  bool ok = true;
  if (state.last_accepted) {
    state.max_gap = std::max(state.max_gap, curr.t - state.last_accepted->t);
    ok = check(*state.last_accepted, curr, cfg);
  }
  if (ok) {
    state.last_accepted = curr;
    ++state.accepted;
  } else {
    ++state.rejected;
  }
  return ok;
}

}  // namespace uwbinit
