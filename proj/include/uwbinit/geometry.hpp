#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <iterator>
#include <limits>
#include <optional>
#include <ranges>

#include <Eigen/Eigenvalues>

#include "uwbinit/error.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit {

template <typename R>
concept SampleRange = std::ranges::forward_range<R> &&
    requires { typename std::ranges::range_value_t<R>::scalar_type; };

template <SampleRange R>
using range_scalar_t = typename std::ranges::range_value_t<R>::scalar_type;

/// Accumulated information matrix of direction rows, sum of u u^T.
template <typename Scalar>
struct GeometrySummaryT {
  Matrix3<Scalar> info{Matrix3<Scalar>::Zero()};
  std::size_t n_rows{0};
};

/// Sample with the smallest measured range seen so far.
template <typename Scalar>
struct ClosestPointTrackerT {
  std::optional<SyncedSampleT<Scalar>> closest;
  Scalar d_min{std::numeric_limits<Scalar>::infinity()};
};

using GeometrySummary = GeometrySummaryT<double>;
using ClosestPointTracker = ClosestPointTrackerT<double>;

/// Relative eigenvalue floor below which an information matrix counts as singular.
template <typename Scalar>
constexpr Scalar singular_ratio() {
  return std::max<Scalar>(Scalar(1e-10), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
}

/// sqrt(trace(info^-1)) through the symmetric eigendecomposition. Returns
/// +infinity when the smallest eigenvalue is below singular_ratio() times
/// the largest one.
template <typename Scalar>
Scalar pdop_from_information(const Matrix3<Scalar>& info) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> es(info, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return inf;
  const auto& ev = es.eigenvalues();  // ascending
  const Scalar largest = ev(2);
  if (!(largest > Scalar(0)) || !std::isfinite(largest)) return inf;
  if (ev(0) < singular_ratio<Scalar>() * largest) return inf;
  return std::sqrt(ev.cwiseInverse().sum());
}

namespace detail {

template <typename Scalar>
void check_range(const SyncedSampleT<Scalar>& s) {
  if (!(s.range > Scalar(0)) || !std::isfinite(s.range)) {
    throw Error(Errc::InvalidArgument, "range must be positive and finite");
  }
}

template <typename Scalar>
void add_row(Matrix3<Scalar>& info, const Vector3<Scalar>& diff, Scalar range) {
  const Vector3<Scalar> u = diff / range;
  info.noalias() += u * u.transpose();
}

}  // namespace detail

/// Index of the minimal-range sample; ties go to the earliest timestamp.
template <SampleRange R>
std::size_t closest_index(const R& samples) {
  std::size_t best = 0;
  std::size_t i = 0;
  auto best_it = std::ranges::begin(samples);
  for (auto it = std::ranges::begin(samples); it != std::ranges::end(samples); ++it, ++i) {
    if (it->range < best_it->range || (it->range == best_it->range && it->t < best_it->t)) {
      best = i;
      best_it = it;
    }
  }
  return best;
}

/// Information matrix G^T G for a known (or hypothesised) anchor position.
template <SampleRange R>
Matrix3<range_scalar_t<R>> information_at(const R& samples, const Vector3<range_scalar_t<R>>& anchor) {
  using Scalar = range_scalar_t<R>;
  if (std::ranges::empty(samples)) throw Error(Errc::InsufficientSamples);
  Matrix3<Scalar> info = Matrix3<Scalar>::Zero();
  for (const auto& s : samples) {
    detail::check_range(s);
    const Vector3<Scalar> diff = s.tag_pos - anchor;
    if (diff.squaredNorm() == Scalar(0)) throw Error(Errc::DegenerateDirection);
    detail::add_row(info, diff, s.range);
  }
  return info;
}

/// Information matrix of the closest-point geometry: rows (p_k - p_C) / d_k
/// for every sample except the closest one.
template <SampleRange R>
GeometrySummaryT<range_scalar_t<R>> closest_point_summary(const R& samples) {
  using Scalar = range_scalar_t<R>;
  GeometrySummaryT<Scalar> summary;
  if (std::ranges::empty(samples)) return summary;
  const std::size_t j = closest_index(samples);
  const auto& pc = std::ranges::next(std::ranges::begin(samples), j)->tag_pos;
  std::size_t i = 0;
  for (const auto& s : samples) {
    detail::check_range(s);
    if (i++ == j) continue;
    detail::add_row(summary.info, Vector3<Scalar>(s.tag_pos - pc), s.range);
    ++summary.n_rows;
  }
  return summary;
}

/// PDOP at the true anchor, with rows normalised by the measured range.
template <SampleRange R>
range_scalar_t<R> pdop_true(const R& samples, const Vector3<range_scalar_t<R>>& anchor) {
  return pdop_from_information(information_at(samples, anchor));
}

/// PDOP evaluated at an estimated anchor (LS / NLS PDOP baselines).
template <SampleRange R>
range_scalar_t<R> pdop_at(const R& samples, const Vector3<range_scalar_t<R>>& hypothesis) {
  return pdop_true(samples, hypothesis);
}

/// Conservative PDOP that substitutes the minimal-range tag position for
/// the unknown anchor. Needs at least four samples.
template <SampleRange R>
range_scalar_t<R> pdop_closest_point(const R& samples) {
  if (std::ranges::distance(samples) < 4) throw Error(Errc::InsufficientSamples);
  return pdop_from_information(closest_point_summary(samples).info);
}

/// Streaming update of the closest-point summary. `retained` holds the
/// samples ingested before `incoming`. Returns true when the closest point
/// moved and the summary was rebuilt from `retained`.
template <SampleRange R>
bool update_summary(ClosestPointTrackerT<range_scalar_t<R>>& tracker,
                    GeometrySummaryT<range_scalar_t<R>>& summary, const R& retained,
                    const SyncedSampleT<range_scalar_t<R>>& incoming) {
  using Scalar = range_scalar_t<R>;
  detail::check_range(incoming);
  if (!std::ranges::empty(retained)) {
    Scalar last_t;
    if constexpr (std::ranges::bidirectional_range<R> && std::ranges::common_range<R>) {
      last_t = std::prev(std::ranges::end(retained))->t;
    } else {
      for (const auto& s : retained) last_t = s.t;
    }
    if (!(incoming.t > last_t)) throw Error(Errc::OutOfOrder);
  }
  if (tracker.closest && incoming.range >= tracker.d_min) {
    detail::add_row(summary.info, Vector3<Scalar>(incoming.tag_pos - tracker.closest->tag_pos),
                    incoming.range);
    ++summary.n_rows;
    return false;
  }
  tracker.closest = incoming;
  tracker.d_min = incoming.range;
  summary = {};
  for (const auto& s : retained) {
    detail::add_row(summary.info, Vector3<Scalar>(s.tag_pos - incoming.tag_pos), s.range);
    ++summary.n_rows;
  }
  return true;
}

/// Sample buffer plus incrementally maintained closest-point PDOP.
template <typename Scalar>
class ClosestPointPdop {
 public:
  using Sample = SyncedSampleT<Scalar>;

  /// Appends a sample; returns true if the summary had to be rebuilt.
  bool push(const Sample& s) {
    const bool rebuilt = update_summary(tracker_, summary_, buffer_, s);
    buffer_.push_back(s);
    return rebuilt;
  }

  /// Drops the oldest sample, keeping the summary consistent with the buffer.
  void pop_front() {
    if (buffer_.empty()) return;
    const Sample removed = buffer_.front();
    buffer_.pop_front();
    if (tracker_.closest && removed.t == tracker_.closest->t) {
      rebuild();
      return;
    }
    const Vector3<Scalar> u = (removed.tag_pos - tracker_.closest->tag_pos) / removed.range;
    summary_.info.noalias() -= u * u.transpose();
    --summary_.n_rows;
    // Subtraction accumulates rounding; refresh once per buffer turnover.
    if (++pops_since_rebuild_ >= buffer_.size()) rebuild();
  }

  void clear() {
    buffer_.clear();
    tracker_ = {};
    summary_ = {};
    pops_since_rebuild_ = 0;
  }

  Scalar pdop() const {
    if (summary_.n_rows < 3) return std::numeric_limits<Scalar>::infinity();
    return pdop_from_information(summary_.info);
  }

  const std::deque<Sample>& samples() const { return buffer_; }
  const ClosestPointTrackerT<Scalar>& tracker() const { return tracker_; }
  const GeometrySummaryT<Scalar>& summary() const { return summary_; }
  std::size_t size() const { return buffer_.size(); }

 private:
  void rebuild() {
    pops_since_rebuild_ = 0;
    tracker_ = {};
    summary_ = {};
    if (buffer_.empty()) return;
    const std::size_t j = closest_index(buffer_);
    tracker_.closest = buffer_[j];
    tracker_.d_min = buffer_[j].range;
    summary_ = closest_point_summary(buffer_);
  }

  std::deque<Sample> buffer_;
  ClosestPointTrackerT<Scalar> tracker_;
  GeometrySummaryT<Scalar> summary_;
  std::size_t pops_since_rebuild_{0};
};

}  // namespace uwbinit
