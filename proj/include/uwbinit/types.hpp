#pragma once

#include <Eigen/Core>

namespace uwbinit {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Tag position time-aligned with one range measurement to a single anchor.
template <typename Scalar>
struct SyncedSampleT {
  using scalar_type = Scalar;

  Scalar t{0};
  Vector3<Scalar> tag_pos{Vector3<Scalar>::Zero()};
  Scalar range{0};

  template <typename Other>
  SyncedSampleT<Other> cast() const {
    return {static_cast<Other>(t), tag_pos.template cast<Other>(), static_cast<Other>(range)};
  }
};

using SyncedSample = SyncedSampleT<double>;
using SyncedSamplef = SyncedSampleT<float>;

}  // namespace uwbinit
