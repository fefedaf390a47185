#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace redik {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
// 6 x n, rows ordered (linear; angular).
template <typename Scalar>
using Matrix6X = Eigen::Matrix<Scalar, 6, Eigen::Dynamic>;

// Rigid transform: position p (m) and rotation R.
template <typename Scalar>
struct Pose {
  Vector3<Scalar> p = Vector3<Scalar>::Zero();
  Matrix3<Scalar> R = Matrix3<Scalar>::Identity();

  static Pose Identity() { return Pose{}; }

  Pose() = default;
  Pose(const Vector3<Scalar>& position, const Matrix3<Scalar>& rotation)
      : p(position), R(rotation) {}

  Vector3<Scalar> z_axis() const { return R.col(2); }

  Pose inverse() const {
    Pose out;
    out.R = R.transpose();
    out.p = -(out.R * p);
    return out;
  }

  Pose operator*(const Pose& rhs) const { return Pose(p + R * rhs.p, R * rhs.R); }

  Vector3<Scalar> operator*(const Vector3<Scalar>& v) const { return p + R * v; }

  template <typename Other>
  Pose<Other> cast() const {
    return Pose<Other>(p.template cast<Other>(), R.template cast<Other>());
  }
};

using Posed = Pose<double>;

template <typename Scalar>
bool is_rotation(const Matrix3<Scalar>& R, Scalar tol) {
  return (R.transpose() * R - Matrix3<Scalar>::Identity()).norm() < tol &&
         std::abs(R.determinant() - Scalar(1)) < tol;
}

// Roll-pitch-yaw (fixed axes x, y, z) to rotation: Rz(yaw) * Ry(pitch) * Rx(roll).
template <typename Scalar>
Matrix3<Scalar> rpy_to_rotation(const Vector3<Scalar>& rpy) {
  using AA = Eigen::AngleAxis<Scalar>;
  return (AA(rpy.z(), Vector3<Scalar>::UnitZ()) * AA(rpy.y(), Vector3<Scalar>::UnitY()) *
          AA(rpy.x(), Vector3<Scalar>::UnitX()))
      .toRotationMatrix();
}

template <typename Scalar>
Vector3<Scalar> rotation_to_rpy(const Matrix3<Scalar>& R) {
  // Inverse of rpy_to_rotation; yaw/roll split is arbitrary at pitch = +-pi/2.
  const Scalar pitch = std::atan2(-R(2, 0), std::hypot(R(0, 0), R(1, 0)));
  const Scalar yaw = std::atan2(R(1, 0), R(0, 0));
  const Scalar roll = std::atan2(R(2, 1), R(2, 2));
  return {roll, pitch, yaw};
}

// Smallest rotation taking unit vector `from` onto unit vector `to`.
template <typename Scalar>
Matrix3<Scalar> rotation_between(const Vector3<Scalar>& from, const Vector3<Scalar>& to) {
  return Eigen::Quaternion<Scalar>::FromTwoVectors(from, to).toRotationMatrix();
}

// Rotation whose z-axis is `z`, obtained by minimally rotating `reference`.
template <typename Scalar>
Matrix3<Scalar> align_z_axis(const Matrix3<Scalar>& reference, const Vector3<Scalar>& z) {
  return rotation_between<Scalar>(reference.col(2), z.normalized()) * reference;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

}  // namespace redik
