#pragma once

#include "redik/kinematics.hpp"
#include "redik/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace redik {

// Diagonal joint-penalty weights over the active joints. Larger weight means
// the joint's motion costs more.
template <typename Scalar>
struct WeightPolicy {
  std::string name;
  VectorX<Scalar> w;
};

using Weights = WeightPolicy<double>;

template <typename Scalar>
void validate(const WeightPolicy<Scalar>& policy) {
  if (policy.w.size() == 0 || !(policy.w.array() > Scalar(0)).all() || !policy.w.allFinite()) {
    throw ValidationError("weight policy '" + policy.name + "' needs strictly positive weights");
  }
}

// Presets over `n_base` base joints followed by `n_tool` end-effector joints:
// w1 = high base / low tool, w2 = uniform, w3 = low base / high tool.
template <typename Scalar = double>
WeightPolicy<Scalar> weight_preset(const std::string& name, Eigen::Index n_base = 6,
                                   Eigen::Index n_tool = 4) {
  WeightPolicy<Scalar> p{name, VectorX<Scalar>::Ones(n_base + n_tool)};
  if (name == "w1") {
    p.w.tail(n_tool).setConstant(Scalar(0.1));
  } else if (name == "w2") {
  } else if (name == "w3") {
    p.w.head(n_base).setConstant(Scalar(0.1));
  } else {
    throw ValidationError("unknown weight policy '" + name + "' (expected w1, w2 or w3)");
  }
  return p;
}

// Rows of the task Jacobian used by the IK step.
enum class TaskJacobianMode {
  Full,    // full 6-row geometric Jacobian
  Needle,  // angular rows projected onto the plane normal to the needle axis
};

enum class OrientationErrorMode {
  CrossProduct,  // theta * (z_tar x z_cur), magnitude theta * sin(theta)
  Normalized,    // theta * unit(z_tar x z_cur)
};

template <typename Scalar>
struct ControllerParams {
  Scalar lambda = Scalar(1e-4);
  Vector6<Scalar> ke = Vector6<Scalar>::Constant(Scalar(0.02));
  // Either one entry (applied to every active joint) or one per active joint.
  VectorX<Scalar> kn = VectorX<Scalar>::Constant(1, Scalar(0.02));
  bool null_space_enabled = true;
  Scalar fd_step = Scalar(1e-6);
  OrientationErrorMode orientation_error_mode = OrientationErrorMode::CrossProduct;
  TaskJacobianMode task_jacobian_mode = TaskJacobianMode::Full;

  VectorX<Scalar> kn_for(Eigen::Index n) const {
    if (kn.size() == 1) return VectorX<Scalar>::Constant(n, kn[0]);
    if (kn.size() != n) throw DimensionError("Kn has " + std::to_string(kn.size()) +
                                             " entries, expected " + std::to_string(n));
    return kn;
  }
};

using Params = ControllerParams<double>;

template <typename Scalar>
void validate(const ControllerParams<Scalar>& params) {
  if (!(params.lambda > Scalar(0))) throw ValidationError("lambda must be positive");
  if (!(params.ke.array() > Scalar(0)).all()) throw ValidationError("Ke must be positive");
  if (params.kn.size() == 0 || !(params.kn.array() > Scalar(0)).all()) {
    throw ValidationError("Kn must be positive");
  }
  if (!(params.fd_step > Scalar(0))) throw ValidationError("fd_step must be positive");
}

// Pose error (e_p; e_o). e_o = acos(z_tar . z_cur) * (z_tar x z_cur), where
// z_tar and z_cur are the third columns of the rotations. Rotation about the
// needle axis does not enter. For antiparallel axes the cross product
// vanishes, so e_o = pi * a with a = unit(z_cur x x) (or z_cur x y).
template <typename Scalar>
Vector6<Scalar> pose_error(const Pose<Scalar>& target, const Pose<Scalar>& current,
                           OrientationErrorMode mode = OrientationErrorMode::CrossProduct) {
  constexpr Scalar kAntiparallel = Scalar(1e-9);
  Vector6<Scalar> e;
  e.template head<3>() = target.p - current.p;

  const Vector3<Scalar> zt = target.R.col(2);
  const Vector3<Scalar> zc = current.R.col(2);
  const Scalar c = std::clamp(zt.dot(zc) / (zt.norm() * zc.norm()), Scalar(-1), Scalar(1));

  if (c < Scalar(-1) + kAntiparallel) {
    Vector3<Scalar> a = zc.cross(Vector3<Scalar>::UnitX());
    if (a.norm() < Scalar(1e-6)) a = zc.cross(Vector3<Scalar>::UnitY());
    e.template tail<3>() = Scalar(M_PI) * a.normalized();
    return e;
  }

  const Scalar theta = std::acos(c);
  const Vector3<Scalar> axis = zt.cross(zc);
  if (mode == OrientationErrorMode::CrossProduct) {
    e.template tail<3>() = theta * axis;
  } else {
    const Scalar s = axis.norm();
    e.template tail<3>() = s > Scalar(0) ? Vector3<Scalar>(theta * axis / s)
                                         : Vector3<Scalar>::Zero();
  }
  return e;
}

// Misalignment angle (rad) between the z-axes of two poses.
template <typename Scalar>
Scalar z_axis_angle(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  const Vector3<Scalar> za = a.R.col(2), zb = b.R.col(2);
  return std::atan2(za.cross(zb).norm(), za.dot(zb));
}

// W^-1 J^T (J W^-1 J^T + lambda^2 I)^-1, with w the diagonal of W. The m x m
// inner matrix is factored, not inverted. lambda = 0 requires J W^-1 J^T to
// be invertible.
template <typename DerivedJ, typename DerivedW>
MatrixX<typename DerivedJ::Scalar> weighted_damped_pinv(const Eigen::MatrixBase<DerivedJ>& J,
                                                        const Eigen::MatrixBase<DerivedW>& w,
                                                        typename DerivedJ::Scalar lambda) {
  using Scalar = typename DerivedJ::Scalar;
  if (w.size() != J.cols()) throw DimensionError("weight vector length must equal Jacobian columns");
  if (lambda < Scalar(0)) throw ValidationError("lambda must be non-negative");

  const MatrixX<Scalar> winv_jt = w.cwiseInverse().asDiagonal() * J.transpose();
  MatrixX<Scalar> inner = J * winv_jt;
  inner.diagonal().array() += lambda * lambda;

  const Eigen::LDLT<MatrixX<Scalar>> ldlt(inner);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > Scalar(0)).all() ||
      ldlt.rcond() < Scalar(1e-14)) {
    throw SingularityError("J W^-1 J^T + lambda^2 I is singular");
  }
  return ldlt.solve(winv_jt.transpose()).transpose();
}

// (J^T J + lambda^2 W)^-1 J^T, computed as the least-squares solution of the
// stacked system [J; lambda W^1/2] X = [I; 0]. Independent route to the same
// matrix as weighted_damped_pinv.
template <typename DerivedJ, typename DerivedW>
MatrixX<typename DerivedJ::Scalar> wdls_normal_form(const Eigen::MatrixBase<DerivedJ>& J,
                                                    const Eigen::MatrixBase<DerivedW>& w,
                                                    typename DerivedJ::Scalar lambda) {
  using Scalar = typename DerivedJ::Scalar;
  const Eigen::Index m = J.rows(), n = J.cols();
  if (w.size() != n) throw DimensionError("weight vector length must equal Jacobian columns");
  if (lambda < Scalar(0)) throw ValidationError("lambda must be non-negative");

  MatrixX<Scalar> stacked(m + n, n);
  stacked.topRows(m) = J;
  stacked.bottomRows(n) = (lambda * w.cwiseSqrt()).asDiagonal();
  MatrixX<Scalar> rhs = MatrixX<Scalar>::Zero(m + n, m);
  rhs.topRows(m).setIdentity();

  const Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(stacked);
  if (qr.rank() < n) throw SingularityError("J^T J + lambda^2 W is singular");
  return qr.solve(rhs);
}

// I - J_pinv J.
template <typename DerivedJ, typename DerivedP>
MatrixX<typename DerivedJ::Scalar> null_projector(const Eigen::MatrixBase<DerivedJ>& J,
                                                  const Eigen::MatrixBase<DerivedP>& J_pinv) {
  using Scalar = typename DerivedJ::Scalar;
  if (J_pinv.rows() != J.cols() || J_pinv.cols() != J.rows()) {
    throw DimensionError("pseudo-inverse shape does not match Jacobian");
  }
  return MatrixX<Scalar>::Identity(J.cols(), J.cols()) - J_pinv * J;
}

// sqrt(det(J J^T)); round-off negatives clamp to zero.
template <typename Derived>
typename Derived::Scalar manipulability(const Eigen::MatrixBase<Derived>& J) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> gram = J * J.transpose();
  const Scalar det = gram.determinant();
  return det > Scalar(0) ? std::sqrt(det) : Scalar(0);
}

// Central-difference gradient of manipulability(J(q)) over the active joints.
template <typename Scalar, typename Derived>
VectorX<Scalar> manipulability_gradient(const KinematicChain<Scalar>& chain,
                                        const Eigen::MatrixBase<Derived>& q,
                                        const std::vector<Eigen::Index>& active,
                                        Scalar fd_step = Scalar(1e-6)) {
  if (!(fd_step > Scalar(0))) throw ValidationError("finite-difference step must be positive");
  VectorX<Scalar> grad(static_cast<Eigen::Index>(active.size()));
  VectorX<Scalar> qp = q;
  for (Eigen::Index c = 0; c < grad.size(); ++c) {
    const Eigen::Index i = active[c];
    qp[i] = q[i] + fd_step;
    const Scalar wp = manipulability(geometric_jacobian(chain, qp, active));
    qp[i] = q[i] - fd_step;
    const Scalar wm = manipulability(geometric_jacobian(chain, qp, active));
    qp[i] = q[i];
    grad[c] = (wp - wm) / (Scalar(2) * fd_step);
  }
  return grad;
}

// Jacobian the IK step inverts. Needle mode removes the angular velocity
// component along the needle axis `z`, which the pose error cannot observe.
template <typename Derived, typename DerivedZ>
Matrix6X<typename Derived::Scalar> task_jacobian(const Eigen::MatrixBase<Derived>& J,
                                                 const Eigen::MatrixBase<DerivedZ>& z,
                                                 TaskJacobianMode mode) {
  using Scalar = typename Derived::Scalar;
  Matrix6X<Scalar> out = J;
  if (mode == TaskJacobianMode::Needle) {
    const Vector3<Scalar> u = z.normalized();
    const Matrix3<Scalar> P = Matrix3<Scalar>::Identity() - u * u.transpose();
    out.template bottomRows<3>() = P * J.template bottomRows<3>();
  }
  return out;
}

template <typename Scalar>
struct IkStep {
  VectorX<Scalar> q_des;
  Vector6<Scalar> error;         // pose_error(target, FK(q_cur))
  Scalar manipulability = 0;     // at q_cur
  Eigen::Index null_space_dim = 0;  // active joints - rank(J)
};

// One update q_des = q_cur + J_W^+ Ke e + N Kn dw/dq over the active joints.
// Joints outside the active set pass through unchanged.
//
// The angular part of e points from the current z-axis away from the target
// in the Jacobian's angular-velocity convention, so it enters the task
// velocity with its sign flipped.
template <typename Scalar, typename Derived>
IkStep<Scalar> ik_step(const KinematicChain<Scalar>& chain, const Eigen::MatrixBase<Derived>& q_cur,
                       const Pose<Scalar>& target, const WeightPolicy<Scalar>& policy,
                       const ControllerParams<Scalar>& params) {
  const auto active = chain.active_joints();
  const auto n = static_cast<Eigen::Index>(active.size());
  if (policy.w.size() != n) {
    throw DimensionError("weight policy has " + std::to_string(policy.w.size()) +
                         " entries, chain has " + std::to_string(n) + " active joints");
  }

  IkStep<Scalar> out;
  const Pose<Scalar> current = forward_kinematics(chain, q_cur);
  out.error = pose_error(target, current, params.orientation_error_mode);
  const Matrix6X<Scalar> J_geo = geometric_jacobian(chain, q_cur, active);
  const Matrix6X<Scalar> J = task_jacobian(J_geo, current.R.col(2), params.task_jacobian_mode);
  const MatrixX<Scalar> J_pinv = weighted_damped_pinv(J, policy.w, params.lambda);

  Vector6<Scalar> task = params.ke.cwiseProduct(out.error);
  task.template tail<3>() = -task.template tail<3>();
  VectorX<Scalar> dq = J_pinv * task;

  out.manipulability = manipulability(J_geo);
  if (params.null_space_enabled) {
    const MatrixX<Scalar> N = null_projector(J, J_pinv);
    const VectorX<Scalar> grad = manipulability_gradient(chain, q_cur, active, params.fd_step);
    dq += N * params.kn_for(n).cwiseProduct(grad);
  }

  const Eigen::JacobiSVD<MatrixX<Scalar>> svd(J);
  out.null_space_dim = n - svd.rank();

  out.q_des = q_cur;
  for (Eigen::Index c = 0; c < n; ++c) out.q_des[active[c]] += dq[c];
  return out;
}

}  // namespace redik
