#pragma once

#include "redik/types.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace redik {

enum class JointKind { Revolute, Prismatic };

template <typename Scalar>
struct JointSpec {
  std::string name;
  JointKind kind = JointKind::Revolute;
  Vector3<Scalar> axis = Vector3<Scalar>::UnitZ();  // in the joint's local frame
  Pose<Scalar> origin;                              // parent frame -> joint frame
  Scalar lower = Scalar(-M_PI);
  Scalar upper = Scalar(M_PI);
  Scalar velocity_limit = Scalar(1);

  // Motion of the joint at position q, expressed in its own frame.
  Pose<Scalar> motion(Scalar q) const {
    if (kind == JointKind::Prismatic) {
      return Pose<Scalar>(axis * q, Matrix3<Scalar>::Identity());
    }
    return Pose<Scalar>(Vector3<Scalar>::Zero(),
                        Eigen::AngleAxis<Scalar>(q, axis).toRotationMatrix());
  }

  template <typename Other>
  JointSpec<Other> cast() const {
    return {name,
            kind,
            axis.template cast<Other>(),
            origin.template cast<Other>(),
            Other(lower),
            Other(upper),
            Other(velocity_limit)};
  }
};

// Throws ValidationError naming the joint when an invariant fails.
template <typename Scalar>
void validate(const JointSpec<Scalar>& joint, Scalar tol = Scalar(1e-9)) {
  if (std::abs(joint.axis.norm() - Scalar(1)) > tol) {
    throw ValidationError("joint '" + joint.name + "': axis not unit");
  }
  if (!is_rotation<Scalar>(joint.origin.R, tol)) {
    throw ValidationError("joint '" + joint.name + "': origin rotation is not a proper rotation");
  }
  if (!(joint.lower <= joint.upper)) {
    throw ValidationError("joint '" + joint.name + "': lower limit exceeds upper limit");
  }
  if (!(joint.velocity_limit > Scalar(0))) {
    throw ValidationError("joint '" + joint.name + "': velocity limit must be positive");
  }
}

template <typename Scalar>
struct KinematicChain {
  std::string name;
  std::vector<JointSpec<Scalar>> joints;
  Pose<Scalar> tool_offset;  // last joint frame -> needle tip
  Pose<Scalar> base;         // world -> first joint's parent frame

  Eigen::Index size() const { return static_cast<Eigen::Index>(joints.size()); }

  // Joints that take part in tracking: every revolute joint, in chain order.
  std::vector<Eigen::Index> active_joints() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (joints[i].kind == JointKind::Revolute) out.push_back(i);
    }
    return out;
  }

  // First prismatic joint (the insertion axis), or -1.
  Eigen::Index insertion_joint() const {
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (joints[i].kind == JointKind::Prismatic) return i;
    }
    return -1;
  }

  VectorX<Scalar> lower_limits() const {
    VectorX<Scalar> v(size());
    for (Eigen::Index i = 0; i < size(); ++i) v[i] = joints[i].lower;
    return v;
  }

  VectorX<Scalar> upper_limits() const {
    VectorX<Scalar> v(size());
    for (Eigen::Index i = 0; i < size(); ++i) v[i] = joints[i].upper;
    return v;
  }

  VectorX<Scalar> velocity_limits() const {
    VectorX<Scalar> v(size());
    for (Eigen::Index i = 0; i < size(); ++i) v[i] = joints[i].velocity_limit;
    return v;
  }

  // Upper bound on tip distance from the base origin, attained when every
  // link lines up and prismatic joints are fully extended.
  Scalar reach() const {
    Scalar r = tool_offset.p.norm();
    for (const auto& j : joints) {
      r += j.origin.p.norm();
      if (j.kind == JointKind::Prismatic) r += std::max(std::abs(j.lower), std::abs(j.upper));
    }
    return r;
  }

  template <typename Other>
  KinematicChain<Other> cast() const {
    KinematicChain<Other> out;
    out.name = name;
    for (const auto& j : joints) out.joints.push_back(j.template cast<Other>());
    out.tool_offset = tool_offset.template cast<Other>();
    out.base = base.template cast<Other>();
    return out;
  }
};

using Chain = KinematicChain<double>;

template <typename Scalar>
void validate(const KinematicChain<Scalar>& chain) {
  for (const auto& j : chain.joints) validate(j);
  if (!is_rotation<Scalar>(chain.tool_offset.R, Scalar(1e-9))) {
    throw ValidationError("tool_offset rotation is not a proper rotation");
  }
}

namespace detail {
template <typename Scalar, typename Derived>
void check_size(const KinematicChain<Scalar>& chain, const Eigen::MatrixBase<Derived>& q) {
  if (q.size() != chain.size()) {
    throw DimensionError("joint vector has " + std::to_string(q.size()) + " entries, chain has " +
                         std::to_string(chain.size()) + " joints");
  }
}
}  // namespace detail

// Joint frames (after the fixed origin, before the joint motion) in the base
// frame, plus the tip pose as the last element.
template <typename Scalar, typename Derived>
std::vector<Pose<Scalar>> joint_frames(const KinematicChain<Scalar>& chain,
                                       const Eigen::MatrixBase<Derived>& q) {
  detail::check_size(chain, q);
  std::vector<Pose<Scalar>> frames;
  frames.reserve(chain.joints.size() + 1);
  Pose<Scalar> T = chain.base;
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    const auto& joint = chain.joints[i];
    T = T * joint.origin;
    frames.push_back(T);
    T = T * joint.motion(q[i]);
  }
  frames.push_back(T * chain.tool_offset);
  return frames;
}

template <typename Scalar, typename Derived>
Pose<Scalar> forward_kinematics(const KinematicChain<Scalar>& chain,
                                const Eigen::MatrixBase<Derived>& q) {
  detail::check_size(chain, q);
  Pose<Scalar> T = chain.base;
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    T = T * chain.joints[i].origin * chain.joints[i].motion(q[i]);
  }
  return T * chain.tool_offset;
}

// Geometric Jacobian of the tip in the base frame, one column per entry of
// `active`. Column = (z x (p_tip - p_joint); z) for revolute, (z; 0) for prismatic.
template <typename Scalar, typename Derived>
Matrix6X<Scalar> geometric_jacobian(const KinematicChain<Scalar>& chain,
                                    const Eigen::MatrixBase<Derived>& q,
                                    const std::vector<Eigen::Index>& active) {
  const auto frames = joint_frames(chain, q);
  const Vector3<Scalar> tip = frames.back().p;
  Matrix6X<Scalar> J(6, static_cast<Eigen::Index>(active.size()));
  for (Eigen::Index c = 0; c < J.cols(); ++c) {
    const Eigen::Index i = active[c];
    if (i < 0 || i >= chain.size()) throw DimensionError("active joint index out of range");
    const Vector3<Scalar> z = frames[i].R * chain.joints[i].axis;
    if (chain.joints[i].kind == JointKind::Prismatic) {
      J.col(c) << z, Vector3<Scalar>::Zero();
    } else {
      J.col(c) << z.cross(tip - frames[i].p), z;
    }
  }
  return J;
}

template <typename Scalar, typename Derived>
Matrix6X<Scalar> geometric_jacobian(const KinematicChain<Scalar>& chain,
                                    const Eigen::MatrixBase<Derived>& q) {
  return geometric_jacobian(chain, q, chain.active_joints());
}

// Rotation vector (axis * angle) of a rotation matrix.
template <typename Scalar>
Vector3<Scalar> rotation_log(const Matrix3<Scalar>& R) {
  const Eigen::AngleAxis<Scalar> aa(R);
  return aa.axis() * aa.angle();
}

// Central-difference Jacobian. Angular rows use the base-frame rotation
// vector of R(q + h e_i) R(q)^T. Test oracle for geometric_jacobian.
template <typename Scalar, typename Derived>
Matrix6X<Scalar> numeric_jacobian(const KinematicChain<Scalar>& chain,
                                  const Eigen::MatrixBase<Derived>& q,
                                  const std::vector<Eigen::Index>& active,
                                  Scalar h = Scalar(1e-6)) {
  if (!(h > Scalar(0))) throw ValidationError("finite-difference step must be positive");
  const Pose<Scalar> center = forward_kinematics(chain, q);
  Matrix6X<Scalar> J(6, static_cast<Eigen::Index>(active.size()));
  for (Eigen::Index c = 0; c < J.cols(); ++c) {
    VectorX<Scalar> qp = q, qm = q;
    qp[active[c]] += h;
    qm[active[c]] -= h;
    const Pose<Scalar> fp = forward_kinematics(chain, qp);
    const Pose<Scalar> fm = forward_kinematics(chain, qm);
    J.col(c).template head<3>() = (fp.p - fm.p) / (Scalar(2) * h);
    J.col(c).template tail<3>() = (rotation_log<Scalar>(fp.R * center.R.transpose()) -
                                   rotation_log<Scalar>(fm.R * center.R.transpose())) /
                                  (Scalar(2) * h);
  }
  return J;
}

}  // namespace redik
