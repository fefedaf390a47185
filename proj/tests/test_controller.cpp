#include "redik/controller.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace redik;
using redik::testing::default_model;
using redik::testing::random_config;
using redik::testing::random_matrix;
using redik::testing::random_rotation;
using redik::testing::svd_pinv;
using redik::testing::trace_gradient;
using redik::testing::two_r_chain;

namespace {

Posed pose_with_z(const Eigen::Vector3d& p, const Eigen::Vector3d& z) {
  return Posed(p, align_z_axis<double>(Eigen::Matrix3d::Identity(), z));
}

Eigen::Matrix3d rz(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

}  // namespace

TEST_CASE("pose_error examples") {
  const Posed id;
  CHECK(pose_error(id, id).norm() == 0);

  const Posed shifted(Eigen::Vector3d(0.1, 0, 0), Eigen::Matrix3d::Identity());
  Vector6<double> expected;
  expected << 0.1, 0, 0, 0, 0, 0;
  CHECK((pose_error(shifted, id) - expected).norm() < 1e-15);

  const auto e = pose_error(pose_with_z({0, 0, 0}, {0, 0, 1}), pose_with_z({0, 0, 0}, {1, 0, 0}));
  CHECK((e.tail<3>() - Eigen::Vector3d(0, M_PI / 2, 0)).norm() < 1e-12);

  const Posed down = pose_with_z({0, 0, 0}, {0, 0, -1});
  const auto anti = pose_error(pose_with_z({0, 0, 0}, {0, 0, 1}), down);
  CHECK(anti.tail<3>().norm() == doctest::Approx(M_PI));
  CHECK(std::abs(anti.tail<3>().dot(down.z_axis())) < 1e-12);
}

TEST_CASE("cross-product mode magnitude is theta sin theta, normalized mode is theta") {
  for (double theta : {0.1, 0.7, 1.4, 2.5}) {
    const Eigen::Vector3d z(std::sin(theta), 0, std::cos(theta));
    const Posed tar = pose_with_z({0, 0, 0}, {0, 0, 1});
    const Posed cur = pose_with_z({0, 0, 0}, z);
    CHECK(pose_error(tar, cur).tail<3>().norm() == doctest::Approx(theta * std::sin(theta)).epsilon(1e-12));
    CHECK(pose_error(tar, cur, OrientationErrorMode::Normalized).tail<3>().norm() ==
          doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_CASE("e_o is perpendicular to both z-axes") {
  std::mt19937 rng(21);
  for (int k = 0; k < 100; ++k) {
    const Posed a(Eigen::Vector3d::Zero(), random_rotation(rng));
    const Posed b(Eigen::Vector3d::Zero(), random_rotation(rng));
    const Eigen::Vector3d eo = pose_error(a, b).tail<3>();
    CHECK(std::abs(eo.dot(a.z_axis())) < 1e-9);
    CHECK(std::abs(eo.dot(b.z_axis())) < 1e-9);
  }
}

TEST_CASE("pose_error ignores rotation about either needle axis") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int k = 0; k < 100; ++k) {
    const Posed a(Eigen::Vector3d(u(rng), u(rng), u(rng)), random_rotation(rng));
    const Posed b(Eigen::Vector3d(u(rng), u(rng), u(rng)), random_rotation(rng));
    const Posed a2(a.p, a.R * rz(u(rng)));
    const Posed b2(b.p, b.R * rz(u(rng)));
    CHECK((pose_error(a2, b2) - pose_error(a, b)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("weighted_damped_pinv examples") {
  const Eigen::Vector2d w2 = Eigen::Vector2d::Ones();
  CHECK((weighted_damped_pinv(Eigen::Matrix2d::Identity(), w2, 0.0) - Eigen::Matrix2d::Identity()).norm() < 1e-15);

  Eigen::MatrixXd J(2, 3);
  J << 1, 0, 0, 0, 1, 0;
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, 0, 1, 0, 0;
  CHECK((weighted_damped_pinv(J, Eigen::Vector3d::Ones(), 0.0) - expected).norm() < 1e-15);

  const Eigen::Matrix2d D = Eigen::Vector2d(2, 1).asDiagonal();
  const Eigen::Matrix2d want = Eigen::Vector2d(2.0 / 5, 1.0 / 2).asDiagonal();
  CHECK((weighted_damped_pinv(D, w2, 1.0) - want).norm() < 1e-15);
  CHECK((wdls_normal_form(D, w2, 1.0) - want).norm() < 1e-15);
  CHECK((wdls_normal_form(Eigen::Matrix2d::Identity(), w2, 0.0) - Eigen::Matrix2d::Identity()).norm() < 1e-15);
}

TEST_CASE("weighted_damped_pinv errors") {
  Eigen::MatrixXd J(2, 2);
  J << 1, 1, 1, 1;
  CHECK_THROWS_AS(weighted_damped_pinv(J, Eigen::Vector2d::Ones(), 0.0), SingularityError);
  CHECK_NOTHROW(weighted_damped_pinv(J, Eigen::Vector2d::Ones(), 1e-4));
  CHECK_THROWS_AS(weighted_damped_pinv(J, Eigen::Vector3d::Ones(), 1e-4), DimensionError);
}

TEST_CASE("pinv against its normal form") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uw(0.1, 10);
  double worst = 0;
  for (double lambda : {1e-4, 1e-2, 1.0}) {
    for (int k = 0; k < 100; ++k) {
      const Eigen::MatrixXd J = random_matrix(6, 10, rng);
      Eigen::VectorXd w(10);
      for (auto& x : w) x = uw(rng);
      worst = std::max(worst, (wdls_normal_form(J, w, lambda) - weighted_damped_pinv(J, w, lambda)).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("damped inverse tends to the Moore-Penrose inverse") {
  std::mt19937 rng(37);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    const Eigen::MatrixXd mp = svd_pinv(J);
    double prev = INFINITY;
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
      const double err = (weighted_damped_pinv(J, Eigen::VectorXd::Ones(10), lambda) - mp).cwiseAbs().maxCoeff();
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-8);
  }
}

TEST_CASE("inner matrix is positive definite for lambda > 0") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> uw(0.1, 10);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    Eigen::VectorXd w(10);
    for (auto& x : w) x = uw(rng);
    Eigen::MatrixXd A = J.transpose() * J;
    A.diagonal() += 1e-4 * 1e-4 * w;
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("null projector examples") {
  const Eigen::Matrix2d J = (Eigen::Matrix2d() << 2, 1, 0, 3).finished();
  const auto Jp = weighted_damped_pinv(J, Eigen::Vector2d::Ones(), 0.0);
  CHECK(null_projector(J, Jp).norm() < 1e-14);

  Eigen::MatrixXd row(1, 2);
  row << 1, 0;
  const auto N = null_projector(row, weighted_damped_pinv(row, Eigen::Vector2d::Ones(), 0.0));
  CHECK((N - Eigen::Vector2d(0, 1).asDiagonal().toDenseMatrix()).norm() < 1e-15);
}

TEST_CASE("null projector properties") {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> uw(0.1, 10);
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    Eigen::VectorXd w(10);
    for (auto& x : w) x = uw(rng);
    const auto N = null_projector(J, weighted_damped_pinv(J, w, 1e-4));
    CHECK((J * N).norm() < 1e-6 * J.norm());
  }
}

// With W = I the damped J^+ J has eigenvalues s = sigma^2 / (sigma^2 + lambda^2),
// so N^2 - N is symmetric with eigenvalues s (s - 1).
TEST_CASE("null projector idempotence defect matches the singular values") {
  std::mt19937 rng(44);
  for (double lambda : {1e-4, 1e-2, 0.3}) {
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd J = random_matrix(6, 10, rng);
      const auto N = null_projector(J, weighted_damped_pinv(J, Eigen::VectorXd::Ones(10), lambda));
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues();
      double expected = 0;
      for (double sigma : sv) {
        const double s = sigma * sigma / (sigma * sigma + lambda * lambda);
        expected += std::pow(s * (s - 1), 2);
      }
      expected = std::sqrt(expected);
      CHECK((N * N - N).norm() == doctest::Approx(expected).epsilon(1e-6).scale(1e-12));
    }
  }
}

TEST_CASE("null-space motion leaves the tip fixed to first order") {
  const auto& m = default_model();
  std::mt19937 rng(47);
  std::normal_distribution<double> n(0, 1);
  const auto active = m.chain.active_joints();
  const Eigen::VectorXd q = random_config(m.chain, rng);
  const auto J = geometric_jacobian(m.chain, q, active);
  const auto N = null_projector(J, weighted_damped_pinv(J, Eigen::VectorXd::Ones(10), 1e-4));
  Eigen::VectorXd v(10);
  for (auto& x : v) x = n(rng);
  const Eigen::VectorXd dir = N * v.normalized();
  const Eigen::Vector3d p0 = forward_kinematics(m.chain, q).p;
  std::vector<double> d;
  for (double delta : {1e-3, 1e-4, 1e-5}) {
    Eigen::VectorXd qd = q;
    for (int c = 0; c < 10; ++c) qd[active[c]] += delta * dir[c];
    d.push_back((forward_kinematics(m.chain, qd).p - p0).norm());
  }
  // log-log slope over one decade each
  CHECK(std::log10(d[0] / d[1]) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log10(d[1] / d[2]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("manipulability examples") {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, 10);
  J.leftCols(6).setIdentity();
  CHECK(manipulability(J) == doctest::Approx(1.0));
  CHECK(manipulability(Eigen::Matrix2d(Eigen::Vector2d(2, 3).asDiagonal())) == doctest::Approx(6.0));
  Eigen::Matrix2d twin;
  twin << 1, 1, 2, 2;
  CHECK(manipulability(twin) == 0);
}

TEST_CASE("2R arm manipulability peaks with the elbow at a right angle") {
  const Chain arm = two_r_chain(0.4, 0.3);
  // Position rows in the plane only: w = l1 l2 |sin q2|.
  auto planar = [&](const Eigen::VectorXd& q) {
    const auto J = geometric_jacobian(arm, q, {0, 1});
    return manipulability(Eigen::MatrixXd(J.topRows(2)));
  };
  const Eigen::Vector2d q(0.3, M_PI / 2);
  CHECK(planar(q) == doctest::Approx(0.4 * 0.3));
  const double h = 1e-6;
  const double d_elbow = (planar(Eigen::Vector2d(0.3, M_PI / 2 + h)) - planar(Eigen::Vector2d(0.3, M_PI / 2 - h))) / (2 * h);
  CHECK(std::abs(d_elbow) < 1e-4);
}

TEST_CASE("manipulability gradient against the trace formula") {
  const auto& m = default_model();
  std::mt19937 rng(53);
  const auto active = m.chain.active_joints();
  int checked = 0;
  while (checked < 50) {
    const Eigen::VectorXd q = random_config(m.chain, rng);
    const auto J = geometric_jacobian(m.chain, q, active);
    const double w = manipulability(J);
    if (w < 1e-3) continue;
    const Eigen::VectorXd g = manipulability_gradient(m.chain, q, active);
    const Eigen::VectorXd oracle = trace_gradient(m.chain, q, active);
    CHECK((g - oracle).norm() / oracle.norm() < 1e-4);
    ++checked;
  }
}

TEST_CASE("gradient stays finite at a singular configuration") {
  const Chain arm = two_r_chain(0.4, 0.3);
  const auto g = manipulability_gradient(arm, Eigen::Vector2d(0.0, 0.0), {0, 1});
  CHECK(g.allFinite());
}

TEST_CASE("ik_step with zero error") {
  const auto& m = default_model();
  const Eigen::VectorXd q = m.inbore_q;
  const Posed here = forward_kinematics(m.chain, q);
  Params p;
  p.null_space_enabled = false;
  const auto step = ik_step(m.chain, q, here, weight_preset("w2"), p);
  CHECK((step.q_des - q).norm() == 0);

  p.null_space_enabled = true;
  const auto ns = ik_step(m.chain, q, here, weight_preset("w2"), p);
  const auto active = m.chain.active_joints();
  const auto J = geometric_jacobian(m.chain, q, active);
  const auto N = null_projector(J, weighted_damped_pinv(J, weight_preset("w2").w, p.lambda));
  const Eigen::VectorXd expected = N * (0.02 * manipulability_gradient(m.chain, q, active));
  for (int c = 0; c < 10; ++c) CHECK(ns.q_des[active[c]] - q[active[c]] == doctest::Approx(expected[c]).epsilon(1e-9));
  CHECK(ns.q_des[10] == q[10]);
}

TEST_CASE("ik_step reduces a 5 cm position error") {
  const auto& m = default_model();
  const Eigen::VectorXd q = m.inbore_q;
  Posed target = forward_kinematics(m.chain, q);
  target.p += Eigen::Vector3d(0.03, -0.04, 0);
  Params p;
  p.null_space_enabled = false;
  for (const char* name : {"w1", "w2", "w3"}) {
    const auto step = ik_step(m.chain, q, target, weight_preset(name), p);
    const double after = (target.p - forward_kinematics(m.chain, step.q_des).p).norm();
    CHECK(after < 0.05);
  }
}

TEST_CASE("ik_step reduces an orientation error") {
  const auto& m = default_model();
  const Eigen::VectorXd q = m.inbore_q;
  const Posed here = forward_kinematics(m.chain, q);
  const Eigen::Vector3d tilted = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()) * here.z_axis();
  const Posed target(here.p, align_z_axis<double>(here.R, tilted));
  Params p;
  p.null_space_enabled = false;
  const auto step = ik_step(m.chain, q, target, weight_preset("w2"), p);
  const Posed next = forward_kinematics(m.chain, step.q_des);
  CHECK(z_axis_angle(target, next) < z_axis_angle(target, here));
}

TEST_CASE("cheap base joints move more under w3 than w1") {
  const auto& m = default_model();
  std::mt19937 rng(59);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  Params p;
  p.null_space_enabled = false;
  for (int k = 0; k < 20; ++k) {
    Posed target = forward_kinematics(m.chain, m.inbore_q);
    target.p += Eigen::Vector3d(u(rng), u(rng), u(rng));
    const auto s1 = ik_step(m.chain, m.inbore_q, target, weight_preset("w1"), p);
    const auto s3 = ik_step(m.chain, m.inbore_q, target, weight_preset("w3"), p);
    const double base1 = (s1.q_des - m.inbore_q).head(6).norm();
    const double base3 = (s3.q_des - m.inbore_q).head(6).norm();
    CHECK(base3 > base1);
  }
}

TEST_CASE("ik_step reports the null-space dimension") {
  const auto& m = default_model();
  Params p;
  const auto step = ik_step(m.chain, m.inbore_q, forward_kinematics(m.chain, m.inbore_q), weight_preset("w2"), p);
  CHECK(step.null_space_dim == 4);
}

TEST_CASE("presets and parameter validation") {
  CHECK(weight_preset("w1").w.head(6).isOnes());
  CHECK(weight_preset("w1").w.tail(4).isApproxToConstant(0.1));
  CHECK(weight_preset("w2").w.isOnes());
  CHECK(weight_preset("w3").w.head(6).isApproxToConstant(0.1));
  CHECK_THROWS_AS(weight_preset("w4"), ValidationError);
  Params p;
  p.lambda = 0;
  CHECK_THROWS_AS(validate(p), ValidationError);
  Weights bad{"bad", Eigen::VectorXd::Zero(10)};
  CHECK_THROWS_AS(validate(bad), ValidationError);
}
