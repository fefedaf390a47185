// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// selected criterion fails. Usage: redik_acceptance [A1 A2 ...]

#include "redik/simulator.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace redik;
using namespace redik::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd random_weights(std::mt19937& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.1, 10);
  Eigen::VectorXd w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

// The policy comparison isolates the weights, so the null-space term is off.
Params table_params() {
  Params p;
  p.null_space_enabled = false;
  return p;
}

Outcome a1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(1);
  const double lambdas[] = {1e-4, 1e-2, 1.0};
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    const Eigen::VectorXd w = random_weights(rng, 10);
    const double lambda = lambdas[k % 3];
    worst = std::max(worst, (wdls_normal_form(J, w, lambda) - weighted_damped_pinv(J, w, lambda)).cwiseAbs().maxCoeff());
  }
  const double dt = seconds_since(t0);
  return {worst < 1e-9 && dt < 5, fmt("max diff %.3e (< 1e-9), %.2f s (< 5 s), 1000 instances", worst, dt)};
}

Outcome a2() {
  std::mt19937 rng(2);
  int monotone = 0, instances = 0;
  double worst_final = 0;
  while (instances < 100) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    if (Eigen::FullPivLU<Eigen::MatrixXd>(J).rank() < 6) continue;
    ++instances;
    const Eigen::MatrixXd mp = svd_pinv(J);
    double prev = INFINITY, err = 0;
    bool ok = true;
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
      err = (weighted_damped_pinv(J, Eigen::VectorXd::Ones(10), lambda) - mp).cwiseAbs().maxCoeff();
      ok = ok && err < prev;
      prev = err;
    }
    monotone += ok;
    worst_final = std::max(worst_final, err);
  }
  return {monotone == instances && worst_final < 1e-8,
          fmt("monotone %d/%d, worst final error %.3e (< 1e-8)", monotone, instances, worst_final)};
}

// Same instance distribution as A1, lambda fixed at 1e-4.
Outcome a3() {
  std::mt19937 rng(3);
  double worst_jn = 0, worst_nn = 0, worst_nn_identity = 0;
  for (int k = 0; k < 500; ++k) {
    const Eigen::MatrixXd J = random_matrix(6, 10, rng);
    const Eigen::VectorXd w = random_weights(rng, 10);
    const auto N = null_projector(J, weighted_damped_pinv(J, w, 1e-4));
    worst_jn = std::max(worst_jn, (J * N).norm() / J.norm());
    worst_nn = std::max(worst_nn, (N * N - N).norm());
    const auto Ni = null_projector(J, weighted_damped_pinv(J, Eigen::VectorXd::Ones(10), 1e-4));
    worst_nn_identity = std::max(worst_nn_identity, (Ni * Ni - Ni).norm());
  }
  return {worst_jn < 1e-6 && worst_nn < 1e-6,
          fmt("max |JN|/|J| %.3e (< 1e-6), max |N^2-N| %.3e (< 1e-6); with W = I: %.3e", worst_jn, worst_nn,
              worst_nn_identity)};
}

Outcome a4() {
  const auto& m = default_model();
  std::mt19937 rng(4);
  const auto active = m.chain.active_joints();
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd q = random_config(m.chain, rng);
    worst = std::max(worst, (geometric_jacobian(m.chain, q, active) - numeric_jacobian(m.chain, q, active))
                                .cwiseAbs()
                                .maxCoeff());
  }
  return {worst < 1e-6, fmt("max diff %.3e (< 1e-6), 100 configs, %zu active joints", worst, active.size())};
}

Outcome a5() {
  const auto& m = default_model();
  std::mt19937 rng(5);
  const auto active = m.chain.active_joints();
  double worst = 0;
  int checked = 0;
  while (checked < 50) {
    const Eigen::VectorXd q = random_config(m.chain, rng);
    if (manipulability(geometric_jacobian(m.chain, q, active)) <= 1e-3) continue;
    const Eigen::VectorXd oracle = trace_gradient(m.chain, q, active);
    const Eigen::VectorXd g = manipulability_gradient(m.chain, q, active);
    worst = std::max(worst, (g - oracle).norm() / oracle.norm());
    ++checked;
  }
  return {worst < 1e-4, fmt("max relative error %.3e (< 1e-4), 50 configs with w > 1e-3", worst)};
}

Outcome a6() {
  const auto& m = default_model();
  const auto spec = default_scenario(m, ScenarioKind::ReachInBore);
  const auto sim = default_sim(m, ScenarioKind::ReachInBore);
  const double dist = (forward_kinematics(m.chain, sim.q_init).p - spec.center.p).norm();
  bool pass = spec.duration_s <= 60;
  std::string detail = fmt("target %.3f m from home;", dist);
  for (const char* name : {"w1", "w2", "w3"}) {
    const auto run = run_scenario(m.chain, spec, weight_preset(name), table_params(), sim);
    const auto& last = run.records.back();
    pass = pass && last.e_pos_mm < 1.0 && last.e_ori_deg < 0.5;
    detail += fmt(" %s %.2e mm / %.2e deg;", name, last.e_pos_mm, last.e_ori_deg);
  }
  detail += fmt(" limits 1 mm / 0.5 deg at t = %.0f s", spec.duration_s);
  return {pass, detail};
}

Outcome a7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& m = default_model();
  const std::vector<Weights> policies = {weight_preset("w1"), weight_preset("w2"), weight_preset("w3")};
  auto table = [&](ScenarioKind kind) {
    return compare_policies(m.chain, default_scenario(m, kind), policies, table_params(), default_sim(m, kind));
  };
  const auto reach = table(ScenarioKind::ReachInBore);
  const auto pose = table(ScenarioKind::PoseTracking);
  const auto rcm = table(ScenarioKind::RcmCone);
  const double dt = seconds_since(t0);

  const double r1 = *reach[0].metrics.rise_time_s, r2 = *reach[1].metrics.rise_time_s,
               r3 = *reach[2].metrics.rise_time_s;
  const double p1 = pose[0].metrics.mean_ori_err_deg, p2 = pose[1].metrics.mean_ori_err_deg,
               p3 = pose[2].metrics.mean_ori_err_deg;
  const double c1 = rcm[0].metrics.mean_ori_err_deg, c2 = rcm[1].metrics.mean_ori_err_deg,
               c3 = rcm[2].metrics.mean_ori_err_deg;
  const bool a = r3 < r2 && r2 < r1;
  const bool b = p1 <= p2 && p2 <= p3;
  const bool c = c1 <= c2 && c2 < c3;
  return {a && b && c && dt < 120,
          fmt("(a) rise w3 < w2 < w1: %.3f, %.3f, %.3f s %s; (b) pose ori w1 <= w2 <= w3: %.3f, %.3f, %.3f deg %s; "
              "(c) rcm ori w1 <= w2 < w3: %.3f, %.3f, %.3f deg %s; %.1f s (< 120 s)",
              r3, r2, r1, a ? "ok" : "violated", p1, p2, p3, b ? "ok" : "violated", c1, c2, c3,
              c ? "ok" : "violated", dt)};
}

// Uniform weights (w2); the other presets are reported alongside.
Outcome a8() {
  const auto& m = default_model();
  auto spec = default_scenario(m, ScenarioKind::PositioningCircle);
  spec.radius_m = 0.30;
  const auto sim = default_sim(m, spec.kind);
  auto stats = [&](const char* name, bool ns) {
    Params p;
    p.null_space_enabled = ns;
    const auto run = run_scenario(m.chain, spec, weight_preset(name), p, sim);
    double mean = 0, lo = INFINITY;
    for (const auto& r : run.records) {
      mean += r.manipulability;
      lo = std::min(lo, r.manipulability);
    }
    return std::pair{mean / static_cast<double>(run.records.size()), lo};
  };
  bool pass = false;
  std::string detail;
  for (const char* name : {"w2", "w1", "w3"}) {
    const auto [mean_off, min_off] = stats(name, false);
    const auto [mean_on, min_on] = stats(name, true);
    const bool ok = mean_on > mean_off && min_on >= 1.2 * min_off;
    if (std::string(name) == "w2") {
      pass = ok;
      detail = fmt("w2: mean %.4f vs %.4f, min ratio %.2f (>= 1.2);", mean_on, mean_off, min_on / min_off);
    } else {
      detail += fmt(" [%s: mean %.4f vs %.4f, min ratio %.2f]", name, mean_on, mean_off, min_on / min_off);
    }
  }
  return {pass, detail};
}

// Uniform weights (w2), null-space control on.
Outcome a9() {
  const auto& m = default_model();
  const auto spec = default_scenario(m, ScenarioKind::ReachInBore);
  const auto sim = default_sim(m, spec.kind);
  auto steady = [&](const Params& p) {
    const auto run = run_scenario(m.chain, spec, weight_preset("w2"), p, sim);
    return *compute_metrics(run, spec.kind).steady_state_pos_err_mm;
  };
  std::vector<double> kn_series, lambda_series;
  for (double kn : {0.02, 0.2, 2.0}) {
    Params p;
    p.kn = Eigen::VectorXd::Constant(1, kn);
    kn_series.push_back(steady(p));
  }
  for (double lambda : {1e-4, 1e-2, 1e-1}) {
    Params p;
    p.lambda = lambda;
    lambda_series.push_back(steady(p));
  }
  auto nondecreasing = [](const std::vector<double>& v) { return std::is_sorted(v.begin(), v.end()); };
  return {nondecreasing(kn_series) && nondecreasing(lambda_series),
          fmt("steady e_pos (mm) Kn 0.02/0.2/2: %.3e, %.3e, %.3e; lambda 1e-4/1e-2/1e-1: %.3e, %.3e, %.3e",
              kn_series[0], kn_series[1], kn_series[2], lambda_series[0], lambda_series[1], lambda_series[2])};
}

Outcome a10() {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(-1, 1), angle(-M_PI, M_PI);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const Posed a(Eigen::Vector3d(u(rng), u(rng), u(rng)), random_rotation(rng));
    const Posed b(Eigen::Vector3d(u(rng), u(rng), u(rng)), random_rotation(rng));
    const Eigen::Matrix3d ra = Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Matrix3d rb = Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const auto e = pose_error(a, b);
    worst = std::max(worst, (pose_error(Posed(a.p, a.R * ra), b) - e).cwiseAbs().maxCoeff());
    worst = std::max(worst, (pose_error(a, Posed(b.p, b.R * rb)) - e).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-12, fmt("max deviation %.3e (< 1e-12), 100 cases", worst)};
}

Outcome a11() {
  const auto& m = default_model();
  const std::vector<Weights> policies = {weight_preset("w1"), weight_preset("w2"), weight_preset("w3")};
  const auto spec = default_scenario(m, ScenarioKind::PoseTracking);
  const auto sim = default_sim(m, spec.kind);
  auto csv = [&] {
    std::ostringstream out;
    for (const auto& r : compare_policies(m.chain, spec, policies, Params{}, sim)) write_csv(out, m.chain, r.run);
    return out.str();
  };
  const std::string first = csv(), second = csv();
  return {first == second, fmt("%zu bytes, %s", first.size(), first == second ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},  {"A5", a5},  {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  for (const auto& s : selected) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == s; })) {
      std::fprintf(stderr, "unknown criterion %s\n", s.c_str());
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-4s %s  %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
