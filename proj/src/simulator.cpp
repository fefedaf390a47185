#include "redik/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace redik {

namespace {

std::vector<double> to_list(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string snapshot(const ScenarioSpec& spec, const Weights& weights, const Params& params, const SimConfig& sim) {
  nlohmann::ordered_json j;
  j["scenario"] = {{"kind", to_string(spec.kind)},
                   {"center_xyz", to_list(spec.center.p)},
                   {"center_z_axis", to_list(spec.center.z_axis())},
                   {"radius_m", spec.radius_m},
                   {"cone_half_angle_rad", spec.cone_half_angle_rad},
                   {"extent_xy_m", spec.extent_xy_m},
                   {"extent_z_m", spec.extent_z_m},
                   {"period_s", spec.period_s},
                   {"duration_s", spec.duration_s}};
  j["policy"] = {{"name", weights.name}, {"weights", to_list(weights.w)}};
  j["controller"] = {{"lambda", params.lambda},
                     {"ke", to_list(params.ke)},
                     {"kn", to_list(params.kn)},
                     {"null_space", params.null_space_enabled},
                     {"fd_step", params.fd_step}};
  j["sim"] = {{"rate_hz", sim.rate_hz},
              {"q_init", to_list(sim.q_init)},
              {"clamp_to_limits", sim.clamp_to_limits},
              {"saturation", sim.saturation == Saturation::Uniform ? "uniform" : "per_joint"},
              {"seed", sim.seed}};
  if (sim.velocity_limits.size() > 0) j["sim"]["velocity_limits"] = to_list(sim.velocity_limits);
  return j.dump();
}

}  // namespace

void validate(const SimConfig& sim) {
  if (!(sim.rate_hz > 0)) throw ValidationError("rate_hz must be positive");
  if (sim.velocity_limits.size() > 0 && !(sim.velocity_limits.array() > 0).all()) {
    throw ValidationError("velocity limits must be positive");
  }
}

Eigen::VectorXd step_plant(const Eigen::VectorXd& q_cur, const Eigen::VectorXd& q_des, double dt,
                           const Eigen::VectorXd& velocity_limits, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, bool clamp, Saturation saturation) {
  if (!(dt > 0)) throw ValidationError("dt must be positive");
  const auto n = q_cur.size();
  if (q_des.size() != n || velocity_limits.size() != n || lower.size() != n || upper.size() != n) {
    throw DimensionError("step_plant argument sizes disagree");
  }
  const Eigen::VectorXd max_step = velocity_limits * dt;
  Eigen::VectorXd delta = q_des - q_cur;
  if (saturation == Saturation::PerJoint) {
    delta = delta.cwiseMax(-max_step).cwiseMin(max_step);
  } else {
    const double ratio = (delta.cwiseAbs().array() / max_step.array()).maxCoeff();
    if (ratio > 1) delta /= ratio;
  }
  Eigen::VectorXd q = q_cur + delta;
  if (clamp) q = q.cwiseMax(lower).cwiseMin(upper);
  return q;
}

ScenarioRun run_scenario(const Chain& chain, const ScenarioSpec& spec, const Weights& weights,
                         const Params& params, const SimConfig& sim) {
  validate(spec);
  validate(sim);
  validate(weights);
  validate(params);

  const double dt = 1.0 / sim.rate_hz;
  const Eigen::VectorXd vel = sim.velocity_limits.size() > 0 ? sim.velocity_limits : chain.velocity_limits();
  const Eigen::VectorXd lower = chain.lower_limits();
  const Eigen::VectorXd upper = chain.upper_limits();
  Eigen::VectorXd q = sim.q_init.size() > 0 ? sim.q_init : Eigen::VectorXd::Zero(chain.size());
  if (q.size() != chain.size() || vel.size() != chain.size()) {
    throw DimensionError("initial configuration or velocity limits do not match the chain");
  }

  ScenarioRun run;
  run.policy_name = weights.name;
  run.null_space_enabled = params.null_space_enabled;
  run.rate_hz = sim.rate_hz;
  run.config_json = snapshot(spec, weights, params, sim);

  const auto count = static_cast<std::size_t>(std::llround(spec.duration_s * sim.rate_hz));
  run.records.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    LogRecord rec;
    rec.t = static_cast<double>(k) * dt;
    rec.target_pose = target_at(spec, rec.t);
    rec.q = q;

    const IkStep<double> step = ik_step(chain, q, rec.target_pose, weights, params);
    rec.q_des = step.q_des;
    rec.ee_pose = forward_kinematics(chain, q);
    rec.e_pos_mm = step.error.head<3>().norm() * 1e3;
    rec.e_ori_deg = misalignment_deg(step.error.tail<3>(),
                                     rec.target_pose.z_axis().dot(rec.ee_pose.z_axis()),
                                     params.orientation_error_mode);
    rec.manipulability = step.manipulability;
    rec.null_space_dim = step.null_space_dim;
    if (!rec.q_des.allFinite() || !std::isfinite(rec.manipulability) || !rec.ee_pose.p.allFinite()) {
      throw SimulationError("non-finite value in record " + std::to_string(k));
    }
    run.records.push_back(std::move(rec));
    q = step_plant(q, run.records.back().q_des, dt, vel, lower, upper, sim.clamp_to_limits, sim.saturation);
  }
  return run;
}

std::vector<PolicyResult> compare_policies(const Chain& chain, const ScenarioSpec& spec,
                                           const std::vector<Weights>& policies, const Params& params,
                                           const SimConfig& sim) {
  std::vector<PolicyResult> out;
  for (const auto& w : policies) {
    PolicyResult r;
    r.policy = w.name;
    r.run = run_scenario(chain, spec, w, params, sim);
    if (!r.run.records.empty()) r.metrics = compute_metrics(r.run, spec.kind);
    out.push_back(std::move(r));
  }
  return out;
}

ScenarioSpec default_scenario(const RobotModel& model, ScenarioKind kind) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.center = forward_kinematics(model.chain, model.inbore_q);
  spec.duration_s = kind == ScenarioKind::ReachInBore ? 60.0 : 2 * spec.period_s;
  return spec;
}

SimConfig default_sim(const RobotModel& model, ScenarioKind kind) {
  SimConfig sim;
  sim.q_init = kind == ScenarioKind::ReachInBore ? model.home_q() : model.inbore_q;
  return sim;
}

std::string csv_header(const Chain& chain) {
  std::string h = "t";
  const auto active = chain.active_joints();
  for (std::size_t i = 0; i < active.size(); ++i) h += ",q" + std::to_string(i);
  if (chain.insertion_joint() >= 0) h += ",q_ins";
  h += ",tgt_x,tgt_y,tgt_z,tgt_zx,tgt_zy,tgt_zz,ee_x,ee_y,ee_z,ee_zx,ee_zy,ee_zz,e_pos_mm,e_ori_deg,manip,policy,nullspace";
  return h;
}

void write_csv(std::ostream& out, const Chain& chain, const ScenarioRun& run) {
  const auto active = chain.active_joints();
  const auto ins = chain.insertion_joint();
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << ',' << buf;
  };
  out << csv_header(chain) << '\n';
  for (const auto& r : run.records) {
    std::snprintf(buf, sizeof buf, "%.10g", r.t);
    out << buf;
    for (auto i : active) num(r.q[i]);
    if (ins >= 0) num(r.q[ins]);
    for (const Posed* pose : {&r.target_pose, &r.ee_pose}) {
      for (int i = 0; i < 3; ++i) num(pose->p[i]);
      for (int i = 0; i < 3; ++i) num(pose->R(i, 2));
    }
    num(r.e_pos_mm);
    num(r.e_ori_deg);
    num(r.manipulability);
    out << ',' << run.policy_name << ',' << (run.null_space_enabled ? "true" : "false") << '\n';
  }
}

}  // namespace redik
