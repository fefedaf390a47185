#include "redik/teleop.hpp"

#include "redik/scenarios.hpp"
#include "redik/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace redik::teleop {

using nlohmann::json;

namespace {

WireError bad_message(std::string msg) { return {"bad_message", std::move(msg)}; }
WireError bad_value(std::string msg) { return {"bad_value", std::move(msg)}; }

// Reads a finite 3-vector; nullopt plus `err` on failure.
std::optional<Eigen::Vector3d> vec3(const json& j, const char* key, std::optional<WireError>& err) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    err = bad_message(std::string("'") + key + "' must be an array of 3 numbers");
    return std::nullopt;
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[key][i].is_number()) {
      err = bad_message(std::string("'") + key + "' must be an array of 3 numbers");
      return std::nullopt;
    }
    v[i] = j[key][i].get<double>();
  }
  if (!v.allFinite()) {
    err = bad_value(std::string("'") + key + "' has a non-finite entry");
    return std::nullopt;
  }
  return v;
}

std::vector<double> list(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "idle";
    case Phase::Tracking: return "tracking";
    case Phase::Inserting: return "inserting";
  }
  return "idle";
}

std::string WireError::to_json() const {
  json j = json::object();
  j["type"] = "error";
  j["code"] = code;
  j["msg"] = msg;
  return j.dump();
}

std::variant<Command, WireError> parse_command(const RobotModel& model, const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) return bad_message("message is not valid JSON");
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    return bad_message("message must be an object with a string 'type'");
  }
  const std::string type = j["type"].get<std::string>();
  std::optional<WireError> err;

  if (type == "set_target") {
    const auto pos = vec3(j, "pos", err);
    if (!pos) return *err;
    const auto z = vec3(j, "z_axis", err);
    if (!z) return *err;
    if (z->norm() < 1e-9) return bad_value("'z_axis' must be nonzero");
    return SetTarget{*pos, z->normalized()};
  }
  if (type == "set_policy") {
    if (!j.contains("policy")) return bad_message("'policy' is required");
    const json& p = j["policy"];
    const auto n = static_cast<Eigen::Index>(model.chain.active_joints().size());
    if (p.is_string()) {
      try {
        return SetPolicy{weight_preset(p.get<std::string>(), model.base_joint_count, model.tool_joint_count())};
      } catch (const ValidationError& e) {
        return bad_value(e.what());
      }
    }
    if (!p.is_object() || !p.contains("weights") || !p["weights"].is_array()) {
      return bad_message("'policy' must be w1, w2, w3 or {\"weights\": [...]}");
    }
    const json& w = p["weights"];
    if (static_cast<Eigen::Index>(w.size()) != n) {
      return bad_value("expected " + std::to_string(n) + " weights, got " + std::to_string(w.size()));
    }
    Weights custom{"custom", Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!w[i].is_number()) return bad_message("weights must be numbers");
      custom.w[i] = w[i].get<double>();
    }
    if (!custom.w.allFinite() || !(custom.w.array() > 0).all()) {
      return bad_value("weights must be finite and positive");
    }
    return SetPolicy{custom};
  }
  if (type == "set_nullspace") {
    if (!j.contains("enabled") || !j["enabled"].is_boolean()) return bad_message("'enabled' must be a boolean");
    return SetNullspace{j["enabled"].get<bool>()};
  }
  if (type == "insert") {
    if (!j.contains("depth_m") || !j["depth_m"].is_number()) return bad_message("'depth_m' must be a number");
    const double d = j["depth_m"].get<double>();
    if (!std::isfinite(d)) return bad_value("'depth_m' is not finite");
    const auto ins = model.chain.insertion_joint();
    if (ins < 0) return WireError{"depth_out_of_range", "model has no insertion joint"};
    const auto& joint = model.chain.joints[static_cast<std::size_t>(ins)];
    if (d < joint.lower || d > joint.upper) {
      return WireError{"depth_out_of_range", "depth " + std::to_string(d) + " m outside [" +
                                                 std::to_string(joint.lower) + ", " +
                                                 std::to_string(joint.upper) + "]"};
    }
    return Insert{d};
  }
  if (type == "retract") return Retract{};
  if (type == "home") return Home{};
  return bad_message("unknown message type '" + type + "'");
}

Session::Session(RobotModel model, SessionConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  if (!(config_.rate_hz > 0)) throw ValidationError("rate_hz must be positive");
  validate(config_.params);
  weights_ = weight_preset(config_.policy, model_.base_joint_count, model_.tool_joint_count());
  insertion_ = model_.chain.insertion_joint();
  if (config_.q_init.size() == 0) config_.q_init = model_.home_q();
  if (config_.q_init.size() != model_.chain.size()) throw DimensionError("q_init does not match the chain");
  q_ = config_.q_init;
  target_ = forward_kinematics(model_.chain, q_);
}

std::optional<WireError> Session::handle_message(const std::string& text) {
  auto parsed = parse_command(model_, text);
  if (auto* err = std::get_if<WireError>(&parsed)) return *err;
  apply(std::get<Command>(parsed));
  return std::nullopt;
}

void Session::apply(const Command& command) {
  std::visit(
      [this](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetTarget>) {
          Eigen::Vector3d pos = c.pos;
          const Eigen::Vector3d base = model_.chain.base.p;
          const double reach = model_.chain.reach();
          clamped_ = (pos - base).norm() > reach;
          if (clamped_) pos = base + reach * (pos - base).normalized();
          target_ = Posed(pos, align_z_axis<double>(target_.R, c.z_axis));
          phase_ = Phase::Tracking;
        } else if constexpr (std::is_same_v<T, SetPolicy>) {
          weights_ = c.weights;
        } else if constexpr (std::is_same_v<T, SetNullspace>) {
          config_.params.null_space_enabled = c.enabled;
        } else if constexpr (std::is_same_v<T, Insert>) {
          insert_goal_ = c.depth_m;
          phase_ = Phase::Inserting;
        } else if constexpr (std::is_same_v<T, Retract>) {
          insert_goal_ = 0;
        } else if constexpr (std::is_same_v<T, Home>) {
          insert_goal_ = 0;
          target_ = forward_kinematics(model_.chain, config_.q_init);
          clamped_ = false;
          phase_ = Phase::Idle;
        }
      },
      command);
}

Posed Session::effective_target() const {
  Posed goal = target_;
  if (insertion_ >= 0) goal.p += q_[insertion_] * target_.z_axis();
  return goal;
}

void Session::tick() {
  const double dt = 1.0 / config_.rate_hz;
  const Chain& chain = model_.chain;
  Eigen::VectorXd q_des = config_.q_init;
  if (phase_ != Phase::Idle) {
    q_des = ik_step(chain, q_, effective_target(), weights_, config_.params).q_des;
  }
  if (insertion_ >= 0) {
    // The needle advances at its own limit so it does not throttle tracking.
    const double step = chain.joints[static_cast<std::size_t>(insertion_)].velocity_limit * dt;
    q_des[insertion_] = q_[insertion_] + std::clamp(insert_goal_ - q_[insertion_], -step, step);
  }
  q_ = step_plant(q_, q_des, dt, chain.velocity_limits(), chain.lower_limits(), chain.upper_limits());
  t_ += dt;
  if (phase_ == Phase::Inserting && insert_goal_ == 0 && insertion_ >= 0 && q_[insertion_] <= 0) {
    phase_ = Phase::Tracking;
  }
}

nlohmann::ordered_json Session::snapshot() const {
  const Chain& chain = model_.chain;
  const Posed ee = forward_kinematics(chain, q_);
  const Posed goal = effective_target();
  const Vector6<double> e = pose_error(goal, ee, config_.params.orientation_error_mode);

  nlohmann::ordered_json j;
  j["type"] = "state";
  j["t"] = t_;
  j["q"] = list(q_);
  j["ee_pos"] = list(ee.p);
  j["ee_z"] = list(ee.z_axis());
  j["target_pos"] = list(goal.p);
  j["target_z"] = list(goal.z_axis());
  j["e_pos_mm"] = e.head<3>().norm() * 1e3;
  j["e_ori_deg"] = misalignment_deg(e.tail<3>(), goal.z_axis().dot(ee.z_axis()),
                                    config_.params.orientation_error_mode);
  j["manip"] = manipulability(geometric_jacobian(chain, q_, chain.active_joints()));
  j["policy"] = weights_.name;
  j["nullspace"] = config_.params.null_space_enabled;
  j["phase"] = to_string(phase_);
  j["clamped"] = clamped_;
  return j;
}

}  // namespace redik::teleop
