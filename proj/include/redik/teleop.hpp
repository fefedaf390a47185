#pragma once

#include "redik/controller.hpp"
#include "redik/model_io.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>

namespace redik::teleop {

enum class Phase { Idle, Tracking, Inserting };

std::string to_string(Phase phase);

// Reply for a rejected client message. Codes: bad_message, bad_value,
// depth_out_of_range.
struct WireError {
  std::string code;
  std::string msg;

  std::string to_json() const;
};

struct SetTarget {
  Eigen::Vector3d pos;
  Eigen::Vector3d z_axis;  // unit length after parsing
};
struct SetPolicy {
  Weights weights;
};
struct SetNullspace {
  bool enabled = true;
};
struct Insert {
  double depth_m = 0;
};
struct Retract {};
struct Home {};

using Command = std::variant<SetTarget, SetPolicy, SetNullspace, Insert, Retract, Home>;

// Decodes one client message against the model (weight count, insertion
// limits). Never throws.
std::variant<Command, WireError> parse_command(const RobotModel& model, const std::string& text);

struct SessionConfig {
  double rate_hz = 100;
  Params params;
  std::string policy = "w2";
  Eigen::VectorXd q_init;  // empty: the model's home
};

// One live simulation driven by client commands. Not thread-safe: a single
// owner calls handle_message/tick/snapshot.
//
// The tracked target is the needle pose at zero insertion. While the needle
// is inserted the controller tracks the target shifted along its own z-axis
// by q_ins, so the guide holds still and the tip error stays meaningful.
class Session {
 public:
  Session(RobotModel model, SessionConfig config = {});

  // Applies a client message; returns the error reply if it was rejected.
  std::optional<WireError> handle_message(const std::string& text);
  void apply(const Command& command);

  // One control tick of 1 / rate_hz.
  void tick();

  // The `state` wire message for the current tick.
  nlohmann::ordered_json snapshot() const;

  const RobotModel& model() const { return model_; }
  double time() const { return t_; }
  double rate_hz() const { return config_.rate_hz; }
  Phase phase() const { return phase_; }
  const Eigen::VectorXd& q() const { return q_; }
  bool target_clamped() const { return clamped_; }

 private:
  Posed effective_target() const;

  RobotModel model_;
  SessionConfig config_;
  Weights weights_;
  Eigen::Index insertion_ = -1;
  Eigen::VectorXd q_;
  Posed target_;
  double insert_goal_ = 0;
  double t_ = 0;
  Phase phase_ = Phase::Idle;
  bool clamped_ = false;
};

}  // namespace redik::teleop
