#pragma once

#include "redik/kinematics.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace redik {

// A chain plus the named configurations and metadata stored with it in the
// model document.
struct RobotModel {
  Chain chain;
  Eigen::MatrixXd coupling;          // actuator -> joint map, n x n
  Eigen::Index base_joint_count = 6; // leading active joints that belong to the arm
  Eigen::VectorXd inbore_q;          // in-bore ready configuration
  std::optional<Posed> home_pose;    // documented FK at q = 0
  std::optional<Posed> inbore_pose;  // documented FK at inbore_q

  Eigen::VectorXd home_q() const { return Eigen::VectorXd::Zero(chain.size()); }
  Eigen::Index tool_joint_count() const {
    return static_cast<Eigen::Index>(chain.active_joints().size()) - base_joint_count;
  }
};

// Parses and validates a model document (JSON). Throws ParseError with a
// line number or field path, or ValidationError naming the offending joint.
RobotModel load_model(const std::string& text);
RobotModel load_model_file(const std::filesystem::path& path);
Chain load_chain(const std::string& text);

std::string dump_model(const RobotModel& model);

// Model path resolution: explicit path, then $REDIK_MODEL, then the shipped default.
std::filesystem::path resolve_model_path(const std::string& explicit_path);
std::filesystem::path default_model_path();

}  // namespace redik
