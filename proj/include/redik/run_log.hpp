#pragma once

#include "redik/types.hpp"

#include <string>
#include <vector>

namespace redik {

struct LogRecord {
  double t = 0;
  Eigen::VectorXd q;
  Eigen::VectorXd q_des;
  Posed ee_pose;
  Posed target_pose;
  double e_pos_mm = 0;
  double e_ori_deg = 0;
  double manipulability = 0;
  Eigen::Index null_space_dim = 0;
};

// Time-ordered log of one closed-loop run, records at 1 / rate_hz spacing.
struct ScenarioRun {
  std::vector<LogRecord> records;
  std::string policy_name;
  bool null_space_enabled = false;
  double rate_hz = 0;
  std::string config_json;  // snapshot of the inputs that produced the run
};

}  // namespace redik
