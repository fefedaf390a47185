#pragma once

#include "redik/controller.hpp"
#include "redik/model_io.hpp"
#include "redik/run_log.hpp"
#include "redik/scenarios.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace redik {

// How the servo limits a commanded step that exceeds some joint's speed.
enum class Saturation {
  PerJoint,  // each joint clipped independently
  Uniform,   // whole step scaled so the most limited joint just meets its limit
};

struct SimConfig {
  double rate_hz = 100;
  Eigen::VectorXd q_init;            // empty: the model's home (q = 0)
  Eigen::VectorXd velocity_limits;   // empty: the model's per-joint limits
  bool clamp_to_limits = true;
  Saturation saturation = Saturation::Uniform;
  std::uint64_t seed = 0;            // reserved; runs draw no random numbers
};

void validate(const SimConfig& sim);

class SimulationError : public Error {
 public:
  using Error::Error;
};

// Moves every joint toward q_des by at most vel_limit * dt, then clamps to
// [lower, upper] when `clamp` is set.
Eigen::VectorXd step_plant(const Eigen::VectorXd& q_cur, const Eigen::VectorXd& q_des, double dt,
                           const Eigen::VectorXd& velocity_limits, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, bool clamp = true,
                           Saturation saturation = Saturation::Uniform);

// Closed loop at sim.rate_hz: target(t) -> ik_step -> step_plant -> log.
ScenarioRun run_scenario(const Chain& chain, const ScenarioSpec& spec, const Weights& weights,
                         const Params& params, const SimConfig& sim);

struct PolicyResult {
  std::string policy;
  TrackingMetrics metrics;
  ScenarioRun run;
};

std::vector<PolicyResult> compare_policies(const Chain& chain, const ScenarioSpec& spec,
                                           const std::vector<Weights>& policies, const Params& params,
                                           const SimConfig& sim);

// Defaults tied to the model document: reach starts at home and targets the
// in-bore pose; the in-bore scenarios start from the in-bore configuration.
ScenarioSpec default_scenario(const RobotModel& model, ScenarioKind kind);
SimConfig default_sim(const RobotModel& model, ScenarioKind kind);

std::string csv_header(const Chain& chain);
void write_csv(std::ostream& out, const Chain& chain, const ScenarioRun& run);

}  // namespace redik
