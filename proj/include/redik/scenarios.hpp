#pragma once

#include "redik/controller.hpp"
#include "redik/run_log.hpp"
#include "redik/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace redik {

enum class ScenarioKind { ReachInBore, PositioningCircle, RcmCone, PoseTracking, ZTrajectory };

// Canonical names: reach_in_bore, positioning_circle, rcm_cone, pose_tracking,
// z_trajectory. Short aliases reach, circle, rcm, pose, z are accepted.
ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);
bool is_periodic(ScenarioKind kind);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::ReachInBore;
  Posed center;
  double radius_m = 0.05;
  double cone_half_angle_rad = M_PI / 4;
  double extent_xy_m = 0.20;
  double extent_z_m = 0.05;
  double period_s = 20;
  double duration_s = 60;
};

void validate(const ScenarioSpec& spec);

struct TrajectorySample {
  double t = 0;
  Posed target;
};

// Target pose at time t. Circle and cone share omega = 2 pi / period.
Posed target_at(const ScenarioSpec& spec, double t);

// Samples at t_k = k / rate_hz for k < round(duration * rate_hz).
std::vector<TrajectorySample> generate(const ScenarioSpec& spec, double rate_hz);

// Corner poses of the Z path, in traversal order.
std::vector<Posed> z_waypoints(const ScenarioSpec& spec);

struct MetricConfig {
  double rise_fraction = 0.10;    // rise: |e_p| first reaches this fraction of the initial error
  double settle_fraction = 0.05;  // settling: |e_p| stays inside this band afterwards
  double steady_window = 0.10;    // trailing fraction of samples averaged for steady state
};

struct TrackingMetrics {
  // Step metrics, reach_in_bore only. A missing settling time means the
  // run never settled.
  std::optional<double> rise_time_s;
  std::optional<double> settling_time_s;
  std::optional<double> steady_state_pos_err_mm;
  std::optional<double> steady_state_ori_err_deg;
  double mean_pos_err_mm = 0;
  double mean_ori_err_deg = 0;
};

class UnsupportedMetric : public Error {
 public:
  using Error::Error;
};

// Whole-run means for every kind; step metrics added for reach_in_bore.
TrackingMetrics compute_metrics(const ScenarioRun& run, ScenarioKind kind,
                                const MetricConfig& config = {});

// Step metrics alone; throws UnsupportedMetric for periodic kinds.
TrackingMetrics step_metrics(const ScenarioRun& run, ScenarioKind kind,
                             const MetricConfig& config = {});

// Inverse of theta * sin(theta) on [0, pi/2].
double invert_theta_sin_theta(double magnitude);

// Misalignment angle in degrees recovered from an orientation error vector.
// `z_dot` = z_tar . z_cur decides which branch applies: for obtuse angles
// the angle comes from the axes directly.
double misalignment_deg(const Eigen::Vector3d& e_o, double z_dot, OrientationErrorMode mode);

}  // namespace redik
