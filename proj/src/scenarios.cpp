#include "redik/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace redik {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

Eigen::Vector3d slerp(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double s) {
  const double omega = std::atan2(a.cross(b).norm(), a.dot(b));
  if (omega < 1e-12) return a;
  return (std::sin((1 - s) * omega) * a + std::sin(s * omega) * b) / std::sin(omega);
}

Posed z_path_at(const ScenarioSpec& spec, double t) {
  const auto wps = z_waypoints(spec);
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < wps.size(); ++i) {
    cumulative.push_back(cumulative.back() + (wps[i].p - wps[i - 1].p).norm());
  }
  const double length = cumulative.back();
  const double s = std::clamp(t / spec.period_s, 0.0, 1.0) * length;

  std::size_t seg = 1;
  while (seg + 1 < wps.size() && s > cumulative[seg]) ++seg;
  const double seg_len = cumulative[seg] - cumulative[seg - 1];
  const double u = seg_len > 0 ? std::clamp((s - cumulative[seg - 1]) / seg_len, 0.0, 1.0) : 1.0;

  const Posed& a = wps[seg - 1];
  const Posed& b = wps[seg];
  const Eigen::Vector3d z = slerp(a.R.col(2), b.R.col(2), u);
  return Posed((1 - u) * a.p + u * b.p, align_z_axis<double>(spec.center.R, z));
}

}  // namespace

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "reach_in_bore" || name == "reach") return ScenarioKind::ReachInBore;
  if (name == "positioning_circle" || name == "circle") return ScenarioKind::PositioningCircle;
  if (name == "rcm_cone" || name == "rcm") return ScenarioKind::RcmCone;
  if (name == "pose_tracking" || name == "pose") return ScenarioKind::PoseTracking;
  if (name == "z_trajectory" || name == "z") return ScenarioKind::ZTrajectory;
  throw ValidationError("unknown scenario '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::ReachInBore: return "reach_in_bore";
    case ScenarioKind::PositioningCircle: return "positioning_circle";
    case ScenarioKind::RcmCone: return "rcm_cone";
    case ScenarioKind::PoseTracking: return "pose_tracking";
    case ScenarioKind::ZTrajectory: return "z_trajectory";
  }
  return "unknown";
}

bool is_periodic(ScenarioKind kind) {
  return kind == ScenarioKind::PositioningCircle || kind == ScenarioKind::RcmCone ||
         kind == ScenarioKind::PoseTracking;
}

void validate(const ScenarioSpec& spec) {
  if (!(spec.radius_m > 0)) throw ValidationError("scenario radius_m must be positive");
  if (!(spec.cone_half_angle_rad > 0 && spec.cone_half_angle_rad < M_PI / 2)) {
    throw ValidationError("scenario cone_half_angle_rad must lie in (0, pi/2)");
  }
  if (!(spec.period_s > 0)) throw ValidationError("scenario period_s must be positive");
  if (!(spec.duration_s >= 0)) throw ValidationError("scenario duration_s must be non-negative");
  if (!(spec.extent_xy_m > 0) || !(spec.extent_z_m >= 0)) {
    throw ValidationError("scenario extents must be positive");
  }
  if (!is_rotation<double>(spec.center.R, 1e-9)) {
    throw ValidationError("scenario center rotation is not a proper rotation");
  }
}

std::vector<Posed> z_waypoints(const ScenarioSpec& spec) {
  const double hx = spec.extent_xy_m / 2;
  const double hz = spec.extent_z_m / 2;
  const double tilt = spec.cone_half_angle_rad;
  struct Corner {
    double x, y, z, tilt;
  };
  // Top edge left to right, diagonal back, bottom edge left to right.
  const Corner corners[] = {{-hx, hx, 0, 0}, {hx, hx, hz, tilt}, {-hx, -hx, -hz, -tilt}, {hx, -hx, 0, 0}};
  std::vector<Posed> out;
  for (const auto& c : corners) {
    const Eigen::Matrix3d R =
        spec.center.R * Eigen::AngleAxisd(c.tilt, Eigen::Vector3d::UnitX()).toRotationMatrix();
    out.emplace_back(spec.center.p + Eigen::Vector3d(c.x, c.y, c.z), R);
  }
  return out;
}

Posed target_at(const ScenarioSpec& spec, double t) {
  const double omega = 2 * M_PI / spec.period_s;
  const double phase = omega * std::fmod(t, spec.period_s);
  const Eigen::Vector3d circle = spec.radius_m * Eigen::Vector3d(std::cos(phase), std::sin(phase), 0);
  const double a = spec.cone_half_angle_rad;
  const Eigen::Vector3d cone_z =
      spec.center.R * Eigen::Vector3d(std::sin(a) * std::cos(phase), std::sin(a) * std::sin(phase), std::cos(a));

  switch (spec.kind) {
    case ScenarioKind::ReachInBore:
      return spec.center;
    case ScenarioKind::PositioningCircle:
      return Posed(spec.center.p + circle, spec.center.R);
    case ScenarioKind::RcmCone:
      return Posed(spec.center.p, align_z_axis<double>(spec.center.R, cone_z));
    case ScenarioKind::PoseTracking:
      return Posed(spec.center.p + circle, align_z_axis<double>(spec.center.R, cone_z));
    case ScenarioKind::ZTrajectory:
      return z_path_at(spec, t);
  }
  return spec.center;
}

std::vector<TrajectorySample> generate(const ScenarioSpec& spec, double rate_hz) {
  validate(spec);
  if (!(rate_hz > 0)) throw ValidationError("rate_hz must be positive");
  const auto count = static_cast<std::size_t>(std::llround(spec.duration_s * rate_hz));
  std::vector<TrajectorySample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / rate_hz;
    out.push_back({t, target_at(spec, t)});
  }
  return out;
}

double invert_theta_sin_theta(double magnitude) {
  const double hi_value = M_PI / 2;  // f(pi/2)
  if (magnitude <= 0) return 0;
  if (magnitude >= hi_value) return M_PI / 2;
  double lo = 0, hi = M_PI / 2;
  double theta = std::sqrt(magnitude);  // theta * sin(theta) ~ theta^2 near zero
  for (int it = 0; it < 60; ++it) {
    const double f = theta * std::sin(theta) - magnitude;
    if (std::abs(f) < 1e-15) break;
    (f > 0 ? hi : lo) = theta;
    const double df = std::sin(theta) + theta * std::cos(theta);
    double next = theta - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    theta = next;
  }
  return theta;
}

double misalignment_deg(const Eigen::Vector3d& e_o, double z_dot, OrientationErrorMode mode) {
  if (z_dot < 0) return std::acos(std::max(-1.0, z_dot)) * kRadToDeg;
  if (mode == OrientationErrorMode::Normalized) return e_o.norm() * kRadToDeg;
  return invert_theta_sin_theta(e_o.norm()) * kRadToDeg;
}

namespace {

std::optional<double> first_crossing(const std::vector<LogRecord>& r, double threshold) {
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k].e_pos_mm <= threshold) {
      if (k == 0) return 0.0;
      const double e0 = r[k - 1].e_pos_mm, e1 = r[k].e_pos_mm;
      const double u = e0 == e1 ? 1.0 : (e0 - threshold) / (e0 - e1);
      return (r[k - 1].t + u * (r[k].t - r[k - 1].t)) - r.front().t;
    }
  }
  return std::nullopt;
}

std::optional<double> settling(const std::vector<LogRecord>& r, double band) {
  std::size_t last_out = r.size();
  for (std::size_t k = r.size(); k-- > 0;) {
    if (r[k].e_pos_mm > band) {
      last_out = k;
      break;
    }
  }
  if (last_out == r.size()) return 0.0;
  if (last_out + 1 == r.size()) return std::nullopt;
  const double e0 = r[last_out].e_pos_mm, e1 = r[last_out + 1].e_pos_mm;
  const double u = (e0 - band) / (e0 - e1);
  return (r[last_out].t + u * (r[last_out + 1].t - r[last_out].t)) - r.front().t;
}

}  // namespace

TrackingMetrics step_metrics(const ScenarioRun& run, ScenarioKind kind, const MetricConfig& config) {
  if (kind != ScenarioKind::ReachInBore) {
    throw UnsupportedMetric("step metrics are defined for reach_in_bore only, not " + to_string(kind));
  }
  if (run.records.empty()) throw ValidationError("cannot compute metrics of an empty log");
  const auto& r = run.records;
  TrackingMetrics m;
  const double e0 = r.front().e_pos_mm;
  if (e0 <= 0) {
    m.rise_time_s = 0.0;
    m.settling_time_s = 0.0;
  } else {
    m.rise_time_s = first_crossing(r, config.rise_fraction * e0);
    m.settling_time_s = settling(r, config.settle_fraction * e0);
  }
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.steady_window * static_cast<double>(r.size()))));
  double pos = 0, ori = 0;
  for (std::size_t k = r.size() - window; k < r.size(); ++k) {
    pos += r[k].e_pos_mm;
    ori += r[k].e_ori_deg;
  }
  m.steady_state_pos_err_mm = pos / static_cast<double>(window);
  m.steady_state_ori_err_deg = ori / static_cast<double>(window);
  return m;
}

TrackingMetrics compute_metrics(const ScenarioRun& run, ScenarioKind kind, const MetricConfig& config) {
  if (run.records.empty()) throw ValidationError("cannot compute metrics of an empty log");
  TrackingMetrics m = kind == ScenarioKind::ReachInBore ? step_metrics(run, kind, config) : TrackingMetrics{};
  double pos = 0, ori = 0;
  for (const auto& rec : run.records) {
    pos += rec.e_pos_mm;
    ori += rec.e_ori_deg;
  }
  m.mean_pos_err_mm = pos / static_cast<double>(run.records.size());
  m.mean_ori_err_deg = ori / static_cast<double>(run.records.size());
  return m;
}

}  // namespace redik
