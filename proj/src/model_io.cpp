#include "redik/model_io.hpp"

#include <Eigen/LU>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef REDIK_DEFAULT_MODEL
#define REDIK_DEFAULT_MODEL "models/default.json"
#endif

namespace redik {

using nlohmann::json;

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

double number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ParseError(path + ": expected a number");
  return node.get<double>();
}

Eigen::Vector3d vec3(const json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 3) throw ParseError(path + ": expected an array of 3 numbers");
  return {number(node[0], path + "[0]"), number(node[1], path + "[1]"), number(node[2], path + "[2]")};
}

Eigen::VectorXd vecx(const json& node, const std::string& path) {
  if (!node.is_array()) throw ParseError(path + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number(node[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

const json& field(const json& node, const char* key, const std::string& path) {
  if (!node.is_object() || !node.contains(key)) throw ParseError(path + ": missing field '" + key + "'");
  return node.at(key);
}

Posed pose_from(const json& node, const std::string& path) {
  Posed pose;
  pose.p = vec3(field(node, "xyz", path), path + ".xyz");
  pose.R = rpy_to_rotation<double>(vec3(field(node, "rpy", path), path + ".rpy"));
  return pose;
}

json pose_to(const Posed& pose) {
  const Eigen::Vector3d rpy = rotation_to_rpy<double>(pose.R);
  return {{"xyz", {pose.p.x(), pose.p.y(), pose.p.z()}}, {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
}

JointSpec<double> joint_from(const json& node, const std::string& path) {
  JointSpec<double> j;
  const json& name = field(node, "name", path);
  if (!name.is_string()) throw ParseError(path + ".name: expected a string");
  j.name = name.get<std::string>();

  const json& kind = field(node, "kind", path);
  if (kind == "revolute") {
    j.kind = JointKind::Revolute;
  } else if (kind == "prismatic") {
    j.kind = JointKind::Prismatic;
  } else {
    throw ParseError(path + ".kind: expected \"revolute\" or \"prismatic\"");
  }
  j.axis = vec3(field(node, "axis", path), path + ".axis");
  j.origin.p = vec3(field(node, "origin_xyz", path), path + ".origin_xyz");
  j.origin.R = rpy_to_rotation<double>(vec3(field(node, "origin_rpy", path), path + ".origin_rpy"));

  const json& limits = field(node, "limits", path);
  if (!limits.is_array() || limits.size() != 2) throw ParseError(path + ".limits: expected [lo, hi]");
  j.lower = number(limits[0], path + ".limits[0]");
  j.upper = number(limits[1], path + ".limits[1]");
  j.velocity_limit = number(field(node, "vel_limit", path), path + ".vel_limit");
  return j;
}

}  // namespace

RobotModel load_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("model document line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }

  RobotModel model;
  const json& name = field(doc, "name", "model");
  if (!name.is_string()) throw ParseError("model.name: expected a string");
  model.chain.name = name.get<std::string>();

  const json& joints = field(doc, "joints", "model");
  if (!joints.is_array() || joints.empty()) throw ParseError("model.joints: expected a non-empty array");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    model.chain.joints.push_back(joint_from(joints[i], "joints[" + std::to_string(i) + "]"));
  }
  model.chain.tool_offset = pose_from(field(doc, "tool_offset", "model"), "tool_offset");
  validate(model.chain);

  const auto n = model.chain.size();
  const auto n_active = static_cast<Eigen::Index>(model.chain.active_joints().size());

  if (doc.contains("coupling")) {
    const json& rows = doc.at("coupling");
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
      throw ParseError("coupling: expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    model.coupling.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::VectorXd row = vecx(rows[r], "coupling[" + std::to_string(r) + "]");
      if (row.size() != n) throw ParseError("coupling[" + std::to_string(r) + "]: expected " + std::to_string(n) + " entries");
      model.coupling.row(r) = row.transpose();
    }
    if (Eigen::FullPivLU<Eigen::MatrixXd>(model.coupling).rank() < n) {
      throw ValidationError("coupling matrix is singular");
    }
  } else {
    model.coupling = Eigen::MatrixXd::Identity(n, n);
  }

  model.base_joint_count = n_active;
  if (doc.contains("base_joint_count")) {
    const json& b = doc.at("base_joint_count");
    if (!b.is_number_integer() || b.get<long>() < 0 || b.get<long>() > n_active) {
      throw ParseError("base_joint_count: expected an integer in [0, " + std::to_string(n_active) + "]");
    }
    model.base_joint_count = b.get<Eigen::Index>();
  }

  model.inbore_q = Eigen::VectorXd::Zero(n);
  if (doc.contains("inbore_q")) {
    model.inbore_q = vecx(doc.at("inbore_q"), "inbore_q");
    if (model.inbore_q.size() != n) throw ParseError("inbore_q: expected " + std::to_string(n) + " entries");
  }
  if (doc.contains("home_pose")) model.home_pose = pose_from(doc.at("home_pose"), "home_pose");
  if (doc.contains("inbore_pose")) model.inbore_pose = pose_from(doc.at("inbore_pose"), "inbore_pose");
  return model;
}

Chain load_chain(const std::string& text) { return load_model(text).chain; }

RobotModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("model not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string dump_model(const RobotModel& model) {
  json doc;
  doc["name"] = model.chain.name;
  doc["joints"] = json::array();
  for (const auto& j : model.chain.joints) {
    const Eigen::Vector3d rpy = rotation_to_rpy<double>(j.origin.R);
    doc["joints"].push_back({{"name", j.name},
                             {"kind", j.kind == JointKind::Revolute ? "revolute" : "prismatic"},
                             {"axis", {j.axis.x(), j.axis.y(), j.axis.z()}},
                             {"origin_xyz", {j.origin.p.x(), j.origin.p.y(), j.origin.p.z()}},
                             {"origin_rpy", {rpy.x(), rpy.y(), rpy.z()}},
                             {"limits", {j.lower, j.upper}},
                             {"vel_limit", j.velocity_limit}});
  }
  doc["tool_offset"] = pose_to(model.chain.tool_offset);
  json coupling = json::array();
  for (Eigen::Index r = 0; r < model.coupling.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.coupling.cols(); ++c) row.push_back(model.coupling(r, c));
    coupling.push_back(std::move(row));
  }
  doc["coupling"] = coupling;
  doc["base_joint_count"] = model.base_joint_count;
  doc["inbore_q"] = std::vector<double>(model.inbore_q.data(), model.inbore_q.data() + model.inbore_q.size());
  if (model.home_pose) doc["home_pose"] = pose_to(*model.home_pose);
  if (model.inbore_pose) doc["inbore_pose"] = pose_to(*model.inbore_pose);
  return doc.dump(2);
}

std::filesystem::path default_model_path() { return REDIK_DEFAULT_MODEL; }

std::filesystem::path resolve_model_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* env = std::getenv("REDIK_MODEL"); env != nullptr && *env != '\0') return env;
  return default_model_path();
}

}  // namespace redik
