// Copyright 2026 The safefall Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "safefall/model/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "safefall/error.hpp"
#include "safefall/sim/dynamics.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

using json = nlohmann::json;

std::string_view to_string(Plane plane) {
  return plane == Plane::kSagittal ? "sagittal" : "frontal";
}

std::string_view to_string(JointGroup group) {
  switch (group) {
    case JointGroup::kWaist:
      return "waist";
    case JointGroup::kArm:
      return "arm";
    case JointGroup::kLeg:
      return "leg";
    case JointGroup::kOther:
      break;
  }
  return "other";
}

std::optional<std::size_t> RobotModel::find_link(std::string_view link_name) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].name == link_name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> RobotModel::find_joint(std::string_view joint_name) const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == joint_name) return i;
  }
  return std::nullopt;
}

std::size_t RobotModel::link_index(std::string_view link_name) const {
  if (auto i = find_link(link_name)) return *i;
  throw ValidationError("unknown link '" + std::string(link_name) + "'");
}

std::size_t RobotModel::joint_index(std::string_view joint_name) const {
  if (auto i = find_joint(joint_name)) return *i;
  throw ValidationError("unknown joint '" + std::string(joint_name) + "'");
}

std::optional<std::size_t> RobotModel::joint_of_link(std::size_t link) const {
  for (std::size_t j = 0; j < joints.size(); ++j) {
    if (joints[j].child == links[link].name) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> RobotModel::parent_of_link(std::size_t link) const {
  if (links[link].parent.empty()) return std::nullopt;
  return find_link(links[link].parent);
}

std::vector<std::size_t> RobotModel::critical_indices() const {
  std::vector<std::size_t> out;
  for (const auto& body : critical_bodies) out.push_back(link_index(body));
  return out;
}

std::vector<std::size_t> RobotModel::joints_in_group(JointGroup group) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < joints.size(); ++j) {
    if (joints[j].group == group) out.push_back(j);
  }
  return out;
}

namespace {

template <typename F>
Eigen::VectorXd collect(const std::vector<Joint>& joints, F field) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(joints.size()));
  for (std::size_t j = 0; j < joints.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = field(joints[j]);
  }
  return out;
}

}  // namespace

Eigen::VectorXd RobotModel::default_pose() const {
  return collect(joints, [](const Joint& j) { return j.default_angle; });
}
Eigen::VectorXd RobotModel::lower_limits() const {
  return collect(joints, [](const Joint& j) { return j.lower; });
}
Eigen::VectorXd RobotModel::upper_limits() const {
  return collect(joints, [](const Joint& j) { return j.upper; });
}
Eigen::VectorXd RobotModel::torque_limits() const {
  return collect(joints, [](const Joint& j) { return j.torque_limit; });
}
Eigen::VectorXd RobotModel::kp() const {
  return collect(joints, [](const Joint& j) { return j.kp; });
}
Eigen::VectorXd RobotModel::kd() const {
  return collect(joints, [](const Joint& j) { return j.kd; });
}

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const auto& link : links) m += link.mass;
  return m;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

void reject_unknown(const json& object, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!object.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& item : object.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return item.key() == a; });
    if (!known) throw ParseError(where + ": unknown field '" + item.key() + "'");
  }
}

const json& field(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& object, const char* key, const std::string& where) {
  const json& v = field(object, key, where);
  if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::string text(const json& object, const char* key, const std::string& where) {
  const json& v = field(object, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Eigen::Vector2d point(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParseError(where + ": expected [x, z]");
  }
  return Eigen::Vector2d(v[0].get<double>(), v[1].get<double>());
}

std::vector<std::string> names(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of names");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ParseError(where + ": expected a string");
    out.push_back(item.get<std::string>());
  }
  return out;
}

JointGroup parse_group(const std::string& s, const std::string& where) {
  if (s == "waist") return JointGroup::kWaist;
  if (s == "arm") return JointGroup::kArm;
  if (s == "leg") return JointGroup::kLeg;
  if (s == "other") return JointGroup::kOther;
  throw ParseError(where + ": unknown joint group '" + s + "'");
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

RobotModel load_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  reject_unknown(doc,
                 {"name", "kind", "plane", "base", "base_position", "links",
                  "joints", "critical_bodies", "ankle_bodies",
                  "contact_weights", "notes"},
                 "model");

  RobotModel model;
  model.name = text(doc, "name", "model");
  const std::string kind = doc.value("kind", std::string("humanoid"));
  if (kind == "humanoid") {
    model.kind = ModelKind::kHumanoid;
  } else if (kind == "generic") {
    model.kind = ModelKind::kGeneric;
  } else {
    throw ParseError("model.kind: unknown kind '" + kind + "'");
  }
  const std::string plane = text(doc, "plane", "model");
  if (plane == "sagittal") {
    model.plane = Plane::kSagittal;
  } else if (plane == "frontal") {
    model.plane = Plane::kFrontal;
  } else {
    throw ParseError("model.plane: unknown plane '" + plane + "'");
  }
  const std::string base = doc.value("base", std::string("floating"));
  if (base == "floating") {
    model.base = BaseType::kFloating;
  } else if (base == "fixed") {
    model.base = BaseType::kFixed;
  } else {
    throw ParseError("model.base: unknown base '" + base + "'");
  }
  if (doc.contains("base_position")) {
    model.base_position = point(doc["base_position"], "model.base_position");
  }
  if (doc.contains("notes")) model.notes = text(doc, "notes", "model");

  const json& links = field(doc, "links", "model");
  if (!links.is_array()) throw ParseError("model.links: expected an array");
  for (const auto& l : links) {
    const std::string where =
        "link '" + (l.is_object() ? l.value("name", std::string("?")) : "?") + "'";
    reject_unknown(l, {"name", "mass", "inertia", "length", "com",
                       "contact_points", "parent", "attach"},
                   where);
    Link link;
    link.name = text(l, "name", where);
    link.mass = number(l, "mass", where);
    link.inertia = number(l, "inertia", where);
    link.length = number(l, "length", where);
    link.com = point(field(l, "com", where), where + ".com");
    for (const auto& p : field(l, "contact_points", where)) {
      link.contact_points.push_back(point(p, where + ".contact_points"));
    }
    if (l.contains("parent") && !l["parent"].is_null()) {
      link.parent = text(l, "parent", where);
      link.attach = point(field(l, "attach", where), where + ".attach");
    }
    model.links.push_back(std::move(link));
  }

  const json& joints = field(doc, "joints", "model");
  if (!joints.is_array()) throw ParseError("model.joints: expected an array");
  for (const auto& j : joints) {
    const std::string where =
        "joint '" + (j.is_object() ? j.value("name", std::string("?")) : "?") + "'";
    reject_unknown(j, {"name", "parent", "child", "lower", "upper",
                       "torque_limit", "default", "kp", "kd", "axis", "group"},
                   where);
    Joint joint;
    joint.name = text(j, "name", where);
    joint.parent = text(j, "parent", where);
    joint.child = text(j, "child", where);
    joint.lower = number(j, "lower", where);
    joint.upper = number(j, "upper", where);
    joint.torque_limit = number(j, "torque_limit", where);
    joint.default_angle = number(j, "default", where);
    joint.kp = number(j, "kp", where);
    joint.kd = number(j, "kd", where);
    if (j.contains("axis")) joint.axis = number(j, "axis", where);
    joint.group = parse_group(j.value("group", std::string("other")), where);
    model.joints.push_back(std::move(joint));
  }

  model.critical_bodies = names(doc.value("critical_bodies", json::array()),
                                "model.critical_bodies");
  model.ankle_bodies =
      names(doc.value("ankle_bodies", json::array()), "model.ankle_bodies");

  const json weights = doc.value("contact_weights", json::object());
  if (!weights.is_object()) throw ParseError("model.contact_weights: expected an object");
  for (const auto& item : weights.items()) {
    if (!model.find_link(item.key())) {
      throw ValidationError("contact_weights: unknown body '" + item.key() + "'");
    }
    if (!item.value().is_number()) {
      throw ParseError("contact_weights." + item.key() + ": expected a number");
    }
  }
  for (const auto& link : model.links) {
    auto it = weights.find(link.name);
    if (it == weights.end()) {
      throw ValidationError("contact_weights: missing weight for body '" +
                            link.name + "'");
    }
    model.contact_weights.push_back(it->get<double>());
  }

  validate_model(model);
  return model;
}

RobotModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_model(buffer.str());
}

void validate_model(const RobotModel& model) {
  if (model.links.empty()) throw ValidationError("model has no links");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    const std::string where = "link '" + link.name + "'";
    if (link.name.empty()) throw ValidationError("link with empty name");
    if (!seen.insert(link.name).second) {
      throw ValidationError("duplicate link name '" + link.name + "'");
    }
    if (!(link.mass > 0.0) || !finite(link.mass)) {
      throw ValidationError(where + ": mass must be > 0");
    }
    if (!(link.inertia > 0.0) || !finite(link.inertia)) {
      throw ValidationError(where + ": inertia must be > 0");
    }
    if (!(link.length >= 0.0) || !finite(link.length)) {
      throw ValidationError(where + ": length must be >= 0");
    }
    if (i == 0) {
      if (!link.parent.empty()) {
        throw ValidationError(where + ": first link must be the root (no parent)");
      }
    } else {
      if (link.parent.empty()) {
        throw ValidationError(where + ": only the first link may be a root; "
                                      "the link graph must be a single tree");
      }
      auto parent = model.find_link(link.parent);
      if (!parent || *parent >= i) {
        throw ValidationError(where + ": parent '" + link.parent +
                              "' must be listed before its child");
      }
    }
  }
  if (model.kind == ModelKind::kHumanoid) {
    if (model.links[0].name != "pelvis") {
      throw ValidationError("link graph must be rooted at 'pelvis'");
    }
    if (model.base != BaseType::kFloating) {
      throw ValidationError("humanoid models need a floating base");
    }
  }

  std::set<std::string> joint_names;
  std::set<std::string> driven_children;
  for (const Joint& joint : model.joints) {
    const std::string where = "joint '" + joint.name + "'";
    if (!joint_names.insert(joint.name).second) {
      throw ValidationError("duplicate joint name '" + joint.name + "'");
    }
    auto child = model.find_link(joint.child);
    if (!child) throw ValidationError(where + ": unknown child link '" + joint.child + "'");
    if (model.links[*child].parent != joint.parent) {
      throw ValidationError(where + ": parent '" + joint.parent +
                            "' does not match the parent of link '" +
                            joint.child + "'");
    }
    if (!driven_children.insert(joint.child).second) {
      throw ValidationError(where + ": link '" + joint.child +
                            "' is driven by more than one joint");
    }
    if (!(joint.lower < joint.upper)) {
      throw ValidationError(where + ": requires q_l < q_u");
    }
    if (!(joint.torque_limit > 0.0)) {
      throw ValidationError(where + ": torque limit must be > 0");
    }
    if (joint.default_angle < joint.lower || joint.default_angle > joint.upper) {
      throw ValidationError(where + ": default angle outside [q_l, q_u]");
    }
    if (!(joint.kp > 0.0) || !(joint.kd > 0.0)) {
      throw ValidationError(where + ": PD gains must be > 0");
    }
    if (joint.axis != 1.0 && joint.axis != -1.0) {
      throw ValidationError(where + ": axis must be +1 or -1");
    }
    for (double v : {joint.lower, joint.upper, joint.torque_limit,
                     joint.default_angle, joint.kp, joint.kd}) {
      if (!finite(v)) throw ValidationError(where + ": non-finite parameter");
    }
  }

  if (model.contact_weights.size() != model.links.size()) {
    throw ValidationError("contact_weights must have one entry per body");
  }
  for (std::size_t i = 0; i < model.contact_weights.size(); ++i) {
    if (!(model.contact_weights[i] >= 0.0)) {
      throw ValidationError("contact_weights: weight of '" + model.links[i].name +
                            "' must be >= 0");
    }
  }

  for (const auto& body : model.critical_bodies) {
    if (!model.find_link(body)) {
      throw ValidationError("critical_bodies: unknown body '" + body + "'");
    }
  }
  for (const auto& body : model.ankle_bodies) {
    if (!model.find_link(body)) {
      throw ValidationError("ankle_bodies: unknown body '" + body + "'");
    }
  }

  if (model.kind == ModelKind::kHumanoid) {
    const std::set<std::string> critical(model.critical_bodies.begin(),
                                         model.critical_bodies.end());
    for (const char* required : {"head", "torso", "pelvis"}) {
      if (!critical.count(required)) {
        throw ValidationError(std::string("critical_bodies must contain '") +
                              required + "'");
      }
    }
    if (critical.size() != 3 || model.critical_bodies.size() != 3) {
      throw ValidationError(
          "critical_bodies must be exactly {head, torso, pelvis}");
    }
    if (model.ankle_bodies.empty()) {
      throw ValidationError("ankle_bodies: humanoid models must name the ankle bodies");
    }
    double max_ankle = 0.0;
    double min_other = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.links.size(); ++i) {
      const bool ankle =
          std::find(model.ankle_bodies.begin(), model.ankle_bodies.end(),
                    model.links[i].name) != model.ankle_bodies.end();
      if (ankle) {
        max_ankle = std::max(max_ankle, model.contact_weights[i]);
      } else {
        min_other = std::min(min_other, model.contact_weights[i]);
      }
    }
    if (!(max_ankle < min_other)) {
      throw ValidationError(
          "contact_weights: ankle bodies must be weighted below every other body");
    }
  }
}

std::string save_model(const RobotModel& model) {
  json doc;
  doc["name"] = model.name;
  doc["kind"] = model.kind == ModelKind::kHumanoid ? "humanoid" : "generic";
  doc["plane"] = std::string(to_string(model.plane));
  doc["base"] = model.base == BaseType::kFloating ? "floating" : "fixed";
  doc["base_position"] = {model.base_position.x(), model.base_position.y()};
  if (!model.notes.empty()) doc["notes"] = model.notes;
  json links = json::array();
  for (const auto& link : model.links) {
    json l;
    l["name"] = link.name;
    l["mass"] = link.mass;
    l["inertia"] = link.inertia;
    l["length"] = link.length;
    l["com"] = {link.com.x(), link.com.y()};
    json points = json::array();
    for (const auto& p : link.contact_points) points.push_back({p.x(), p.y()});
    l["contact_points"] = points;
    if (link.parent.empty()) {
      l["parent"] = nullptr;
    } else {
      l["parent"] = link.parent;
      l["attach"] = {link.attach.x(), link.attach.y()};
    }
    links.push_back(l);
  }
  doc["links"] = links;
  json joints = json::array();
  for (const auto& joint : model.joints) {
    json j;
    j["name"] = joint.name;
    j["parent"] = joint.parent;
    j["child"] = joint.child;
    j["lower"] = joint.lower;
    j["upper"] = joint.upper;
    j["torque_limit"] = joint.torque_limit;
    j["default"] = joint.default_angle;
    j["kp"] = joint.kp;
    j["kd"] = joint.kd;
    j["axis"] = joint.axis;
    j["group"] = std::string(to_string(joint.group));
    joints.push_back(j);
  }
  doc["joints"] = joints;
  doc["critical_bodies"] = model.critical_bodies;
  doc["ankle_bodies"] = model.ankle_bodies;
  json weights = json::object();
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    weights[model.links[i].name] = model.contact_weights[i];
  }
  doc["contact_weights"] = weights;
  return doc.dump(2);
}

void place_on_ground(SimState& state, const RobotModel& model) {
  if (model.base == BaseType::kFixed) return;
  const auto n = static_cast<Eigen::Index>(model.dof());
  PlanarTree tree(model, 0.0);
  Eigen::VectorXd position = Eigen::VectorXd::Zero(tree.dof());
  position[2] = state.root_pose.z();
  position.tail(n) = state.q;
  tree.update(position, Eigen::VectorXd::Zero(tree.dof()));
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    for (const auto& p : model.links[i].contact_points) {
      lowest = std::min(lowest, tree.frame(i).to_world(p).y());
    }
  }
  if (!std::isfinite(lowest)) lowest = 0.0;
  state.root_pose.y() = -lowest;
}

SimState default_state(const RobotModel& model) {
  SimState state;
  const auto n = static_cast<Eigen::Index>(model.dof());
  state.q = model.default_pose();
  state.qd = Eigen::VectorXd::Zero(n);
  state.contact_forces = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(model.body_count()));
  state.failure_mask.assign(model.dof(), false);
  state.sim_time = 0.0;
  if (model.base == BaseType::kFixed) {
    state.root_pose << model.base_position.x(), model.base_position.y(), 0.0;
    return state;
  }
  state.root_pose.setZero();
  place_on_ground(state, model);
  return state;
}

}  // namespace safefall
