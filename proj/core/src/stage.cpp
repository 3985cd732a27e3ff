#include "stagetrack/stage.hpp"

#include <fstream>
#include <set>

#include "stagetrack/error.hpp"

namespace stagetrack {

using nlohmann::json;

namespace {

Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be [x, y, z]");
  }
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

ZoneDef parse_zone(const json& z) {
  ZoneDef zone;
  zone.id = z.at("id").get<std::string>();
  zone.center = Vec3{z.at("x_m").get<double>(), z.at("y_m").get<double>(), z.value("z_m", 0.0)};
  zone.outer_half = z.value("outer_half_m", zone.outer_half);
  zone.exit_half = z.value("exit_half_m", zone.exit_half);
  zone.dwell_frames = z.value("dwell_frames", zone.dwell_frames);
  return zone;
}

SceneDef parse_scene(const json& s) {
  SceneDef scene;
  scene.id = s.at("id").get<std::string>();
  scene.next = s.value("next", std::string(kEndScene));
  for (const json& r : s.value("requirements", json::array())) {
    SceneRequirement req;
    req.zone_id = r.at("zone").get<std::string>();
    const json& tag = r.contains("tag") ? r.at("tag") : json("any");
    if (tag.is_string()) {
      if (tag.get<std::string>() != "any") {
        throw Error(ErrorCode::InvalidConfig, "tag constraint must be a tag id or \"any\"");
      }
    } else {
      req.tag = tag.get<TagId>();
    }
    scene.requirements.push_back(std::move(req));
  }
  return scene;
}

}  // namespace

void StageConfig::validate() const {
  if (!(width > 0.0 && depth > 0.0)) throw Error(ErrorCode::InvalidConfig, "stage width/depth must be > 0");
  if (anchors.size() < 3) throw Error(ErrorCode::InvalidConfig, "at least 3 anchors are required");
  std::set<AnchorId> ids;
  for (const Anchor& a : anchors) {
    if (!ids.insert(a.id).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate anchor id " + std::to_string(a.id));
    }
    if (!a.position.allFinite()) throw Error(ErrorCode::InvalidConfig, "anchor position not finite");
    if (!(a.max_range >= 0.0)) throw Error(ErrorCode::InvalidConfig, "anchor max_range must be >= 0");
  }
  for (const Box& b : occluders) {
    if (!b.valid()) throw Error(ErrorCode::InvalidConfig, "occluder min must be <= max per axis");
  }
  std::set<std::string> zone_names;
  for (const ZoneDef& z : zones) {
    z.validate();
    if (!zone_names.insert(z.id).second) throw Error(ErrorCode::InvalidConfig, "duplicate zone id " + z.id);
  }
  // Scene graph checks live in Show's constructor.
  if (!scenes.empty()) Show(scenes, zone_ids());
}

std::vector<Vec3> StageConfig::anchor_positions() const {
  std::vector<Vec3> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) out.push_back(a.position);
  return out;
}

std::vector<std::string> StageConfig::zone_ids() const {
  std::vector<std::string> out;
  for (const ZoneDef& z : zones) out.push_back(z.id);
  return out;
}

const Anchor* StageConfig::find_anchor(AnchorId id) const {
  for (const Anchor& a : anchors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

StageConfig parse_stage_config(const json& doc) {
  StageConfig cfg;
  try {
    if (doc.contains("stage")) {
      const json& s = doc.at("stage");
      cfg.width = s.value("width_m", cfg.width);
      cfg.depth = s.value("depth_m", cfg.depth);
      cfg.tag_height = s.value("tag_height_m", cfg.tag_height);
    }
    for (const json& a : doc.value("anchors", json::array())) {
      Anchor anchor;
      anchor.id = a.at("id").get<AnchorId>();
      anchor.position = Vec3{a.at("x_m").get<double>(), a.at("y_m").get<double>(), a.value("z_m", 3.0)};
      anchor.max_range = a.value("max_range_m", anchor.max_range);
      cfg.anchors.push_back(anchor);
    }
    for (const json& o : doc.value("occluders", json::array())) {
      cfg.occluders.push_back(Box{parse_vec3(o.at("min"), "occluder min"), parse_vec3(o.at("max"), "occluder max")});
    }
    for (const json& z : doc.value("zones", json::array())) cfg.zones.push_back(parse_zone(z));
    for (const json& s : doc.value("scenes", json::array())) cfg.scenes.push_back(parse_scene(s));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

StageConfig load_stage_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_stage_config(doc);
}

json to_json(const StageConfig& stage) {
  json doc;
  doc["stage"] = {{"width_m", stage.width}, {"depth_m", stage.depth}, {"tag_height_m", stage.tag_height}};
  doc["anchors"] = json::array();
  for (const Anchor& a : stage.anchors) {
    doc["anchors"].push_back({{"id", a.id},
                              {"x_m", a.position.x()},
                              {"y_m", a.position.y()},
                              {"z_m", a.position.z()},
                              {"max_range_m", a.max_range}});
  }
  doc["occluders"] = json::array();
  for (const Box& b : stage.occluders) doc["occluders"].push_back({{"min", vec3_json(b.min)}, {"max", vec3_json(b.max)}});
  doc["zones"] = json::array();
  for (const ZoneDef& z : stage.zones) {
    doc["zones"].push_back({{"id", z.id},
                            {"x_m", z.center.x()},
                            {"y_m", z.center.y()},
                            {"outer_half_m", z.outer_half},
                            {"exit_half_m", z.exit_half},
                            {"dwell_frames", z.dwell_frames}});
  }
  doc["scenes"] = json::array();
  for (const SceneDef& s : stage.scenes) {
    json reqs = json::array();
    for (const SceneRequirement& r : s.requirements) {
      reqs.push_back({{"zone", r.zone_id}, {"tag", r.tag ? json(*r.tag) : json("any")}});
    }
    doc["scenes"].push_back({{"id", s.id}, {"requirements", reqs}, {"next", s.next}});
  }
  return doc;
}

std::vector<Anchor> centered_rectangle_anchors(double stage_width, double stage_depth, double rect_w,
                                               double rect_h, double height, double max_range) {
  const double cx = 0.5 * stage_width;
  const double cy = 0.5 * stage_depth;
  const double hw = 0.5 * rect_w;
  const double hh = 0.5 * rect_h;
  return {
      Anchor{1, Vec3{cx - hw, cy - hh, height}, max_range},
      Anchor{2, Vec3{cx + hw, cy - hh, height}, max_range},
      Anchor{3, Vec3{cx + hw, cy + hh, height}, max_range},
      Anchor{4, Vec3{cx - hw, cy + hh, height}, max_range},
  };
}

}  // namespace stagetrack
