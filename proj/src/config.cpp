#include "lcdog/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace lcdog {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

double number(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(std::string(where) + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

Vec2 vec2(const json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string(where) + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec2 vec2(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing '" + key + "'");
  return vec2(j.at(key), std::string(where) + "." + key);
}

Vec2 unit(Vec2 d, std::string_view where) {
  const double n = d.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError(std::string(where) + ": direction must be non-zero");
  return (1.0 / n) * d;
}

// A covariance is either a scalar standard deviation (isotropic) or [xx, xy, yy].
Cov2 covariance(const json& j, std::string_view where) {
  if (j.is_number()) return Cov2::isotropic(j.get<double>());
  if (j.is_array() && j.size() == 3 && j[0].is_number() && j[1].is_number() && j[2].is_number()) {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
  throw ConfigError(std::string(where) + ": expected a sigma or [xx, xy, yy]");
}

json cov_json(const Cov2& c) { return json::array({c.xx, c.xy, c.yy}); }
json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

Shape parse_shape(const json& j, std::string_view where) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError(std::string(where) + ": missing type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "rect") {
    check_keys(j, where, {"type", "width", "height"});
    return RectShape{number(j, "width", where), number(j, "height", where)};
  }
  if (type == "circle") {
    check_keys(j, where, {"type", "radius"});
    return CircleShape{number(j, "radius", where)};
  }
  throw ConfigError(std::string(where) + ": unknown shape type '" + type + "'");
}

Trajectory parse_trajectory(const json& j, std::string_view where) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError(std::string(where) + ": missing type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "static") {
    check_keys(j, where, {"type", "position"});
    return StaticPose{vec2(j, "position", where)};
  }
  if (type == "harmonic") {
    check_keys(j, where, {"type", "center", "amplitude", "frequency", "phase", "direction"});
    Harmonic h{vec2(j, "center", where), number(j, "amplitude", where), number(j, "frequency", where), 0.0,
               unit(vec2(j, "direction", where), where)};
    read(j, "phase", h.phase, where);
    return h;
  }
  if (type == "sinusoid") {
    check_keys(j, where, {"type", "start", "direction", "speed", "lateral_amplitude", "lateral_frequency", "travel"});
    Sinusoid s{vec2(j, "start", where), unit(vec2(j, "direction", where), where), number(j, "speed", where),
               0.0, 0.0, 0.0};
    read(j, "lateral_amplitude", s.lateral_amplitude, where);
    read(j, "lateral_frequency", s.lateral_frequency, where);
    read(j, "travel", s.travel, where);
    return s;
  }
  if (type == "brownian") {
    check_keys(j, where, {"type", "start", "sigma", "lo", "hi"});
    return Brownian{vec2(j, "start", where), number(j, "sigma", where), vec2(j, "lo", where), vec2(j, "hi", where)};
  }
  throw ConfigError(std::string(where) + ": unknown motion type '" + type + "'");
}

json shape_json(const Shape& s) {
  return std::visit(overloaded{[](const RectShape& r) {
                                 return json{{"type", "rect"}, {"width", r.width}, {"height", r.height}};
                               },
                               [](const CircleShape& c) { return json{{"type", "circle"}, {"radius", c.radius}}; }},
                    s);
}

json trajectory_json(const Trajectory& t) {
  return std::visit(
      overloaded{[](const StaticPose& s) { return json{{"type", "static"}, {"position", vec_json(s.position)}}; },
                 [](const Harmonic& h) {
                   return json{{"type", "harmonic"},   {"center", vec_json(h.center)},
                               {"amplitude", h.amplitude}, {"frequency", h.frequency},
                               {"phase", h.phase},         {"direction", vec_json(h.direction)}};
                 },
                 [](const Sinusoid& s) {
                   return json{{"type", "sinusoid"},
                               {"start", vec_json(s.start)},
                               {"direction", vec_json(s.direction)},
                               {"speed", s.speed},
                               {"lateral_amplitude", s.lateral_amplitude},
                               {"lateral_frequency", s.lateral_frequency},
                               {"travel", s.travel}};
                 },
                 [](const Brownian& b) {
                   return json{{"type", "brownian"}, {"start", vec_json(b.start)}, {"sigma", b.sigma},
                               {"lo", vec_json(b.lo)},  {"hi", vec_json(b.hi)}};
                 }},
      t);
}

RunConfig from_json(const json& root) {
  RunConfig c;
  check_keys(root, "config", {"geometry", "motion", "sensor", "bandit", "scene", "run", "async"});

  if (root.contains("geometry")) {
    const json& g = root.at("geometry");
    check_keys(g, "geometry", {"width_cells", "height_cells", "cell_size", "origin", "sensor_pos", "fov_deg",
                               "num_rays", "r_min", "r_max"});
    read(g, "width_cells", c.geometry.width_cells, "geometry");
    read(g, "height_cells", c.geometry.height_cells, "geometry");
    read(g, "cell_size", c.geometry.cell_size, "geometry");
    if (g.contains("origin")) c.geometry.origin = vec2(g.at("origin"), "geometry.origin");
    if (g.contains("sensor_pos")) c.geometry.sensor_pos = vec2(g.at("sensor_pos"), "geometry.sensor_pos");
    if (g.contains("fov_deg")) c.geometry.fov = number(g, "fov_deg", "geometry") * std::numbers::pi / 180.0;
    read(g, "num_rays", c.geometry.num_rays, "geometry");
    read(g, "r_min", c.geometry.r_min, "geometry");
    read(g, "r_max", c.geometry.r_max, "geometry");
  }

  if (root.contains("motion")) {
    const json& m = root.at("motion");
    check_keys(m, "motion", {"dt", "vel_noise", "pos_noise", "birth_prob", "birth_vel_sigma", "occ_floor",
                             "occ_ceiling", "particles", "torus"});
    read(m, "dt", c.motion.dt, "motion");
    if (m.contains("vel_noise")) {
      c.motion.vel_noise = covariance(m.at("vel_noise"), "motion.vel_noise");
      c.vel_noise_set = true;
    }
    if (m.contains("pos_noise")) {
      c.motion.pos_noise = covariance(m.at("pos_noise"), "motion.pos_noise");
      c.pos_noise_set = true;
    }
    read(m, "birth_prob", c.motion.birth_prob, "motion");
    read(m, "birth_vel_sigma", c.motion.birth_vel_sigma, "motion");
    read(m, "occ_floor", c.motion.occ_floor, "motion");
    read(m, "occ_ceiling", c.motion.occ_ceiling, "motion");
    read(m, "particles", c.particles, "motion");
    read(m, "torus", c.motion.torus, "motion");
  }

  if (root.contains("sensor")) {
    const json& s = root.at("sensor");
    check_keys(s, "sensor", {"false_positive", "false_negative", "lidar_every"});
    read(s, "false_positive", c.noise.false_positive, "sensor");
    read(s, "false_negative", c.noise.false_negative, "sensor");
    read(s, "lidar_every", c.lidar_every, "sensor");
  }

  if (root.contains("bandit")) {
    const json& b = root.at("bandit");
    check_keys(b, "bandit", {"epsilon", "alpha", "q0"});
    read(b, "epsilon", c.bandit.epsilon, "bandit");
    read(b, "alpha", c.bandit.alpha, "bandit");
    read(b, "q0", c.bandit.q0, "bandit");
  }

  if (root.contains("scene")) {
    const json& s = root.at("scene");
    if (s.is_string()) {
      c.scene_preset = s.get<std::string>();
      if (c.scene_preset != "sim-default" && c.scene_preset != "empty") {
        throw ConfigError("scene: unknown preset '" + c.scene_preset + "'");
      }
    } else {
      check_keys(s, "scene", {"objects"});
      if (!s.contains("objects") || !s.at("objects").is_array()) throw ConfigError("scene: objects must be an array");
      c.scene_preset = "custom";
      std::size_t k = 0;
      for (const json& o : s.at("objects")) {
        const std::string where = "scene.objects[" + std::to_string(k++) + "]";
        check_keys(o, where, {"shape", "motion"});
        if (!o.contains("shape") || !o.contains("motion")) throw ConfigError(where + ": needs shape and motion");
        try {
          c.scene_objects.emplace_back(parse_shape(o.at("shape"), where + ".shape"),
                                       parse_trajectory(o.at("motion"), where + ".motion"));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(where + ": " + e.what());
        } catch (const json::exception& e) {
          throw ConfigError(where + ": " + e.what());
        }
      }
    }
  }

  if (root.contains("run")) {
    const json& r = root.at("run");
    check_keys(r, "run", {"policy", "steps", "eval_horizon", "eval_every", "eval_start", "seed", "mode",
                          "random_fill", "snapshot_every", "out"});
    if (r.contains("policy")) c.policy = parse_policy(r.at("policy").get<std::string>());
    read(r, "steps", c.steps, "run");
    read(r, "eval_horizon", c.eval_horizon, "run");
    read(r, "eval_every", c.eval_every, "run");
    read(r, "eval_start", c.eval_start, "run");
    if (r.contains("seed")) {
      const json& s = r.at("seed");
      if (s.is_number_unsigned()) {
        c.seed = s.get<std::uint64_t>();
      } else if (s.is_string()) {
        c.seed = std::stoull(s.get<std::string>());
      } else {
        throw ConfigError("run.seed: expected a non-negative integer");
      }
    }
    if (r.contains("mode")) c.mode = parse_mode(r.at("mode").get<std::string>());
    read(r, "random_fill", c.random_fill, "run");
    read(r, "snapshot_every", c.snapshot_every, "run");
    if (r.contains("out")) c.out = r.at("out").get<std::string>();
  }

  if (root.contains("async")) {
    const json& a = root.at("async");
    check_keys(a, "async", {"imaging_hz", "filter_hz", "placement_hz", "placement_stall_ms", "observation_queue"});
    read(a, "imaging_hz", c.async.imaging_hz, "async");
    read(a, "filter_hz", c.async.filter_hz, "async");
    read(a, "placement_hz", c.async.placement_hz, "async");
    read(a, "placement_stall_ms", c.async.placement_stall_ms, "async");
    read(a, "observation_queue", c.async.observation_queue, "async");
  }
  c.validate();
  return c;
}

}  // namespace

std::string policy_name(const Policy& p) {
  switch (p.kind) {
    case PolicyKind::Fixed: return std::string(strategy_name(p.strategy));
    case PolicyKind::Random: return "random";
    case PolicyKind::Lidar: return "lidar";
    case PolicyKind::Mab: return "mab";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  if (auto s = parse_strategy(name)) return {PolicyKind::Fixed, *s};
  if (name == "random") return {PolicyKind::Random, StrategyId::DepthProb};
  if (name == "lidar") return {PolicyKind::Lidar, StrategyId::DepthProb};
  if (name == "mab") return {PolicyKind::Mab, StrategyId::DepthProb};
  throw ConfigError("unknown policy '" + std::string(name) + "' (depth|occ|vel|cmb|random|lidar|mab)");
}

std::string_view mode_name(RunMode m) { return m == RunMode::Sync ? "sync" : "async"; }

RunMode parse_mode(std::string_view name) {
  if (name == "sync") return RunMode::Sync;
  if (name == "async") return RunMode::Async;
  throw ConfigError("unknown mode '" + std::string(name) + "' (sync|async)");
}

void RunConfig::validate() const {
  try {
    const GridGeometry geom = make_geometry();
    motion_model().validate();
    noise.validate();
    bandit.validate();
    make_scene(geom);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (particles < 1) throw ConfigError("motion.particles must be >= 1");
  if (lidar_every < 1) throw ConfigError("sensor.lidar_every must be >= 1");
  if (steps < 1) throw ConfigError("run.steps must be >= 1");
  if (eval_every < 1) throw ConfigError("run.eval_every must be >= 1");
  if (eval_start < 0) throw ConfigError("run.eval_start must be >= 0");
  if (snapshot_every < 0) throw ConfigError("run.snapshot_every must be >= 0");
  eval_horizon_steps();
  if (async.imaging_hz < 0 || async.filter_hz < 0 || async.placement_hz < 0 || async.placement_stall_ms < 0) {
    throw ConfigError("async rates and stall must be >= 0");
  }
  if (async.observation_queue < 1) throw ConfigError("async.observation_queue must be >= 1");
}

GridGeometry RunConfig::make_geometry() const {
  try {
    return GridGeometry(geometry);
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
}

MotionModel RunConfig::motion_model() const {
  MotionModel m = motion;
  if (!vel_noise_set) m.vel_noise = MotionModel::default_vel_noise(m.dt);
  if (!pos_noise_set) m.pos_noise = MotionModel::default_pos_noise(geometry.cell_size, m.dt);
  return m;
}

Scene RunConfig::make_scene(const GridGeometry& geom) const {
  if (scene_preset == "sim-default") return sim_default_scene(geom);
  Scene s;
  if (scene_preset == "empty") return s;
  const Vec2 lo = geom.origin();
  const Vec2 hi = lo + geom.extent();
  for (const SceneObject& o : scene_objects) {
    if (const auto* b = std::get_if<Brownian>(&o.trajectory())) {
      if (b->lo.x < lo.x || b->lo.y < lo.y || b->hi.x > hi.x || b->hi.y > hi.y) {
        throw ConfigError("scene: brownian bounds must lie inside the grid");
      }
    }
  }
  s.objects = scene_objects;
  return s;
}

int RunConfig::eval_horizon_steps() const {
  const double k = std::round(eval_horizon / motion.dt);
  if (!(eval_horizon > 0.0) || k < 1.0 || std::abs(k * motion.dt - eval_horizon) > 1e-9 * std::max(1.0, eval_horizon)) {
    throw ConfigError("run.eval_horizon must be a positive whole multiple of motion.dt");
  }
  return static_cast<int>(k);
}

RunConfig config_from_json_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return from_json(root);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const RunConfig& c) {
  const GridGeometry geom = c.make_geometry();
  const MotionModel m = c.motion_model();
  json scene;
  if (c.scene_preset == "custom") {
    scene = json{{"objects", json::array()}};
    for (const SceneObject& o : c.scene_objects) {
      scene["objects"].push_back({{"shape", shape_json(o.shape())}, {"motion", trajectory_json(o.trajectory())}});
    }
  } else {
    scene = c.scene_preset;
  }
  json root = {
      {"geometry",
       {{"width_cells", c.geometry.width_cells},
        {"height_cells", c.geometry.height_cells},
        {"cell_size", c.geometry.cell_size},
        {"origin", vec_json(c.geometry.origin)},
        {"sensor_pos", vec_json(geom.sensor_pos())},
        {"fov_deg", c.geometry.fov * 180.0 / std::numbers::pi},
        {"num_rays", c.geometry.num_rays},
        {"r_min", c.geometry.r_min},
        {"r_max", c.geometry.r_max}}},
      {"motion",
       {{"dt", m.dt},
        {"vel_noise", cov_json(m.vel_noise)},
        {"pos_noise", cov_json(m.pos_noise)},
        {"birth_prob", m.birth_prob},
        {"birth_vel_sigma", m.birth_vel_sigma},
        {"occ_floor", m.occ_floor},
        {"occ_ceiling", m.occ_ceiling},
        {"particles", c.particles},
        {"torus", m.torus}}},
      {"sensor",
       {{"false_positive", c.noise.false_positive},
        {"false_negative", c.noise.false_negative},
        {"lidar_every", c.lidar_every}}},
      {"bandit", {{"epsilon", c.bandit.epsilon}, {"alpha", c.bandit.alpha}, {"q0", c.bandit.q0}}},
      {"scene", scene},
      {"run",
       {{"policy", policy_name(c.policy)},
        {"steps", c.steps},
        {"eval_horizon", c.eval_horizon},
        {"eval_every", c.eval_every},
        {"eval_start", c.eval_start},
        {"seed", c.seed},
        {"mode", mode_name(c.mode)},
        {"random_fill", c.random_fill},
        {"snapshot_every", c.snapshot_every},
        {"out", c.out.string()}}},
      {"async",
       {{"imaging_hz", c.async.imaging_hz},
        {"filter_hz", c.async.filter_hz},
        {"placement_hz", c.async.placement_hz},
        {"placement_stall_ms", c.async.placement_stall_ms},
        {"observation_queue", c.async.observation_queue}}},
  };
  return root.dump(2);
}

}  // namespace lcdog
