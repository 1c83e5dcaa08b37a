#include "cofuse/experiment/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cofuse::experiment {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and remembers which keys were seen.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
T checked(const std::string& path, auto&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json channel_to_json(const world::ChannelSpec& ch) {
  json kinds = json::array();
  for (auto k : ch.corruption_kinds) kinds.push_back(std::string(world::to_string(k)));
  return {{"name", ch.name}, {"kind", std::string(world::to_string(ch.kind))}, {"obs_dim", ch.obs_dim},
          {"corruption_kinds", kinds}};
}

world::ChannelSpec channel_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  world::ChannelSpec ch;
  std::string kind = std::string(world::to_string(ch.kind));
  std::vector<std::string> kinds;
  r.get("name", ch.name);
  r.get("kind", kind);
  r.get("obs_dim", ch.obs_dim);
  r.get("corruption_kinds", kinds);
  r.finish();
  ch.kind = checked<world::ChannelKind>(r.child("kind"), [&] { return world::parse_channel_kind(kind); });
  for (const auto& k : kinds) {
    ch.corruption_kinds.push_back(
        checked<world::Corruption>(r.child("corruption_kinds"), [&] { return world::parse_corruption(k); }));
  }
  return ch;
}

json scenario_to_json(const world::ScenarioConfig& s) {
  json channels = json::array();
  for (const auto& ch : s.channels) channels.push_back(channel_to_json(ch));
  return {{"n_collaborators", s.n_collaborators},
          {"channels", channels},
          {"modality_sets", s.modality_sets},
          {"corruption_prob", s.corruption_prob},
          {"gaussian_sigma", s.noise_scales.gaussian},
          {"sigma_base", s.sigma_base},
          {"sensor_offset", s.sensor_offset},
          {"comm_range", s.comm_range},
          {"arena_size", s.arena_size},
          {"agent_step", s.agent_step},
          {"latent_dim", s.latent_dim},
          {"frames_per_episode", s.frames_per_episode},
          {"seed", s.seed},
          {"frame_level_corruption", s.frame_level_corruption},
          {"hazard_horizon", s.hazard_horizon},
          {"hazard_radius", s.hazard_radius},
          {"latent_persistence", s.latent_persistence},
          {"position_scale", s.position_scale},
          {"velocity_scale", s.velocity_scale}};
}

world::ScenarioConfig scenario_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  world::ScenarioConfig s;
  r.get("n_collaborators", s.n_collaborators);
  if (const json* ch = r.sub("channels")) {
    if (!ch->is_array()) throw ConfigError(r.child("channels") + ": expected an array");
    s.channels.clear();
    for (std::size_t i = 0; i < ch->size(); ++i) {
      s.channels.push_back(channel_from_json((*ch)[i], r.child("channels") + "[" + std::to_string(i) + "]"));
    }
  }
  r.get("modality_sets", s.modality_sets);
  r.get("corruption_prob", s.corruption_prob);
  r.get("gaussian_sigma", s.noise_scales.gaussian);
  r.get("sigma_base", s.sigma_base);
  r.get("sensor_offset", s.sensor_offset);
  r.get("comm_range", s.comm_range);
  r.get("arena_size", s.arena_size);
  r.get("agent_step", s.agent_step);
  r.get("latent_dim", s.latent_dim);
  r.get("frames_per_episode", s.frames_per_episode);
  r.get("seed", s.seed);
  r.get("frame_level_corruption", s.frame_level_corruption);
  r.get("hazard_horizon", s.hazard_horizon);
  r.get("hazard_radius", s.hazard_radius);
  r.get("latent_persistence", s.latent_persistence);
  r.get("position_scale", s.position_scale);
  r.get("velocity_scale", s.velocity_scale);
  r.finish();
  return s;
}

json model_to_json(const training::ModelConfig& m) {
  return {{"dim", m.dim},
          {"hidden", m.hidden},
          {"policy_hidden", m.policy_hidden},
          {"proj_dim", m.proj_dim},
          {"head_hidden1", m.head_hidden1},
          {"head_hidden2", m.head_hidden2},
          {"temperature", m.temperature},
          {"sentinel_rho", m.sentinel_rho},
          {"eps", m.eps},
          {"meter_requests", m.meter_requests}};
}

training::ModelConfig model_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  training::ModelConfig m;
  r.get("dim", m.dim);
  r.get("hidden", m.hidden);
  r.get("policy_hidden", m.policy_hidden);
  r.get("proj_dim", m.proj_dim);
  r.get("head_hidden1", m.head_hidden1);
  r.get("head_hidden2", m.head_hidden2);
  r.get("temperature", m.temperature);
  r.get("sentinel_rho", m.sentinel_rho);
  r.get("eps", m.eps);
  r.get("meter_requests", m.meter_requests);
  r.finish();
  return m;
}

json train_to_json(const training::TrainConfig& t) {
  json j = {{"batch_size", t.batch_size},
            {"lr0", t.lr0},
            {"lr_min", t.lr_min},
            {"beta1", t.adam.beta1},
            {"beta2", t.adam.beta2},
            {"adam_eps", t.adam.eps},
            {"epochs", t.epochs},
            {"seeds", t.seeds},
            {"lambda", t.lambda},
            {"variant", std::string(training::to_string(t.variant))},
            {"train_frames", t.train_frames},
            {"test_frames", t.test_frames},
            {"parallel", t.parallel}};
  // JSON has no infinity; a missing floor is written as null.
  j["reg_floor"] = std::isfinite(t.reg_floor) ? json(t.reg_floor) : json(nullptr);
  return j;
}

training::TrainConfig train_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  training::TrainConfig t;
  std::string variant = std::string(training::to_string(t.variant));
  r.get("batch_size", t.batch_size);
  r.get("lr0", t.lr0);
  r.get("lr_min", t.lr_min);
  r.get("beta1", t.adam.beta1);
  r.get("beta2", t.adam.beta2);
  r.get("adam_eps", t.adam.eps);
  r.get("epochs", t.epochs);
  r.get("seeds", t.seeds);
  r.get("lambda", t.lambda);
  if (const json* f = r.sub("reg_floor")) {
    if (f->is_null()) {
      t.reg_floor = training::kNoRegFloor;
    } else if (f->is_number()) {
      t.reg_floor = f->get<double>();
    } else {
      throw ConfigError(r.child("reg_floor") + ": expected a number or null");
    }
  }
  r.get("variant", variant);
  r.get("train_frames", t.train_frames);
  r.get("test_frames", t.test_frames);
  r.get("parallel", t.parallel);
  r.finish();
  t.variant = checked<training::Variant>(r.child("variant"), [&] { return training::parse_variant(variant); });
  return t;
}

}  // namespace

void ExperimentConfig::validate() const {
  checked<int>("scenario", [&] { scenario.validate(); return 0; });
  checked<int>("train", [&] { train.validate(); return 0; });
  if (model.dim == 0 || model.hidden == 0 || model.policy_hidden == 0 || model.proj_dim == 0 ||
      model.head_hidden1 == 0 || model.head_hidden2 == 0) {
    throw ConfigError("model: layer widths must be positive");
  }
  if (model.dim > 0xFFFF) throw ConfigError("model: dim too large for the wire format");
  if (!(model.temperature > 0.0)) throw ConfigError("model: temperature must be positive");
  if (!(model.eps > 0.0)) throw ConfigError("model: eps must be positive");
  if (!emit.csv && !emit.json) throw ConfigError("emit: at least one of csv, json must be enabled");
}

ExperimentConfig config_from_json(const json& j) {
  ObjectReader r(j, "config");
  ExperimentConfig c;
  if (const json* s = r.sub("scenario")) c.scenario = scenario_from_json(*s, r.child("scenario"));
  if (const json* m = r.sub("model")) c.model = model_from_json(*m, r.child("model"));
  if (const json* t = r.sub("train")) c.train = train_from_json(*t, r.child("train"));
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  if (const json* e = r.sub("emit")) {
    ObjectReader er(*e, r.child("emit"));
    er.get("csv", c.emit.csv);
    er.get("json", c.emit.json);
    er.finish();
  }
  r.finish();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  return {{"scenario", scenario_to_json(c.scenario)},
          {"model", model_to_json(c.model)},
          {"train", train_to_json(c.train)},
          {"output_dir", c.output_dir.string()},
          {"emit", {{"csv", c.emit.csv}, {"json", c.emit.json}}}};
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

world::ScenarioConfig scenario_preset(const std::string& name) {
  world::ScenarioConfig s;
  if (name == "default") return s;
  if (name == "overtaking") {
    // Fast closing speeds, longer look-ahead.
    s.velocity_scale = 0.6;
    s.hazard_horizon = 1.5;
    s.hazard_radius = 1.1;
    return s;
  }
  if (name == "left_turn") {
    s.position_scale = 0.8;
    s.hazard_radius = 1.2;
    return s;
  }
  if (name == "red_light") {
    // Slow traffic; hazards are mostly positional.
    s.velocity_scale = 0.3;
    s.hazard_horizon = 0.5;
    s.hazard_radius = 0.9;
    return s;
  }
  throw ConfigError("unknown scenario preset '" + name + "' (expected default, overtaking, left_turn, red_light)");
}

}  // namespace cofuse::experiment
