#include "cofuse/world/episode_io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace cofuse::world {

using nlohmann::json;

void write_frames(std::ostream& os, const std::vector<Frame>& frames) {
  for (const auto& f : frames) {
    json rec;
    rec["frame"] = f.index;
    rec["label"] = f.label;
    rec["neighbors"] = f.neighbor_set;
    json obs = json::array();
    for (const auto& o : f.observations) {
      obs.push_back({{"agent", o.agent},
                     {"modality", o.modality},
                     {"corruption", std::string(to_string(o.corruption_applied))},
                     {"x", o.x}});
    }
    rec["obs"] = std::move(obs);
    os << rec.dump() << '\n';
  }
}

std::vector<Frame> read_frames(std::istream& is) {
  std::vector<Frame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      Frame f;
      f.index = rec.at("frame").get<std::size_t>();
      f.label = rec.at("label").get<int>();
      if (f.label != 0 && f.label != 1) throw std::invalid_argument("label must be 0 or 1");
      f.neighbor_set = rec.at("neighbors").get<std::vector<std::size_t>>();
      for (const auto& o : rec.at("obs")) {
        Observation obs;
        obs.agent = o.at("agent").get<std::size_t>();
        obs.modality = o.at("modality").get<std::size_t>();
        obs.corruption_applied = parse_corruption(o.at("corruption").get<std::string>());
        obs.x = o.at("x").get<std::vector<double>>();
        f.observations.push_back(std::move(obs));
      }
      frames.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw std::runtime_error("episode record line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return frames;
}

}  // namespace cofuse::world
