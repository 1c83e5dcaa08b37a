#include "cofuse/core/random.hpp"

#include <vector>

namespace cofuse::core {

Rng make_rng(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key.size());
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

double uniform_open01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (;;) {
    const double u = dist(rng);
    if (u > 0.0 && u < 1.0) return u;
  }
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace cofuse::core
