#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cofuse::core {

using Rng = std::mt19937_64;

// Independent stream for a tuple of integers (seed, stream ids...).
Rng make_rng(std::initializer_list<std::uint64_t> key);

// Uniform draw from the open interval (0, 1).
double uniform_open01(Rng& rng);

double standard_normal(Rng& rng);

}  // namespace cofuse::core
