#pragma once

#include <iosfwd>
#include <vector>

#include "cofuse/world/world.hpp"

namespace cofuse::world {

// Newline-delimited records, one frame per line:
//   {"frame":t,"label":0|1,"neighbors":[...],
//    "obs":[{"agent":i,"modality":m,"corruption":"none",
//            "x":[...]}, ...]}
// Doubles are written with round-trip precision, so read(write(f)) == f.
void write_frames(std::ostream& os, const std::vector<Frame>& frames);
std::vector<Frame> read_frames(std::istream& is);

}  // namespace cofuse::world
