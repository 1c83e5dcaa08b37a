#pragma once

#include <filesystem>
#include <iosfwd>

#include "cofuse/training/model.hpp"

namespace cofuse::training {

// Binary checkpoint, little-endian:
//   "CFCK" | u32 version (=1) | u32 tensor count
//   per tensor, in Model::parameters() order:
//     u16 name length | name bytes | u32 rank | u64 dims[rank] | f64 data[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& os, const Model& model);
void save_checkpoint(const std::filesystem::path& path, const Model& model);

// Loads weights into a model of matching architecture; names and shapes must
// match exactly. Throws std::runtime_error otherwise.
void load_checkpoint(std::istream& is, Model& model);
void load_checkpoint(const std::filesystem::path& path, Model& model);

}  // namespace cofuse::training
