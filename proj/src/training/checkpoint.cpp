#include "cofuse/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cofuse::training {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'C', 'K'};

template <typename T>
void put(std::ostream& os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t s = 0; s < sizeof(T); ++s) os.put(static_cast<char>((bits >> (8 * s)) & 0xff));
}

template <typename T>
T get(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t s = 0; s < sizeof(T); ++s) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: truncated file");
    bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * s);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

void save_checkpoint(std::ostream& os, const Model& model) {
  const auto params = model.parameters();
  const auto names = model.parameter_names();
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    put<std::uint16_t>(os, static_cast<std::uint16_t>(names[k].size()));
    os.write(names[k].data(), static_cast<std::streamsize>(names[k].size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params[k]->shape.size()));
    for (auto d : params[k]->shape) put<std::uint64_t>(os, d);
    for (double v : params[k]->data) put<double>(os, v);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(os, model);
}

void load_checkpoint(std::istream& is, Model& model) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  auto params = model.parameters();
  const auto names = model.parameter_names();
  const auto count = get<std::uint32_t>(is);
  if (count != params.size()) {
    throw std::runtime_error("checkpoint: holds " + std::to_string(count) + " tensors, model has " +
                             std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto len = get<std::uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    if (name != names[k]) throw std::runtime_error("checkpoint: expected tensor '" + names[k] + "', found '" + name + "'");
    const auto rank = get<std::uint32_t>(is);
    core::Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(is);
    if (shape != params[k]->shape) {
      throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " + core::shape_str(shape) +
                               ", model expects " + core::shape_str(params[k]->shape));
    }
    for (auto& v : params[k]->data) v = get<double>(is);
  }
}

void load_checkpoint(const std::filesystem::path& path, Model& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  load_checkpoint(is, model);
}

}  // namespace cofuse::training
