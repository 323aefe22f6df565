#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "factgraph/tensor.hpp"

namespace factgraph {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& m) : std::runtime_error(m) {}
};

// Binary checkpoint container, little-endian throughout:
//
//   magic   "FGCK"                      4 bytes
//   version u32                         (currently 1)
//   nmeta   u32
//   nmeta x { key: u32 len + bytes, value: u32 len + bytes }
//   ntensors u32
//   ntensors x {
//     name:  u32 len + bytes
//     rows:  u64
//     cols:  u64
//     width: u32                        (4 or 8 bytes per element)
//     data:  rows*cols*width bytes, row-major
//   }
namespace ckpt {

inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4))
    throw CheckpointError("truncated checkpoint");
  return v;
}
inline uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8))
    throw CheckpointError("truncated checkpoint");
  return v;
}
inline std::string read_str(std::istream& is) {
  uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw CheckpointError("truncated checkpoint");
  return s;
}

}  // namespace ckpt

// Reads only the metadata block; tensor payloads are skipped.
inline std::map<std::string, std::string> read_checkpoint_meta(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FGCK", 4) != 0)
    throw CheckpointError("bad magic; not a checkpoint file");
  uint32_t version = ckpt::read_u32(is);
  if (version != 1)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  std::map<std::string, std::string> meta;
  uint32_t nmeta = ckpt::read_u32(is);
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = ckpt::read_str(is);
    meta[k] = ckpt::read_str(is);
  }
  return meta;
}

template <typename T>
void save_checkpoint(const std::string& path,
                     const std::map<std::string, std::string>& meta,
                     const std::vector<std::pair<std::string, Tensor<T>>>&
                         tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open for writing: " + path);
  os.write("FGCK", 4);
  ckpt::write_u32(os, 1);
  ckpt::write_u32(os, static_cast<uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    ckpt::write_str(os, k);
    ckpt::write_str(os, v);
  }
  ckpt::write_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    ckpt::write_str(os, name);
    ckpt::write_u64(os, static_cast<uint64_t>(t->value.rows()));
    ckpt::write_u64(os, static_cast<uint64_t>(t->value.cols()));
    ckpt::write_u32(os, sizeof(T));
    os.write(reinterpret_cast<const char*>(t->value.data()),
             static_cast<std::streamsize>(t->value.size() * sizeof(T)));
  }
  if (!os) throw CheckpointError("write failed: " + path);
}

// Loads values into the given named tensors; shapes must match. Element
// width may differ from T (values are converted). Missing or extra names
// are errors. Returns the metadata block.
template <typename T>
std::map<std::string, std::string> load_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor<T>>>& tensors) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FGCK", 4) != 0)
    throw CheckpointError("bad magic; not a checkpoint file");
  uint32_t version = ckpt::read_u32(is);
  if (version != 1)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  std::map<std::string, std::string> meta;
  uint32_t nmeta = ckpt::read_u32(is);
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = ckpt::read_str(is);
    meta[k] = ckpt::read_str(is);
  }

  std::map<std::string, Tensor<T>> want;
  for (const auto& [name, t] : tensors) {
    if (!want.emplace(name, t).second)
      throw CheckpointError("duplicate tensor name: " + name);
  }
  uint32_t ntensors = ckpt::read_u32(is);
  std::size_t loaded = 0;
  for (uint32_t i = 0; i < ntensors; ++i) {
    std::string name = ckpt::read_str(is);
    uint64_t rows = ckpt::read_u64(is);
    uint64_t cols = ckpt::read_u64(is);
    uint32_t width = ckpt::read_u32(is);
    if (width != 4 && width != 8)
      throw CheckpointError("bad element width for " + name);
    auto it = want.find(name);
    if (it == want.end())
      throw CheckpointError("unexpected tensor in checkpoint: " + name);
    auto& t = it->second;
    if (static_cast<uint64_t>(t->value.rows()) != rows ||
        static_cast<uint64_t>(t->value.cols()) != cols)
      throw CheckpointError("shape mismatch for " + name);
    std::size_t count = static_cast<std::size_t>(rows * cols);
    if (width == sizeof(T)) {
      if (!is.read(reinterpret_cast<char*>(t->value.data()),
                   static_cast<std::streamsize>(count * sizeof(T))))
        throw CheckpointError("truncated tensor data: " + name);
    } else if (width == 4) {
      std::vector<float> buf(count);
      if (!is.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(count * 4)))
        throw CheckpointError("truncated tensor data: " + name);
      for (std::size_t j = 0; j < count; ++j)
        t->value.data()[j] = static_cast<T>(buf[j]);
    } else {
      std::vector<double> buf(count);
      if (!is.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(count * 8)))
        throw CheckpointError("truncated tensor data: " + name);
      for (std::size_t j = 0; j < count; ++j)
        t->value.data()[j] = static_cast<T>(buf[j]);
    }
    ++loaded;
  }
  if (loaded != want.size())
    throw CheckpointError("checkpoint is missing tensors");
  return meta;
}

// Stable names for a parameter list ("p0", "p1", ...), for models whose
// parameter order is fixed by construction.
template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> numbered(
    const std::vector<Tensor<T>>& params) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < params.size(); ++i)
    out.emplace_back("p" + std::to_string(i), params[i]);
  return out;
}

}  // namespace factgraph
