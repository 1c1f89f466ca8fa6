#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iusp {

// Self-describing binary tensor container shared by the feature cache and
// model checkpoints. Layout (little-endian):
//   magic "TNSR", u32 version, u32 entry count, then per entry:
//   u16 name length, name bytes, u8 dtype (0 = f32, 1 = f64), u8 rank,
//   u32 dims[rank], row-major payload.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;   // held as f64 in memory
  bool store_f32 = true;      // on-disk element type
};

void write_tensor_container(const std::string& path,
                            const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_container(const std::string& path);

// Same container appended after a plain-text header terminated by a "---"
// line. Used by model checkpoints (header carries architecture and config).
void write_tensor_container_with_header(const std::string& path,
                                        const std::string& text_header,
                                        const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_container_with_header(
    const std::string& path, std::string* text_header);

}  // namespace iusp
