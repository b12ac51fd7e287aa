#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace arepas::archive {

// Single-file checkpoint container.
//
//   offset 0   8 bytes   magic "AREPASCK"
//   offset 8   uint32    container format version (little-endian)
//   offset 12  uint64    header length in bytes (little-endian)
//   offset 20  header    UTF-8 JSON: {"kind", "metadata", "tensors": [
//                          {"name", "dtype", "shape", "offset", "nbytes"}]}
//   then       payload   raw little-endian tensor data, offsets relative to
//                        the payload start, in the order of "tensors"
//
// Keys are serialized sorted, so decode followed by encode reproduces the
// input byte for byte.

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::string_view kMagic = "AREPASCK";

struct NamedTensor {
  std::string name;
  torch::Tensor tensor;
};

struct Archive {
  std::string kind;
  /// JSON object text; stored re-serialized in canonical form.
  std::string metadata_json = "{}";
  std::vector<NamedTensor> tensors;
};

std::string encode(const Archive& archive);
Archive decode(std::string_view bytes);

void write_file(const std::filesystem::path& path, const Archive& archive);
Archive read_file(const std::filesystem::path& path);

/// Parameters and buffers of `module`, names prefixed with `prefix`.
std::vector<NamedTensor> module_state(const torch::nn::Module& module, const std::string& prefix);

/// Copies matching tensors into the module. Throws kCheckpoint when a
/// parameter or buffer is missing or has a different shape.
void load_module_state(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
                       const std::string& prefix);

}  // namespace arepas::archive
