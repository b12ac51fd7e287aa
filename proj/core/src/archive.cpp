#include "arepas/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "arepas/error.hpp"
#include "json.hpp"

namespace arepas::archive {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {

using nlohmann::json;

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    case torch::kUInt8: return "uint8";
    default: break;
  }
  throw Error(ErrorCode::kCheckpoint, std::string("archive: unsupported dtype ") + c10::toString(t));
}

torch::ScalarType parse_dtype(const std::string& name) {
  if (name == "float32") return torch::kFloat32;
  if (name == "float64") return torch::kFloat64;
  if (name == "int64") return torch::kInt64;
  if (name == "uint8") return torch::kUInt8;
  throw Error(ErrorCode::kCheckpoint, "archive: unknown dtype " + name);
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset) {
  if (offset + sizeof(T) > bytes.size()) throw Error(ErrorCode::kCheckpoint, "archive: truncated");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::string encode(const Archive& archive) {
  json header;
  header["kind"] = archive.kind;
  try {
    header["metadata"] = json::parse(archive.metadata_json);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCheckpoint, std::string("archive: invalid metadata json: ") + e.what());
  }
  std::string payload;
  json entries = json::array();
  for (const auto& [name, tensor] : archive.tensors) {
    const auto cpu = tensor.detach().to(torch::kCPU).contiguous();
    const auto nbytes = static_cast<std::size_t>(cpu.numel()) * cpu.element_size();
    entries.push_back({{"name", name},
                       {"dtype", dtype_name(cpu.scalar_type())},
                       {"shape", cpu.sizes().vec()},
                       {"offset", payload.size()},
                       {"nbytes", nbytes}});
    payload.append(static_cast<const char*>(cpu.data_ptr()), nbytes);
  }
  header["tensors"] = std::move(entries);
  const std::string header_text = header.dump();

  std::string out(kMagic);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  out += payload;
  return out;
}

Archive decode(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kCheckpoint, "archive: bad magic");
  }
  const auto version = get<std::uint32_t>(bytes, 8);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kCheckpoint, "archive: unsupported format version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(bytes, 12);
  const std::size_t payload_start = 20 + header_len;
  if (payload_start > bytes.size()) throw Error(ErrorCode::kCheckpoint, "archive: truncated header");

  json header;
  try {
    header = json::parse(bytes.substr(20, header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCheckpoint, std::string("archive: corrupt header: ") + e.what());
  }

  Archive archive;
  archive.kind = header.at("kind").get<std::string>();
  archive.metadata_json = header.at("metadata").dump();
  for (const auto& entry : header.at("tensors")) {
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto nbytes = entry.at("nbytes").get<std::size_t>();
    if (payload_start + offset + nbytes > bytes.size()) {
      throw Error(ErrorCode::kCheckpoint, "archive: truncated payload");
    }
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    auto tensor = torch::empty(shape, torch::TensorOptions().dtype(parse_dtype(entry.at("dtype"))));
    if (static_cast<std::size_t>(tensor.numel()) * tensor.element_size() != nbytes) {
      throw Error(ErrorCode::kCheckpoint, "archive: tensor size mismatch");
    }
    std::memcpy(tensor.data_ptr(), bytes.data() + payload_start + offset, nbytes);
    archive.tensors.push_back({entry.at("name").get<std::string>(), std::move(tensor)});
  }
  return archive;
}

void write_file(const std::filesystem::path& path, const Archive& archive) {
  const std::string bytes = encode(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

Archive read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<NamedTensor> module_state(const torch::nn::Module& module, const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (const auto& item : module.named_parameters(true)) {
    out.push_back({prefix + item.key(), item.value().detach().clone()});
  }
  for (const auto& item : module.named_buffers(true)) {
    out.push_back({prefix + item.key(), item.value().detach().clone()});
  }
  return out;
}

void load_module_state(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
                       const std::string& prefix) {
  std::map<std::string, const torch::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.tensor;
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& key, torch::Tensor& target) {
    const auto it = by_name.find(prefix + key);
    if (it == by_name.end()) throw Error(ErrorCode::kCheckpoint, "checkpoint lacks tensor " + prefix + key);
    if (it->second->sizes() != target.sizes()) {
      throw Error(ErrorCode::kCheckpoint, "checkpoint tensor " + prefix + key + " has the wrong shape");
    }
    target.copy_(*it->second);
  };
  for (auto& item : module.named_parameters(true)) assign(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) assign(item.key(), item.value());
}

}  // namespace arepas::archive
