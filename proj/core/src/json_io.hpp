#pragma once

// JSON mapping of the configuration and checkpoint metadata types. Readers
// are strict: unknown keys and wrong value types throw kConfig, missing keys
// keep their defaults.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "arepas/edge_augment.hpp"
#include "arepas/patch_siamese.hpp"
#include "arepas/recon_gan.hpp"
#include "json.hpp"

namespace arepas::detail {

using nlohmann::json;

json to_json(const imgproc::CannyOptions& v);
json to_json(const augment::AugmentSpec& v);
json to_json(const recon::GeneratorSpec& v);
json to_json(const recon::DiscriminatorSpec& v);
json to_json(const recon::ReconTrainConfig& v);
json to_json(const recon::LossBreakdown& v);
json to_json(const siamese::SiameseSpec& v);
json to_json(const siamese::ScorerTrainConfig& v);

void from_json(const json& j, imgproc::CannyOptions& v, std::string_view where);
void from_json(const json& j, augment::AugmentSpec& v, std::string_view where);
void from_json(const json& j, recon::GeneratorSpec& v, std::string_view where);
void from_json(const json& j, recon::DiscriminatorSpec& v, std::string_view where);
void from_json(const json& j, recon::ReconTrainConfig& v, std::string_view where);
void from_json(const json& j, recon::LossBreakdown& v, std::string_view where);
void from_json(const json& j, siamese::SiameseSpec& v, std::string_view where);
void from_json(const json& j, siamese::ScorerTrainConfig& v, std::string_view where);

json recon_metadata(const recon::ReconCheckpoint& ckpt);
recon::ReconCheckpoint recon_from_metadata(const json& j);
json scorer_metadata(const siamese::ScorerCheckpoint& ckpt);
siamese::ScorerCheckpoint scorer_from_metadata(const json& j);

/// Reads the members of one JSON object, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string_view where);
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  template <typename T>
  void read(const char* key, T& out) {
    if (const json* v = take(key)) out = convert<T>(*v, key);
  }
  /// Member value or nullptr when absent.
  const json* take(const char* key);
  /// Throws kConfig when keys were left unread.
  void finish() const;
  std::string path(std::string_view key) const;

 private:
  template <typename T>
  T convert(const json& v, const char* key) const {
    const auto bad = [&](const char* want) {
      return Error(ErrorCode::kConfig, path(key) + ": expected " + want);
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw bad("a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw bad("a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw bad("a non-negative integer");
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw bad("an integer");
      const auto x = v.get<std::int64_t>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) throw bad("a smaller integer");
      return static_cast<T>(x);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw bad("a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) return std::nullopt;
      if (!v.is_number()) throw bad("a number or null");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) throw bad("an array of integers");
      std::vector<int> out;
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw bad("an array of integers");
        out.push_back(e.get<int>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace arepas::detail
