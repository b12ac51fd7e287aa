#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arepas::data {

enum class Split { kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

struct ManifestRecord {
  std::string image_id;
  Split split = Split::kTrain;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  std::optional<std::filesystem::path> gt_path;
};

// CSV with the fixed header
//
//   image_id,split,image_path,mask_path,gt_path
//
// one record per line, empty cells for absent optional paths. Relative paths
// are resolved against the directory holding the manifest. Fields must not
// contain commas, quotes or line breaks.
inline constexpr std::string_view kManifestHeader = "image_id,split,image_path,mask_path,gt_path";

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> split(Split s) const;
};

/// Unique ids, train records without gt_path, val/test records with one.
void validate(const DatasetManifest& m);

/// Parses and validates; the returned paths are absolute or relative to the
/// current directory (already resolved against the manifest location).
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes paths relative to the manifest's directory where possible.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

}  // namespace arepas::data
