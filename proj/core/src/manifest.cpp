#include "arepas/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "arepas/error.hpp"

namespace arepas::data {

namespace fs = std::filesystem;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  for (auto v : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (s == split_name(v)) return v;
  }
  throw Error(ErrorCode::kManifest, "unknown split '" + std::string(s) + "'");
}

std::vector<const ManifestRecord*> DatasetManifest::split(Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

void validate(const DatasetManifest& m) {
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    if (r.image_id.empty()) throw Error(ErrorCode::kManifest, "record with empty image_id");
    if (!ids.insert(r.image_id).second) throw Error(ErrorCode::kManifest, "duplicate image_id " + r.image_id);
    if (r.image_path.empty()) throw Error(ErrorCode::kManifest, r.image_id + ": empty image_path");
    if (r.split == Split::kTrain && r.gt_path) {
      throw Error(ErrorCode::kManifest, r.image_id + ": train records must not carry a gt_path");
    }
    if (r.split != Split::kTrain && !r.gt_path) {
      throw Error(ErrorCode::kManifest, r.image_id + ": val/test records need a gt_path");
    }
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

fs::path resolve(const fs::path& base, const std::string& cell) {
  const fs::path p(cell);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (p.is_relative()) return p.generic_string();
  const auto rel = p.lexically_relative(base);
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

void check_field(const std::string& s, const std::string& what) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) {
    throw Error(ErrorCode::kManifest, what + " contains a comma, quote or line break: " + s);
  }
}

}  // namespace

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kManifest, path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw Error(ErrorCode::kManifest, path.string() + ": header must be '" + std::string(kManifestHeader) + "'");
  }
  DatasetManifest m;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) {
      throw Error(ErrorCode::kManifest, path.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    }
    ManifestRecord r;
    r.image_id = cells[0];
    r.split = parse_split(cells[1]);
    r.image_path = resolve(base, cells[2]);
    if (!cells[3].empty()) r.mask_path = resolve(base, cells[3]);
    if (!cells[4].empty()) r.gt_path = resolve(base, cells[4]);
    m.records.push_back(std::move(r));
  }
  validate(m);
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  validate(m);
  const fs::path base = fs::absolute(path).parent_path();
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : m.records) {
    const std::string image = relative_to(fs::absolute(r.image_path), base);
    const std::string mask = r.mask_path ? relative_to(fs::absolute(*r.mask_path), base) : "";
    const std::string gt = r.gt_path ? relative_to(fs::absolute(*r.gt_path), base) : "";
    check_field(r.image_id, "image_id");
    check_field(image, "image_path");
    check_field(mask, "mask_path");
    check_field(gt, "gt_path");
    out << r.image_id << ',' << split_name(r.split) << ',' << image << ',' << mask << ',' << gt << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  f << out.str();
  if (!f) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
}

}  // namespace arepas::data
