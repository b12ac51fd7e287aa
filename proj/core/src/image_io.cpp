#include "arepas/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "arepas/error.hpp"

namespace arepas::io {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string token(std::istream& in, const fs::path& path) {
  std::string tok;
  while (tok.empty()) {
    const int ch = in.get();
    if (ch == EOF) throw Error(ErrorCode::kIo, path.string() + ": truncated header");
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while (in && !std::isspace(in.peek()) && in.peek() != EOF) tok.push_back(static_cast<char>(in.get()));
    }
  }
  return tok;
}

int positive_int(const std::string& tok, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kIo, path.string() + ": bad header value '" + tok + "'");
}

// Reads the header of a P5/P6 file and leaves the stream at the pixel data.
std::pair<int, int> netpbm_header(std::istream& in, const fs::path& path, const char* magic) {
  if (token(in, path) != magic) throw Error(ErrorCode::kIo, path.string() + ": expected " + magic + " file");
  const int cols = positive_int(token(in, path), path);
  const int rows = positive_int(token(in, path), path);
  if (positive_int(token(in, path), path) != 255) {
    throw Error(ErrorCode::kIo, path.string() + ": only maxval 255 is supported");
  }
  in.get();  // single whitespace before the raster
  return {rows, cols};
}

void check_stream(const std::ios& s, const fs::path& path) {
  if (!s) throw Error(ErrorCode::kIo, "I/O failure on " + path.string());
}

}  // namespace

Grid<std::uint8_t> read_pgm(const fs::path& path) {
  auto in = open_in(path);
  const auto [rows, cols] = netpbm_header(in, path, "P5");
  Grid<std::uint8_t> img(rows, cols);
  in.read(reinterpret_cast<char*>(img.values().data()), static_cast<std::streamsize>(img.size()));
  check_stream(in, path);
  return img;
}

void write_pgm(const fs::path& path, const Grid<std::uint8_t>& img) {
  auto out = open_out(path);
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.values().data()), static_cast<std::streamsize>(img.size()));
  check_stream(out, path);
}

Mask read_mask(const fs::path& path) {
  auto m = read_pgm(path);
  for (auto& v : m) v = v ? 1 : 0;
  return m;
}

void write_mask(const fs::path& path, const Mask& mask) {
  Grid<std::uint8_t> g(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? 255 : 0;
  write_pgm(path, g);
}

RealGrid read_pfm(const fs::path& path) {
  auto in = open_in(path);
  if (token(in, path) != "Pf") throw Error(ErrorCode::kIo, path.string() + ": expected a greyscale PFM (Pf)");
  const int cols = positive_int(token(in, path), path);
  const int rows = positive_int(token(in, path), path);
  const std::string scale_tok = token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kIo, path.string() + ": bad PFM scale");
  }
  if (scale == 0.0) throw Error(ErrorCode::kIo, path.string() + ": PFM scale must be nonzero");
  in.get();
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);

  std::vector<float> raw(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  check_stream(in, path);
  RealGrid img(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      float v = raw[static_cast<std::size_t>(rows - 1 - r) * cols + c];
      if (swap) {
        auto bits = std::bit_cast<std::uint32_t>(v);
        bits = (bits >> 24) | ((bits >> 8) & 0xff00U) | ((bits << 8) & 0xff0000U) | (bits << 24);
        v = std::bit_cast<float>(bits);
      }
      img(r, c) = v;
    }
  }
  return img;
}

void write_pfm(const fs::path& path, const RealGrid& img) {
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
  auto out = open_out(path);
  out << "Pf\n" << img.cols() << ' ' << img.rows() << "\n-1.0\n";
  std::vector<float> raw(img.size());
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      raw[static_cast<std::size_t>(img.rows() - 1 - r) * img.cols() + c] = static_cast<float>(img(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  check_stream(out, path);
}

void write_ppm(const fs::path& path, const Grid<Rgb>& img) {
  auto out = open_out(path);
  out << "P6\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (const auto& px : img) out.write(reinterpret_cast<const char*>(px.data()), 3);
  check_stream(out, path);
}

Grid<Rgb> read_ppm(const fs::path& path) {
  auto in = open_in(path);
  const auto [rows, cols] = netpbm_header(in, path, "P6");
  Grid<Rgb> img(rows, cols);
  for (auto& px : img) in.read(reinterpret_cast<char*>(px.data()), 3);
  check_stream(in, path);
  return img;
}

Grid<std::uint8_t> to_gray8(const RealGrid& img, double lo, double hi) {
  if (!(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "to_gray8: need hi > lo");
  Grid<std::uint8_t> out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp((img[i] - lo) / (hi - lo), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return out;
}

}  // namespace arepas::io
