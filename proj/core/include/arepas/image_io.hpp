#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "arepas/grid.hpp"

namespace arepas::io {

// Portable greymap (binary P5, maxval 255).
Grid<std::uint8_t> read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& img);

/// Binary mask stored as a 0/255 greymap; any nonzero value reads as 1.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

// Portable float map ("Pf", one channel, float32). Rows are stored bottom to
// top; the scale sign gives the byte order (negative: little-endian).
RealGrid read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const RealGrid& img);

using Rgb = std::array<std::uint8_t, 3>;
/// Binary P6 colour image.
void write_ppm(const std::filesystem::path& path, const Grid<Rgb>& img);
Grid<Rgb> read_ppm(const std::filesystem::path& path);

/// Maps [lo, hi] linearly onto 0..255 (clamped, rounded).
Grid<std::uint8_t> to_gray8(const RealGrid& img, double lo, double hi);

}  // namespace arepas::io
