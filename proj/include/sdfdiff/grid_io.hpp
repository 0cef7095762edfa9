#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sdfdiff/grid.hpp"

namespace sdfdiff {

// Binary grid container, all fields little-endian:
//   magic "SDFG" | version u32 | resolution u32 | origin 3 x f64 | spacing f64 |
//   N^3 x f64 values, x-fastest (flat index i + N*(j + N*k)).
inline constexpr std::array<char, 4> kGridMagic{'S', 'D', 'F', 'G'};
inline constexpr std::uint32_t kGridVersion = 1;

/// Header shared by the grid container and its sidecar files.
struct ContainerHeader {
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint32_t resolution = 0;
  Vec3 origin;
  double spacing = 0.0;
};

void write_header(std::ostream& out, const ContainerHeader& header);
ContainerHeader read_header(std::istream& in, const std::array<char, 4>& expected_magic);
void write_f64s(std::ostream& out, std::span<const double> values);
std::vector<double> read_f64s(std::istream& in, std::size_t count);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);

void write_grid(std::ostream& out, const SdfGrid& grid);
SdfGrid read_grid(std::istream& in);
void save_grid(const std::filesystem::path& path, const SdfGrid& grid);
SdfGrid load_grid(const std::filesystem::path& path);

/// Lossless text dump: "SDFG-TEXT 1", "N", "ox oy oz h", then one value per line.
void write_grid_text(std::ostream& out, const SdfGrid& grid);
SdfGrid read_grid_text(std::istream& in);

}  // namespace sdfdiff
