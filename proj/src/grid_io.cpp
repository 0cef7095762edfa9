#include "sdfdiff/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace sdfdiff {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("unexpected end of grid container");
  return v;
}

}  // namespace

void write_header(std::ostream& out, const ContainerHeader& header) {
  out.write(header.magic.data(), 4);
  put(out, header.version);
  put(out, header.resolution);
  put(out, header.origin.x);
  put(out, header.origin.y);
  put(out, header.origin.z);
  put(out, header.spacing);
}

ContainerHeader read_header(std::istream& in, const std::array<char, 4>& expected_magic) {
  ContainerHeader h;
  in.read(h.magic.data(), 4);
  if (!in || h.magic != expected_magic) {
    throw IoError("bad magic: expected '" + std::string(expected_magic.data(), 4) + "'");
  }
  h.version = get<std::uint32_t>(in);
  if (h.version != kGridVersion) throw IoError("unsupported container version " + std::to_string(h.version));
  h.resolution = get<std::uint32_t>(in);
  h.origin.x = get<double>(in);
  h.origin.y = get<double>(in);
  h.origin.z = get<double>(in);
  h.spacing = get<double>(in);
  if (h.resolution < 2 || h.resolution > 4096) throw IoError("implausible resolution " + std::to_string(h.resolution));
  return h;
}

void write_f64s(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> read_f64s(std::istream& in, std::size_t count) {
  std::vector<double> v(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw IoError("truncated value block");
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
std::uint64_t read_u64(std::istream& in) { return get<std::uint64_t>(in); }

void write_grid(std::ostream& out, const SdfGrid& grid) {
  write_header(out, {kGridMagic, kGridVersion, static_cast<std::uint32_t>(grid.resolution()), grid.origin(),
                     grid.spacing()});
  write_f64s(out, grid.values());
}

SdfGrid read_grid(std::istream& in) {
  const ContainerHeader h = read_header(in, kGridMagic);
  const std::size_t n = h.resolution;
  auto values = read_f64s(in, n * n * n);
  try {
    SdfGrid g(static_cast<int>(h.resolution), h.origin, h.spacing, std::move(values));
    if (!g.all_finite()) throw IoError("grid container holds non-finite values");
    return g;
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid grid container: ") + e.what());
  }
}

void save_grid(const std::filesystem::path& path, const SdfGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_grid(out, grid);
  if (!out) throw IoError("write failed: " + path.string());
}

SdfGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file: " + path.string());
  try {
    return read_grid(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_grid_text(std::ostream& out, const SdfGrid& grid) {
  out << "SDFG-TEXT " << kGridVersion << '\n' << grid.resolution() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << grid.origin().x << ' ' << grid.origin().y << ' ' << grid.origin().z << ' ' << grid.spacing() << '\n';
  for (double v : grid.values()) out << v << '\n';
}

SdfGrid read_grid_text(std::istream& in) {
  std::string tag;
  std::uint32_t version = 0;
  int n = 0;
  Vec3 origin;
  double h = 0.0;
  if (!(in >> tag >> version) || tag != "SDFG-TEXT" || version != kGridVersion) throw IoError("bad text grid header");
  if (!(in >> n) || n < 2) throw IoError("bad text grid resolution");
  if (!(in >> origin.x >> origin.y >> origin.z >> h)) throw IoError("bad text grid geometry line");
  std::vector<double> values(static_cast<std::size_t>(n) * n * n);
  for (std::size_t q = 0; q < values.size(); ++q) {
    if (!(in >> values[q])) throw IoError("text grid truncated at value " + std::to_string(q));
  }
  return SdfGrid(n, origin, h, std::move(values));
}

}  // namespace sdfdiff
