#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/eval.hpp"

namespace sdfdiff {

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_obj(out, mesh);
  if (!out) throw IoError("write failed: " + path.string());
}

TriangleMesh read_obj(std::istream& in, const std::string& name) {
  TriangleMesh mesh;
  std::string line;
  long lineno = 0;
  std::vector<std::uint32_t> poly;
  auto fail = [&](const std::string& why) {
    throw IoError(name + ":" + std::to_string(lineno) + ": " + why + ": '" + line + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) fail("malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      poly.clear();
      std::string ref;
      while (ls >> ref) {
        long idx = 0;
        try {
          idx = std::stol(ref.substr(0, ref.find('/')));
        } catch (const std::exception&) {
          fail("malformed face index");
        }
        if (idx < 0) idx += static_cast<long>(mesh.vertices.size()) + 1;
        if (idx < 1 || idx > static_cast<long>(mesh.vertices.size())) fail("face index out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3) fail("face with fewer than 3 vertices");
      for (std::size_t q = 1; q + 1 < poly.size(); ++q) mesh.triangles.push_back({poly[0], poly[q], poly[q + 1]});
    }
  }
  return mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh: " + path.string());
  return read_obj(in, path.string());
}

}  // namespace sdfdiff
