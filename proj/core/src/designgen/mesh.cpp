#include "genspring/designgen/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>
#include <utility>

#include "genspring/errors.hpp"

namespace genspring::designgen {

namespace {

class MeshBuilder {
 public:
  MeshBuilder(const DesignBitmap& pixels, double depth, double pixel)
      : pixels_(pixels), n_(pixels.side()), depth_(depth), pixel_(pixel) {}

  void add_pixel(std::size_t r, std::size_t c) {
    const std::array<std::size_t, 2> tl{c, r}, tr{c + 1, r}, br{c + 1, r + 1}, bl{c, r + 1};
    // Top face (z = depth), counter-clockwise seen from +z: BL, BR, TR, TL.
    quad(vertex(bl, 1, r), vertex(br, 1, r), vertex(tr, 1, r), vertex(tl, 1, r));
    quad(vertex(tl, 0, r), vertex(tr, 0, r), vertex(br, 0, r), vertex(bl, 0, r));
    // Walls run clockwise around the pixel so the empty side lies to the left.
    if (!filled(static_cast<long>(r) - 1, static_cast<long>(c))) wall(tl, tr, r);
    if (!filled(static_cast<long>(r), static_cast<long>(c) + 1)) wall(tr, br, r);
    if (!filled(static_cast<long>(r) + 1, static_cast<long>(c))) wall(br, bl, r);
    if (!filled(static_cast<long>(r), static_cast<long>(c) - 1)) wall(bl, tl, r);
  }

  TriangleMesh take() { return std::move(mesh_); }

 private:
  bool filled(long r, long c) const {
    if (r < 0 || c < 0 || r >= static_cast<long>(n_) || c >= static_cast<long>(n_)) return false;
    return pixels_.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) > 0.5;
  }

  // Corner (cx, cy) is shared by pixels (cy-1|cy, cx-1|cx). When only a
  // diagonal pair is filled the corner gets one vertex per filled pixel.
  int split_class(std::size_t cx, std::size_t cy, std::size_t owner_r) const {
    const long x = static_cast<long>(cx), y = static_cast<long>(cy);
    const bool nw = filled(y - 1, x - 1), ne = filled(y - 1, x), sw = filled(y, x - 1), se = filled(y, x);
    const bool main_diagonal = nw && se && !ne && !sw;
    const bool anti_diagonal = ne && sw && !nw && !se;
    if (!main_diagonal && !anti_diagonal) return 0;
    return owner_r + 1 == cy ? 1 : 2;  // owner above the corner vs below it
  }

  std::uint32_t vertex(const std::array<std::size_t, 2>& corner, int layer, std::size_t owner_r) {
    const int cls = split_class(corner[0], corner[1], owner_r);
    const std::uint64_t key =
        ((static_cast<std::uint64_t>(corner[1]) * (n_ + 1) + corner[0]) * 2 + static_cast<std::uint64_t>(layer)) * 3 +
        static_cast<std::uint64_t>(cls);
    const auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh_.vertices.size()));
    if (inserted) {
      mesh_.vertices.push_back({static_cast<double>(corner[0]) * pixel_,
                                static_cast<double>(n_ - corner[1]) * pixel_, layer == 1 ? depth_ : 0.0});
    }
    return it->second;
  }

  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    mesh_.triangles.push_back({a, b, c});
    mesh_.triangles.push_back({a, c, d});
  }

  void wall(const std::array<std::size_t, 2>& p, const std::array<std::size_t, 2>& q, std::size_t r) {
    const std::uint32_t p0 = vertex(p, 0, r), p1 = vertex(p, 1, r);
    const std::uint32_t q0 = vertex(q, 0, r), q1 = vertex(q, 1, r);
    mesh_.triangles.push_back({p0, p1, q1});
    mesh_.triangles.push_back({p0, q1, q0});
  }

  const DesignBitmap& pixels_;
  std::size_t n_;
  double depth_;
  double pixel_;
  TriangleMesh mesh_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, double value) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

}  // namespace

TriangleMesh extrude_to_mesh(const PrintabilityReport& report, double depth_mm, double pixel_size_mm) {
  if (!report.connected) throw PrintabilityError("cannot extrude a design that is not connected");
  if (!(depth_mm > 0.0)) throw ParameterError("extrusion depth must be positive");
  if (!(pixel_size_mm > 0.0)) throw ParameterError("pixel size must be positive");
  MeshBuilder builder(report.filtered, depth_mm, pixel_size_mm);
  const std::size_t n = report.filtered.side();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (report.filtered.at(r, c) > 0.5) builder.add_pixel(r, c);
    }
  }
  return builder.take();
}

double mesh_volume(const TriangleMesh& mesh) {
  double six_v = 0.0;
  for (const auto& t : mesh.triangles) {
    const auto& a = mesh.vertices[t[0]];
    const auto& b = mesh.vertices[t[1]];
    const auto& c = mesh.vertices[t[2]];
    six_v += a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
             a[2] * (b[0] * c[1] - b[1] * c[0]);
  }
  return six_v / 6.0;
}

bool is_watertight(const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto twin = directed.find({edge.second, edge.first});
    if (twin == directed.end() || twin->second != 1) return false;
  }
  return !mesh.triangles.empty();
}

std::string encode_stl(const TriangleMesh& mesh, const std::string& header) {
  std::string out(80, '\0');
  std::memcpy(out.data(), header.data(), std::min<std::size_t>(header.size(), 80));
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  out.reserve(out.size() + 50 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const auto& a = mesh.vertices[t[0]];
    const auto& b = mesh.vertices[t[1]];
    const auto& c = mesh.vertices[t[2]];
    const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    double nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
    const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (len > 0) {
      nx /= len;
      ny /= len;
      nz /= len;
    }
    for (double v : {nx, ny, nz}) put_f32(out, v);
    for (const auto* p : {&a, &b, &c}) {
      for (double v : *p) put_f32(out, v);
    }
    out.push_back('\0');
    out.push_back('\0');
  }
  return out;
}

void write_stl(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_stl(mesh);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace genspring::designgen
