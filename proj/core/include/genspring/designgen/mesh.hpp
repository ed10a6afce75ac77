#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genspring/designgen/printability.hpp"

namespace genspring::designgen {

struct TriangleMesh {
  std::vector<std::array<double, 3>> vertices;    // millimeters
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise seen from outside
};

// Extrudes the filtered pixels of a connected report along +z. Rows map to -y
// so the top base ends up at the largest y. Vertices at checkerboard corners
// are split so the result is a closed 2-manifold.
TriangleMesh extrude_to_mesh(const PrintabilityReport& report, double depth_mm, double pixel_size_mm);

double mesh_volume(const TriangleMesh& mesh);

// Every undirected edge is used by exactly two triangles, once per direction.
bool is_watertight(const TriangleMesh& mesh);

// Binary STL: 80-byte header, uint32 count, 50-byte little-endian records.
std::string encode_stl(const TriangleMesh& mesh, const std::string& header = "genspring");
void write_stl(const TriangleMesh& mesh, const std::filesystem::path& path);

}  // namespace genspring::designgen
