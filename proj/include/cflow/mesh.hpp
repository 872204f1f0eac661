#pragma once

#include "cflow/geometry.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace cflow {

class mesh_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MeshQuality {
  double h_max = 0.0, h_min = 0.0;
  double min_angle_deg = 0.0, max_angle_deg = 0.0;
  double min_area = 0.0;
};

struct DiskMesh {
  std::vector<Vec2d> nodes;
  std::vector<std::array<int, 3>> triangles;       // counter-clockwise
  std::vector<std::array<int, 2>> boundary_edges;  // counter-clockwise loop
  std::vector<int> boundary_nodes;
  int rings = 0;
  MeshQuality quality;

  std::size_t num_nodes() const { return nodes.size(); }
  double area() const;
  double boundary_length() const;
};

// Ring k = 1..n_r carries 6k nodes on the scaled boundary curve (k/n_r) x(theta);
// neighbouring rings are stitched by advancing in angle.
DiskMesh build_disk_mesh(const DomainBoundary& domain, int n_r);

MeshQuality measure_quality(const DiskMesh& mesh);

} // namespace cflow
