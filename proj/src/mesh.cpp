#include "cflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cflow {

namespace {

double tri_area(const Vec2d& a, const Vec2d& b, const Vec2d& c) { return 0.5 * cross<double>(b - a, c - a); }

} // namespace

double DiskMesh::area() const
{
  double a = 0.0;
  for (const auto& t : triangles) a += tri_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
  return a;
}

double DiskMesh::boundary_length() const
{
  double l = 0.0;
  for (const auto& e : boundary_edges) l += (nodes[e[1]] - nodes[e[0]]).norm();
  return l;
}

DiskMesh build_disk_mesh(const DomainBoundary& domain, int n_r)
{
  if (n_r < 4) throw std::invalid_argument("disk mesh: n_r must be at least 4");
  DiskMesh m;
  m.rings = n_r;
  const Vec2d c = domain.center();
  m.nodes.push_back(c);
  std::vector<int> first(n_r + 1, 0), count(n_r + 1, 1);
  for (int k = 1; k <= n_r; ++k) {
    first[k] = static_cast<int>(m.nodes.size());
    count[k] = 6 * k;
    const double f = static_cast<double>(k) / n_r;
    for (int j = 0; j < count[k]; ++j) {
      const double th = 2 * pi * j / count[k];
      m.nodes.push_back(k == n_r ? domain.position(th) : c + f * (domain.position(th) - c));
    }
  }
  // ring 0 -> ring 1: a fan around the center
  for (int j = 0; j < 6; ++j) m.triangles.push_back({0, first[1] + j, first[1] + (j + 1) % 6});
  for (int k = 2; k <= n_r; ++k) {
    const int ni = count[k - 1], no = count[k];
    int i = 0, j = 0;
    // advance along both rings; the next vertex is the one with the smaller angle
    while (i < ni || j < no) {
      const double ai = static_cast<double>(i + 1) / ni, ao = static_cast<double>(j + 1) / no;
      const int in0 = first[k - 1] + i % ni, out0 = first[k] + j % no;
      if (j < no && (i >= ni || ao <= ai)) {
        m.triangles.push_back({in0, out0, first[k] + (j + 1) % no});
        ++j;
      } else {
        m.triangles.push_back({in0, out0, first[k - 1] + (i + 1) % ni});
        ++i;
      }
    }
  }
  for (int j = 0; j < count[n_r]; ++j) {
    m.boundary_nodes.push_back(first[n_r] + j);
    m.boundary_edges.push_back({first[n_r] + j, first[n_r] + (j + 1) % count[n_r]});
  }
  for (const auto& t : m.triangles) {
    const double a = tri_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
    if (!(a > 1e-14))
      throw mesh_error("disk mesh: inverted or degenerate triangle (" + std::to_string(t[0]) + ", " +
                       std::to_string(t[1]) + ", " + std::to_string(t[2]) + ")");
  }
  m.quality = measure_quality(m);
  return m;
}

MeshQuality measure_quality(const DiskMesh& mesh)
{
  MeshQuality q;
  q.h_min = std::numeric_limits<double>::max();
  q.min_angle_deg = 180.0;
  q.min_area = std::numeric_limits<double>::max();
  for (const auto& t : mesh.triangles) {
    const Vec2d p[3] = {mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
    for (int k = 0; k < 3; ++k) {
      const Vec2d a = p[(k + 1) % 3] - p[k], b = p[(k + 2) % 3] - p[k];
      const double ang = std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)) * 180.0 / pi;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      q.max_angle_deg = std::max(q.max_angle_deg, ang);
      const double e = a.norm();
      q.h_max = std::max(q.h_max, e);
      q.h_min = std::min(q.h_min, e);
    }
    q.min_area = std::min(q.min_area, tri_area(p[0], p[1], p[2]));
  }
  return q;
}

} // namespace cflow
