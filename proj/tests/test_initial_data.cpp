#include "cflow/initial_data.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace cflow;

namespace {

const DomainBoundary& disk()
{
  static const DomainBoundary d = DomainBoundary::circle();
  return d;
}

const ProfileTable& profile()
{
  static const ProfileTable p(make_quartic_well(), 12.0, 1e-3);
  return p;
}

Vec2d random_in_disk(std::mt19937& rng)
{
  std::uniform_real_distribution<double> U(-1, 1);
  for (;;) {
    const Vec2d x(U(rng), U(rng));
    if (x.norm() <= 1) return x;
  }
}

// circle through the first, middle and last node
std::pair<Vec2d, double> circumcircle(const InterfaceCurve& c)
{
  const Vec2d a = c.front(), b = c.nodes[c.size() / 2], d = c.back();
  Mat2d m;
  m.row(0) = 2 * (b - a).transpose();
  m.row(1) = 2 * (d - a).transpose();
  const Vec2d rhs(b.squaredNorm() - a.squaredNorm(), d.squaredNorm() - a.squaredNorm());
  const Vec2d center = m.fullPivLu().solve(rhs);
  return {center, (a - center).norm()};
}

} // namespace

TEST_CASE("diameter: extended distance is y")
{
  const ExtendedSignedDistance s(make_diameter(disk(), 41), disk(), pi / 2, 0.5);
  std::mt19937 rng(1);
  for (int i = 0; i < 5000; ++i) {
    const Vec2d x = random_in_disk(rng);
    CHECK(std::abs(s(x) - x.y()) < 1e-12);
  }
  for (int k = 0; k < 64; ++k) {
    const Vec2d x = disk().position(2 * pi * k / 64);
    CHECK(std::abs(s(x) - x.y()) < 1e-12);
  }
}

TEST_CASE("chord: Lipschitz and sign")
{
  const InterfaceCurve c = make_circular_chord(1.2, pi / 3, 81);
  const ExtendedSignedDistance s(c, disk(), pi / 3, 0.3);
  const auto [center, R] = circumcircle(c);
  const bool inside_means_A = (Vec2d(1, 0) - center).norm() < R;
  std::mt19937 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const Vec2d a = random_in_disk(rng), b = random_in_disk(rng);
    CHECK(std::abs(s(a) - s(b)) <= (a - b).norm() * (1 + 1e-9) + 1e-12);
    const double ra = (a - center).norm();
    if (std::abs(ra - R) < 1e-6) continue;
    CHECK((s(a) > 0) == ((ra < R) == inside_means_A));
    // near the arc the magnitude is the distance to the circle
    const Vec2d foot = center + R * (a - center) / ra;
    if (std::abs(ra - R) < 0.1 && foot.norm() < 0.99) CHECK(std::abs(std::abs(s(a)) - std::abs(ra - R)) < 1e-6);
  }
}

TEST_CASE("extension segments")
{
  const InterfaceCurve c = make_circular_chord(1.0, pi / 3, 81);
  const ExtendedSignedDistance s(c, disk(), pi / 3, 0.4);
  for (int e = 0; e < 2; ++e) {
    const Vec2d p = s.segment_start()[static_cast<std::size_t>(e)];
    const Vec2d d = s.segment_direction()[static_cast<std::size_t>(e)];
    CHECK(std::abs(p.norm() - 1) < 1e-9);
    CHECK(std::abs(d.norm() - 1) < 1e-12);
    // the extension leaves the domain
    CHECK((p + 0.1 * d).norm() > 1);
    // and s vanishes along it
    CHECK(std::abs(s(p + 0.15 * d)) < 1e-12);
  }
}

TEST_CASE("tangential contact is rejected")
{
  CHECK_THROWS_AS(ExtendedSignedDistance(make_diameter(disk(), 41), disk(), 1e-4, 0.5), initial_data_error);
  // leaves (1,0) along the boundary tangent
  InterfaceCurve c;
  for (int i = 0; i <= 20; ++i) {
    const double t = pi * i / 40; // quarter of the circle of radius 1/2 about (1/2, 0)
    c.nodes.push_back(Vec2d(0.5 + 0.5 * std::cos(t), 0.5 * std::sin(t)));
  }
  c.nodes.push_back(Vec2d(0.5, std::sqrt(0.75)));
  CHECK_THROWS_AS(ExtendedSignedDistance(c, disk(), pi / 2, 0.2), initial_data_error);
  CHECK_THROWS_AS(ExtendedSignedDistance(make_diameter(disk(), 41), disk(), pi / 2, 0.0), initial_data_error);
}

TEST_CASE("well-prepared profile values")
{
  const auto ops = std::make_shared<const FemOperators>(assemble(build_disk_mesh(disk(), 16)));
  const ExtendedSignedDistance s(make_diameter(disk(), 41), disk(), pi / 2, 0.5);
  // a node above the center fixes eps = its height
  std::size_t k = 0;
  for (std::size_t i = 0; i < ops->mesh.nodes.size(); ++i)
    if (ops->mesh.nodes[i].y() > 0.2 && ops->mesh.nodes[i].y() < 0.3) k = i;
  REQUIRE(k > 0);
  const double eps = ops->mesh.nodes[k].y();
  const PhaseState u = well_prepared_field(s, ops, eps, profile(), 0.25);
  CHECK(u.t == 0.25);
  CHECK(u.eps == eps);
  CHECK(u.u[static_cast<Eigen::Index>(k)] == doctest::Approx(std::tanh(1.0)).epsilon(1e-8));
  CHECK(std::abs(u.u[0]) < 1e-14); // center node on I
  CHECK(u.u.maxCoeff() <= 1.0);
  CHECK(u.u.minCoeff() >= -1.0);
  const PhaseState v = well_prepared_field(s, ops, eps / 10, profile());
  CHECK(std::abs(v.u[static_cast<Eigen::Index>(k)] - 1) < 1e-8);
}

TEST_CASE("log-log slope")
{
  const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double v : x) y.push_back(3 * v * v);
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(loglog_slope({0.1}, {1.0}));
  CHECK_THROWS(loglog_slope({0.1, 0.2}, {1.0, 0.0}));
}

TEST_CASE("preparedness sweep on coarse meshes")
{
  PreparednessOptions o;
  o.sigma_kind = SigmaKind::bump;
  o.kappa = 0.0625;
  o.eps = {0.2, 0.1, 0.05};
  o.n_r = {36, 72, 144};
  o.calibration_samples = 500;
  const auto r = verify_preparedness(make_circular_chord(1.2, pi / 3, 81), disk(), pi / 3, profile(), o);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.E_relEn >= 0);
    CHECK(row.E_bulk >= 0);
    CHECK(row.boundary > 0);
    CHECK(row.resolved);
  }
  CHECK(r.slope_boundary > 0.8);
  CHECK(r.slope_boundary < 1.2);
  CHECK(r.max_quad_change < 5e-3);
  CHECK(r.length_constant > 0);

  o.n_r = {8, 16, 32};
  o.check_quadrature = false;
  const auto coarse = verify_preparedness(make_circular_chord(1.2, pi / 3, 81), disk(), pi / 3, profile(), o);
  CHECK(coarse.warnings.size() == 3);
  o.eps = {0.1, 0.05};
  o.n_r = {8, 16};
  CHECK_THROWS_AS(verify_preparedness(make_diameter(disk(), 41), disk(), pi / 2, profile(), o), initial_data_error);
}
