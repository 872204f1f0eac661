#include "cflow/geometry.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace cflow;

TEST_CASE("unit circle frame")
{
  const auto d = DomainBoundary::circle();
  const auto f = d.frame(0.0);
  CHECK((f.point - Vec2d(1, 0)).norm() < 1e-15);
  CHECK((f.normal - Vec2d(-1, 0)).norm() < 1e-15);
  CHECK(f.curvature == doctest::Approx(1.0));
  for (double th = 0; th < 6.3; th += 0.3) {
    const auto g = d.frame(th);
    CHECK(std::abs(g.normal.norm() - 1) < 1e-15);
    CHECK(std::abs(g.normal.dot(g.tangent)) < 1e-15);
    CHECK((g.tangent - rot90_cw<double>(g.normal)).norm() == 0.0);
  }
}

TEST_CASE("boundary curvature is minus the laplacian of the signed distance")
{
  const auto d = DomainBoundary::circle();
  const double h = 1e-3;
  const Vec2d x(0.6, 0.0);
  const double lap = (d.signed_distance(x + Vec2d(h, 0)) + d.signed_distance(x - Vec2d(h, 0)) +
                      d.signed_distance(x + Vec2d(0, h)) + d.signed_distance(x - Vec2d(0, h)) -
                      4 * d.signed_distance(x)) / (h * h);
  // -lap s = 1/|x|, tends to H = 1 at the boundary
  CHECK(-lap == doctest::Approx(1 / 0.6).epsilon(1e-5));
}

TEST_CASE("ellipse curvature")
{
  const auto d = DomainBoundary::ellipse(1.2, 1.0);
  CHECK(d.frame(0.0).curvature == doctest::Approx(1.2 / (1.0 * 1.0)).epsilon(1e-14));
  CHECK(d.frame(pi / 2).curvature == doctest::Approx(1.0 / (1.2 * 1.2)).epsilon(1e-14));
}

TEST_CASE("boundary projection")
{
  const auto d = DomainBoundary::circle();
  auto p = d.project(Vec2d(0.5, 0));
  CHECK(p.theta == 0.0);
  CHECK(p.s == doctest::Approx(0.5));
  p = d.project(Vec2d(0, 0.9));
  CHECK(p.s == doctest::Approx(0.1));

  const auto e = DomainBoundary::ellipse(1.2, 1.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> th(0, 2 * pi), off(-0.2, 0.2);
  for (int i = 0; i < 200; ++i) {
    const double t = th(rng);
    const auto f = e.frame(t);
    const Vec2d x = f.point + off(rng) * f.normal;
    const auto q = e.project(x);
    const auto g = e.frame(q.theta);
    CHECK(std::abs((x - q.foot).dot(g.tangent)) < 1e-10);
    CHECK(std::abs((x - q.foot).norm() - std::abs(q.s)) < 1e-14);
    // idempotence
    CHECK(std::abs(e.project(q.foot).s) < 1e-10);
    // frame consistency
    if (std::abs(q.s) > 1e-6) CHECK(std::abs(g.normal.dot((x - q.foot).normalized()) - (q.s > 0 ? 1 : -1)) < 1e-8);
    // |grad s| = 1 along the normal
    const double dl = 1e-4;
    const double ds = (e.signed_distance(x + dl * g.normal) - e.signed_distance(x - dl * g.normal)) / (2 * dl);
    CHECK(std::abs(ds - 1) < 5e-3);
  }
}

TEST_CASE("diameter interface")
{
  const auto d = DomainBoundary::circle();
  const InterfaceSpline s(make_diameter(d, 41));
  for (double t = 0; t <= 2; t += 0.1) CHECK(std::abs(s.curvature(t)) < 1e-12);
  const auto p = s.project(Vec2d(0.3, 0.2));
  CHECK(p.s == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p.in_tube);
  CHECK(std::abs(s.curvature_slope(0.7)) < 1e-12);
}

TEST_CASE("circular arc curvature")
{
  const double R = 0.5;
  InterfaceCurve c;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double b = -1.0 + 2.0 * i / (n - 1);
    // counter-clockwise traversal: n = J tau points to the center
    c.nodes.emplace_back(R * std::cos(b), R * std::sin(b));
  }
  const InterfaceSpline s(c);
  // interior knots: the free ends use a one-sided tangent estimate
  for (std::size_t i = 7; i + 7 < s.num_knots(); i += 7) {
    CHECK(std::abs(s.curvature(s.knot(i)) - 1 / R) < 1e-4);
    CHECK(std::abs(s.curvature_slope(s.knot(i))) < 5e-3);
  }
  // signed distance: positive toward the center
  const auto p = s.project(Vec2d(0.3, 0.0));
  CHECK(p.s == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(std::abs(s.total_arclength() - 2 * R) < 1e-6);
  // integral of H^2 ds over the whole arc
  CHECK(std::abs(s.integral_h2(0, s.param_end()) - 2 * R / (R * R)) < 1e-3);
}

TEST_CASE("sinusoid curvature slope matches finite differences of nodal curvature")
{
  InterfaceCurve c;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const double x = -1 + 2.0 * i / (n - 1);
    c.nodes.emplace_back(x, 0.1 * std::sin(3 * x));
  }
  const InterfaceSpline s(c);
  for (std::size_t i = 40; i + 40 < s.num_knots(); i += 37) {
    const double t = s.knot(i), h = 0.01;
    auto H = [&](double u) { return s.curvature(u); };
    const double fd = (-H(t + 2 * h) + 8 * H(t + h) - 8 * H(t - h) + H(t - 2 * h)) / (12 * h);
    CHECK(std::abs(fd / s.speed(t) - s.curvature_slope(t)) < 1e-3);
  }
}

TEST_CASE("interface signed distance has unit gradient")
{
  InterfaceCurve c;
  for (int i = 0; i < 100; ++i) {
    const double x = -0.9 + 1.8 * i / 99;
    c.nodes.emplace_back(x, 0.2 * x * x);
  }
  const InterfaceSpline s(c);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.6, 0.6), v(-0.15, 0.15);
  for (int i = 0; i < 100; ++i) {
    const double t = s.project(Vec2d(u(rng), 0.2 * 0.3)).t;
    const auto f = s.frame(t);
    const Vec2d x = f.point + v(rng) * f.normal;
    const auto p = s.project(x);
    REQUIRE(p.in_tube);
    const double dl = 1e-4;
    const double ds = (s.project(x + dl * f.normal).s - s.project(x - dl * f.normal).s) / (2 * dl);
    CHECK(std::abs(ds - 1) < 5e-3);
    CHECK(std::abs(s.project(p.foot).s) < 1e-10);
  }
}

TEST_CASE("circular chord meets the circle at the requested angle")
{
  const auto d = DomainBoundary::circle();
  for (double alpha : {pi / 2, pi / 3}) {
    const auto c = make_circular_chord(1.0, alpha, 101);
    const auto tg = contact_tangents(c, d, alpha);
    const InterfaceSpline s(c, tg);
    for (double t : {0.0, s.param_end()}) {
      const auto f = s.frame(t);
      const auto b = d.frame(d.project(f.point).theta);
      CHECK(std::abs(d.project(f.point).s) < 1e-12);
      CHECK(std::abs(f.normal.dot(b.normal) - std::cos(alpha)) < 1e-10);
    }
    // the arc's own curvature is constant
    for (std::size_t i = 3; i + 3 < s.num_knots(); i += 10)
      CHECK(std::abs(s.curvature(s.knot(i)) - s.curvature(s.knot(50))) < 1e-4);
  }
}

TEST_CASE("region indicator for the diameter")
{
  const auto d = DomainBoundary::circle();
  const InterfaceSpline s(make_diameter(d, 21));
  const RegionIndicator r(s, d);
  CHECK(r.inside(Vec2d(0.1, 0.5)));
  CHECK_FALSE(r.inside(Vec2d(0.1, -0.5)));
}

TEST_CASE("curve round trip")
{
  InterfaceCurve c = make_diameter(DomainBoundary::circle(), 5);
  c.time = 0.125;
  std::stringstream ss;
  write_curve(ss, c);
  const auto r = read_curve(ss);
  CHECK(r.time == 0.125);
  REQUIRE(r.size() == 5);
  CHECK((r.nodes[2] - c.nodes[2]).norm() == 0.0);
  CHECK_FALSE(c.self_intersects());
}
