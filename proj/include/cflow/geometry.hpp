#pragma once

#include "cflow/spline.hpp"
#include "cflow/types.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class geometry_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Point, unit normal, unit tangent tau = J^T n and the curvature w.r.t. n.
template <typename Scalar>
struct Frame {
  Vec2<Scalar> point;
  Vec2<Scalar> normal;
  Vec2<Scalar> tangent;
  Scalar curvature{};
};

using Framed = Frame<double>;

struct BoundaryProjection {
  double theta = 0.0;
  double s = 0.0; // signed distance, positive inside
  Vec2d foot;
};

// Smooth closed boundary x(theta) = c + (a cos theta, b sin theta), counter-clockwise,
// so the interior lies to the left and the inner normal is J tau.
class DomainBoundary {
public:
  static DomainBoundary circle(double radius = 1.0, Vec2d center = Vec2d::Zero());
  static DomainBoundary ellipse(double a, double b, Vec2d center = Vec2d::Zero());

  Vec2d position(double theta) const;
  Vec2d d1(double theta) const;
  Vec2d d2(double theta) const;

  // n points into the domain, H = -Laplacian of the signed distance.
  Framed frame(double theta) const;
  BoundaryProjection project(const Vec2d& x) const;
  double signed_distance(const Vec2d& x) const { return project(x).s; }
  bool contains(const Vec2d& x) const;

  double max_curvature() const;
  double tubular_radius() const { return 0.5 / max_curvature(); }
  double perimeter() const;
  bool is_circle() const { return a_ == b_; }
  double semi_axis_a() const { return a_; }
  double semi_axis_b() const { return b_; }
  const Vec2d& center() const { return c_; }
  std::string describe() const;

private:
  DomainBoundary(double a, double b, Vec2d c) : a_(a), b_(b), c_(c) {}
  double a_, b_;
  Vec2d c_;
};

// Ordered polyline for the interface. The phase A lies to the left of the
// direction of travel, so n_I = J tau_I points into A.
struct InterfaceCurve {
  std::vector<Vec2d> nodes;
  double time = 0.0;

  std::size_t size() const { return nodes.size(); }
  const Vec2d& front() const { return nodes.front(); }
  const Vec2d& back() const { return nodes.back(); }
  double length() const;
  double min_spacing() const;
  double max_spacing() const;
  bool self_intersects() const;
};

// Endpoint tangents forced by the contact angle: tau_I(p) = R tau_dO(p) with R the
// rotation by +-alpha that best matches the polyline's one-sided tangent.
struct EndTangents {
  Vec2d begin, end;
};
std::optional<EndTangents> contact_tangents(const InterfaceCurve& curve,
                                            const DomainBoundary& domain, double alpha);

struct InterfaceProjection {
  double t = 0.0;    // spline parameter (chord length)
  double s = 0.0;    // signed distance, positive on the n_I side
  Vec2d foot;
  bool in_tube = false;
};

// C^2 interpolation of an interface curve by clamped cubic splines in the
// chord-length parameter, extended past both ends.
class InterfaceSpline {
public:
  InterfaceSpline() = default;
  explicit InterfaceSpline(const InterfaceCurve& curve,
                           std::optional<EndTangents> tangents = std::nullopt,
                           double extension = 0.6);

  double param_begin() const { return 0.0; }
  double param_end() const { return t_.back(); }
  double extension() const { return ext_; }
  double knot(std::size_t i) const { return t_[i]; }
  std::size_t num_knots() const { return t_.size(); }

  Vec2d position(double t) const;
  Vec2d d1(double t) const;
  Vec2d d2(double t) const;
  double speed(double t) const { return d1(t).norm(); }
  Framed frame(double t) const;
  double curvature(double t) const { return h_.value(t); }
  // tau . grad H, the derivative of H in arclength
  double curvature_slope(double t) const { return h_.deriv(t) / speed(t); }
  // curvature of the position spline itself (used for nodal values)
  double geometric_curvature(double t) const;

  double arclength(double t0, double t1) const;
  double integral_h2(double t0, double t1) const;
  // parameter at which arclength from 0 equals s
  double param_at_arclength(double s) const;
  double total_arclength() const { return arclength(0.0, t_.back()); }

  InterfaceProjection project(const Vec2d& x) const;
  // distance to the closed curve (parameter restricted to [0, L])
  double distance(const Vec2d& x) const;

  double tubular_radius() const { return r_tube_; }
  void set_tubular_radius(double r) { r_tube_ = r; }
  double max_abs_curvature() const;

private:
  double seed_param(const Vec2d& x, bool extended) const;
  double newton(const Vec2d& x, double t, double lo, double hi) const;
  double cumulative(const std::vector<double>& cum, double t, bool squared_h) const;

  std::vector<double> t_;
  CubicSpline x_, y_, h_;
  double ext_ = 0.6;
  double r_tube_ = 1.0;
  std::vector<double> cum_len_, cum_h2_;
  std::vector<Vec2d> samples_;     // dense polyline for seeding, incl. extensions
  std::vector<double> sample_t_;
};

double estimate_interface_radius(const InterfaceSpline& spline);

// Point-in-A test: polygon made of the curve and the boundary arc traversed
// counter-clockwise from the last node back to the first.
class RegionIndicator {
public:
  RegionIndicator() = default;
  RegionIndicator(const InterfaceSpline& spline, const DomainBoundary& domain,
                  int samples_per_unit = 400);
  bool inside(const Vec2d& x) const;

private:
  std::vector<Vec2d> poly_;
  // edges (i-1, i) bucketed by the horizontal slabs they cross
  double y0_ = 0.0, dy_ = 1.0;
  std::vector<std::vector<int>> slabs_;
};

InterfaceCurve make_diameter(const DomainBoundary& domain, int nodes);
// Circular arc meeting the unit circle at angle alpha at (cos phi, +-sin phi),
// phase A being the cap on the side of (1,0).
InterfaceCurve make_circular_chord(double half_opening, double alpha, int nodes);

void write_curve(std::ostream& os, const InterfaceCurve& curve);
InterfaceCurve read_curve(std::istream& is);
void save_curve(const std::string& path, const InterfaceCurve& curve);
InterfaceCurve load_curve(const std::string& path);

} // namespace cflow
