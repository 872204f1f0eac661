#pragma once

#include <vector>

namespace cflow {

// Clamped cubic spline on increasing knots. Outside the knot range it continues
// with the second-order Taylor polynomial at the end knot, which keeps the
// function C^2 across the ends.
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> knots, std::vector<double> values, double slope_begin,
              double slope_end);

  double value(double t) const;
  double deriv(double t) const;
  double deriv2(double t) const;

  double front() const { return t_.front(); }
  double back() const { return t_.back(); }
  const std::vector<double>& knots() const { return t_; }
  const std::vector<double>& values() const { return y_; }
  bool empty() const { return t_.empty(); }

private:
  int segment(double t) const;
  std::vector<double> t_, y_, m_; // m: second derivatives at knots
};

// Derivative at the first knot of the cubic through the first four points
// (reversed arrays give the last knot).
double one_sided_slope(const double* t, const double* y);

} // namespace cflow
