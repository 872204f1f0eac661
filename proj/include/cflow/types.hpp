#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace cflow {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;

inline constexpr double pi = std::numbers::pi;

// Counter-clockwise rotation by 90 degrees.
template <typename Scalar>
Vec2<Scalar> rot90(const Vec2<Scalar>& v)
{
  return Vec2<Scalar>(-v.y(), v.x());
}

// Clockwise rotation by 90 degrees, i.e. J^T.
template <typename Scalar>
Vec2<Scalar> rot90_cw(const Vec2<Scalar>& v)
{
  return Vec2<Scalar>(v.y(), -v.x());
}

template <typename Scalar>
Mat2<Scalar> rotation(Scalar angle)
{
  using std::cos;
  using std::sin;
  Mat2<Scalar> r;
  r << cos(angle), -sin(angle), sin(angle), cos(angle);
  return r;
}

template <typename Scalar>
Scalar cross(const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
  return a.x() * b.y() - a.y() * b.x();
}

// Signed angle from a to b in (-pi, pi].
template <typename Scalar>
Scalar signed_angle(const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
  using std::atan2;
  return atan2(cross(a, b), a.dot(b));
}

template <typename Scalar>
Mat2<Scalar> outer(const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
  return a * b.transpose();
}

// Quintic smoothstep s^3 (10 - 15 s + 6 s^2) on [0,1], clamped outside.
template <typename Scalar>
Scalar smoothstep5(Scalar s)
{
  if (s <= Scalar(0)) return Scalar(0);
  if (s >= Scalar(1)) return Scalar(1);
  return s * s * s * (Scalar(10) + s * (Scalar(-15) + Scalar(6) * s));
}

template <typename Scalar>
Scalar smoothstep5_deriv(Scalar s)
{
  if (s <= Scalar(0) || s >= Scalar(1)) return Scalar(0);
  const Scalar t = s * (Scalar(1) - s);
  return Scalar(30) * t * t;
}

} // namespace cflow
