#include "cflow/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace cflow {

CubicSpline::CubicSpline(std::vector<double> knots, std::vector<double> values,
                         double slope_begin, double slope_end)
    : t_(std::move(knots)), y_(std::move(values))
{
  const int n = static_cast<int>(t_.size());
  if (n < 2 || static_cast<int>(y_.size()) != n) throw std::invalid_argument("spline: need >= 2 knots");
  // tridiagonal system for the second derivatives (Thomas algorithm)
  std::vector<double> a(n), b(n), c(n), d(n);
  {
    const double h0 = t_[1] - t_[0];
    b[0] = h0 / 3;
    c[0] = h0 / 6;
    d[0] = (y_[1] - y_[0]) / h0 - slope_begin;
  }
  for (int i = 1; i < n - 1; ++i) {
    const double hl = t_[i] - t_[i - 1], hr = t_[i + 1] - t_[i];
    a[i] = hl / 6;
    b[i] = (hl + hr) / 3;
    c[i] = hr / 6;
    d[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
  }
  {
    const double hn = t_[n - 1] - t_[n - 2];
    a[n - 1] = hn / 6;
    b[n - 1] = hn / 3;
    d[n - 1] = slope_end - (y_[n - 1] - y_[n - 2]) / hn;
  }
  for (int i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m_.assign(n, 0.0);
  m_[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

int CubicSpline::segment(double t) const
{
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  int i = static_cast<int>(it - t_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(t_.size()) - 2);
}

double CubicSpline::value(double t) const
{
  if (t < t_.front()) {
    const double dt = t - t_.front();
    return y_.front() + deriv(t_.front()) * dt + 0.5 * m_.front() * dt * dt;
  }
  if (t > t_.back()) {
    const double dt = t - t_.back();
    return y_.back() + deriv(t_.back()) * dt + 0.5 * m_.back() * dt * dt;
  }
  const int i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double A = (t_[i + 1] - t) / h, B = (t - t_[i]) / h;
  return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6;
}

double CubicSpline::deriv(double t) const
{
  if (t < t_.front()) return deriv(t_.front()) + m_.front() * (t - t_.front());
  if (t > t_.back()) return deriv(t_.back()) + m_.back() * (t - t_.back());
  const int i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double A = (t_[i + 1] - t) / h, B = (t - t_[i]) / h;
  return (y_[i + 1] - y_[i]) / h + (-(3 * A * A - 1) * m_[i] + (3 * B * B - 1) * m_[i + 1]) * h / 6;
}

double CubicSpline::deriv2(double t) const
{
  if (t < t_.front()) return m_.front();
  if (t > t_.back()) return m_.back();
  const int i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double A = (t_[i + 1] - t) / h, B = (t - t_[i]) / h;
  return A * m_[i] + B * m_[i + 1];
}

double one_sided_slope(const double* t, const double* y)
{
  // derivative of the Lagrange cubic through (t[k], y[k]), k = 0..3, at t[0]
  double s = 0.0;
  for (int j = 0; j < 4; ++j) {
    // l_j'(t0)
    double dl = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m == j) continue;
      double prod = 1.0 / (t[j] - t[m]);
      for (int k = 0; k < 4; ++k) {
        if (k == j || k == m) continue;
        prod *= (t[0] - t[k]) / (t[j] - t[k]);
      }
      dl += prod;
    }
    s += y[j] * dl;
  }
  return s;
}

} // namespace cflow
