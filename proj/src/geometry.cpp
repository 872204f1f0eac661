#include "cflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cflow {

namespace {

constexpr std::array<double, 5> gl_x{-0.9061798459386640, -0.5384693101056831, 0.0,
                                     0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> gl_w{0.2369268850561891, 0.4786286704993665,
                                     0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};

template <typename F>
double gauss(F&& f, double a, double b)
{
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += gl_w[i] * f(m + h * gl_x[i]);
  return s * h;
}

bool segments_cross(const Vec2d& a, const Vec2d& b, const Vec2d& c, const Vec2d& d)
{
  const double d1 = cross<double>(b - a, c - a), d2 = cross<double>(b - a, d - a);
  const double d3 = cross<double>(d - c, a - c), d4 = cross<double>(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double closest_on_segment(const Vec2d& a, const Vec2d& b, const Vec2d& x)
{
  const Vec2d ab = b - a;
  const double l2 = ab.squaredNorm();
  if (l2 == 0.0) return 0.0;
  return std::clamp((x - a).dot(ab) / l2, 0.0, 1.0);
}

} // namespace

// ---------------------------------------------------------------- boundary

DomainBoundary DomainBoundary::circle(double radius, Vec2d center)
{
  if (!(radius > 0)) throw geometry_error("domain: radius must be positive");
  return DomainBoundary(radius, radius, center);
}

DomainBoundary DomainBoundary::ellipse(double a, double b, Vec2d center)
{
  if (!(a > 0) || !(b > 0)) throw geometry_error("domain: semi-axes must be positive");
  return DomainBoundary(a, b, center);
}

Vec2d DomainBoundary::position(double th) const
{
  return c_ + Vec2d(a_ * std::cos(th), b_ * std::sin(th));
}

Vec2d DomainBoundary::d1(double th) const { return Vec2d(-a_ * std::sin(th), b_ * std::cos(th)); }

Vec2d DomainBoundary::d2(double th) const { return Vec2d(-a_ * std::cos(th), -b_ * std::sin(th)); }

Framed DomainBoundary::frame(double th) const
{
  Framed f;
  f.point = position(th);
  const Vec2d v = d1(th);
  const double sp = v.norm();
  f.tangent = v / sp;
  f.normal = rot90<double>(f.tangent);
  f.curvature = d2(th).dot(f.normal) / (sp * sp);
  return f;
}

BoundaryProjection DomainBoundary::project(const Vec2d& x) const
{
  BoundaryProjection p;
  const Vec2d y = x - c_;
  if (a_ == b_) {
    const double r = y.norm();
    p.theta = r > 0 ? std::atan2(y.y(), y.x()) : 0.0;
    p.foot = position(p.theta);
    p.s = a_ - r;
    return p;
  }
  // coarse scan, then damped Newton on (x(theta) - x) . x'(theta)
  double best = 0.0, best_d = std::numeric_limits<double>::max();
  const int scan = 128;
  for (int i = 0; i < scan; ++i) {
    const double th = 2 * pi * i / scan;
    const double d = (position(th) - x).squaredNorm();
    if (d < best_d) { best_d = d; best = th; }
  }
  double th = best;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const Vec2d r = position(th) - x, v = d1(th), w = d2(th);
    const double g = r.dot(v), dg = v.squaredNorm() + r.dot(w);
    double step = dg > 0 ? -g / dg : -g / v.squaredNorm();
    step = std::clamp(step, -0.2, 0.2);
    th += step;
    if (std::abs(step) < 1e-15) { converged = true; break; }
  }
  if (!converged) {
    std::ostringstream os;
    os << "projection to boundary did not converge for x = (" << x.x() << ", " << x.y() << ")";
    throw geometry_error(os.str());
  }
  p.theta = std::remainder(th, 2 * pi);
  p.foot = position(p.theta);
  const Framed f = frame(p.theta);
  const double dist = (x - p.foot).norm();
  p.s = (x - p.foot).dot(f.normal) >= 0 ? dist : -dist;
  return p;
}

bool DomainBoundary::contains(const Vec2d& x) const
{
  const Vec2d y = x - c_;
  return (y.x() / a_) * (y.x() / a_) + (y.y() / b_) * (y.y() / b_) <= 1.0;
}

double DomainBoundary::max_curvature() const
{
  const double lo = std::min(a_, b_), hi = std::max(a_, b_);
  return hi / (lo * lo);
}

double DomainBoundary::perimeter() const
{
  const int n = 256;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += gauss([&](double th) { return d1(th).norm(); }, 2 * pi * i / n, 2 * pi * (i + 1) / n);
  return s;
}

std::string DomainBoundary::describe() const
{
  std::ostringstream os;
  if (a_ == b_)
    os << "circle(r=" << a_ << ")";
  else
    os << "ellipse(a=" << a_ << ";b=" << b_ << ")";
  return os.str();
}

// ---------------------------------------------------------------- curves

double InterfaceCurve::length() const
{
  double l = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) l += (nodes[i] - nodes[i - 1]).norm();
  return l;
}

double InterfaceCurve::min_spacing() const
{
  double h = std::numeric_limits<double>::max();
  for (std::size_t i = 1; i < nodes.size(); ++i) h = std::min(h, (nodes[i] - nodes[i - 1]).norm());
  return h;
}

double InterfaceCurve::max_spacing() const
{
  double h = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) h = std::max(h, (nodes[i] - nodes[i - 1]).norm());
  return h;
}

bool InterfaceCurve::self_intersects() const
{
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 2; j + 1 < n; ++j)
      if (segments_cross(nodes[i], nodes[i + 1], nodes[j], nodes[j + 1])) return true;
  return false;
}

std::optional<EndTangents> contact_tangents(const InterfaceCurve& curve,
                                            const DomainBoundary& domain, double alpha)
{
  if (curve.size() < 3) return std::nullopt;
  auto one = [&](const Vec2d& p, const Vec2d& q1, const Vec2d& q2, double dir) {
    // second-order one-sided tangent, oriented along the curve
    Vec2d guess = dir * (-3.0 * p + 4.0 * q1 - q2);
    guess.normalize();
    const Framed b = domain.frame(domain.project(p).theta);
    const Vec2d plus = rotation(alpha) * b.tangent, minus = rotation(-alpha) * b.tangent;
    return plus.dot(guess) >= minus.dot(guess) ? plus : minus;
  };
  const auto& x = curve.nodes;
  const std::size_t n = x.size();
  EndTangents t;
  t.begin = one(x[0], x[1], x[2], 1.0);
  t.end = one(x[n - 1], x[n - 2], x[n - 3], -1.0);
  return t;
}

InterfaceSpline::InterfaceSpline(const InterfaceCurve& curve, std::optional<EndTangents> tangents,
                                 double extension)
    : ext_(extension)
{
  const std::size_t n = curve.size();
  if (n < 4) throw geometry_error("interface: need at least 4 nodes");
  t_.resize(n);
  t_[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double h = (curve.nodes[i] - curve.nodes[i - 1]).norm();
    if (!(h > 0)) throw geometry_error("interface: repeated node");
    t_[i] = t_[i - 1] + h;
  }
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = curve.nodes[i].x();
    ys[i] = curve.nodes[i].y();
  }
  Vec2d s0, s1;
  if (tangents) {
    s0 = tangents->begin.normalized();
    s1 = tangents->end.normalized();
  } else {
    std::array<double, 4> tt, xx, yy;
    for (int k = 0; k < 4; ++k) { tt[k] = t_[k]; xx[k] = xs[k]; yy[k] = ys[k]; }
    s0 = Vec2d(one_sided_slope(tt.data(), xx.data()), one_sided_slope(tt.data(), yy.data()));
    for (int k = 0; k < 4; ++k) { tt[k] = t_[n - 1 - k]; xx[k] = xs[n - 1 - k]; yy[k] = ys[n - 1 - k]; }
    s1 = Vec2d(one_sided_slope(tt.data(), xx.data()), one_sided_slope(tt.data(), yy.data()));
  }
  x_ = CubicSpline(t_, xs, s0.x(), s1.x());
  y_ = CubicSpline(t_, ys, s0.y(), s1.y());

  std::vector<double> hs(n);
  for (std::size_t i = 0; i < n; ++i) hs[i] = geometric_curvature(t_[i]);
  std::array<double, 4> tt, hh;
  for (int k = 0; k < 4; ++k) { tt[k] = t_[k]; hh[k] = hs[k]; }
  const double dh0 = one_sided_slope(tt.data(), hh.data());
  for (int k = 0; k < 4; ++k) { tt[k] = t_[n - 1 - k]; hh[k] = hs[n - 1 - k]; }
  const double dh1 = one_sided_slope(tt.data(), hh.data());
  h_ = CubicSpline(t_, hs, dh0, dh1);

  cum_len_.assign(n, 0.0);
  cum_h2_.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cum_len_[i] = cum_len_[i - 1] + gauss([&](double t) { return speed(t); }, t_[i - 1], t_[i]);
    cum_h2_[i] = cum_h2_[i - 1] + gauss([&](double t) {
                   const double h = curvature(t);
                   return h * h * speed(t);
                 }, t_[i - 1], t_[i]);
  }

  // dense seed polyline
  const double L = t_.back();
  const int ne = 24;
  for (int k = ne; k >= 1; --k) {
    const double t = -ext_ * k / ne;
    sample_t_.push_back(t);
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (int k = 0; k < 4; ++k) sample_t_.push_back(t_[i] + (t_[i + 1] - t_[i]) * k / 4.0);
  sample_t_.push_back(L);
  for (int k = 1; k <= ne; ++k) sample_t_.push_back(L + ext_ * k / ne);
  samples_.reserve(sample_t_.size());
  for (double t : sample_t_) samples_.push_back(position(t));

  r_tube_ = estimate_interface_radius(*this);
}

Vec2d InterfaceSpline::position(double t) const { return Vec2d(x_.value(t), y_.value(t)); }
Vec2d InterfaceSpline::d1(double t) const { return Vec2d(x_.deriv(t), y_.deriv(t)); }
Vec2d InterfaceSpline::d2(double t) const { return Vec2d(x_.deriv2(t), y_.deriv2(t)); }

double InterfaceSpline::geometric_curvature(double t) const
{
  const Vec2d v = d1(t), w = d2(t);
  const double sp = v.norm();
  return cross<double>(v, w) / (sp * sp * sp);
}

Framed InterfaceSpline::frame(double t) const
{
  Framed f;
  f.point = position(t);
  f.tangent = d1(t).normalized();
  f.normal = rot90<double>(f.tangent);
  f.curvature = curvature(t);
  return f;
}

double InterfaceSpline::cumulative(const std::vector<double>& cum, double t, bool squared_h) const
{
  auto integrand = [&](double u) {
    if (!squared_h) return speed(u);
    const double h = curvature(u);
    return h * h * speed(u);
  };
  if (t <= 0.0) return -gauss(integrand, t, 0.0);
  if (t >= t_.back()) return cum.back() + gauss(integrand, t_.back(), t);
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
  return cum[i] + gauss(integrand, t_[i], t);
}

double InterfaceSpline::arclength(double t0, double t1) const
{
  return cumulative(cum_len_, t1, false) - cumulative(cum_len_, t0, false);
}

double InterfaceSpline::integral_h2(double t0, double t1) const
{
  return cumulative(cum_h2_, t1, true) - cumulative(cum_h2_, t0, true);
}

double InterfaceSpline::param_at_arclength(double s) const
{
  // bracket by knots, then Newton
  const auto it = std::upper_bound(cum_len_.begin(), cum_len_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::clamp<long>(it - cum_len_.begin() - 1, 0,
                                                           static_cast<long>(t_.size()) - 2));
  double t = t_[i] + (s - cum_len_[i]) / std::max(cum_len_[i + 1] - cum_len_[i], 1e-300) *
                         (t_[i + 1] - t_[i]);
  for (int it2 = 0; it2 < 30; ++it2) {
    const double f = cumulative(cum_len_, t, false) - s;
    const double dt = -f / speed(t);
    t += dt;
    if (std::abs(dt) < 1e-15 * (1 + std::abs(t))) break;
  }
  return t;
}

double InterfaceSpline::seed_param(const Vec2d& x, bool extended) const
{
  double best_t = 0.0, best_d = std::numeric_limits<double>::max();
  for (std::size_t k = 0; k + 1 < samples_.size(); ++k) {
    const double ta = sample_t_[k], tb = sample_t_[k + 1];
    if (!extended && (tb <= 0.0 || ta >= t_.back())) continue;
    const double lam = closest_on_segment(samples_[k], samples_[k + 1], x);
    const Vec2d q = samples_[k] + lam * (samples_[k + 1] - samples_[k]);
    const double d = (q - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_t = ta + lam * (tb - ta);
    }
  }
  return best_t;
}

double InterfaceSpline::newton(const Vec2d& x, double t, double lo, double hi) const
{
  for (int it = 0; it < 60; ++it) {
    const Vec2d r = position(t) - x, v = d1(t), w = d2(t);
    const double g = r.dot(v), dg = v.squaredNorm() + r.dot(w);
    double step = dg > 0.1 * v.squaredNorm() ? -g / dg : -g / v.squaredNorm();
    const double tn = std::clamp(t + step, lo, hi);
    step = tn - t;
    t = tn;
    if (std::abs(step) < 1e-15 * (1 + std::abs(t))) break;
  }
  return t;
}

InterfaceProjection InterfaceSpline::project(const Vec2d& x) const
{
  InterfaceProjection p;
  const double lo = -ext_, hi = t_.back() + ext_;
  p.t = newton(x, seed_param(x, true), lo, hi);
  p.foot = position(p.t);
  const Framed f = frame(p.t);
  p.s = (x - p.foot).dot(f.normal);
  const bool interior = p.t > lo + 1e-12 && p.t < hi - 1e-12;
  p.in_tube = interior && std::abs(p.s) < r_tube_;
  return p;
}

double InterfaceSpline::distance(const Vec2d& x) const
{
  const double t = newton(x, seed_param(x, false), 0.0, t_.back());
  return (position(t) - x).norm();
}

double InterfaceSpline::max_abs_curvature() const
{
  double m = 0.0;
  for (double h : h_.values()) m = std::max(m, std::abs(h));
  return m;
}

double estimate_interface_radius(const InterfaceSpline& spline)
{
  const double hmax = spline.max_abs_curvature();
  const double ends = (spline.position(spline.param_end()) - spline.position(0.0)).norm();
  double r = std::min(1.0, 0.5 * ends);
  if (hmax > 0) r = std::min(r, 0.5 / hmax);
  return r;
}

RegionIndicator::RegionIndicator(const InterfaceSpline& spline, const DomainBoundary& domain,
                                 int samples_per_unit)
{
  const double L = spline.param_end();
  const int nc = std::max(16, static_cast<int>(samples_per_unit * L));
  for (int i = 0; i <= nc; ++i) poly_.push_back(spline.position(L * i / nc));
  double th0 = domain.project(spline.position(L)).theta;
  double th1 = domain.project(spline.position(0.0)).theta;
  while (th1 <= th0) th1 += 2 * pi;
  const int nb = std::max(16, static_cast<int>(samples_per_unit * (th1 - th0)));
  for (int i = 1; i < nb; ++i) poly_.push_back(domain.position(th0 + (th1 - th0) * i / nb));

  double y1 = y0_ = poly_.front().y();
  for (const Vec2d& q : poly_) {
    y0_ = std::min(y0_, q.y());
    y1 = std::max(y1, q.y());
  }
  const int ns = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(poly_.size()))));
  dy_ = std::max(y1 - y0_, 1e-300) / ns;
  slabs_.assign(static_cast<std::size_t>(ns), {});
  const int n = static_cast<int>(poly_.size());
  for (int i = 0; i < n; ++i) {
    const Vec2d& a = poly_[static_cast<std::size_t>(i)];
    const Vec2d& b = poly_[static_cast<std::size_t>((i + n - 1) % n)];
    const int lo = std::clamp(static_cast<int>(std::floor((std::min(a.y(), b.y()) - y0_) / dy_)), 0, ns - 1);
    const int hi = std::clamp(static_cast<int>(std::floor((std::max(a.y(), b.y()) - y0_) / dy_)), 0, ns - 1);
    for (int k = lo; k <= hi; ++k) slabs_[static_cast<std::size_t>(k)].push_back(i);
  }
}

bool RegionIndicator::inside(const Vec2d& x) const
{
  bool in = false;
  if (slabs_.empty()) return false;
  const double k = std::floor((x.y() - y0_) / dy_);
  if (k < 0 || k >= static_cast<double>(slabs_.size())) return false;
  const std::size_t n = poly_.size();
  for (int e : slabs_[static_cast<std::size_t>(k)]) {
    const auto i = static_cast<std::size_t>(e);
    const Vec2d& a = poly_[i];
    const Vec2d& b = poly_[(i + n - 1) % n];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (x.x() < xc) in = !in;
    }
  }
  return in;
}

InterfaceCurve make_diameter(const DomainBoundary& domain, int nodes)
{
  InterfaceCurve c;
  const Vec2d a = domain.position(pi), b = domain.position(0.0);
  for (int i = 0; i < nodes; ++i) c.nodes.push_back(a + (b - a) * (double(i) / (nodes - 1)));
  return c;
}

InterfaceCurve make_circular_chord(double phi, double alpha, int nodes)
{
  const double cp = std::cos(phi), sp = std::sin(phi), ca = std::cos(alpha);
  if (!(sp > ca)) throw geometry_error("chord: opening too small for this contact angle");
  // center (a,0) on (cos phi, 1/cos phi]; angle residual decreases in a
  auto g = [&](double a) {
    const double r = std::sqrt(1 - 2 * a * cp + a * a);
    return (1 - a * cp) / r - ca;
  };
  double lo = cp + 1e-12, hi = cp > 0 ? 1.0 / cp : 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  const double R = std::sqrt(1 - 2 * a * cp + a * a);
  const double b0 = std::atan2(sp, cp - a);
  const double b1 = 2 * pi - b0;
  InterfaceCurve c;
  for (int i = 0; i < nodes; ++i) {
    const double b = b0 + (b1 - b0) * i / (nodes - 1);
    c.nodes.emplace_back(a + R * std::cos(b), R * std::sin(b));
  }
  c.nodes.front() = Vec2d(cp, sp);
  c.nodes.back() = Vec2d(cp, -sp);
  return c;
}

void write_curve(std::ostream& os, const InterfaceCurve& curve)
{
  os << "# t=" << std::setprecision(17) << curve.time << "\n";
  for (const auto& p : curve.nodes) os << p.x() << " " << p.y() << "\n";
}

InterfaceCurve read_curve(std::istream& is)
{
  InterfaceCurve c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("t=");
      if (pos != std::string::npos) c.time = std::stod(line.substr(pos + 2));
      continue;
    }
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) throw geometry_error("curve file: bad line " + std::to_string(lineno));
    c.nodes.emplace_back(x, y);
  }
  return c;
}

void save_curve(const std::string& path, const InterfaceCurve& curve)
{
  std::ofstream os(path);
  if (!os) throw geometry_error("cannot write " + path);
  write_curve(os, curve);
}

InterfaceCurve load_curve(const std::string& path)
{
  std::ifstream is(path);
  if (!is) throw geometry_error("cannot read " + path);
  return read_curve(is);
}

} // namespace cflow
