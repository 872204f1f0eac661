#include "cflow/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace cflow {

namespace {

// 5-point Gauss-Legendre on [-1,1]
constexpr std::array<double, 5> gl_x{-0.9061798459386640, -0.5384693101056831, 0.0,
                                     0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> gl_w{0.2369268850561891, 0.4786286704993665,
                                     0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};

double gauss_panel(const ScalarFn& f, double a, double b)
{
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += gl_w[i] * f(m + h * gl_x[i]);
  return s * h;
}

double hermite(double t, double h, double y0, double y1, double d0, double d1)
{
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * h * d1;
}

double hermite_deriv(double t, double h, double y0, double y1, double d0, double d1)
{
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 +
          (3 * t2 - 2 * t) * h * d1) /
         h;
}

std::string fmt_point(const char* what, double r, double value)
{
  std::ostringstream os;
  os.precision(10);
  os << what << " at r = " << r << " (value " << value << ")";
  return os.str();
}

} // namespace

DoubleWell make_quartic_well()
{
  DoubleWell w;
  w.name = "W(u)=0.5*(1-u^2)^2";
  w.eval = [](double u) { const double a = 1 - u * u; return 0.5 * a * a; };
  w.deriv = [](double u) { return -2 * u * (1 - u * u); };
  w.second_deriv = [](double u) { return 6 * u * u - 2; };
  w.convex_eval = [](double u) { return 0.5 * u * u * u * u + 0.25; };
  w.convex_deriv = [](double u) { return 2 * u * u * u; };
  w.convex_second = [](double u) { return 6 * u * u; };
  w.concave_eval = [](double u) { return -u * u + 0.25; };
  w.concave_deriv = [](double u) { return -2 * u; };
  w.concave_second = [](double) { return -2.0; };
  w.speed = [](double u) { return std::abs(1 - u * u); };
  w.speed_deriv = [](double u) { return std::abs(u) <= 1 ? -2 * u : 2 * u; };
  w.growth_exponent = 4.0;
  return w;
}

void validate_well(const DoubleWell& well, int samples)
{
  for (double u : {-1.0, 1.0}) {
    if (std::abs(well.eval(u)) > 1e-12) throw validation_error(fmt_point("W(+-1) != 0", u, well.eval(u)));
    if (std::abs(well.deriv(u)) > 1e-10)
      throw validation_error(fmt_point("W'(+-1) != 0", u, well.deriv(u)));
    if (well.second_deriv(u) <= 0)
      throw validation_error(fmt_point("W''(+-1) <= 0", u, well.second_deriv(u)));
  }
  const double h = 4.0 / (samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double u = -2.0 + i * h;
    const double w = well.eval(u);
    if (std::abs(std::abs(u) - 1.0) > 1e-9 && !(w > 0))
      throw validation_error(fmt_point("W not positive away from the wells", u, w));
    const double split = well.convex_eval(u) + well.concave_eval(u);
    if (std::abs(split - w) > 1e-12 * (1 + std::abs(w)))
      throw validation_error(fmt_point("W1 + W2 != W", u, split - w));
    if (i > 0 && i + 1 < samples) {
      const double d2 = well.convex_eval(u - h) - 2 * well.convex_eval(u) + well.convex_eval(u + h);
      if (d2 < -1e-12) throw validation_error(fmt_point("W1 not convex", u, d2));
    }
  }
}

ProfileTable::ProfileTable(const DoubleWell& well, double r_prof, double h_ode)
    : well_(well), r_prof_(r_prof), h_(h_ode)
{
  if (!(r_prof > 0) || !(h_ode > 0)) throw std::invalid_argument("profile: R_prof and h_ode must be positive");
  validate_well(well_);

  const int n_half = static_cast<int>(std::ceil(r_prof / h_ode));
  h_ = r_prof / n_half;
  const int n = 2 * n_half + 1;
  r_.resize(n);
  th_.resize(n);
  dth_.resize(n);

  const double upper = std::nextafter(1.0, 0.0);
  auto f = [&](double th) { return well_.speed(std::clamp(th, -1.0, 1.0)); };
  auto integrate = [&](int dir) {
    double th = 0.0;
    const double hs = dir * h_;
    for (int k = 1; k <= n_half; ++k) {
      const double k1 = f(th), k2 = f(th + 0.5 * hs * k1), k3 = f(th + 0.5 * hs * k2),
                   k4 = f(th + hs * k3);
      th += hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      th = std::clamp(th, -upper, upper);
      const int idx = n_half + dir * k;
      th_[idx] = th;
    }
  };
  th_[n_half] = 0.0;
  integrate(+1);
  integrate(-1);
  for (int i = 0; i < n; ++i) {
    r_[i] = (i - n_half) * h_;
    dth_[i] = f(th_[i]);
  }

  // c0 and psi on a uniform grid over [-1,1]
  const int panels = 4000;
  psi_h_ = 2.0 / panels;
  psi_.assign(panels + 1, 0.0);
  for (int i = 0; i < panels; ++i) {
    const double a = -1.0 + i * psi_h_;
    psi_[i + 1] = psi_[i] + gauss_panel(well_.speed, a, a + psi_h_);
  }
  c0_ = psi_.back();
}

double ProfileTable::theta(double r) const
{
  if (r >= r_prof_) return 1.0;
  if (r <= -r_prof_) return -1.0;
  const double x = (r + r_prof_) / h_;
  const int i = std::min(static_cast<int>(x), static_cast<int>(r_.size()) - 2);
  return hermite(x - i, h_, th_[i], th_[i + 1], dth_[i], dth_[i + 1]);
}

double ProfileTable::theta_deriv(double r) const
{
  if (std::abs(r) >= r_prof_) return 0.0;
  const double x = (r + r_prof_) / h_;
  const int i = std::min(static_cast<int>(x), static_cast<int>(r_.size()) - 2);
  return hermite_deriv(x - i, h_, th_[i], th_[i + 1], dth_[i], dth_[i + 1]);
}

double ProfileTable::psi(double u) const
{
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return c0_;
  const double x = (u + 1.0) / psi_h_;
  const int i = std::min(static_cast<int>(x), static_cast<int>(psi_.size()) - 2);
  const double a = -1.0 + i * psi_h_;
  return hermite(x - i, psi_h_, psi_[i], psi_[i + 1], well_.speed(a), well_.speed(a + psi_h_));
}

double ProfileTable::psi_deriv(double u) const
{
  if (u <= -1.0 || u >= 1.0) return 0.0;
  return well_.speed(u);
}

double ProfileTable::dirichlet_integral() const
{
  // composite Simpson over the (odd-sized) table; tails decay like exp(-2 sqrt(W''(1)) R)
  const int n = static_cast<int>(r_.size());
  double s = dth_[0] * dth_[0] + dth_[n - 1] * dth_[n - 1];
  for (int i = 1; i < n - 1; ++i) s += (i % 2 ? 4.0 : 2.0) * dth_[i] * dth_[i];
  return s * h_ / 3.0;
}

BoundaryDensity make_special_sigma(const ProfileTable& profile, double alpha)
{
  if (!(alpha > 0) || alpha > 0.5 * std::numbers::pi + 1e-15)
    throw std::invalid_argument("sigma: contact angle must lie in (0, pi/2]");
  BoundaryDensity s;
  s.name = "special";
  s.kind = SigmaKind::special;
  s.alpha = alpha;
  const double ca = std::cos(alpha);
  const double c0 = profile.c0();
  // the lambdas hold a copy so the density outlives the table
  auto prof = std::make_shared<ProfileTable>(profile);
  s.eval = [prof, ca, c0](double r) {
    if (r < -1) return 0.0;
    if (r > 1) return c0 * ca;
    return prof->psi(r) * ca;
  };
  s.deriv = [prof, ca](double r) { return std::abs(r) > 1 ? 0.0 : prof->well().speed(r) * ca; };
  s.second_deriv = [prof, ca](double r) {
    return std::abs(r) >= 1 ? 0.0 : prof->well().speed_deriv(r) * ca;
  };
  return s;
}

BoundaryDensity make_bump_sigma(const ProfileTable& profile, double alpha, double kappa)
{
  BoundaryDensity base = make_special_sigma(profile, alpha);
  if (kappa == 0.0) return base;
  if (kappa < 0) throw std::invalid_argument("sigma: bump height must be nonnegative");
  BoundaryDensity s = base;
  s.name = "bump";
  s.kind = SigmaKind::bump;
  s.kappa = kappa;
  auto f = base.eval, df = base.deriv, d2f = base.second_deriv;
  s.eval = [f, kappa](double r) {
    const double b = std::abs(r) <= 1 ? kappa * (1 - r * r) * (1 - r * r) : 0.0;
    return f(r) + b;
  };
  s.deriv = [df, kappa](double r) {
    return df(r) + (std::abs(r) <= 1 ? -4 * kappa * r * (1 - r * r) : 0.0);
  };
  s.second_deriv = [d2f, kappa](double r) {
    return d2f(r) + (std::abs(r) < 1 ? -4 * kappa * (1 - 3 * r * r) : 0.0);
  };
  validate_boundary_density(s, profile);
  return s;
}

void validate_boundary_density(const BoundaryDensity& sigma, const ProfileTable& profile,
                               int samples)
{
  const double ca = std::cos(sigma.alpha);
  if (std::abs(sigma.eval(-1.0)) > 1e-12)
    throw validation_error(fmt_point("sigma(-1) != 0", -1.0, sigma.eval(-1.0)));
  if (std::abs(sigma.eval(1.0) - profile.c0() * ca) > 1e-12)
    throw validation_error(fmt_point("sigma(1) != c0 cos(alpha)", 1.0, sigma.eval(1.0)));
  const double h = 4.0 / (samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double r = -2.0 + i * h;
    const double d = sigma.deriv(r);
    if (d < -1e-14) throw validation_error(fmt_point("sigma' < 0 (monotonicity)", r, d));
    if (std::abs(r) > 1.0 && d != 0.0)
      throw validation_error(fmt_point("sigma' != 0 outside [-1,1]", r, d));
    if (std::abs(r) <= 1.0) {
      const double gap = sigma.eval(r) - profile.psi(r) * ca;
      if (gap < -1e-12) throw validation_error(fmt_point("sigma < psi cos(alpha)", r, gap));
    }
  }
}

} // namespace cflow
