#include "cflow/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cflow {

double plateau_cutoff(double u)
{
  return 1.0 - smoothstep5((std::abs(u) - 0.5) / 0.5);
}

double plateau_cutoff_wide(double u)
{
  return 1.0 - smoothstep5((std::abs(u) - 1.5) / 0.5);
}

double quadratic_cutoff(double s)
{
  const double s2 = s * s;
  if (s2 >= 1.0) return 0.0;
  return plateau_cutoff(s2) * (1.0 - s2);
}

double quadratic_cutoff_wide(double s)
{
  const double a = std::abs(s);
  if (a <= 1.0) return 1.0;
  if (a * a >= 2.0) return 0.0;
  return plateau_cutoff_wide(a * a) * (1.0 - (a - 1.0) * (a - 1.0));
}

double weight_profile(double s)
{
  const double a = std::abs(s);
  const double sg = s < 0 ? -1.0 : 1.0;
  if (a <= 0.5) return -s;
  if (a >= 1.0) return -sg;
  const double u = 2.0 * (a - 0.5);
  const double q = u + u * u * u * (4.0 + u * (-7.0 + 3.0 * u));
  return -sg * (0.5 + 0.5 * q);
}

// ---- contact frame

namespace {

double end_param(const InterfaceSpline& s, Endpoint e)
{
  return e == Endpoint::begin ? s.param_begin() : s.param_end();
}

int index(Endpoint e) { return static_cast<int>(e); }

} // namespace

ContactFrame build_contact_frame(const InterfaceSpline& spline, const DomainBoundary& domain,
                                 double alpha, Endpoint e, double tol_angle)
{
  ContactFrame f;
  f.end = e;
  f.param = end_param(spline, e);
  f.interface = spline.frame(f.param);
  f.interface_slope = spline.curvature_slope(f.param);
  f.p = f.interface.point;
  const BoundaryProjection bp = domain.project(f.p);
  f.boundary_theta = bp.theta;
  f.boundary = domain.frame(bp.theta);

  const Vec2d& nI = f.interface.normal;
  const Vec2d& tI = f.interface.tangent;
  const Vec2d& nB = f.boundary.normal;
  const Vec2d& tB = f.boundary.tangent;
  const double c = nB.dot(tI);
  if (std::abs(c) < 1e-8) throw calibration_error("contact frame: degenerate (tangential) contact");
  const double mismatch = std::abs(nI.dot(nB) - std::cos(alpha));
  if (mismatch > tol_angle) {
    std::ostringstream os;
    os << "contact frame: angle condition violated at (" << f.p.x() << ", " << f.p.y()
       << "), |n_I . n_dO - cos alpha| = " << mismatch;
    throw calibration_error(os.str());
  }
  f.rotation = rotation(signed_angle<double>(nB, nI));

  const double H = f.interface.curvature, HB = f.boundary.curvature;
  f.beta_dO = (-H + HB * tB.dot(tI)) / c;
  f.beta_I = -HB * tB.dot(nI) + f.beta_dO * nB.dot(nI);
  f.dpdt = contact_velocity(spline, domain, e);
  f.gamma_dO = f.dpdt.dot(tB);
  f.gamma_I = f.dpdt.dot(tI);
  f.rho_dO = -f.gamma_dO * HB;
  f.rho_I = -f.interface_slope - f.gamma_I * H;
  return f;
}

ContactFrame build_contact_frame(const InterfaceCurve& curve, const DomainBoundary& domain,
                                 double alpha, Endpoint e, double tol_angle)
{
  return build_contact_frame(contact_spline(curve, domain, alpha), domain, alpha, e, tol_angle);
}

double gamma_I_at(const InterfaceSpline& spline, const ContactFrame& frame, double t)
{
  return frame.gamma_I + spline.integral_h2(frame.param, t);
}

std::function<double(double)> gamma_I_along_interface(const InterfaceSpline& spline,
                                                      const ContactFrame& frame)
{
  auto s = std::make_shared<InterfaceSpline>(spline);
  const double s0 = spline.arclength(0.0, frame.param);
  const double dir = frame.end == Endpoint::begin ? 1.0 : -1.0;
  return [s, frame, s0, dir](double arc) {
    const double t = s->param_at_arclength(s0 + dir * arc);
    return gamma_I_at(*s, frame, t);
  };
}

// ---- wedges

const char* sector_name(Sector s)
{
  switch (s) {
  case Sector::interface: return "interface";
  case Sector::interp_plus: return "interp_plus";
  case Sector::interp_minus: return "interp_minus";
  case Sector::boundary: return "boundary";
  case Sector::outer: return "outer";
  }
  return "?";
}

WedgeDecomposition build_wedges(const ContactFrame& frame)
{
  WedgeDecomposition w;
  w.p = frame.p;
  w.d_I = frame.end == Endpoint::begin ? frame.interface.tangent : Vec2d(-frame.interface.tangent);
  const Vec2d tB = frame.boundary.tangent;
  const double a1 = signed_angle<double>(w.d_I, tB);
  const double a2 = signed_angle<double>(w.d_I, -tB);
  w.a_pos = std::max(a1, a2);
  w.a_neg = std::min(a1, a2);
  if (!(w.a_pos > 0 && w.a_neg < 0))
    throw calibration_error("wedges: interface direction does not point into the domain");
  w.half = 0.25 * std::min(w.a_pos, -w.a_neg);
  w.plus_sign = signed_angle<double>(w.d_I, frame.interface.normal) > 0 ? 1 : -1;
  return w;
}

double WedgeDecomposition::angle(const Vec2d& x) const
{
  return signed_angle<double>(d_I, x - p);
}

int WedgeDecomposition::side(const Vec2d& x) const
{
  const double phi = angle(x);
  return (phi >= 0 ? 1 : -1) * plus_sign;
}

Sector WedgeDecomposition::classify(const Vec2d& x) const
{
  const double phi = angle(x);
  const double a = phi >= 0 ? a_pos : -a_neg;
  const double m = std::abs(phi);
  if (m < half) return Sector::interface;
  if (m < a - half) return (phi >= 0 ? 1 : -1) * plus_sign > 0 ? Sector::interp_plus : Sector::interp_minus;
  if (m <= a + half) return Sector::boundary;
  return Sector::outer;
}

LambdaValue interp_lambda(const WedgeDecomposition& w, const Vec2d& x)
{
  const Vec2d r = x - w.p;
  const double r2 = r.squaredNorm();
  if (r2 == 0.0) throw calibration_error("interp_lambda: undefined at the wedge vertex");
  LambdaValue l;
  switch (w.classify(x)) {
  case Sector::interface: l.value = 1.0; return l;
  case Sector::boundary:
  case Sector::outer: l.value = 0.0; return l;
  default: break;
  }
  const double phi = w.angle(x);
  const double a = phi >= 0 ? w.a_pos : -w.a_neg;
  const double width = a - 2 * w.half;
  const double u = (a - w.half - std::abs(phi)) / width;
  l.value = smoothstep5(u);
  const Vec2d grad_phi = rot90<double>(r) / r2;
  l.grad = smoothstep5_deriv(u) * (phi >= 0 ? -1.0 : 1.0) / width * grad_phi;
  return l;
}

LambdaValue interp_lambda(const WedgeDecomposition& w, const WedgeDecomposition& later,
                          const Vec2d& x, double dt_probe)
{
  LambdaValue l = interp_lambda(w, x);
  l.dt = (interp_lambda(later, x).value - l.value) / dt_probe;
  return l;
}

int Localization::positive_count() const
{
  int n = 0;
  for (double e : {eta_I, eta_dO, eta_p[0], eta_p[1]})
    if (e > 0) ++n;
  return n;
}

// ---- snapshot

struct CalibrationSnapshot::Context {
  InterfaceProjection ip;
  BoundaryProjection bp;
  int ball = -1;
};

CalibrationSnapshot::CalibrationSnapshot(const InterfaceCurve& curve, const DomainBoundary& domain,
                                         double alpha, const CalibrationOptions& opt)
    : curve_(curve), domain_(domain), alpha_(alpha), opt_(opt)
{
  init(nullptr);
}

CalibrationSnapshot::CalibrationSnapshot(const InterfaceCurve& curve, const DomainBoundary& domain,
                                         double alpha, const CalibrationScales& scales,
                                         const CalibrationOptions& opt)
    : curve_(curve), domain_(domain), alpha_(alpha), opt_(opt)
{
  init(&scales);
}

void CalibrationSnapshot::init(const CalibrationScales* scales)
{
  if (!(alpha_ > 0) || alpha_ > 0.5 * pi + 1e-12)
    throw calibration_error("calibration: contact angle must lie in (0, pi/2]");
  spline_ = std::make_shared<const InterfaceSpline>(contact_spline(curve_, domain_, alpha_));
  for (Endpoint e : {Endpoint::begin, Endpoint::end}) {
    frames_[index(e)] = build_contact_frame(*spline_, domain_, alpha_, e, opt_.tol_angle);
    wedges_[index(e)] = build_wedges(frames_[index(e)]);
  }
  region_ = RegionIndicator(*spline_, domain_);
  if (scales) {
    scales_ = *scales;
    for (int e = 0; e < 2; ++e) frames_[e].r_p = scales_.r_p[e];
  } else {
    compute_scales();
  }
}

CalibrationSnapshot::Context CalibrationSnapshot::context(const Vec2d& x) const
{
  Context c;
  c.ip = spline_->project(x);
  c.bp = domain_.project(x);
  for (int e = 0; e < 2; ++e)
    if ((x - frames_[e].p).norm() < scales_.r_bar) c.ball = e;
  return c;
}

LocalFields CalibrationSnapshot::local_fields(Endpoint e, const Vec2d& x) const
{
  return local_fields(index(e), x, spline_->project(x), domain_.project(x), true);
}

LocalFields CalibrationSnapshot::local_fields(int e, const Vec2d& x, const InterfaceProjection& ip,
                                              const BoundaryProjection& bp, bool check) const
{
  const ContactFrame& f = frames_[e];
  const WedgeDecomposition& w = wedges_[e];
  LocalFields out;

  const Framed fi = spline_->frame(ip.t);
  const double a = ip.s * f.beta_I;
  out.xi_I = (1 - 0.5 * a * a) * fi.normal + a * fi.tangent;
  const double gamma = gamma_I_at(*spline_, f, ip.t);
  const double rho = -spline_->curvature_slope(ip.t) - gamma * fi.curvature;
  out.B_I = fi.curvature * fi.normal + (gamma + ip.s * rho) * fi.tangent;

  const Framed fb = domain_.frame(bp.theta);
  const double b = bp.s * f.beta_dO;
  out.xi_dO = f.rotation * Vec2d((1 - 0.5 * b * b) * fb.normal + b * fb.tangent);
  out.B_dO = (f.gamma_dO + bp.s * f.rho_dO) * fb.tangent;

  if ((x - f.p).squaredNorm() == 0.0) {
    out.sector = Sector::interface;
    out.lambda = 1.0;
  } else {
    out.sector = w.classify(x);
    out.lambda = interp_lambda(w, x).value;
  }
  const double l = out.lambda;
  out.xi_hat = l * out.xi_I + (1 - l) * out.xi_dO;
  out.B = l * out.B_I + (1 - l) * out.B_dO;
  const double n2 = out.xi_hat.squaredNorm();
  if (check && (n2 < 0.25 || n2 > 2.0)) {
    std::ostringstream os;
    os << "contact fields: |xi_hat|^2 = " << n2 << " at (" << x.x() << ", " << x.y()
       << "); the contact radius is too large, use a smaller r_hat";
    throw calibration_error(os.str());
  }
  out.xi = n2 > 0 ? Vec2d(out.xi_hat / std::sqrt(n2)) : out.xi_hat;
  return out;
}

double CalibrationSnapshot::gamma_tilde(const Vec2d& x, const Vec2d& tau) const
{
  double g = 0.0;
  for (int e = 0; e < 2; ++e) {
    const double d = (x - frames_[e].p).norm();
    if (d >= scales_.r_hat_min) continue;
    const double th = plateau_cutoff(d / scales_.r_hat_min);
    if (th == 0.0) continue;
    const LocalFields lf = local_fields(e, x, spline_->project(x), domain_.project(x), false);
    g += th * tau.dot(lf.B);
  }
  return g;
}

Vec2d CalibrationSnapshot::bulk_velocity(const Vec2d& x, const InterfaceProjection& ip) const
{
  const Framed fi = spline_->frame(ip.t);
  const double slope = spline_->curvature_slope(ip.t);
  bool near = false;
  for (int e = 0; e < 2; ++e) near |= (x - frames_[e].p).norm() < scales_.r_hat_min + 2 * opt_.fd_normal;
  double g = 0.0, dn = 0.0;
  if (near) {
    const double h = opt_.fd_normal;
    g = gamma_tilde(x, fi.tangent);
    dn = (gamma_tilde(x + h * fi.normal, fi.tangent) - gamma_tilde(x - h * fi.normal, fi.tangent)) /
         (2 * h);
  }
  const double rho = -dn - fi.curvature * g - slope;
  return fi.curvature * fi.normal + (g + rho * ip.s) * fi.tangent;
}

std::pair<Vec2d, Vec2d> CalibrationSnapshot::bulk_fields(const Vec2d& x) const
{
  const InterfaceProjection ip = spline_->project(x);
  if (!ip.in_tube) throw calibration_error("bulk fields: point outside the interface tube");
  return {spline_->frame(ip.t).normal, bulk_velocity(x, ip)};
}

Localization CalibrationSnapshot::localization(const Vec2d& x) const
{
  const Context c = context(x);
  const double w = scales_.delta * scales_.r_bar;
  const double sI = c.ip.s, sB = c.bp.s;
  const double zI = std::abs(sI) < w ? quadratic_cutoff(sI / w) : 0.0;
  const double zB = std::abs(sB) < w ? quadratic_cutoff(sB / w) : 0.0;
  const double zIw = quadratic_cutoff_wide(sI / w);
  const double zBw = quadratic_cutoff_wide(sB / w);
  Localization L;
  if (c.ball < 0) {
    const bool interior = c.ip.t > 0.0 && c.ip.t < spline_->param_end();
    L.eta_I = interior ? zI : 0.0;
    L.eta_I_wide = interior ? zIw : 0.0;
    L.eta_dO = zB;
  } else {
    const int e = c.ball;
    const Vec2d& p = frames_[e].p;
    const double rp = (c.bp.foot - p).norm() / (scales_.c_bar * scales_.r_bar);
    const double zp = quadratic_cutoff(rp), zpw = quadratic_cutoff_wide(rp);
    const WedgeDecomposition& wd = wedges_[e];
    const Sector s = (x - p).squaredNorm() == 0.0 ? Sector::interface : wd.classify(x);
    switch (s) {
    case Sector::interface:
      L.eta_I = (1 - zB) * zI;
      L.eta_p[e] = zB * zI;
      L.eta_I_wide = (1 - zBw) * zIw;
      L.eta_p_wide[e] = zBw * zIw;
      break;
    case Sector::interp_plus:
    case Sector::interp_minus: {
      const double l = interp_lambda(wd, x).value;
      L.eta_I = l * (1 - zB) * zI;
      L.eta_dO = (1 - l) * (1 - zp) * zB;
      L.eta_p[e] = l * zB * zI + (1 - l) * zp * zB;
      L.eta_I_wide = l * (1 - zBw) * zIw;
      L.eta_p_wide[e] = l * zBw * zIw + (1 - l) * zpw * zBw;
      break;
    }
    case Sector::boundary:
    case Sector::outer:
      L.eta_dO = (1 - zp) * zB;
      L.eta_p[e] = zp * zB;
      L.eta_p_wide[e] = zpw * zBw;
      break;
    }
  }
  L.eta_bulk = 1.0 - L.eta_I - L.eta_dO - L.eta_p[0] - L.eta_p[1];
  return L;
}

FieldValue CalibrationSnapshot::value(const Vec2d& x) const
{
  const Context c = context(x);
  const double w = scales_.delta * scales_.r_bar;
  const double sI = c.ip.s, sB = c.bp.s;
  const Framed fi = spline_->frame(c.ip.t);
  const Framed fb = domain_.frame(c.bp.theta);
  const double ca = std::cos(alpha_);
  const double zI = std::abs(sI) < w ? quadratic_cutoff(sI / w) : 0.0;
  const double zB = std::abs(sB) < w ? quadratic_cutoff(sB / w) : 0.0;
  const double zIw = quadratic_cutoff_wide(sI / w);
  const double zBw = quadratic_cutoff_wide(sB / w);
  const double thI = weight_profile(sI / w), thB = weight_profile(sB / w);

  FieldValue out;
  if (c.ball < 0) {
    const bool interior = c.ip.t > 0.0 && c.ip.t < spline_->param_end();
    const double eI = interior ? zI : 0.0, eIw = interior ? zIw : 0.0;
    out.xi = eI * fi.normal + zB * ca * fb.normal;
    if (eIw > 0) out.B = eIw * bulk_velocity(x, c.ip);
    if (interior && std::abs(sI) < w)
      out.theta = thI;
    else if (std::abs(sB) < w)
      out.theta = (region_.inside(x) ? 1.0 : -1.0) * thB;
    else
      out.theta = region_.inside(x) ? -1.0 : 1.0;
    return out;
  }

  const int e = c.ball;
  const Vec2d& p = frames_[e].p;
  const LocalFields lf = local_fields(e, x, c.ip, c.bp, true);
  const double rp = (c.bp.foot - p).norm() / (scales_.c_bar * scales_.r_bar);
  const double zp = quadratic_cutoff(rp), zpw = quadratic_cutoff_wide(rp);
  double eI = 0, eB = 0, ep = 0, eIw = 0, epw = 0;
  const double l = lf.lambda;
  switch (lf.sector) {
  case Sector::interface:
    eI = (1 - zB) * zI;
    ep = zB * zI;
    eIw = (1 - zBw) * zIw;
    epw = zBw * zIw;
    out.theta = thI;
    break;
  case Sector::interp_plus:
  case Sector::interp_minus: {
    eI = l * (1 - zB) * zI;
    eB = (1 - l) * (1 - zp) * zB;
    ep = l * zB * zI + (1 - l) * zp * zB;
    eIw = l * (1 - zBw) * zIw;
    epw = l * zBw * zIw + (1 - l) * zpw * zBw;
    const double sg = lf.sector == Sector::interp_plus ? 1.0 : -1.0;
    out.theta = l * thI + sg * (1 - l) * thB;
    break;
  }
  case Sector::boundary:
  case Sector::outer:
    eB = (1 - zp) * zB;
    ep = zp * zB;
    epw = zpw * zBw;
    out.theta = wedges_[e].side(x) * thB;
    break;
  }
  out.xi = eI * fi.normal + ep * lf.xi + eB * ca * fb.normal;
  out.B = epw * lf.B;
  if (eIw > 0) out.B += eIw * bulk_velocity(x, c.ip);
  return out;
}

void CalibrationSnapshot::compute_scales()
{
  scales_ = CalibrationScales{};
  scales_.c_bar = opt_.c_bar;
  const double L = spline_->param_end();
  const int nc = 2000;

  for (int e = 0; e < 2; ++e) {
    const ContactFrame& f = frames_[e];
    const WedgeDecomposition& w = wedges_[e];
    double r = std::min(spline_->tubular_radius(), domain_.tubular_radius());
    for (int it = 0;; ++it) {
      bool ok = true;
      for (int k = 0; k <= nc && ok; ++k) {
        const Vec2d y = spline_->position(L * k / nc);
        const double d = (y - f.p).norm();
        if (d < r && d > 1e-9 * r && w.classify(y) != Sector::interface) ok = false;
      }
      for (int k = 0; k < 4 * nc && ok; ++k) {
        const Vec2d y = domain_.position(2 * pi * k / (4 * nc));
        const double d = (y - f.p).norm();
        if (d < r && d > 1e-9 * r && w.classify(y) != Sector::boundary) ok = false;
      }
      if (ok) break;
      if (it > 60) throw calibration_error("scales: no admissible wedge radius");
      r *= 0.8;
    }
    scales_.r_p[e] = r;
    frames_[e].r_p = r;

    double rh = r;
    for (int it = 0;; ++it) {
      bool ok = true;
      for (int i = 1; i <= 8 && ok; ++i)
        for (int j = 0; j < 64 && ok; ++j) {
          const double ang = 2 * pi * j / 64;
          const Vec2d x = f.p + rh * i / 8.0 * Vec2d(std::cos(ang), std::sin(ang));
          const BoundaryProjection bp = domain_.project(x);
          if (bp.s < 0) continue;
          const LocalFields lf = local_fields(e, x, spline_->project(x), bp, false);
          const double n2 = lf.xi_hat.squaredNorm();
          if (n2 < 0.5 || n2 > 1.5) ok = false;
        }
      if (ok) break;
      if (it > 60) throw calibration_error("scales: |xi_hat| stays outside [1/2, 3/2] for all radii");
      rh *= 0.8;
    }
    scales_.r_hat[e] = rh;
  }

  const double sep = (frames_[0].p - frames_[1].p).norm();
  scales_.r_hat_min = std::min({scales_.r_hat[0], scales_.r_hat[1], sep / 3.0});
  scales_.r_bar = 0.5 * scales_.r_hat_min;
  const double rb = scales_.r_bar;

  // width of the wide tubes: no overlap of the tubes outside the balls, and the
  // cutoffs must vanish where the ball formulas meet the outside ones
  double W = std::numeric_limits<double>::max();
  const double big = std::numeric_limits<double>::max();
  for (int e = 0; e < 2; ++e) {
    const ContactFrame& f = frames_[e];
    for (int k = 0; k < 1440; ++k) {
      const double ang = 2 * pi * k / 1440;
      const Vec2d x = f.p + rb * Vec2d(std::cos(ang), std::sin(ang));
      const BoundaryProjection bp = domain_.project(x);
      if (bp.s < 0) continue;
      const InterfaceProjection ip = spline_->project(x);
      const double sI = ip.in_tube ? std::abs(ip.s) : big;
      switch (wedges_[e].classify(x)) {
      case Sector::interface: W = std::min(W, bp.s); break;
      case Sector::boundary:
      case Sector::outer: W = std::min(W, sI); break;
      default: W = std::min({W, bp.s, sI}); break;
      }
    }
  }
  for (int k = 0; k <= nc; ++k) {
    const Vec2d y = spline_->position(L * k / nc);
    if ((y - frames_[0].p).norm() < rb || (y - frames_[1].p).norm() < rb) continue;
    W = std::min(W, 0.5 * domain_.project(y).s);
  }
  W = std::min(0.9 * W, spline_->tubular_radius());
  scales_.delta = std::min(0.5, W / (std::sqrt(2.0) * rb));
  if (!(scales_.delta > 1e-3)) {
    std::ostringstream os;
    os << "scales: the interface and boundary tubes overlap outside the contact balls "
          "(delta = "
       << scales_.delta << ", r_bar = " << rb << ")";
    throw calibration_error(os.str());
  }
  // the wide contact cutoff has to vanish on the ball boundary inside the boundary tube
  const double w = std::sqrt(2.0) * scales_.delta * rb;
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k < 1440; ++k) {
      const double ang = 2 * pi * k / 1440;
      const Vec2d x = frames_[e].p + rb * Vec2d(std::cos(ang), std::sin(ang));
      const BoundaryProjection bp = domain_.project(x);
      if (bp.s < 0 || bp.s >= w) continue;
      if ((bp.foot - frames_[e].p).norm() < std::sqrt(2.0) * scales_.c_bar * rb)
        throw calibration_error("scales: contact cutoff does not vanish on the ball boundary");
    }
}

// ---- time-dependent field

CalibrationField::CalibrationField(const InterfaceCurve& curve, const DomainBoundary& domain,
                                   double alpha, const CalibrationOptions& opt)
    : dt_(opt.dt_probe)
{
  now_ = std::make_shared<const CalibrationSnapshot>(curve, domain, alpha, opt);
  const CalibrationScales sc = now_->scales();
  before_ = std::make_shared<const CalibrationSnapshot>(shift_curve(curve, domain, alpha, -dt_),
                                                         domain, alpha, sc, opt);
  after_ = std::make_shared<const CalibrationSnapshot>(shift_curve(curve, domain, alpha, dt_),
                                                        domain, alpha, sc, opt);
  before2_ = std::make_shared<const CalibrationSnapshot>(shift_curve(curve, domain, alpha, -2 * dt_),
                                                          domain, alpha, sc, opt);
  after2_ = std::make_shared<const CalibrationSnapshot>(shift_curve(curve, domain, alpha, 2 * dt_),
                                                         domain, alpha, sc, opt);
}

CalibrationField::CalibrationField(const InterfaceCurve& before, const InterfaceCurve& curve,
                                   const InterfaceCurve& after, const DomainBoundary& domain,
                                   double alpha, const CalibrationOptions& opt)
{
  dt_ = 0.5 * (after.time - before.time);
  if (!(dt_ > 0)) throw calibration_error("calibration: snapshots must be ordered in time");
  now_ = std::make_shared<const CalibrationSnapshot>(curve, domain, alpha, opt);
  const CalibrationScales sc = now_->scales();
  before_ = std::make_shared<const CalibrationSnapshot>(before, domain, alpha, sc, opt);
  after_ = std::make_shared<const CalibrationSnapshot>(after, domain, alpha, sc, opt);
}

FieldValue CalibrationField::time_derivative(const Vec2d& x) const
{
  const FieldValue a = before_->value(x), b = after_->value(x);
  FieldValue d;
  if (before2_) {
    const FieldValue a2 = before2_->value(x), b2 = after2_->value(x);
    const double k = 1.0 / (12 * dt_);
    d.xi = k * (a2.xi - 8 * a.xi + 8 * b.xi - b2.xi);
    d.B = k * (a2.B - 8 * a.B + 8 * b.B - b2.B);
    d.theta = k * (a2.theta - 8 * a.theta + 8 * b.theta - b2.theta);
    return d;
  }
  d.xi = (b.xi - a.xi) / (2 * dt_);
  d.B = (b.B - a.B) / (2 * dt_);
  d.theta = (b.theta - a.theta) / (2 * dt_);
  return d;
}

CalibrationField build_global_field(const InterfaceCurve& curve, const DomainBoundary& domain,
                                    double alpha, const CalibrationOptions& opt)
{
  return CalibrationField(curve, domain, alpha, opt);
}

} // namespace cflow
