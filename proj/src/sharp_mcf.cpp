#include "cflow/sharp_mcf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cflow {

namespace {


double end_param(const InterfaceSpline& s, Endpoint e)
{
  return e == Endpoint::begin ? s.param_begin() : s.param_end();
}

InterfaceCurve move_nodes(const InterfaceCurve& curve, const DomainBoundary& domain,
                          const InterfaceSpline& spline, double dt)
{
  const std::size_t n = curve.size();
  const Vec2d v0 = contact_velocity(spline, domain, Endpoint::begin);
  const Vec2d v1 = contact_velocity(spline, domain, Endpoint::end);
  const double L = spline.total_arclength();
  const double T0 = v0.dot(spline.frame(0.0).tangent);
  const double T1 = v1.dot(spline.frame(spline.param_end()).tangent);

  InterfaceCurve out;
  out.time = curve.time + dt;
  out.nodes.resize(n);
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    s += spline.arclength(spline.knot(i - 1), spline.knot(i));
    const Framed f = spline.frame(spline.knot(i));
    const double T = T0 + (T1 - T0) * s / L;
    out.nodes[i] = curve.nodes[i] + dt * (f.curvature * f.normal + T * f.tangent);
  }
  out.nodes[0] = domain.project(curve.nodes[0] + dt * v0).foot;
  out.nodes[n - 1] = domain.project(curve.nodes[n - 1] + dt * v1).foot;
  return out;
}

} // namespace

InterfaceSpline contact_spline(const InterfaceCurve& curve, const DomainBoundary& domain,
                               double alpha)
{
  return InterfaceSpline(curve, contact_tangents(curve, domain, alpha));
}

Vec2d contact_velocity(const InterfaceSpline& spline, const DomainBoundary& domain, Endpoint e)
{
  const Framed f = spline.frame(end_param(spline, e));
  const Framed b = domain.frame(domain.project(f.point).theta);
  const double c = b.tangent.dot(f.normal);
  if (std::abs(c) < 1e-6) throw geometry_error("contact velocity: degenerate contact angle");
  return f.curvature / c * b.tangent;
}

Vec2d contact_velocity(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                       Endpoint e)
{
  return contact_velocity(contact_spline(curve, domain, alpha), domain, e);
}

double check_third_order_compat(const InterfaceCurve& curve, const DomainBoundary& domain,
                                double alpha, Endpoint e)
{
  const InterfaceSpline s = contact_spline(curve, domain, alpha);
  const double t = end_param(s, e);
  const Framed f = s.frame(t);
  const Framed b = domain.frame(domain.project(f.point).theta);
  const Vec2d grad_h = s.curvature_slope(t) * f.tangent;
  return std::abs(-f.curvature * b.curvature + f.curvature * f.curvature * f.tangent.dot(b.tangent) -
                  b.normal.dot(grad_h));
}

double angle_residual(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha)
{
  const InterfaceSpline s = contact_spline(curve, domain, alpha);
  double r = 0.0;
  for (double t : {s.param_begin(), s.param_end()}) {
    const Framed f = s.frame(t);
    const Framed b = domain.frame(domain.project(f.point).theta);
    r = std::max(r, std::abs(f.normal.dot(b.normal) - std::cos(alpha)));
  }
  return r;
}

double free_angle_residual(const InterfaceCurve& curve, const DomainBoundary& domain,
                           double alpha)
{
  const InterfaceSpline s(curve);
  double r = 0.0;
  for (double t : {s.param_begin(), s.param_end()}) {
    const Framed f = s.frame(t);
    const Framed b = domain.frame(domain.project(f.point).theta);
    r = std::max(r, std::abs(f.normal.dot(b.normal) - std::cos(alpha)));
  }
  return r;
}

InterfaceCurve shift_curve(const InterfaceCurve& curve, const DomainBoundary& domain,
                           double alpha, double dt)
{
  return move_nodes(curve, domain, contact_spline(curve, domain, alpha), dt);
}

InterfaceCurve redistribute(const InterfaceCurve& curve, const DomainBoundary& domain,
                            double alpha)
{
  const InterfaceSpline s = contact_spline(curve, domain, alpha);
  const std::size_t n = curve.size();
  const double L = s.total_arclength();
  InterfaceCurve out = curve;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out.nodes[i] = s.position(s.param_at_arclength(L * static_cast<double>(i) / (n - 1)));
  return out;
}

InterfaceCurve mcf_step(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                        double dt, const McfOptions& opt)
{
  const double h = curve.min_spacing();
  if (!(dt > 0) || dt > 0.4 * h * h) {
    std::ostringstream os;
    os << "mcf_step: dt = " << dt << " violates 0 < dt <= 0.4 h_min^2 = " << 0.4 * h * h;
    throw std::invalid_argument(os.str());
  }
  // the spline curvature operator is stable for substeps up to about h^2/6
  const int sub = static_cast<int>(std::ceil(dt / (0.12 * h * h)));
  InterfaceCurve next = curve;
  for (int k = 0; k < sub; ++k)
    next = move_nodes(next, domain, contact_spline(next, domain, alpha), dt / sub);
  next.time = curve.time + dt;

  const double mean = next.length() / static_cast<double>(next.size() - 1);
  if (next.min_spacing() < opt.collapse_fraction * mean)
    throw evolution_error("mcf_step: node spacing collapsed at t = " + std::to_string(next.time));
  if (opt.redistribute) next = redistribute(next, domain, alpha);

  const double res = angle_residual(next, domain, alpha);
  if (res > opt.tol_angle)
    throw evolution_error("mcf_step: contact angle residual " + std::to_string(res));
  return next;
}

Trajectory evolve(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                  double dt, double T, double every, const McfOptions& opt)
{
  Trajectory traj;
  traj.dt = dt;
  InterfaceCurve c = curve;
  traj.snapshots.push_back(c);
  const double t0 = curve.time;
  double next_out = t0 + every;
  bool halved = false;
  int since_check = 0;
  while (c.time < t0 + T - 1e-14 * (1 + T)) {
    double step = std::min(traj.dt, t0 + T - c.time);
    if (every > 0) step = std::min(step, next_out - c.time);
    try {
      InterfaceCurve n = mcf_step(c, domain, alpha, step, opt);
      if (++since_check >= 20) {
        since_check = 0;
        if (n.self_intersects())
          throw evolution_error("evolve: self-intersection at t = " + std::to_string(n.time));
      }
      c = std::move(n);
    } catch (const evolution_error&) {
      if (halved) throw;
      halved = true;
      traj.dt *= 0.5;
      continue;
    }
    ++traj.steps;
    if (every > 0 && c.time >= next_out - 1e-12 * (1 + every)) {
      c.time = next_out;
      traj.snapshots.push_back(c);
      next_out += every;
    }
  }
  if (c.self_intersects()) throw evolution_error("evolve: self-intersection at the final time");
  if (std::abs(traj.snapshots.back().time - c.time) > 1e-12) traj.snapshots.push_back(c);
  return traj;
}

InterfaceCurve curve_at(const Trajectory& traj, double t)
{
  const auto& s = traj.snapshots;
  if (s.empty()) throw std::invalid_argument("curve_at: empty trajectory");
  if (t <= s.front().time) return s.front();
  if (t >= s.back().time) return s.back();
  std::size_t k = 1;
  while (s[k].time < t) ++k;
  const double w = (t - s[k - 1].time) / (s[k].time - s[k - 1].time);
  InterfaceCurve c = s[k - 1];
  for (std::size_t i = 0; i < c.size(); ++i) c.nodes[i] = (1 - w) * s[k - 1].nodes[i] + w * s[k].nodes[i];
  c.time = t;
  return c;
}

void save_trajectory(const std::string& dir, const Trajectory& traj)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream idx(fs::path(dir) / "index.txt");
  if (!idx) throw std::runtime_error("cannot write " + dir + "/index.txt");
  idx << std::setprecision(17);
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "curve_" << std::setw(5) << std::setfill('0') << k << ".txt";
    save_curve((fs::path(dir) / name.str()).string(), traj.snapshots[k]);
    idx << traj.snapshots[k].time << " " << name.str() << "\n";
  }
}

Trajectory load_trajectory(const std::string& dir)
{
  namespace fs = std::filesystem;
  std::ifstream idx(fs::path(dir) / "index.txt");
  if (!idx) throw std::runtime_error("cannot read " + dir + "/index.txt");
  Trajectory traj;
  double t;
  std::string name;
  while (idx >> t >> name) {
    traj.snapshots.push_back(load_curve((fs::path(dir) / name).string()));
    traj.snapshots.back().time = t;
  }
  return traj;
}

double enclosed_area(const InterfaceCurve& curve, const DomainBoundary& domain)
{
  // polygon: curve, then the boundary arc counter-clockwise back to the start
  std::vector<Vec2d> poly = curve.nodes;
  double th0 = domain.project(curve.back()).theta;
  double th1 = domain.project(curve.front()).theta;
  while (th1 <= th0) th1 += 2 * pi;
  const int nb = 4000;
  for (int i = 1; i < nb; ++i) poly.push_back(domain.position(th0 + (th1 - th0) * i / nb));
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) a += cross(poly[j], poly[i]);
  return 0.5 * a;
}

} // namespace cflow
