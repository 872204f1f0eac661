#include "cflow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace cflow {

namespace {

struct RefPoint {
  double l0, l1, l2, w; // barycentric coordinates, weight as a fraction of the area
};

// 3-point degree-2 rule on each of the 4^level subtriangles.
std::vector<RefPoint> triangle_rule(int level)
{
  if (level < 0 || level > 6) throw functional_error("quadrature level must lie in [0, 6]");
  using Tri = std::array<Eigen::Vector3d, 3>;
  std::vector<Tri> tris{Tri{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)}};
  for (int l = 0; l < level; ++l) {
    std::vector<Tri> next;
    next.reserve(4 * tris.size());
    for (const auto& t : tris) {
      const Eigen::Vector3d m01 = 0.5 * (t[0] + t[1]), m12 = 0.5 * (t[1] + t[2]), m20 = 0.5 * (t[2] + t[0]);
      next.push_back({t[0], m01, m20});
      next.push_back({m01, t[1], m12});
      next.push_back({m20, m12, t[2]});
      next.push_back({m01, m12, m20});
    }
    tris = std::move(next);
  }
  std::vector<RefPoint> rule;
  const double w = 1.0 / (3.0 * static_cast<double>(tris.size()));
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d b = (2.0 / 3.0) * t[k] + (1.0 / 6.0) * (t[(k + 1) % 3] + t[(k + 2) % 3]);
      rule.push_back({b[0], b[1], b[2], w});
    }
  return rule;
}

// 2-point Gauss on each of the 2^level pieces of [0,1]: (position, weight fraction)
std::vector<std::pair<double, double>> edge_rule(int level)
{
  const int m = 1 << level;
  const double g = 0.5 / std::sqrt(3.0);
  std::vector<std::pair<double, double>> rule;
  for (int i = 0; i < m; ++i) {
    const double c = (i + 0.5) / m;
    rule.emplace_back(c - g / m, 0.5 / m);
    rule.emplace_back(c + g / m, 0.5 / m);
  }
  return rule;
}

struct Needs {
  bool energy = true, bulk = true, dissipation = true;
};

void check_time(const PhaseState& s, const CalibrationView& f)
{
  if (!s.ops) throw functional_error("phase state without operators");
  if (std::abs(s.t - f.t) > 1e-9 * std::max(1.0, std::abs(s.t)))
    throw functional_error("time mismatch: state at t=" + std::to_string(s.t) + ", calibration at t=" +
                           std::to_string(f.t));
}

template <typename F>
void for_each_point(const PhaseState& s, const ProfileTable& profile, const Vec& H,
                    const FunctionalOptions& q, F&& f)
{
  const auto& mesh = s.ops->mesh;
  const auto rule = triangle_rule(q.level);
  const DoubleWell& well = profile.well();
  PhasePoint p;
  for (const auto& tri : mesh.triangles) {
    const Vec2d& a = mesh.nodes[tri[0]];
    const Vec2d& b = mesh.nodes[tri[1]];
    const Vec2d& c = mesh.nodes[tri[2]];
    const double ua = s.u[tri[0]], ub = s.u[tri[1]], uc = s.u[tri[2]];
    Mat2d jac;
    jac.col(0) = b - a;
    jac.col(1) = c - a;
    const double area = 0.5 * jac.determinant();
    const Vec2d grad = jac.transpose().inverse() * Vec2d(ub - ua, uc - ua);
    const double g = grad.norm();
    for (const auto& r : rule) {
      p.x = r.l0 * a + r.l1 * b + r.l2 * c;
      p.weight = r.w * area;
      p.u = r.l0 * ua + r.l1 * ub + r.l2 * uc;
      p.psi = profile.psi(p.u);
      p.grad_u = grad;
      p.grad_psi = well.speed(p.u) * grad;
      p.normal = g < 1e-14 ? Vec2d::UnitX() : Vec2d(grad / g);
      p.H = H.size() ? r.l0 * H[tri[0]] + r.l1 * H[tri[1]] + r.l2 * H[tri[2]] : 0.0;
      f(p);
    }
  }
}

FunctionalReport evaluate(const PhaseState& s, const CalibrationView& field,
                          const ProfileTable& profile, const BoundaryDensity& sigma,
                          const FunctionalOptions& q, Needs needs)
{
  check_time(s, field);
  const double eps = s.eps;
  const double c0 = profile.c0();
  const double neg = q.negligible;
  const DoubleWell& well = profile.well();
  FunctionalReport r;
  r.t = s.t;
  r.length_constant = field.length_constant;
  const double inv_c = field.length_constant > 0 ? 1.0 / field.length_constant
                                                 : std::numeric_limits<double>::infinity();
  r.bounds = {1.0, 1.0, 1.0, inv_c, 2.0, 12.0, 1.0 + 2.0 * inv_c};
  const Vec H = needs.dissipation ? phase_curvature(s, profile, sigma) : Vec();

  double dens = 0.0;
  for_each_point(s, profile, H, q, [&](const PhasePoint& p) {
    const double g = p.grad_u.norm();
    const double speed = well.speed(p.u);
    const double gpsi = speed * g;
    const double eg2 = eps * g * g;
    const double dev = needs.bulk ? p.psi - (field.in_phase(p.x) ? c0 : 0.0) : 0.0;
    const bool need_field = gpsi > neg || eg2 > neg || std::abs(dev) > neg ||
                            (needs.dissipation && eps * g > neg);
    FieldValue v;
    if (need_field) v = field.value(p.x);
    const double w = p.weight;
    if (needs.energy) {
      dens += w * (0.5 * eg2 + well.eval(p.u) / eps - p.grad_psi.dot(v.xi));
      const double e = std::sqrt(eps) * g - speed / std::sqrt(eps);
      const double tilt = (1.0 - p.normal.dot(v.xi)) * gpsi;
      const double nx2 = (p.normal - v.xi).squaredNorm();
      double m = 1.0;
      if (gpsi > neg || eg2 > neg) {
        const double d = field.interface_distance(p.x);
        m = std::min(1.0, d * d);
      }
      r.coercive[1] += w * 0.5 * e * e;
      r.coercive[2] += w * tilt;
      r.coercive[3] += w * m * gpsi;
      r.coercive[4] += w * nx2 * gpsi;
      r.coercive[5] += w * nx2 * eg2;
      r.coercive[6] += w * m * eg2;
    }
    if (needs.bulk) {
      r.E_bulk += w * dev * v.theta;
      r.l1 += w * std::abs(dev);
    }
    if (needs.dissipation) {
      const double div = speed > neg ? field.div_xi(p.x) : 0.0;
      const double a = p.H + div * speed;
      const double b = p.H - v.B.dot(v.xi) * eps * g;
      r.D1 += w * a * a / eps;
      r.D2 += w * b * b / eps;
    }
  });

  if (needs.energy) {
    const auto& mesh = s.ops->mesh;
    const double ca = std::cos(sigma.alpha);
    double bnd = 0.0;
    for (const auto& [x, wf] : edge_rule(q.level))
      for (const auto& e : mesh.boundary_edges) {
        const double len = (mesh.nodes[e[1]] - mesh.nodes[e[0]]).norm();
        const double u = (1 - x) * s.u[e[0]] + x * s.u[e[1]];
        bnd += wf * len * (sigma.eval(u) - profile.psi(u) * ca);
      }
    r.coercive[0] = bnd;
    r.boundary = bnd;
    r.equipartition = r.coercive[1];
    r.tilt = r.coercive[2];
    r.E_relEn = dens + bnd;
    r.E_relEn_alt = r.equipartition + r.tilt + r.boundary;
    r.E_eps = discrete_energy(s, well, sigma);
    for (int i = 0; i < num_coercivity; ++i)
      r.ratios[static_cast<std::size_t>(i)] =
          r.E_relEn > 0 ? r.coercive[static_cast<std::size_t>(i)] / r.E_relEn : 0.0;
  }
  if (needs.bulk) r.bulk_ratio = r.E_bulk > 0 ? r.l1 * r.l1 / r.E_bulk : 0.0;
  return r;
}

} // namespace

CalibrationView view_of(const CalibrationField& field, double length_constant, double h)
{
  CalibrationView v;
  v.t = field.time();
  v.length_constant = length_constant;
  v.value = [field](const Vec2d& x) { return field.value(x); };
  v.div_xi = [field, h](const Vec2d& x) {
    const Vec2d ex(h, 0.0), ey(0.0, h);
    return (field.xi(x + ex).x() - field.xi(x - ex).x() + field.xi(x + ey).y() - field.xi(x - ey).y()) /
           (2 * h);
  };
  v.in_phase = [field](const Vec2d& x) { return field.now().in_phase(x); };
  v.interface_distance = [field](const Vec2d& x) { return field.now().interface_distance(x); };
  return v;
}

CalibrationView flat_view(const Vec2d& n, double offset, double width, double t)
{
  const Vec2d nu = n.normalized();
  CalibrationView v;
  v.t = t;
  // |xi| = 1 everywhere, so no length constraint holds: the c-dependent bounds are infinite
  v.length_constant = 0.0;
  v.value = [nu, offset, width](const Vec2d& x) {
    return FieldValue{nu, Vec2d::Zero(), weight_profile((nu.dot(x) - offset) / width)};
  };
  v.div_xi = [](const Vec2d&) { return 0.0; };
  v.in_phase = [nu, offset](const Vec2d& x) { return nu.dot(x) - offset > 0; };
  v.interface_distance = [nu, offset](const Vec2d& x) { return std::abs(nu.dot(x) - offset); };
  return v;
}

Vec phase_curvature(const PhaseState& s, const ProfileTable& profile, const BoundaryDensity& sigma)
{
  if (!s.ops) throw functional_error("phase state without operators");
  const Vec g = energy_gradient(*s.ops, profile.well(), sigma, s.eps, s.u);
  return g.cwiseQuotient(s.ops->lumped_mass);
}

std::vector<PhasePoint> phase_descriptors(const PhaseState& s, const ProfileTable& profile,
                                          const BoundaryDensity& sigma, const FunctionalOptions& q)
{
  const Vec H = phase_curvature(s, profile, sigma);
  std::vector<PhasePoint> out;
  for_each_point(s, profile, H, q, [&](const PhasePoint& p) { out.push_back(p); });
  return out;
}

double FunctionalReport::alt_mismatch() const { return std::abs(E_relEn - E_relEn_alt); }

int FunctionalReport::coercivity_violation(double slack) const
{
  for (int i = 0; i < num_coercivity; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (coercive[k] < -slack * (1 + E_relEn) - 1e-13) return i;
    if (coercive[k] > bounds[k] * E_relEn + slack * E_relEn + 1e-13) return i;
  }
  return -1;
}

FunctionalReport evaluate_functionals(const PhaseState& s, const CalibrationView& field,
                                      const ProfileTable& profile, const BoundaryDensity& sigma,
                                      const FunctionalOptions& q)
{
  FunctionalReport r = evaluate(s, field, profile, sigma, q, Needs{true, true, q.dissipation});
  if (!q.dissipation) r.D1 = r.D2 = std::numeric_limits<double>::quiet_NaN();
  return r;
}

RelativeEnergy relative_energy(const PhaseState& s, const CalibrationView& field,
                               const ProfileTable& profile, const BoundaryDensity& sigma,
                               const FunctionalOptions& q)
{
  const auto r = evaluate(s, field, profile, sigma, q, Needs{true, false, false});
  return {r.E_relEn, r.E_relEn_alt, r.ratios};
}

BulkError bulk_error(const PhaseState& s, const CalibrationView& field, const ProfileTable& profile,
                     const BoundaryDensity& sigma, const FunctionalOptions& q)
{
  const auto r = evaluate(s, field, profile, sigma, q, Needs{false, true, false});
  return {r.E_bulk, r.l1, r.bulk_ratio};
}

Dissipation dissipation_diagnostics(const PhaseState& s, const CalibrationView& field,
                                    const ProfileTable& profile, const BoundaryDensity& sigma,
                                    const FunctionalOptions& q)
{
  const auto r = evaluate(s, field, profile, sigma, q, Needs{false, false, true});
  return {r.D1, r.D2};
}

double fit_gronwall(const std::vector<FunctionalReport>& series, double floor)
{
  if (series.empty()) return 0.0;
  const double t0 = series.front().t;
  const double e0 = series.front().E_relEn + series.front().E_bulk + floor;
  double c = 0.0;
  for (const auto& r : series) {
    if (r.t <= t0) continue;
    const double e = r.E_relEn + r.E_bulk;
    if (e > e0) c = std::max(c, std::log(e / e0) / (r.t - t0));
  }
  return c;
}

void write_functional_csv(std::ostream& os, const std::vector<FunctionalReport>& series,
                          const std::vector<std::string>& metadata)
{
  for (const auto& m : metadata) os << "# " << m << "\n";
  os << "t,E_eps,E_relEn,E_bulk,l1,D1,D2,r0,r1,r2,r3,r4,r5,r6\n" << std::setprecision(17);
  for (const auto& r : series) {
    os << r.t << "," << r.E_eps << "," << r.E_relEn << "," << r.E_bulk << "," << r.l1 << "," << r.D1
       << "," << r.D2;
    for (double x : r.ratios) os << "," << x;
    os << "\n";
  }
}

} // namespace cflow
