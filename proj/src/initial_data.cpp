#include "cflow/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cflow {

namespace {

double segment_distance(const Vec2d& x, const Vec2d& p, const Vec2d& d, double len)
{
  const double t = std::clamp((x - p).dot(d), 0.0, len);
  return (x - p - t * d).norm();
}

} // namespace

ExtendedSignedDistance::ExtendedSignedDistance(const InterfaceCurve& curve,
                                               const DomainBoundary& domain, double alpha,
                                               double r_ext)
    : domain_(domain), r_ext_(r_ext)
{
  if (!(r_ext > 0)) throw initial_data_error("extension length must be positive");
  if (curve.size() < 4) throw initial_data_error("interface needs at least 4 nodes");
  if (std::abs(std::cos(alpha)) > 1 - 1e-6)
    throw initial_data_error("tangential contact: |cos(alpha)| > 1 - 1e-6");
  // the nodes alone must meet the boundary transversally as well
  const InterfaceSpline free(curve);
  for (double t : {free.param_begin(), free.param_end()}) {
    const Framed fi = free.frame(t);
    const Framed fb = domain.frame(domain.project(fi.point).theta);
    if (std::abs(fi.normal.dot(fb.normal)) > 1 - 1e-6) {
      std::ostringstream os;
      os << "tangential contact at (" << fi.point.x() << ", " << fi.point.y() << ")";
      throw initial_data_error(os.str());
    }
  }
  spline_ = contact_spline(curve, domain, alpha);
  region_ = RegionIndicator(spline_, domain);
  const double L = spline_.param_end();
  p_ = {spline_.position(0.0), spline_.position(L)};
  d_ = {Vec2d(-spline_.d1(0.0).normalized()), Vec2d(spline_.d1(L).normalized())};
}

double ExtendedSignedDistance::operator()(const Vec2d& x) const
{
  double d = spline_.distance(x);
  for (int e = 0; e < 2; ++e) d = std::min(d, segment_distance(x, p_[e], d_[e], 0.5 * r_ext_));
  bool plus;
  const InterfaceProjection ip = spline_.project(x);
  if (ip.in_tube) {
    plus = ip.s >= 0;
  } else {
    // the ray-casting polygon is inscribed in the boundary: test slightly inside
    const BoundaryProjection bp = domain_.project(x);
    const Vec2d y = bp.s < 1e-5 ? Vec2d(bp.foot + 1e-5 * domain_.frame(bp.theta).normal) : x;
    plus = region_.inside(y);
  }
  return plus ? d : -d;
}

ExtendedSignedDistance extended_signed_distance(const InterfaceCurve& curve,
                                                const DomainBoundary& domain, double alpha,
                                                double r_ext)
{
  return ExtendedSignedDistance(curve, domain, alpha, r_ext);
}

double default_extension(const CalibrationField& field)
{
  const auto& r = field.scales().r_p;
  return std::min(r[0], r[1]);
}

PhaseState well_prepared_field(const ExtendedSignedDistance& dist,
                               std::shared_ptr<const FemOperators> ops, double eps,
                               const ProfileTable& profile, double t)
{
  if (!ops) throw initial_data_error("well-prepared field: no operators");
  if (!(eps > 0)) throw initial_data_error("well-prepared field: eps must be positive");
  const auto& nodes = ops->mesh.nodes;
  Vec u(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i)
    u[static_cast<Eigen::Index>(i)] = std::clamp(profile.theta(dist(nodes[i]) / eps), -1.0, 1.0);
  return PhaseState{std::move(ops), std::move(u), t, eps};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope: need >= 2 points");
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw std::invalid_argument("slope: nonpositive value");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

PreparednessReport verify_preparedness(const InterfaceCurve& curve, const DomainBoundary& domain,
                                       double alpha, const ProfileTable& profile,
                                       const PreparednessOptions& opt)
{
  if (opt.eps.size() < 3) throw initial_data_error("preparedness: need at least 3 values of eps");
  if (opt.n_r.size() != opt.eps.size())
    throw initial_data_error("preparedness: one mesh size per eps required");
  const BoundaryDensity sigma = opt.sigma_kind == SigmaKind::special
                                    ? make_special_sigma(profile, alpha)
                                    : make_bump_sigma(profile, alpha, opt.kappa);
  const CalibrationField field = build_global_field(curve, domain, alpha);
  PreparednessReport rep;
  rep.length_constant = check_calibration(field, SamplePlan{opt.calibration_samples}).fitted_c;
  const CalibrationView view = view_of(field, rep.length_constant);
  const ExtendedSignedDistance dist(curve, domain, alpha, default_extension(field));

  FunctionalOptions fo;
  fo.level = opt.quad_level;
  fo.dissipation = false;
  std::vector<double> eps, tot, rel, bnd, blk, vol;
  for (std::size_t k = 0; k < opt.eps.size(); ++k) {
    PreparednessRow row;
    row.eps = opt.eps[k];
    row.n_r = opt.n_r[k];
    const auto ops = std::make_shared<const FemOperators>(assemble(build_disk_mesh(domain, row.n_r)));
    row.h_max = ops->mesh.quality.h_max;
    row.resolved = row.h_max <= row.eps / 4;
    if (!row.resolved) {
      std::ostringstream os;
      os << "eps=" << row.eps << ", n_r=" << row.n_r << ": h_max=" << row.h_max << " > eps/4";
      rep.warnings.push_back(os.str());
    }
    const PhaseState u0 = well_prepared_field(dist, ops, row.eps, profile, curve.time);
    const auto r = evaluate_functionals(u0, view, profile, sigma, fo);
    row.E_relEn = r.E_relEn;
    row.E_bulk = r.E_bulk;
    row.boundary = r.boundary;
    row.volume = r.E_relEn - r.boundary;
    if (opt.check_quadrature) {
      FunctionalOptions fine = fo;
      fine.level = fo.level + 1;
      const auto f = evaluate_functionals(u0, view, profile, sigma, fine);
      auto rel_change = [](double a, double b) { return b != 0 ? std::abs(a - b) / std::abs(b) : std::abs(a); };
      row.quad_change = std::max({rel_change(r.E_relEn, f.E_relEn), rel_change(r.E_bulk, f.E_bulk),
                                  rel_change(r.boundary, f.boundary)});
      rep.max_quad_change = std::max(rep.max_quad_change, row.quad_change);
    }
    eps.push_back(row.eps);
    tot.push_back(row.total());
    rel.push_back(row.E_relEn);
    bnd.push_back(row.boundary);
    blk.push_back(row.E_bulk);
    vol.push_back(row.volume);
    rep.rows.push_back(row);
  }
  auto slope = [&](const std::vector<double>& y) {
    for (double v : y)
      if (!(v > 0)) return 0.0; // e.g. the vanishing boundary term of the special density
    return loglog_slope(eps, y);
  };
  rep.slope_total = slope(tot);
  rep.slope_relEn = slope(rel);
  rep.slope_boundary = slope(bnd);
  rep.slope_bulk = slope(blk);
  rep.slope_volume = slope(vol);
  return rep;
}

} // namespace cflow
