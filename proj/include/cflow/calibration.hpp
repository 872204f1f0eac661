#pragma once

#include "cflow/geometry.hpp"
#include "cflow/sharp_mcf.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class calibration_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Plateau cutoffs: 1 on [-1/2, 1/2] (resp. [-3/2, 3/2]), 0 outside (-1, 1) (resp. (-2, 2)).
double plateau_cutoff(double u);
double plateau_cutoff_wide(double u);
// zeta(s) = theta(s^2)(1 - s^2); the wide variant is 1 on [-1, 1] and vanishes beyond sqrt 2.
double quadratic_cutoff(double s);
double quadratic_cutoff_wide(double s);
// Odd, C^2, nonincreasing: -s on [-1/2, 1/2], -+1 beyond +-1.
double weight_profile(double s);

struct ContactFrame {
  Endpoint end = Endpoint::begin;
  Vec2d p = Vec2d::Zero();
  double param = 0.0;          // spline parameter of p
  double boundary_theta = 0.0; // boundary parameter of p
  Framed interface;            // n_I, tau_I, H_I at p
  double interface_slope = 0.0; // tau_I . grad H_I
  Framed boundary;             // n_dO (inner), tau_dO, H_dO at p
  Mat2d rotation = Mat2d::Identity(); // R n_dO = n_I
  Vec2d dpdt = Vec2d::Zero();
  double beta_I = 0.0, beta_dO = 0.0;
  double gamma_I = 0.0, gamma_dO = 0.0; // gamma_I at p
  double rho_I = 0.0, rho_dO = 0.0;     // rho_I at p
  double r_p = 0.0;

  // rho_dO - rho_I; times tau_dO . n_I this is the third-order compatibility residual
  double rho_mismatch() const { return rho_dO - rho_I; }
};

ContactFrame build_contact_frame(const InterfaceSpline& spline, const DomainBoundary& domain,
                                 double alpha, Endpoint e, double tol_angle = 1e-6);
ContactFrame build_contact_frame(const InterfaceCurve& curve, const DomainBoundary& domain,
                                 double alpha, Endpoint e, double tol_angle = 1e-6);

// gamma_I at spline parameter t: gamma_I(p) plus the signed integral of H^2 along tau_I.
double gamma_I_at(const InterfaceSpline& spline, const ContactFrame& frame, double t);
// The same as a function of the arclength from p measured into the curve.
std::function<double(double)> gamma_I_along_interface(const InterfaceSpline& spline,
                                                      const ContactFrame& frame);

enum class Sector { interface, interp_plus, interp_minus, boundary, outer };
const char* sector_name(Sector s);

// Sectors of a ball around p, by the angle phi measured from d_I, the interface
// direction into the domain. The boundary directions +-tau_dO sit at angles
// a_pos > 0 and a_neg < 0. The "plus" interpolation wedge is the one on the n_I side.
struct WedgeDecomposition {
  Vec2d p = Vec2d::Zero();
  Vec2d d_I = Vec2d::UnitX();
  double a_pos = 0.0, a_neg = 0.0;
  double half = 0.0;
  int plus_sign = 1; // sign of phi on the n_I side

  double angle(const Vec2d& x) const;
  Sector classify(const Vec2d& x) const;
  // +1 if x is angularly on the n_I side of the interface direction, -1 otherwise
  int side(const Vec2d& x) const;
};

WedgeDecomposition build_wedges(const ContactFrame& frame);

struct LambdaValue {
  double value = 0.0;
  Vec2d grad = Vec2d::Zero();
  double dt = 0.0;
};

// Quintic smoothstep in the angle, 1 on the interface side, 0 on the boundary side.
LambdaValue interp_lambda(const WedgeDecomposition& w, const Vec2d& x);
// With a time derivative from the wedges at a later time.
LambdaValue interp_lambda(const WedgeDecomposition& w, const WedgeDecomposition& later,
                          const Vec2d& x, double dt_probe);

struct CalibrationOptions {
  double dt_probe = 1e-5;   // time offset of the snapshots for time derivatives
  double fd_normal = 1e-5;  // step for the normal derivative in the bulk velocity
  double c_bar = 0.5;
  double tol_angle = 1e-6;
};

struct CalibrationScales {
  std::array<double, 2> r_p{};
  std::array<double, 2> r_hat{};
  double r_hat_min = 0.0; // min(r_hat, dist(p-, p+)/3), radius of the tangential correction
  double r_bar = 0.0;
  double delta = 0.0;
  double c_bar = 0.5;
};

struct LocalFields {
  Vec2d xi_I, xi_dO, B_I, B_dO;
  Vec2d xi_hat, xi, B;
  Sector sector = Sector::interface;
  double lambda = 1.0;
};

struct Localization {
  double eta_I = 0.0, eta_dO = 0.0;
  std::array<double, 2> eta_p{};
  double eta_bulk = 1.0;
  double eta_I_wide = 0.0;
  std::array<double, 2> eta_p_wide{};
  int positive_count() const;
};

struct FieldValue {
  Vec2d xi = Vec2d::Zero();
  Vec2d B = Vec2d::Zero();
  double theta = 0.0;
};

// Calibration fields for one time slice.
class CalibrationSnapshot {
public:
  // Determines the scales from the geometry.
  CalibrationSnapshot(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                      const CalibrationOptions& opt = {});
  // Uses the given scales (snapshots of one field share them).
  CalibrationSnapshot(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                      const CalibrationScales& scales, const CalibrationOptions& opt = {});

  double time() const { return curve_.time; }
  double alpha() const { return alpha_; }
  const InterfaceCurve& curve() const { return curve_; }
  const InterfaceSpline& spline() const { return *spline_; }
  const DomainBoundary& domain() const { return domain_; }
  const ContactFrame& contact(Endpoint e) const { return frames_[static_cast<int>(e)]; }
  const WedgeDecomposition& wedges(Endpoint e) const { return wedges_[static_cast<int>(e)]; }
  const CalibrationScales& scales() const { return scales_; }

  // Candidate fields and the interpolated, normalized pair at a contact point.
  // Throws calibration_error if |xi_hat|^2 leaves [1/4, 2].
  LocalFields local_fields(Endpoint e, const Vec2d& x) const;
  // xi^I and B^I in the interface tube.
  std::pair<Vec2d, Vec2d> bulk_fields(const Vec2d& x) const;

  Localization localization(const Vec2d& x) const;
  FieldValue value(const Vec2d& x) const;
  bool in_phase(const Vec2d& x) const { return region_.inside(x); }
  // distance to the closed interface
  double interface_distance(const Vec2d& x) const { return spline_->distance(x); }

private:
  void init(const CalibrationScales* scales);
  struct Context;
  Context context(const Vec2d& x) const;
  LocalFields local_fields(int e, const Vec2d& x, const InterfaceProjection& ip,
                           const BoundaryProjection& bp, bool check) const;
  Vec2d bulk_velocity(const Vec2d& x, const InterfaceProjection& ip) const;
  double gamma_tilde(const Vec2d& x, const Vec2d& tau) const;
  void compute_scales();

  InterfaceCurve curve_;
  DomainBoundary domain_;
  double alpha_;
  CalibrationOptions opt_;
  std::shared_ptr<const InterfaceSpline> spline_;
  std::array<ContactFrame, 2> frames_;
  std::array<WedgeDecomposition, 2> wedges_;
  CalibrationScales scales_;
  RegionIndicator region_;
};

// (xi, B, theta) at time t with time derivatives by central differences between
// snapshots at t -+ dt_probe (and t -+ 2 dt_probe for the fourth-order stencil).
class CalibrationField {
public:
  // The neighbouring snapshots come from shifting the curve by the flow; fourth order in time.
  CalibrationField(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                   const CalibrationOptions& opt = {});
  // Explicit neighbours at times t - dt and t + dt; second order in time.
  CalibrationField(const InterfaceCurve& before, const InterfaceCurve& curve,
                   const InterfaceCurve& after, const DomainBoundary& domain, double alpha,
                   const CalibrationOptions& opt = {});

  double time() const { return now_->time(); }
  double alpha() const { return now_->alpha(); }
  double dt_probe() const { return dt_; }
  const CalibrationSnapshot& now() const { return *now_; }
  const CalibrationSnapshot& before() const { return *before_; }
  const CalibrationSnapshot& after() const { return *after_; }
  const DomainBoundary& domain() const { return now_->domain(); }
  const CalibrationScales& scales() const { return now_->scales(); }

  FieldValue value(const Vec2d& x) const { return now_->value(x); }
  FieldValue time_derivative(const Vec2d& x) const;
  Vec2d xi(const Vec2d& x) const { return value(x).xi; }
  Vec2d B(const Vec2d& x) const { return value(x).B; }
  double theta(const Vec2d& x) const { return value(x).theta; }

private:
  std::shared_ptr<const CalibrationSnapshot> before_, now_, after_;
  std::shared_ptr<const CalibrationSnapshot> before2_, after2_; // t -+ 2 dt, may be empty
  double dt_ = 0.0;
};

CalibrationField build_global_field(const InterfaceCurve& curve, const DomainBoundary& domain,
                                    double alpha, const CalibrationOptions& opt = {});

// ---- checker

struct SamplePlan {
  int samples = 10000;
  std::uint64_t seed = 1;
  double h_fd = 1e-4;
  double min_dist = 1e-3; // floor on distances to I and to the boundary for ratio samples
};

struct ConditionStat {
  std::string name;
  double max_ratio = 0.0;
  Vec2d worst_point = Vec2d::Zero();
  int samples = 0;
};

struct CalibrationReport {
  std::vector<ConditionStat> conditions;
  double fitted_c = 0.0; // constant of the quadratic length constraint
  double rho_mismatch = 0.0;
  std::vector<std::string> hard_failures;

  const ConditionStat& at(const std::string& name) const;
  bool ok() const { return hard_failures.empty(); }
  std::string to_json() const;
};

// Names of the conditions that are equalities (residual, no distance weight).
const std::vector<std::string>& equality_conditions();
// Names of the distance-weighted ratio conditions.
const std::vector<std::string>& ratio_conditions();

struct FieldJets {
  FieldValue v;
  FieldValue dt;
  Mat2d grad_xi = Mat2d::Zero(); // (i, j) = d_j xi_i
  Mat2d grad_B = Mat2d::Zero();
  Vec2d grad_theta = Vec2d::Zero();
};
// 4th-order central differences in space, central differences in time.
FieldJets field_jets(const CalibrationField& field, const Vec2d& x, double h_fd);

CalibrationReport check_calibration(const CalibrationField& field, const SamplePlan& plan = {});

} // namespace cflow
