#pragma once

#include "cflow/functionals.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class initial_data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Signed distance to the interface extended past each contact point by a straight
// tangent segment of length r_ext / 2; positive in A. Outside the tube it is the
// unsigned distance with the sign of the side, which keeps it 1-Lipschitz in the domain.
class ExtendedSignedDistance {
public:
  ExtendedSignedDistance(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                         double r_ext);

  double operator()(const Vec2d& x) const;
  double r_ext() const { return r_ext_; }
  const InterfaceSpline& spline() const { return spline_; }
  // start and unit direction of the extension segments
  const std::array<Vec2d, 2>& segment_start() const { return p_; }
  const std::array<Vec2d, 2>& segment_direction() const { return d_; }

private:
  DomainBoundary domain_;
  InterfaceSpline spline_;
  RegionIndicator region_;
  std::array<Vec2d, 2> p_, d_;
  double r_ext_;
};

ExtendedSignedDistance extended_signed_distance(const InterfaceCurve& curve,
                                                const DomainBoundary& domain, double alpha,
                                                double r_ext);

// Half-length rule: twice the extension is the smaller contact radius of the calibration.
double default_extension(const CalibrationField& field);

// u0 = theta0(s / eps) at the nodes, at the time of the curve.
PhaseState well_prepared_field(const ExtendedSignedDistance& dist,
                               std::shared_ptr<const FemOperators> ops, double eps,
                               const ProfileTable& profile, double t = 0.0);

struct PreparednessOptions {
  SigmaKind sigma_kind = SigmaKind::special;
  double kappa = 0.0; // bump height
  std::vector<double> eps{0.08, 0.04, 0.02};
  std::vector<int> n_r{64, 128, 256};
  int quad_level = 0;
  bool check_quadrature = true; // repeat each evaluation one quadrature level finer
  int calibration_samples = 2000; // for the length constant
};

struct PreparednessRow {
  double eps = 0.0;
  int n_r = 0;
  double h_max = 0.0;
  double E_relEn = 0.0, E_bulk = 0.0, boundary = 0.0, volume = 0.0; // volume = E_relEn - boundary
  double total() const { return E_relEn + E_bulk; }
  double quad_change = 0.0; // max relative change of the reported energies
  bool resolved = true;
};

struct PreparednessReport {
  std::vector<PreparednessRow> rows;
  double slope_total = 0.0, slope_relEn = 0.0, slope_boundary = 0.0, slope_bulk = 0.0,
         slope_volume = 0.0;
  double max_quad_change = 0.0;
  double length_constant = 0.0;
  std::vector<std::string> warnings;
};

PreparednessReport verify_preparedness(const InterfaceCurve& curve, const DomainBoundary& domain,
                                       double alpha, const ProfileTable& profile,
                                       const PreparednessOptions& opt = {});

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace cflow
