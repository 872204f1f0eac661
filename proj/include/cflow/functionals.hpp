#pragma once

#include "cflow/calibration.hpp"
#include "cflow/phase_field.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class functional_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// What the functionals need from a calibration at one time.
struct CalibrationView {
  double t = 0.0;
  std::function<FieldValue(const Vec2d&)> value;
  std::function<double(const Vec2d&)> div_xi;
  std::function<bool(const Vec2d&)> in_phase;
  std::function<double(const Vec2d&)> interface_distance;
  double length_constant = 1.0; // c in 1 - |xi| >= c min(1, dist^2)
};

// div xi by central differences with step h.
CalibrationView view_of(const CalibrationField& field, double length_constant, double h = 1e-5);

// Flat stationary interface {n.x = offset}, phase on the n side: xi = n, B = 0,
// theta = weight_profile(s / width).
CalibrationView flat_view(const Vec2d& n, double offset, double width, double t = 0.0);

struct FunctionalOptions {
  int level = 0; // each triangle split into 4^level pieces with the 3-point rule
  // integrand factors below this are treated as zero (skips the field evaluation)
  double negligible = 1e-15;
  bool dissipation = true; // D1 and D2 need div xi by differences; NaN in the report when off
};

struct PhasePoint {
  Vec2d x = Vec2d::Zero();
  double weight = 0.0;
  double u = 0.0;
  double psi = 0.0;
  Vec2d grad_u = Vec2d::Zero();
  Vec2d grad_psi = Vec2d::Zero();
  Vec2d normal = Vec2d::UnitX(); // (1,0) where grad u vanishes
  double H = 0.0;
};

// H_eps = -eps Lap_h u + W'(u)/eps at the nodes, Lap_h u = -M_lump^{-1}(K u + M_dO sigma'(u)/eps).
Vec phase_curvature(const PhaseState& s, const ProfileTable& profile, const BoundaryDensity& sigma);

// psi_eps, grad psi_eps, n_eps, H_eps at the interior quadrature points.
std::vector<PhasePoint> phase_descriptors(const PhaseState& s, const ProfileTable& profile,
                                          const BoundaryDensity& sigma,
                                          const FunctionalOptions& q = {});

inline constexpr int num_coercivity = 7;

struct FunctionalReport {
  double t = 0.0;
  double E_eps = 0.0;
  double E_relEn = 0.0;
  double E_relEn_alt = 0.0;
  // the three nonnegative pieces of the alternative form
  double equipartition = 0.0, tilt = 0.0, boundary = 0.0;
  double E_bulk = 0.0;
  double l1 = 0.0;
  double bulk_ratio = 0.0; // l1^2 / E_bulk, 0 when E_bulk vanishes
  double D1 = 0.0, D2 = 0.0;
  // numerators of the coercivity ratios and the ratios to E_relEn
  std::array<double, num_coercivity> coercive{};
  std::array<double, num_coercivity> ratios{};
  std::array<double, num_coercivity> bounds{};
  double length_constant = 1.0;

  double alt_mismatch() const;
  // index of the first violated coercivity bound, or -1
  int coercivity_violation(double slack = 1e-9) const;
};

FunctionalReport evaluate_functionals(const PhaseState& s, const CalibrationView& field,
                                      const ProfileTable& profile, const BoundaryDensity& sigma,
                                      const FunctionalOptions& q = {});

struct RelativeEnergy {
  double value = 0.0, alt = 0.0;
  std::array<double, num_coercivity> ratios{};
};
RelativeEnergy relative_energy(const PhaseState& s, const CalibrationView& field,
                               const ProfileTable& profile, const BoundaryDensity& sigma,
                               const FunctionalOptions& q = {});

struct BulkError {
  double value = 0.0, l1 = 0.0, ratio = 0.0;
};
BulkError bulk_error(const PhaseState& s, const CalibrationView& field, const ProfileTable& profile,
                     const BoundaryDensity& sigma, const FunctionalOptions& q = {});

struct Dissipation {
  double D1 = 0.0, D2 = 0.0;
};
Dissipation dissipation_diagnostics(const PhaseState& s, const CalibrationView& field,
                                    const ProfileTable& profile, const BoundaryDensity& sigma,
                                    const FunctionalOptions& q = {});

// Smallest C >= 0 with e(t) <= (e(0) + floor) exp(C t), e = E_relEn + E_bulk.
double fit_gronwall(const std::vector<FunctionalReport>& series, double floor = 1e-12);

void write_functional_csv(std::ostream& os, const std::vector<FunctionalReport>& series,
                          const std::vector<std::string>& metadata);

} // namespace cflow
