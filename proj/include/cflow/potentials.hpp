#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class validation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using ScalarFn = std::function<double(double)>;

struct DoubleWell {
  std::string name;
  ScalarFn eval;
  ScalarFn deriv;
  ScalarFn second_deriv;
  // W = W1 + W2 with W1 convex and W2 having bounded second derivative.
  ScalarFn convex_eval, convex_deriv, convex_second;
  ScalarFn concave_eval, concave_deriv, concave_second;
  // sqrt(2W) and its derivative; the latter stays finite at the wells.
  ScalarFn speed;
  ScalarFn speed_deriv;
  double growth_exponent = 4.0;
};

// W(u) = 1/2 (1 - u^2)^2 with W1 = 1/2 u^4 + 1/4, W2 = -u^2 + 1/4.
DoubleWell make_quartic_well();

// Sampled check of the well shape and of the convex split. Throws validation_error.
void validate_well(const DoubleWell& well, int samples = 4001);

class ProfileTable {
public:
  ProfileTable(const DoubleWell& well, double r_prof, double h_ode);

  // theta0 and theta0' by cubic Hermite interpolation of the ODE table;
  // +-1 and 0 beyond the table.
  double theta(double r) const;
  double theta_deriv(double r) const;

  // Antiderivative of sqrt(2W) from -1, constant outside [-1,1].
  double psi(double u) const;
  double psi_deriv(double u) const;

  double c0() const { return c0_; }
  double r_prof() const { return r_prof_; }
  double h_ode() const { return h_; }
  const std::vector<double>& nodes() const { return r_; }
  const std::vector<double>& values() const { return th_; }
  const std::vector<double>& derivs() const { return dth_; }
  const DoubleWell& well() const { return well_; }

  // Quadrature of theta0'^2 over the table.
  double dirichlet_integral() const;

private:
  DoubleWell well_;
  double r_prof_, h_;
  std::vector<double> r_, th_, dth_;
  double c0_ = 0.0;
  // psi on a uniform grid over [-1,1]
  double psi_h_ = 0.0;
  std::vector<double> psi_;
};

enum class SigmaKind { special, bump };

struct BoundaryDensity {
  std::string name;
  SigmaKind kind = SigmaKind::special;
  double alpha = 0.0;
  double kappa = 0.0;
  ScalarFn eval;
  ScalarFn deriv;
  ScalarFn second_deriv;
};

BoundaryDensity make_special_sigma(const ProfileTable& profile, double alpha);
BoundaryDensity make_bump_sigma(const ProfileTable& profile, double alpha, double kappa);

// The five sampled conditions on a boundary density. Throws validation_error naming
// the failing sample.
void validate_boundary_density(const BoundaryDensity& sigma, const ProfileTable& profile,
                               int samples = 20001);

} // namespace cflow
