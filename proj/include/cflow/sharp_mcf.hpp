#pragma once

#include "cflow/geometry.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class evolution_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Endpoint { begin = 0, end = 1 };

struct McfOptions {
  double tol_angle = 1e-6;
  bool redistribute = true;
  // spacing collapse: min spacing below this fraction of the mean spacing
  double collapse_fraction = 0.2;
};

// Spline through the curve with end tangents fixed by the contact angle.
InterfaceSpline contact_spline(const InterfaceCurve& curve, const DomainBoundary& domain,
                               double alpha);

// dp/dt = H / (tau_dO . n_I) tau_dO, the boundary-tangential velocity with normal part H.
Vec2d contact_velocity(const InterfaceSpline& spline, const DomainBoundary& domain, Endpoint e);
Vec2d contact_velocity(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                       Endpoint e);

// |-H H_dO + H^2 tau_I.tau_dO - n_dO . grad H| at the contact point.
double check_third_order_compat(const InterfaceCurve& curve, const DomainBoundary& domain,
                                double alpha, Endpoint e);

// max over both ends of |n_I . n_dO - cos alpha|, measured on the contact spline
double angle_residual(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha);
// same, with the end tangents estimated from the nodes alone (no angle information)
double free_angle_residual(const InterfaceCurve& curve, const DomainBoundary& domain,
                           double alpha);

// Moves every node by dt times its velocity H n + T tau, with T interpolated in
// arclength between the tangential parts of the two contact velocities. Endpoints
// move by dp/dt and are projected back to the boundary. dt may be negative.
InterfaceCurve shift_curve(const InterfaceCurve& curve, const DomainBoundary& domain,
                           double alpha, double dt);

// Resamples the curve to uniform arclength on its contact spline.
InterfaceCurve redistribute(const InterfaceCurve& curve, const DomainBoundary& domain,
                            double alpha);

// One explicit Euler step of MCF with contact angle alpha. Requires dt <= 0.4 h_min^2.
InterfaceCurve mcf_step(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                        double dt, const McfOptions& opt = {});

struct Trajectory {
  std::vector<InterfaceCurve> snapshots;
  int steps = 0;
  double dt = 0.0;
};

// Evolves to time T with steps of at most dt, recording a snapshot every
// `every` time units (and at T). On an evolution error the step is halved once.
Trajectory evolve(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha,
                  double dt, double T, double every, const McfOptions& opt = {});

// Curve at time t from a trajectory by linear interpolation of matching nodes.
InterfaceCurve curve_at(const Trajectory& traj, double t);

// Directory of curve files plus "index.txt" with lines "t filename".
void save_trajectory(const std::string& dir, const Trajectory& traj);
Trajectory load_trajectory(const std::string& dir);

double enclosed_area(const InterfaceCurve& curve, const DomainBoundary& domain);

} // namespace cflow
