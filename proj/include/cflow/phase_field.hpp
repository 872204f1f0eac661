#pragma once

#include "cflow/mesh.hpp"
#include "cflow/potentials.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

class step_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// P1 operators on a mesh: consistent and lumped mass, stiffness, boundary mass.
struct FemOperators {
  DiskMesh mesh;
  SpMat mass;
  SpMat stiffness;
  SpMat boundary_mass;
  Vec lumped_mass;
  Vec lumped_boundary_mass;
};

FemOperators assemble(DiskMesh mesh);

struct PhaseState {
  std::shared_ptr<const FemOperators> ops;
  Vec u;
  double t = 0.0;
  double eps = 0.0;
};

struct EnergyParts {
  double dirichlet = 0.0;  // eps/2 u^T K u
  double potential = 0.0;  // 1/eps sum m_i W(u_i)
  double boundary = 0.0;   // sum mb_i sigma(u_i)
  double total() const { return dirichlet + potential + boundary; }
};

// Vertex quadrature on triangles and trapezoid rule on boundary edges.
EnergyParts energy_parts(const FemOperators& ops, const DoubleWell& well,
                         const BoundaryDensity& sigma, double eps, const Vec& u);
double discrete_energy(const FemOperators& ops, const DoubleWell& well,
                       const BoundaryDensity& sigma, double eps, const Vec& u);
double discrete_energy(const PhaseState& s, const DoubleWell& well, const BoundaryDensity& sigma);

// Gradient of the energy above.
Vec energy_gradient(const FemOperators& ops, const DoubleWell& well, const BoundaryDensity& sigma,
                    double eps, const Vec& u);

// E_k(u) = E(u) + eps/(2 tau) |u - u_prev|_M^2 and its gradient.
double step_objective(const FemOperators& ops, const DoubleWell& well,
                      const BoundaryDensity& sigma, double eps, double tau, const Vec& u_prev,
                      const Vec& u);
Vec step_gradient(const FemOperators& ops, const DoubleWell& well, const BoundaryDensity& sigma,
                  double eps, double tau, const Vec& u_prev, const Vec& u);

struct StepOptions {
  double tol_factor = 1e-9;  // stop when |grad|_{M^-1} <= tol_factor (1 + |E|)
  double cg_tol = 1e-10;
  int max_newton = 50;
  int max_halvings = 40;
};

struct StepReport {
  int newton_iterations = 0;
  std::vector<double> gradient_norms;
  double energy = 0.0;        // E(u^k)
  double penalty = 0.0;       // eps/(2 tau) |du|_M^2
  double dissipation = 0.0;   // eps/tau |du|_M^2
};

// One minimizing-movement step from s with time step tau.
PhaseState minimizing_movement_step(const PhaseState& s, const DoubleWell& well,
                                    const BoundaryDensity& sigma, double tau,
                                    const StepOptions& opt = {}, StepReport* report = nullptr);

struct EnergyLogEntry {
  double t = 0.0, energy = 0.0, dissipation = 0.0;  // cumulative eps/tau |du|_M^2
  double penalty = 0.0;                             // this step's eps/(2tau)|du|_M^2
  double previous_energy = 0.0;
  int newton_iterations = 0;
};

struct RunOptions {
  double tau = 0.0;                 // 0: eps * h_max
  double T = 0.0;
  std::vector<double> snapshot_times;
  StepOptions step;
};

struct RunResult {
  std::vector<PhaseState> snapshots;
  std::vector<EnergyLogEntry> log;
  std::vector<std::string> warnings;
  double tau = 0.0;
};

using StateCallback = std::function<void(const PhaseState&)>;

// Repeated minimizing-movement steps to time T. The callback sees every snapshot.
RunResult run_allen_cahn(const PhaseState& u0, const DoubleWell& well, const BoundaryDensity& sigma,
                         const RunOptions& opt, const StateCallback& on_snapshot = {});

void write_snapshot(std::ostream& os, const PhaseState& s);
void save_snapshot(const std::string& path, const PhaseState& s);
// Reads "x y u" lines; the nodes must match the operators' mesh.
PhaseState read_snapshot(std::istream& is, std::shared_ptr<const FemOperators> ops);

void write_energy_log(std::ostream& os, const std::vector<EnergyLogEntry>& log,
                      const std::vector<std::string>& metadata);

} // namespace cflow
