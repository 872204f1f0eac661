#include "cflow/phase_field.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <iomanip>
#include <sstream>

namespace cflow {

FemOperators assemble(DiskMesh mesh)
{
  FemOperators ops;
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  std::vector<Eigen::Triplet<double>> tm, tk, tb;
  tm.reserve(9 * mesh.triangles.size());
  tk.reserve(9 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec2d p[3] = {mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
    const double area = 0.5 * cross<double>(p[1] - p[0], p[2] - p[0]);
    double b[3], c[3];
    for (int i = 0; i < 3; ++i) {
      b[i] = p[(i + 1) % 3].y() - p[(i + 2) % 3].y();
      c[i] = p[(i + 2) % 3].x() - p[(i + 1) % 3].x();
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        tm.emplace_back(t[i], t[j], area / 12.0 * (i == j ? 2.0 : 1.0));
        tk.emplace_back(t[i], t[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
      }
  }
  for (const auto& e : mesh.boundary_edges) {
    const double len = (mesh.nodes[e[1]] - mesh.nodes[e[0]]).norm();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) tb.emplace_back(e[i], e[j], len / 6.0 * (i == j ? 2.0 : 1.0));
  }
  ops.mass.resize(n, n);
  ops.stiffness.resize(n, n);
  ops.boundary_mass.resize(n, n);
  ops.mass.setFromTriplets(tm.begin(), tm.end());
  ops.stiffness.setFromTriplets(tk.begin(), tk.end());
  ops.boundary_mass.setFromTriplets(tb.begin(), tb.end());
  const Vec ones = Vec::Ones(n);
  ops.lumped_mass = ops.mass * ones;
  ops.lumped_boundary_mass = ops.boundary_mass * ones;
  ops.mesh = std::move(mesh);
  return ops;
}

EnergyParts energy_parts(const FemOperators& ops, const DoubleWell& well,
                         const BoundaryDensity& sigma, double eps, const Vec& u)
{
  EnergyParts e;
  // K is positive semidefinite; drop the round-off for near-constant u
  e.dirichlet = std::max(0.0, 0.5 * eps * u.dot(ops.stiffness * u));
  double w = 0.0, b = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    w += ops.lumped_mass[i] * well.eval(u[i]);
    if (ops.lumped_boundary_mass[i] != 0.0) b += ops.lumped_boundary_mass[i] * sigma.eval(u[i]);
  }
  e.potential = w / eps;
  e.boundary = b;
  return e;
}

double discrete_energy(const FemOperators& ops, const DoubleWell& well,
                       const BoundaryDensity& sigma, double eps, const Vec& u)
{
  return energy_parts(ops, well, sigma, eps, u).total();
}

double discrete_energy(const PhaseState& s, const DoubleWell& well, const BoundaryDensity& sigma)
{
  return discrete_energy(*s.ops, well, sigma, s.eps, s.u);
}

Vec energy_gradient(const FemOperators& ops, const DoubleWell& well, const BoundaryDensity& sigma,
                    double eps, const Vec& u)
{
  Vec g = eps * (ops.stiffness * u);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    g[i] += ops.lumped_mass[i] * well.deriv(u[i]) / eps;
    if (ops.lumped_boundary_mass[i] != 0.0) g[i] += ops.lumped_boundary_mass[i] * sigma.deriv(u[i]);
  }
  return g;
}

double step_objective(const FemOperators& ops, const DoubleWell& well,
                      const BoundaryDensity& sigma, double eps, double tau, const Vec& u_prev,
                      const Vec& u)
{
  const Vec du = u - u_prev;
  return discrete_energy(ops, well, sigma, eps, u) + 0.5 * eps / tau * du.dot(ops.mass * du);
}

Vec step_gradient(const FemOperators& ops, const DoubleWell& well, const BoundaryDensity& sigma,
                  double eps, double tau, const Vec& u_prev, const Vec& u)
{
  return energy_gradient(ops, well, sigma, eps, u) + eps / tau * (ops.mass * (u - u_prev));
}

PhaseState minimizing_movement_step(const PhaseState& s, const DoubleWell& well,
                                    const BoundaryDensity& sigma, double tau,
                                    const StepOptions& opt, StepReport* report)
{
  if (!(tau > 0)) throw std::invalid_argument("minimizing movement: tau must be positive");
  const FemOperators& ops = *s.ops;
  const double eps = s.eps;
  const Vec& up = s.u;
  const Vec& m = ops.lumped_mass;
  const Vec& mb = ops.lumped_boundary_mass;
  const Eigen::Index n = up.size();

  SpMat base = (eps / tau) * ops.mass + eps * ops.stiffness;
  base.makeCompressed();
  // positions of the diagonal entries in the compressed storage
  std::vector<Eigen::Index> diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = &base.coeffRef(i, i) - base.valuePtr();
  const Vec base_diag = Eigen::Map<const Vec>(base.valuePtr(), base.nonZeros())(diag);
  SpMat hess = base;

  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(opt.cg_tol);

  Vec u = up.cwiseMax(-1.0).cwiseMin(1.0);
  double Ek = step_objective(ops, well, sigma, eps, tau, up, u);
  StepReport rep;
  for (int it = 0;; ++it) {
    Vec g = step_gradient(ops, well, sigma, eps, tau, up, u);
    // inactive components only: a node at a bound pushed outward stays there
    for (Eigen::Index i = 0; i < n; ++i)
      if ((u[i] >= 1.0 && g[i] < 0) || (u[i] <= -1.0 && g[i] > 0)) g[i] = 0.0;
    const double gn = std::sqrt((g.array().square() / m.array()).sum());
    rep.gradient_norms.push_back(gn);
    const double E = discrete_energy(ops, well, sigma, eps, u);
    if (gn <= opt.tol_factor * (1 + std::abs(E))) break;
    if (it >= opt.max_newton) {
      std::ostringstream os;
      os << "minimizing movement: no convergence in " << opt.max_newton << " Newton iterations (|g| = " << gn << ")";
      throw step_error(os.str());
    }

    // true Hessian after the first iterate; convex split on the first iterate and
    // at nodes failing the local bound when the true Hessian is not usable
    auto solve = [&](bool modified) -> std::optional<Vec> {
      double* val = hess.valuePtr();
      for (Eigen::Index i = 0; i < n; ++i) {
        double d = m[i] * well.second_deriv(u[i]) / eps + mb[i] * sigma.second_deriv(u[i]);
        if (modified && (it == 0 || 0.25 * eps / tau * m[i] + d < 0))
          d = m[i] * well.convex_second(u[i]) / eps + mb[i] * std::max(0.0, sigma.second_deriv(u[i]));
        val[diag[i]] = base_diag[i] + d;
      }
      cg.compute(hess);
      Vec d = cg.solve(-g);
      if (cg.info() != Eigen::Success) return std::nullopt;
      if (!(g.dot(d) < 0) || !(d.dot(hess * d) > 0)) return std::nullopt;
      return d;
    };
    std::optional<Vec> found = it > 0 ? solve(false) : std::nullopt;
    if (!found) found = solve(true);
    if (!found) throw step_error("minimizing movement: linear solve failed");
    const Vec& dir = *found;

    // Below this predicted decrease the energy cannot resolve the step, and the
    // residual norm serves as merit function instead.
    const double predicted = -g.dot(dir);
    const bool resolved = predicted > 1e-11 * (1 + std::abs(Ek));
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      const Vec trial = (u + step * dir).cwiseMax(-1.0).cwiseMin(1.0);
      const double Et = step_objective(ops, well, sigma, eps, tau, up, trial);
      bool ok = Et <= Ek + 1e-4 * g.dot(trial - u);
      if (!ok && !resolved) {
        Vec gt = step_gradient(ops, well, sigma, eps, tau, up, trial);
        ok = std::sqrt((gt.array().square() / m.array()).sum()) < 0.9 * gn;
      }
      if (ok) {
        u = trial;
        Ek = Et;
        accepted = true;
        break;
      }
    }
    ++rep.newton_iterations;
    if (!accepted) {
      std::ostringstream os;
      os << "minimizing movement: line search failed after " << opt.max_halvings << " halvings (|g| = " << gn << ")";
      throw step_error(os.str());
    }
  }
  // the step may only lower E_k below its value at u_prev, as evaluated
  if (Ek > discrete_energy(ops, well, sigma, eps, up)) u = up;
  PhaseState out{s.ops, u, s.t + tau, eps};
  const Vec du = u - up;
  const double q = du.dot(ops.mass * du);
  rep.energy = discrete_energy(ops, well, sigma, eps, u);
  rep.penalty = 0.5 * eps / tau * q;
  rep.dissipation = eps / tau * q;
  if (report) *report = rep;
  return out;
}

RunResult run_allen_cahn(const PhaseState& u0, const DoubleWell& well, const BoundaryDensity& sigma,
                         const RunOptions& opt, const StateCallback& on_snapshot)
{
  if (u0.u.minCoeff() < -1.0 || u0.u.maxCoeff() > 1.0)
    throw std::invalid_argument("run_allen_cahn: initial values outside [-1,1]");
  RunResult res;
  const double h = u0.ops->mesh.quality.h_max;
  res.tau = opt.tau > 0 ? opt.tau : u0.eps * h;
  if (h > u0.eps / 4) {
    std::ostringstream os;
    os << "mesh does not resolve eps: h_max = " << h << " > eps/4 = " << u0.eps / 4;
    res.warnings.push_back(os.str());
  }
  std::vector<double> marks = opt.snapshot_times;
  std::sort(marks.begin(), marks.end());
  std::size_t next = 0;
  PhaseState s = u0;
  auto emit = [&](const PhaseState& st) {
    res.snapshots.push_back(st);
    if (on_snapshot) on_snapshot(st);
  };
  while (next < marks.size() && marks[next] <= s.t + 1e-12) {
    emit(s);
    ++next;
  }
  double E = discrete_energy(s, well, sigma);
  res.log.push_back({s.t, E, 0.0, 0.0, E, 0});
  const double t_end = u0.t + opt.T;
  const double slack = 1e-9 * res.tau;
  while (s.t < t_end - slack) {
    double target = t_end;
    if (next < marks.size()) target = std::min(target, marks[next]);
    double tau = std::min(res.tau, target - s.t);
    // avoid a sliver step before a mark
    if (target - s.t - tau < 0.01 * res.tau) tau = target - s.t;
    StepReport rep;
    PhaseState nxt = minimizing_movement_step(s, well, sigma, tau, opt.step, &rep);
    if (std::abs(nxt.t - target) < slack) nxt.t = target;
    const EnergyLogEntry prev = res.log.back();
    res.log.push_back({nxt.t, rep.energy, prev.dissipation + rep.dissipation, rep.penalty, prev.energy,
                       rep.newton_iterations});
    s = std::move(nxt);
    while (next < marks.size() && marks[next] <= s.t + slack) {
      emit(s);
      ++next;
    }
  }
  if (res.snapshots.empty() || res.snapshots.back().t != s.t) emit(s);
  return res;
}

void write_snapshot(std::ostream& os, const PhaseState& s)
{
  os << std::setprecision(17) << "# t=" << s.t << " eps=" << s.eps << "\n";
  const auto& x = s.ops->mesh.nodes;
  for (std::size_t i = 0; i < x.size(); ++i)
    os << x[i].x() << " " << x[i].y() << " " << s.u[static_cast<Eigen::Index>(i)] << "\n";
}

void save_snapshot(const std::string& path, const PhaseState& s)
{
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_snapshot(f, s);
}

PhaseState read_snapshot(std::istream& is, std::shared_ptr<const FemOperators> ops)
{
  PhaseState s;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# t=", 0) != 0)
    throw std::runtime_error("snapshot: missing '# t=<t> eps=<eps>' header");
  {
    std::istringstream h(line.substr(4));
    std::string eps_tok;
    h >> s.t >> eps_tok;
    if (eps_tok.rfind("eps=", 0) != 0) throw std::runtime_error("snapshot: header lacks eps");
    s.eps = std::stod(eps_tok.substr(4));
  }
  const auto& x = ops->mesh.nodes;
  s.u.resize(static_cast<Eigen::Index>(x.size()));
  std::size_t i = 0;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream l(line);
    double px, py, u;
    if (!(l >> px >> py >> u)) throw std::runtime_error("snapshot: bad line " + std::to_string(lineno));
    if (i >= x.size() || (Vec2d(px, py) - x[i]).norm() > 1e-9)
      throw std::runtime_error("snapshot: node mismatch at line " + std::to_string(lineno));
    s.u[static_cast<Eigen::Index>(i++)] = u;
  }
  if (i != x.size()) throw std::runtime_error("snapshot: node count mismatch");
  s.ops = std::move(ops);
  return s;
}

void write_energy_log(std::ostream& os, const std::vector<EnergyLogEntry>& log,
                      const std::vector<std::string>& metadata)
{
  for (const auto& m : metadata) os << "# " << m << "\n";
  os << "t,E,dissipation\n" << std::setprecision(17);
  for (const auto& e : log) os << e.t << "," << e.energy << "," << e.dissipation << "\n";
}

} // namespace cflow
