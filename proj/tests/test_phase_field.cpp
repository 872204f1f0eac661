#include "cflow/phase_field.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace cflow;

namespace {

struct Setup {
  DoubleWell well = make_quartic_well();
  ProfileTable profile{well, 12.0, 1e-3};
};

const Setup& setup()
{
  static const Setup s;
  return s;
}

std::shared_ptr<const FemOperators> disk_ops(int n_r)
{
  return std::make_shared<const FemOperators>(assemble(build_disk_mesh(DomainBoundary::circle(), n_r)));
}

PhaseState profile_state(std::shared_ptr<const FemOperators> ops, double eps)
{
  Vec u(static_cast<Eigen::Index>(ops->mesh.num_nodes()));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::tanh(ops->mesh.nodes[static_cast<std::size_t>(i)].y() / eps);
  return PhaseState{ops, u, 0.0, eps};
}

} // namespace

TEST_CASE("disk mesh topology and quality")
{
  const auto m = build_disk_mesh(DomainBoundary::circle(), 4);
  CHECK(m.boundary_edges.size() == 24);
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) edges.insert(std::minmax(t[k], t[(k + 1) % 3]));
  const long V = static_cast<long>(m.num_nodes()), E = static_cast<long>(edges.size()),
             F = static_cast<long>(m.triangles.size());
  CHECK(V - E + F == 1);
  // the boundary loop closes
  for (std::size_t k = 0; k < m.boundary_edges.size(); ++k)
    CHECK(m.boundary_edges[k][1] == m.boundary_edges[(k + 1) % m.boundary_edges.size()][0]);
  for (int i : m.boundary_nodes) CHECK(std::abs(m.nodes[static_cast<std::size_t>(i)].norm() - 1) < 1e-12);

  for (int n : {16, 64, 256}) {
    const auto q = build_disk_mesh(DomainBoundary::circle(), n).quality;
    CHECK(q.min_angle_deg >= 20);
    CHECK(q.max_angle_deg <= 130);
  }
  CHECK(std::abs(build_disk_mesh(DomainBoundary::circle(), 64).area() - pi) < 2e-3);
  const auto e = build_disk_mesh(DomainBoundary::ellipse(1.2, 1.0), 16);
  CHECK(e.area() == doctest::Approx(pi * 1.2).epsilon(1e-2));
  CHECK_THROWS(build_disk_mesh(DomainBoundary::circle(), 3));
}

TEST_CASE("assembled operators")
{
  const auto ops = disk_ops(32);
  const Vec one = Vec::Ones(static_cast<Eigen::Index>(ops->mesh.num_nodes()));
  CHECK((ops->stiffness * one).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(one.dot(ops->mass * one) == doctest::Approx(ops->mesh.area()).epsilon(1e-13));
  CHECK(one.dot(ops->boundary_mass * one) == doctest::Approx(ops->mesh.boundary_length()).epsilon(1e-13));
  CHECK(std::abs(ops->mesh.boundary_length() - 2 * pi) < 0.01);
  CHECK((SpMat(ops->stiffness.transpose()) - ops->stiffness).norm() < 1e-12);
  CHECK((SpMat(ops->mass.transpose()) - ops->mass).norm() < 1e-15);
  // positive semidefinite: the smallest Rayleigh quotient over random vectors is >= 0
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    Vec v(one.size());
    for (auto& x : v) x = nd(rng);
    CHECK(v.dot(ops->stiffness * v) > 0);
  }
}

TEST_CASE("discrete energy of constant states")
{
  const auto& S = setup();
  const auto ops = disk_ops(16);
  const auto sigma = make_special_sigma(S.profile, pi / 3);
  const Vec one = Vec::Ones(static_cast<Eigen::Index>(ops->mesh.num_nodes()));
  CHECK(discrete_energy(*ops, S.well, sigma, 0.1, one) ==
        doctest::Approx(S.profile.c0() * 0.5 * ops->mesh.boundary_length()).epsilon(1e-12));
  CHECK(discrete_energy(*ops, S.well, sigma, 0.1, -one) == 0.0);
}

TEST_CASE("profile energy approximates the surface tension times the chord")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 2);
  const PhaseState s = profile_state(disk_ops(128), 0.05);
  const double E = discrete_energy(s, S.well, sigma);
  CHECK(std::abs(E - 2 * S.profile.c0()) / (2 * S.profile.c0()) < 0.05);
}

TEST_CASE("energy gradient matches finite differences")
{
  const auto& S = setup();
  const auto sigma = make_bump_sigma(S.profile, pi / 3, 0.1);
  // keep u inside (-1,1), where sigma and W are smooth
  PhaseState s = profile_state(disk_ops(16), 0.2);
  s.u *= 0.9;
  const double tau = 0.01;
  const Vec up = s.u * 0.9;
  const Vec g = step_gradient(*s.ops, S.well, sigma, s.eps, tau, up, s.u);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 10; ++k) {
    Vec v(s.u.size());
    for (auto& x : v) x = nd(rng);
    v /= v.norm();
    const double h = 1e-3;
    auto f = [&](double a) { return step_objective(*s.ops, S.well, sigma, s.eps, tau, up, s.u + a * v); };
    const double fd = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
    CHECK(std::abs(fd - g.dot(v)) <= 1e-6 * std::abs(g.dot(v)));
  }
}

TEST_CASE("minimizing movement step")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 3);
  const auto ops = disk_ops(16);
  const double eps = 0.1;
  PhaseState minus{ops, -Vec::Ones(static_cast<Eigen::Index>(ops->mesh.num_nodes())), 0.0, eps};
  StepReport rep;
  const PhaseState same = minimizing_movement_step(minus, S.well, sigma, 0.01, {}, &rep);
  CHECK((same.u - minus.u).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(rep.newton_iterations == 0);

  // an off-center, tilted profile evolves
  PhaseState s = profile_state(ops, eps);
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    const Vec2d x = ops->mesh.nodes[static_cast<std::size_t>(i)];
    s.u[i] = std::tanh((x.y() - 0.3 * x.x() * x.x() + 0.1) / eps);
  }
  const double tau = 0.005;
  for (int k = 0; k < 5; ++k) {
    const double E0 = discrete_energy(s, S.well, sigma);
    const PhaseState n = minimizing_movement_step(s, S.well, sigma, tau, {}, &rep);
    CHECK(rep.energy + rep.penalty <= E0);
    CHECK(rep.energy <= E0);
    CHECK(n.u.maxCoeff() <= 1.0);
    CHECK(n.u.minCoeff() >= -1.0);
    const auto& gn = rep.gradient_norms;
    REQUIRE(gn.size() >= 3);
    const std::size_t m = gn.size();
    // quadratic convergence on the last two iterations
    CHECK(gn[m - 1] / gn[m - 2] < 0.3);
    CHECK(gn[m - 2] / gn[m - 3] < 0.3);
    s = n;
  }
}

TEST_CASE("stationary profile run")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 2);
  const double eps = 0.05;
  const PhaseState u0 = profile_state(disk_ops(64), eps);
  RunOptions opt;
  opt.T = 0.05;
  const RunResult r = run_allen_cahn(u0, S.well, sigma, opt);
  CHECK_FALSE(r.warnings.empty());  // n_r = 64 does not resolve eps/4 at the diagonals
  for (std::size_t k = 1; k < r.log.size(); ++k) {
    CHECK(r.log[k].energy <= r.log[k - 1].energy);
    CHECK(r.log[k].energy + r.log[k].penalty <= r.log[k].previous_energy);
  }
  const double E0 = r.log.front().energy, ET = r.log.back().energy;
  CHECK(std::abs(ET - E0) / E0 < 2e-2);
  CHECK(r.log.back().t == doctest::Approx(0.05));
  CHECK(r.snapshots.back().u.lpNorm<Eigen::Infinity>() <= 1.0);
}

TEST_CASE("dissipation identity residual shrinks with tau")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 3);
  const auto ops = disk_ops(24);
  const double eps = 0.1;
  PhaseState u0 = profile_state(ops, eps);
  for (Eigen::Index i = 0; i < u0.u.size(); ++i) {
    const Vec2d x = ops->mesh.nodes[static_cast<std::size_t>(i)];
    u0.u[i] = std::tanh((x.y() - 0.4 * x.x() * x.x() + 0.2) / eps);
  }
  std::vector<double> res;
  for (double tau : {0.004, 0.002, 0.001}) {
    RunOptions opt;
    opt.T = 0.02;
    opt.tau = tau;
    const RunResult r = run_allen_cahn(u0, S.well, sigma, opt);
    double half = 0.0;
    for (const auto& e : r.log) half += e.penalty;
    // scheme inequality with the half penalty
    CHECK(r.log.front().energy - r.log.back().energy - half >= 0);
    res.push_back(std::abs(r.log.front().energy - r.log.back().energy - r.log.back().dissipation));
  }
  CHECK(res[1] < 0.7 * res[0]);
  CHECK(res[2] < 0.7 * res[1]);
}

TEST_CASE("constant trajectory")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 3);
  const auto ops = disk_ops(8);
  PhaseState u0{ops, -Vec::Ones(static_cast<Eigen::Index>(ops->mesh.num_nodes())), 0.0, 0.2};
  RunOptions opt;
  opt.T = 0.1;
  opt.snapshot_times = {0.0, 0.05, 0.1};
  int seen = 0;
  const RunResult r = run_allen_cahn(u0, S.well, sigma, opt, [&](const PhaseState&) { ++seen; });
  CHECK(seen == 3);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[1].t == doctest::Approx(0.05));
  for (const auto& e : r.log) CHECK(e.energy == 0.0);
}

TEST_CASE("spatial self-convergence on the stationary profile")
{
  const auto& S = setup();
  const auto sigma = make_special_sigma(S.profile, pi / 2);
  const double eps = 0.15;
  std::vector<PhaseState> sol;
  for (int n : {12, 24, 48}) {
    RunOptions opt;
    opt.T = 0.02;
    opt.tau = 0.005;
    sol.push_back(run_allen_cahn(profile_state(disk_ops(n), eps), S.well, sigma, opt).snapshots.back());
  }
  // node (ring k, index j) of the coarse mesh is node (2k, 2j) of the fine one
  auto diff = [](const PhaseState& c, const PhaseState& f) {
    const int n = c.ops->mesh.rings;
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const int cnt = k == 0 ? 1 : 6 * k;
      for (int j = 0; j < cnt; ++j) {
        const int ic = k == 0 ? 0 : 1 + 3 * k * (k - 1) + j;
        const int K = 2 * k, jf = 2 * j;
        const int iff = K == 0 ? 0 : 1 + 3 * K * (K - 1) + jf;
        const double d = c.u[ic] - f.u[iff];
        s += c.ops->lumped_mass[ic] * d * d;
      }
    }
    return std::sqrt(s);
  };
  const double d1 = diff(sol[0], sol[1]), d2 = diff(sol[1], sol[2]);
  CHECK(d1 / d2 >= 3.0);
}

TEST_CASE("snapshot round trip")
{
  const auto ops = disk_ops(4);
  PhaseState s = profile_state(ops, 0.3);
  s.t = 0.25;
  std::stringstream ss;
  write_snapshot(ss, s);
  const PhaseState r = read_snapshot(ss, ops);
  CHECK(r.t == 0.25);
  CHECK(r.eps == 0.3);
  CHECK((r.u - s.u).lpNorm<Eigen::Infinity>() == 0.0);
}
