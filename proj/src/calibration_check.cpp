#include "cflow/calibration.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace cflow {

const std::vector<std::string>& equality_conditions()
{
  static const std::vector<std::string> names{
      "consistency",  "second_consistency", "length_bound",   "boundary_xi",
      "boundary_B",   "weight_zero",        "weight_sign",    "weight_range",
      "grad_vel_xi_xi", "grad_vel_tangent"};
  return names;
}

const std::vector<std::string>& ratio_conditions()
{
  static const std::vector<std::string> names{
      "calibration1",      "calibration2",     "calibration3",
      "calibration4",      "weight_coercivity", "weight_evolution",
      "skew_symmetry_interior", "length_constraint"};
  return names;
}

const ConditionStat& CalibrationReport::at(const std::string& name) const
{
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw std::out_of_range("calibration report: no condition " + name);
}

std::string CalibrationReport::to_json() const
{
  nlohmann::ordered_json j;
  for (const auto& c : conditions) {
    j[c.name] = {{"max_ratio", c.max_ratio},
                 {"worst_point", {c.worst_point.x(), c.worst_point.y()}},
                 {"samples", c.samples}};
  }
  j["_summary"] = {{"fitted_c", fitted_c},
                   {"rho_mismatch", rho_mismatch},
                   {"hard_failures", hard_failures}};
  return j.dump(2);
}

FieldJets field_jets(const CalibrationField& field, const Vec2d& x, double h)
{
  FieldJets J;
  J.v = field.value(x);
  J.dt = field.time_derivative(x);
  for (int k = 0; k < 2; ++k) {
    Vec2d e = Vec2d::Zero();
    e[k] = h;
    const FieldValue m2 = field.value(x - 2 * e), m1 = field.value(x - e);
    const FieldValue p1 = field.value(x + e), p2 = field.value(x + 2 * e);
    auto d = [&](auto get) -> decltype(get(m2)) {
      return (get(m2) - 8.0 * get(m1) + 8.0 * get(p1) - get(p2)) / (12.0 * h);
    };
    J.grad_xi.col(k) = d([](const FieldValue& f) -> Vec2d { return f.xi; });
    J.grad_B.col(k) = d([](const FieldValue& f) -> Vec2d { return f.B; });
    J.grad_theta[k] = d([](const FieldValue& f) { return f.theta; });
  }
  return J;
}

namespace {

class Stats {
public:
  void add(const std::string& name, double ratio, const Vec2d& x)
  {
    auto [it, fresh] = index_.try_emplace(name, list_.size());
    if (fresh) list_.push_back(ConditionStat{name, 0.0, x, 0});
    ConditionStat& c = list_[it->second];
    ++c.samples;
    if (!(ratio <= c.max_ratio)) { // NaN counts as worst
      c.max_ratio = ratio;
      c.worst_point = x;
    }
  }
  void touch(const std::string& name)
  {
    auto [it, fresh] = index_.try_emplace(name, list_.size());
    if (fresh) list_.push_back(ConditionStat{name, 0.0, Vec2d::Zero(), 0});
  }
  std::vector<ConditionStat> take() { return std::move(list_); }

private:
  std::map<std::string, std::size_t> index_;
  std::vector<ConditionStat> list_;
};

Mat2d sym(const Mat2d& a) { return 0.5 * (a + a.transpose()); }

} // namespace

CalibrationReport check_calibration(const CalibrationField& field, const SamplePlan& plan)
{
  const CalibrationSnapshot& snap = field.now();
  const InterfaceSpline& spline = snap.spline();
  const DomainBoundary& domain = snap.domain();
  const CalibrationScales& sc = snap.scales();
  const double L = spline.param_end();
  const double ca = std::cos(snap.alpha());
  const double h = plan.h_fd;
  const double floor_d = std::max(plan.min_dist, 2.5 * h);

  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto log_uniform = [&](double a, double b) { return a * std::pow(b / a, U(rng)); };

  const int n_eq = std::max(8, plan.samples / 10);
  const int n_I = n_eq / 2, n_B = n_eq - n_I;
  const int n_ratio = std::max(16, plan.samples - n_eq);

  std::vector<Vec2d> on_I, on_B, inner;
  for (int k = 0; k < n_I; ++k) {
    double t;
    if (k % 2 == 0) {
      t = L * U(rng);
    } else {
      const double arc = log_uniform(plan.min_dist, std::max(2 * plan.min_dist, sc.r_bar));
      const double s0 = U(rng) < 0.5 ? arc : spline.total_arclength() - arc;
      t = spline.param_at_arclength(s0);
    }
    on_I.push_back(spline.position(std::clamp(t, 1e-9 * L, L * (1 - 1e-9))));
  }
  for (int k = 0; k < n_B; ++k) {
    if (k % 2 == 0) {
      on_B.push_back(domain.position(2 * pi * U(rng)));
    } else {
      const ContactFrame& f = snap.contact(U(rng) < 0.5 ? Endpoint::begin : Endpoint::end);
      const double arc = log_uniform(plan.min_dist, std::max(2 * plan.min_dist, 2 * sc.r_bar));
      const double dth = (U(rng) < 0.5 ? -1.0 : 1.0) * arc / domain.d1(f.boundary_theta).norm();
      on_B.push_back(domain.position(f.boundary_theta + dth));
    }
  }

  // interior samples: uniform, near I, near the boundary, near the contact points
  const double ax = domain.semi_axis_a(), by = domain.semi_axis_b();
  const Vec2d c = domain.center();
  int attempts = 0;
  while (static_cast<int>(inner.size()) < n_ratio && attempts < 200 * n_ratio) {
    ++attempts;
    const int kind = static_cast<int>(inner.size() % 10);
    Vec2d x;
    if (kind < 4) {
      x = c + Vec2d(ax * (2 * U(rng) - 1), by * (2 * U(rng) - 1));
    } else if (kind < 7) {
      const double t = L * U(rng);
      const Framed f = spline.frame(t);
      const double s = (U(rng) < 0.5 ? -1.0 : 1.0) * log_uniform(plan.min_dist, 0.5);
      x = f.point + s * f.normal;
    } else if (kind < 8) {
      const double th = 2 * pi * U(rng);
      x = domain.position(th) + log_uniform(plan.min_dist, 0.5) * domain.frame(th).normal;
    } else {
      const ContactFrame& f = snap.contact(kind == 8 ? Endpoint::begin : Endpoint::end);
      const double r = log_uniform(plan.min_dist, std::max(2 * plan.min_dist, sc.r_hat_min));
      const double a = 2 * pi * U(rng);
      x = f.p + r * Vec2d(std::cos(a), std::sin(a));
    }
    if (domain.project(x).s < floor_d) continue;
    if (spline.distance(x) < plan.min_dist) continue;
    inner.push_back(x);
  }

  // FD step adapted to the local length scale: distance to I, to the boundary and to p
  const Vec2d p0 = snap.contact(Endpoint::begin).p, p1 = snap.contact(Endpoint::end).p;
  auto local_h = [&](const Vec2d& x, double d, double dB) {
    const double ell = std::min({d, dB, (x - p0).norm(), (x - p1).norm()});
    return std::clamp(5e-3 * ell, 2e-6, h);
  };

  Stats st;
  for (const auto& n : equality_conditions()) st.touch(n);
  for (const auto& n : ratio_conditions()) st.touch(n);
  CalibrationReport rep;
  int sign_violations = 0, range_violations = 0, length_violations = 0;

  for (const Vec2d& x : on_I) {
    const FieldJets J = field_jets(field, x, local_h(x, h, domain.project(x).s));
    const InterfaceProjection ip = spline.project(x);
    const Vec2d n = spline.frame(ip.t).normal;
    st.add("consistency", (J.v.xi - n).norm(), x);
    st.add("second_consistency", (J.grad_xi.transpose() * n).norm(), x);
    st.add("weight_zero", std::abs(J.v.theta), x);
    st.add("length_bound", std::max(0.0, J.v.xi.norm() - 1.0), x);
  }
  for (const Vec2d& x : on_B) {
    const FieldJets J = field_jets(field, x, local_h(x, spline.distance(x), h));
    const Vec2d nB = domain.frame(domain.project(x).theta).normal;
    const Mat2d S = sym(J.grad_B);
    st.add("boundary_xi", std::abs(J.v.xi.dot(nB) - ca), x);
    st.add("boundary_B", std::abs(J.v.B.dot(nB)), x);
    st.add("grad_vel_xi_xi", (S * J.v.xi).norm(), x);
    st.add("grad_vel_tangent", (S * nB).norm(), x);
    st.add("length_bound", std::max(0.0, J.v.xi.norm() - 1.0), x);
  }

  const auto& ratio_names = ratio_conditions();
  const std::size_t n_ratio_names = ratio_names.size();
  struct Interior {
    std::vector<double> ratios; // in the order of ratio_conditions()
    double len = 0.0, theta = 0.0;
    bool inside = false;
  };
  auto admissible = [&](const Vec2d& x) {
    return domain.project(x).s >= floor_d && spline.distance(x) >= plan.min_dist;
  };
  auto interior = [&](const Vec2d& x) {
    const double d = spline.distance(x);
    const double dB = domain.project(x).s;
    const FieldJets J = field_jets(field, x, local_h(x, d, dB));
    const Vec2d& xi = J.v.xi;
    const Vec2d& B = J.v.B;
    const double th = J.v.theta;
    const double m1 = std::min(1.0, d), m2 = std::min(1.0, d * d);
    const Vec2d transport = J.dt.xi + J.grad_xi * B;
    const double len = xi.norm(), shortfall = 1.0 - len, at = std::abs(th);
    constexpr double inf = std::numeric_limits<double>::infinity();
    Interior r;
    r.len = len;
    r.theta = th;
    r.inside = snap.in_phase(x);
    r.ratios = {
        (transport + J.grad_B.transpose() * xi).norm() / m1,
        std::abs(xi.dot(transport)) / m2,
        std::abs(xi.dot(B) + J.grad_xi.trace()) / m1,
        std::abs(xi.dot(J.grad_B * xi)) / m1,
        at > 0 ? std::min({dB, d, 1.0}) / at : inf,
        at > 1e-12 ? std::abs(J.dt.theta + B.dot(J.grad_theta)) / at : 0.0,
        (sym(J.grad_B) * xi).norm() / m1,
        shortfall > 0 ? m2 / shortfall : inf};
    return r;
  };

  // best few samples per ratio condition, as seeds for a local ascent
  constexpr std::size_t n_seeds = 4;
  std::vector<std::vector<std::pair<double, Vec2d>>> seeds(n_ratio_names);
  auto offer = [&](std::size_t k, double v, const Vec2d& x) {
    auto& list = seeds[k];
    if (!std::isfinite(v)) return;
    list.emplace_back(v, x);
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (list.size() > n_seeds) list.pop_back();
  };
  auto record = [&](const Vec2d& x, const Interior& r) {
    for (std::size_t k = 0; k < n_ratio_names; ++k) st.add(ratio_names[k], r.ratios[k], x);
    st.add("length_bound", std::max(0.0, r.len - 1.0), x);
  };

  for (const Vec2d& x : inner) {
    const Interior r = interior(x);
    record(x, r);
    for (std::size_t k = 0; k < n_ratio_names; ++k) offer(k, r.ratios[k], x);
    if (r.len > 1.0 + 1e-8) ++length_violations;
    const double th = r.theta;
    const double viol = r.inside ? (th >= 0 ? std::max(th, 1e-300) : 0.0)
                                 : (th <= 0 ? std::max(-th, 1e-300) : 0.0);
    if (viol > 0) ++sign_violations;
    st.add("weight_sign", viol, x);
    st.add("weight_range", std::max(0.0, std::abs(th) - 1.0), x);
    if (std::abs(th) > 1.0 + 1e-12) ++range_violations;
  }

  // Compass search from the worst samples so the maxima do not hinge on the sample count.
  for (std::size_t k = 0; k < n_ratio_names; ++k) {
    for (auto [best, x] : seeds[k]) {
      double step = 0.25 * std::max(plan.min_dist, std::min(spline.distance(x), domain.project(x).s));
      for (int it = 0; it < 60 && step > 1e-3 * plan.min_dist; ++it) {
        bool moved = false;
        for (int dir = 0; dir < 8 && !moved; ++dir) {
          const double a = dir * pi / 4;
          const Vec2d y = x + step * Vec2d(std::cos(a), std::sin(a));
          if (!admissible(y)) continue;
          const Interior r = interior(y);
          record(y, r);
          if (r.ratios[k] > best && std::isfinite(r.ratios[k])) {
            best = r.ratios[k];
            x = y;
            moved = true;
          }
        }
        if (!moved) step *= 0.5;
      }
    }
  }

  rep.conditions = st.take();
  const double lc = rep.at("length_constraint").max_ratio;
  rep.fitted_c = std::isfinite(lc) && lc > 0 ? 1.0 / lc : 0.0;
  for (Endpoint e : {Endpoint::begin, Endpoint::end})
    rep.rho_mismatch = std::max(rep.rho_mismatch, std::abs(snap.contact(e).rho_mismatch()));

  auto fail_if = [&](const std::string& name, double tol) {
    const ConditionStat& s = rep.at(name);
    if (!(s.max_ratio <= tol)) {
      std::ostringstream os;
      os << name << " = " << s.max_ratio << " > " << tol << " at (" << s.worst_point.x() << ", "
         << s.worst_point.y() << ")";
      rep.hard_failures.push_back(os.str());
    }
  };
  fail_if("consistency", 1e-6);
  fail_if("second_consistency", 1e-4);
  fail_if("boundary_xi", 1e-6);
  fail_if("boundary_B", 1e-6);
  fail_if("weight_zero", 1e-6);
  if (length_violations) rep.hard_failures.push_back("|xi| > 1 + 1e-8 at " + std::to_string(length_violations) + " samples");
  if (sign_violations) rep.hard_failures.push_back("weight sign violated at " + std::to_string(sign_violations) + " samples");
  if (range_violations) rep.hard_failures.push_back("weight outside [-1, 1] at " + std::to_string(range_violations) + " samples");
  return rep;
}

} // namespace cflow
