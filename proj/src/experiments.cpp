#include "cflow/experiments.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace cflow {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double x)
{
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string short_num(double x)
{
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// Uniform arclength resampling on the contact spline.
InterfaceCurve resample(const InterfaceCurve& curve, const DomainBoundary& domain, double alpha, int nodes)
{
  const InterfaceSpline s = contact_spline(curve, domain, alpha);
  const double L = s.total_arclength();
  InterfaceCurve out;
  out.time = curve.time;
  for (int i = 0; i < nodes; ++i) out.nodes.push_back(s.position(s.param_at_arclength(L * i / (nodes - 1))));
  out.nodes.front() = domain.project(out.nodes.front()).foot;
  out.nodes.back() = domain.project(out.nodes.back()).foot;
  return out;
}

// dt lowered to 90% of the tracker's bound 0.4 h_min^2.
double tracker_step(const InterfaceCurve& c, double dt, std::vector<std::string>& notes)
{
  const double h = c.min_spacing();
  const double bound = 0.9 * 0.4 * h * h;
  if (dt > bound) {
    notes.push_back("front tracking dt lowered from " + short_num(dt) + " to " + short_num(bound) +
                    " (step bound 0.4 h_min^2 at h_min = " + short_num(h) + ")");
    return bound;
  }
  return dt;
}

std::vector<double> logged_times(const Config& c)
{
  if (c.T == 0) return {0.0};
  std::vector<double> t;
  for (int k = 0; k <= c.log_intervals; ++k) t.push_back(c.T * k / c.log_intervals);
  return t;
}

template <typename F>
void for_each_parallel(std::size_t n, int threads, F f)
{
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string run_tag(double eps) { return "eps" + short_num(eps); }

CheckLine check(std::string name, bool ok, std::string detail = {})
{
  return CheckLine{std::move(name), ok, std::move(detail)};
}

json checks_json(const std::vector<CheckLine>& checks)
{
  json a = json::array();
  for (const auto& c : checks) a.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
  return a;
}

void finish(CommandResult& r, json j, const std::string& out_dir)
{
  json head;
  head["command"] = r.command;
  head["version"] = code_version;
  head["pass"] = r.pass();
  head["checks"] = checks_json(r.checks);
  head["log"] = r.log;
  for (auto& [k, v] : j.items()) head[k] = v;
  r.json = head.dump(2) + "\n";
  if (!out_dir.empty()) {
    const std::string path = (fs::path(out_dir) / (r.command + ".json")).string();
    write_file_atomic(path, r.json);
    r.files.push_back(path);
  }
}

void prepare_out(const std::string& out_dir)
{
  if (!out_dir.empty()) fs::create_directories(out_dir);
}

std::pair<double, double> band(const Config& c, double lo, double hi)
{
  return {std::isnan(c.band_low) ? lo : c.band_low, std::isnan(c.band_high) ? hi : c.band_high};
}

// Energy monotonicity, coercivity and the alternative form at every logged time.
void structural_checks(const Study& s, std::vector<CheckLine>& out)
{
  for (const auto& r : s.runs) {
    const std::string tag = " " + run_tag(r.eps);
    int bad_step = -1;
    for (std::size_t k = 1; k < r.energy_log.size(); ++k) {
      const auto& e = r.energy_log[k];
      if (e.energy > e.previous_energy + 1e-12 * std::abs(e.previous_energy)) {
        bad_step = static_cast<int>(k);
        break;
      }
    }
    out.push_back(check("energy_monotone" + tag, bad_step < 0,
                        bad_step < 0 ? std::to_string(r.energy_log.size() - 1) + " steps"
                                     : "energy increased at step " + std::to_string(bad_step)));
    std::string coerc = "ok at " + std::to_string(r.series.size()) + " times";
    bool coerc_ok = true;
    double worst_alt = 0.0;
    for (const auto& f : r.series) {
      const int v = f.coercivity_violation();
      if (v >= 0 && coerc_ok) {
        coerc_ok = false;
        coerc = "bound " + std::to_string(v) + " violated at t = " + short_num(f.t) + ": ratio " +
                short_num(f.ratios[static_cast<std::size_t>(v)]) + " > " +
                short_num(f.bounds[static_cast<std::size_t>(v)]);
      }
      worst_alt = std::max(worst_alt, f.alt_mismatch() / std::max(f.E_relEn, 1e-13));
    }
    out.push_back(check("coercivity" + tag, coerc_ok, coerc));
    out.push_back(check("alternative_form" + tag, worst_alt <= 1e-8,
                        "max relative mismatch " + short_num(worst_alt)));
  }
}

void write_run_files(const Config& c, const Problem& p, const Study& s, const std::string& out_dir,
                     CommandResult& r)
{
  if (out_dir.empty()) return;
  for (const auto& run : s.runs) {
    const auto meta = metadata(c, p, run.eps, run.n_r, run.h_max, run.tau);
    std::ostringstream e, f;
    write_energy_log(e, run.energy_log, meta);
    write_functional_csv(f, run.series, meta);
    const std::string pe = (fs::path(out_dir) / ("energy_" + run_tag(run.eps) + ".csv")).string();
    const std::string pf = (fs::path(out_dir) / ("functionals_" + run_tag(run.eps) + ".csv")).string();
    write_file_atomic(pe, e.str());
    write_file_atomic(pf, f.str());
    r.files.push_back(pe);
    r.files.push_back(pf);
  }
}

json runs_json(const Study& s)
{
  json a = json::array();
  for (const auto& r : s.runs) {
    a.push_back({{"eps", r.eps},
                 {"n_r", r.n_r},
                 {"h_max", r.h_max},
                 {"tau", r.tau},
                 {"resolved", r.resolved},
                 {"initial_error", r.initial_error()},
                 {"l1_final", r.l1_final()},
                 {"gronwall_C", r.gronwall},
                 {"warnings", r.warnings}});
  }
  return a;
}

} // namespace

void write_file_atomic(const std::string& path, const std::string& content)
{
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

DomainBoundary make_domain(const Config& c)
{
  return c.domain_shape == "circle" ? DomainBoundary::circle(c.semi_a) : DomainBoundary::ellipse(c.semi_a, c.semi_b);
}

InterfaceCurve make_interface(const Config& c, const DomainBoundary& domain, int nodes)
{
  if (c.interface_shape == "diameter") return make_diameter(domain, nodes);
  if (c.interface_shape == "chord") return make_circular_chord(c.half_opening, c.alpha, nodes);
  InterfaceCurve curve = load_curve(c.curve_file);
  if (static_cast<int>(curve.size()) != nodes) curve = resample(curve, domain, c.alpha, nodes);
  return curve;
}

Problem make_problem(const Config& c)
{
  check_config(c);
  ProfileTable profile(make_quartic_well(), c.r_prof, c.h_ode);
  BoundaryDensity sigma;
  try {
    sigma = c.sigma_kind == SigmaKind::special ? make_special_sigma(profile, c.alpha)
                                               : make_bump_sigma(profile, c.alpha, c.kappa);
  } catch (const std::invalid_argument& e) {
    throw config_error(c.source + ": " + e.what());
  }
  DomainBoundary domain = make_domain(c);
  InterfaceCurve curve = make_interface(c, domain, c.nodes);
  return Problem{std::move(profile), std::move(sigma), domain, std::move(curve), c.alpha};
}

int resolving_ring_count(const DomainBoundary& domain, double eps)
{
  // h_max is close to 1.73 / n_r on the unit disk
  const double scale = std::max(domain.semi_axis_a(), domain.semi_axis_b());
  int n = std::max(2, static_cast<int>(std::floor(1.7 * scale / (eps / 4))));
  while (build_disk_mesh(domain, n).quality.h_max > eps / 4) ++n;
  return n;
}

std::vector<int> ring_counts(const Config& c, const DomainBoundary& domain)
{
  if (!c.n_r.empty()) return c.n_r;
  std::vector<int> n;
  for (double e : c.eps) n.push_back(resolving_ring_count(domain, e));
  return n;
}

std::vector<std::string> metadata(const Config& c, const Problem& p, std::optional<double> eps,
                                  std::optional<int> n_r, std::optional<double> h_max,
                                  std::optional<double> tau)
{
  std::vector<std::string> m;
  m.push_back("well: " + p.profile.well().name + ", c0 = " + num(p.profile.c0()));
  m.push_back("sigma: " + p.sigma.name + ", kappa = " + num(p.sigma.kappa));
  m.push_back("alpha: " + num(p.alpha));
  m.push_back("domain: " + p.domain.describe());
  m.push_back("interface: " + c.interface_shape + ", nodes = " + std::to_string(c.nodes));
  if (n_r) {
    std::string mesh = "mesh: disk rings n_r = " + std::to_string(*n_r);
    if (h_max) mesh += ", h_max = " + num(*h_max);
    m.push_back(mesh);
  }
  if (eps) m.push_back("eps: " + num(*eps));
  if (tau) m.push_back("tau: " + num(*tau));
  if (eps && !c.dissipation) m.push_back("dissipation: off (D1, D2 not evaluated)");
  m.push_back("version: " + std::string(code_version));
  return m;
}

ReferenceFlow reference_flow(const Config& c, const Problem& p, double tau_coarse)
{
  ReferenceFlow r;
  r.nodes = 4 * static_cast<int>(p.curve.size());
  InterfaceCurve fine = make_interface(c, p.domain, r.nodes);
  fine.time = p.curve.time;
  r.dt = tracker_step(fine, tau_coarse / 16, r.notes);
  if (c.T > 0)
    r.trajectory = evolve(fine, p.domain, p.alpha, r.dt, c.T, c.T / c.log_intervals);
  else
    r.trajectory.snapshots = {fine};
  return r;
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& err,
                 const std::vector<bool>& include)
{
  if (eps.size() != err.size() || eps.size() != include.size())
    throw std::invalid_argument("fit_rate: size mismatch");
  RateFit f;
  f.used = include;
  auto fit = [&] {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < eps.size(); ++i)
      if (f.used[i]) {
        if (!(eps[i] > 0) || !(err[i] > 0)) throw std::invalid_argument("fit_rate: nonpositive value");
        x.push_back(std::log(eps[i]));
        y.push_back(std::log(err[i]));
      }
    if (x.size() < 2) throw std::invalid_argument("fit_rate: fewer than 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i] / n;
      my += y[i] / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - f.intercept - f.slope * x[i], 2);
    f.rms = std::sqrt(ss / n);
  };
  fit();
  std::size_t largest = eps.size();
  int count = 0;
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (f.used[i]) {
      ++count;
      if (largest == eps.size() || eps[i] > eps[largest]) largest = i;
    }
  const double res = std::abs(std::log(err[largest]) - f.intercept - f.slope * std::log(eps[largest]));
  if (count >= 3 && res > 3 * f.rms) {
    f.used[largest] = false;
    f.excluded_largest = true;
    fit();
  }
  return f;
}

Study run_study(const Config& c, const Problem& p, int threads)
{
  Study s;
  s.times = logged_times(c);
  const std::vector<int> rings = ring_counts(c, p.domain);
  const std::size_t n = c.eps.size();

  std::vector<std::shared_ptr<const FemOperators>> ops(n);
  std::vector<double> taus(n);
  std::size_t coarse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ops[i] = std::make_shared<const FemOperators>(assemble(build_disk_mesh(p.domain, rings[i])));
    taus[i] = c.tau > 0 ? c.tau : c.eps[i] * ops[i]->mesh.quality.h_max;
    if (c.eps[i] > c.eps[coarse]) coarse = i;
  }
  s.reference = reference_flow(c, p, taus[coarse]);
  for (const auto& note : s.reference.notes) s.log.push_back(note);

  std::vector<CalibrationView> views;
  double r_ext = 0.0;
  for (double t : s.times) {
    const CalibrationField field = build_global_field(curve_at(s.reference.trajectory, t), p.domain, p.alpha);
    if (views.empty()) r_ext = default_extension(field);
    const double lc = check_calibration(field, SamplePlan{c.length_samples, c.seed}).fitted_c;
    s.length_constants.push_back(lc);
    views.push_back(view_of(field, lc));
  }
  const ExtendedSignedDistance dist(s.reference.trajectory.snapshots.front(), p.domain, p.alpha, r_ext);
  FunctionalOptions fo;
  fo.level = c.quad_level;
  fo.dissipation = c.dissipation;

  s.runs.resize(n);
  for_each_parallel(n, threads, [&](std::size_t i) {
    EpsRun& r = s.runs[i];
    r.eps = c.eps[i];
    r.n_r = rings[i];
    r.h_max = ops[i]->mesh.quality.h_max;
    r.tau = taus[i];
    r.resolved = r.h_max <= r.eps / 4;
    const PhaseState u0 = well_prepared_field(dist, ops[i], r.eps, p.profile, p.curve.time);
    RunOptions ro;
    ro.tau = r.tau;
    ro.T = c.T;
    ro.snapshot_times = s.times;
    ro.step.tol_factor = c.newton_tol;
    std::size_t k = 0;
    RunResult res = run_allen_cahn(u0, p.profile.well(), p.sigma, ro, [&](const PhaseState& st) {
      if (k < views.size()) r.series.push_back(evaluate_functionals(st, views[k++], p.profile, p.sigma, fo));
    });
    r.energy_log = std::move(res.log);
    for (auto& w : res.warnings) r.warnings.push_back(run_tag(r.eps) + ": " + w);
    r.gronwall = fit_gronwall(r.series);
  });
  for (const auto& r : s.runs)
    for (const auto& w : r.warnings) s.log.push_back(w);
  return s;
}

Convergence run_convergence(const Config& c, const Problem& p, int threads)
{
  Convergence cv;
  cv.study = run_study(c, p, threads);
  cv.log = cv.study.log;
  const auto& runs = cv.study.runs;
  std::vector<double> eps, l1, init;
  std::vector<bool> include;
  for (const auto& r : runs) {
    eps.push_back(r.eps);
    l1.push_back(r.l1_final());
    init.push_back(std::sqrt(std::max(r.initial_error(), 0.0)));
    include.push_back(r.resolved || c.force);
    if (!r.resolved)
      cv.log.push_back(run_tag(r.eps) + ": h_max = " + short_num(r.h_max) + " > eps/4, " +
                       (c.force ? "kept in the fit (force)" : "excluded from the fit"));
  }
  cv.l1_fit = fit_rate(eps, l1, include);
  cv.l1_rate = cv.l1_fit.slope;
  if (cv.l1_fit.excluded_largest)
    cv.log.push_back("largest eps excluded from the l1 fit: residual > 3 x RMS " + short_num(cv.l1_fit.rms));
  try {
    cv.initial_rate = fit_rate(eps, init, include).slope;
  } catch (const std::invalid_argument&) {
    cv.initial_rate = std::numeric_limits<double>::quiet_NaN();
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (include[i]) {
      lo = std::min(lo, runs[i].gronwall);
      hi = std::max(hi, runs[i].gronwall);
    }
  if (hi <= 1e-12)
    cv.gronwall_spread = 1.0;
  else
    cv.gronwall_spread = lo > 1e-12 ? hi / lo : std::numeric_limits<double>::infinity();
  return cv;
}

bool CommandResult::pass() const
{
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.ok; });
}

CommandResult cmd_validate(const Config& c, const std::string& out_dir)
{
  prepare_out(out_dir);
  CommandResult r;
  r.command = "validate";
  auto guarded = [&](const std::string& name, auto body) {
    try {
      r.checks.push_back(check(name, true, body()));
    } catch (const std::exception& e) {
      r.checks.push_back(check(name, false, e.what()));
    }
  };
  const DoubleWell well = make_quartic_well();
  guarded("well", [&] {
    validate_well(well);
    return std::string("W(+-1) = 0, W > 0 elsewhere, convex split");
  });
  const ProfileTable profile(well, c.r_prof, c.h_ode);
  guarded("profile", [&] {
    const double dc = std::abs(profile.c0() - 4.0 / 3.0);
    double dt = 0;
    for (double x = -5; x <= 5; x += 0.01) dt = std::max(dt, std::abs(profile.theta(x) - std::tanh(x)));
    if (dc > 1e-8 || dt > 1e-8)
      throw validation_error("profile off its closed form: |c0 - 4/3| = " + short_num(dc) +
                             ", max|theta0 - tanh| = " + short_num(dt));
    return "c0 = " + num(profile.c0()) + ", max|theta0 - tanh| = " + short_num(dt);
  });
  guarded("sigma", [&] {
    const BoundaryDensity sigma = c.sigma_kind == SigmaKind::special
                                      ? make_special_sigma(profile, c.alpha)
                                      : make_bump_sigma(profile, c.alpha, c.kappa);
    validate_boundary_density(sigma, profile);
    return sigma.name + ": sigma(-1) = 0, sigma(1) = c0 cos(alpha), monotone, >= psi cos(alpha)";
  });
  const DomainBoundary domain = make_domain(c);
  guarded("domain", [&] {
    if (!(domain.tubular_radius() > 0)) throw geometry_error("nonpositive tubular radius");
    return domain.describe() + ", tubular radius " + short_num(domain.tubular_radius());
  });
  guarded("interface", [&] {
    const InterfaceCurve curve = make_interface(c, domain, c.nodes);
    const double off = std::max(std::abs(domain.signed_distance(curve.front())),
                                std::abs(domain.signed_distance(curve.back())));
    if (off > 1e-8) throw geometry_error("contact points off the boundary by " + short_num(off));
    if (curve.self_intersects()) throw geometry_error("interface self-intersects");
    const double ang = angle_residual(curve, domain, c.alpha);
    if (ang > 1e-6) throw geometry_error("contact angle residual " + short_num(ang) + " > 1e-6");
    const double c0 = check_third_order_compat(curve, domain, c.alpha, Endpoint::begin);
    const double c1 = check_third_order_compat(curve, domain, c.alpha, Endpoint::end);
    r.log.push_back("third-order compatibility residuals (reported only): " + short_num(c0) + ", " +
                    short_num(c1));
    return std::to_string(curve.size()) + " nodes, length " + short_num(curve.length()) +
           ", angle residual " + short_num(ang);
  });
  guarded("mesh", [&] {
    std::string d;
    const auto rings = ring_counts(c, domain);
    for (std::size_t i = 0; i < rings.size(); ++i) {
      const DiskMesh m = build_disk_mesh(domain, rings[i]);
      if (!(m.quality.min_angle_deg > 0)) throw mesh_error("degenerate triangles at n_r = " + std::to_string(rings[i]));
      if (m.quality.h_max > c.eps[i] / 4)
        r.log.push_back("warning: eps = " + short_num(c.eps[i]) + ", n_r = " + std::to_string(rings[i]) +
                        ": h_max = " + short_num(m.quality.h_max) + " > eps/4");
      d += (i ? ", " : "") + std::string("n_r ") + std::to_string(rings[i]) + ": h_max " + short_num(m.quality.h_max);
    }
    return d;
  });
  finish(r, json::object(), out_dir);
  return r;
}

CommandResult cmd_calibrate(const Config& c, const std::string& out_dir)
{
  prepare_out(out_dir);
  CommandResult r;
  r.command = "calibrate";
  const Problem p = make_problem(c);
  std::vector<double> times = c.calibrate_times;
  std::sort(times.begin(), times.end());
  const std::vector<std::string> equalities = c.equalities.empty() ? equality_conditions() : c.equalities;
  json reports = json::array();
  InterfaceCurve curve = p.curve;
  for (double t : times) {
    if (t > curve.time) {
      const double dt = tracker_step(curve, c.sharp_dt, r.log);
      curve = evolve(curve, p.domain, p.alpha, dt, t - curve.time, 0.0).snapshots.back();
      curve.time = t;
    }
    const std::string name = "calibration t=" + short_num(t);
    CalibrationReport rep;
    try {
      rep = check_calibration(build_global_field(curve, p.domain, p.alpha), SamplePlan{c.samples, c.seed});
    } catch (const calibration_error& e) {
      r.checks.push_back(check(name, false, e.what()));
      reports.push_back({{"t", t}, {"error", e.what()}});
      continue;
    }
    std::vector<std::string> problems = rep.hard_failures;
    double worst_eq = 0, worst_ratio = 0;
    for (const auto& n : equalities) {
      const double v = rep.at(n).max_ratio;
      worst_eq = std::max(worst_eq, v);
      if (!(v <= c.equality_tol)) problems.push_back(n + " = " + short_num(v) + " > " + short_num(c.equality_tol));
    }
    for (const auto& n : ratio_conditions()) {
      const double v = rep.at(n).max_ratio;
      worst_ratio = std::max(worst_ratio, v);
      if (!std::isfinite(v))
        problems.push_back(n + " not finite");
      else if (v > c.ratio_tol)
        problems.push_back(n + " = " + short_num(v) + " > " + short_num(c.ratio_tol));
    }
    std::string detail = "max equality residual " + short_num(worst_eq) + ", max ratio " + short_num(worst_ratio) +
                         ", fitted c " + short_num(rep.fitted_c);
    for (const auto& pr : problems) detail += "; " + pr;
    r.checks.push_back(check(name, problems.empty(), detail));
    reports.push_back({{"t", t}, {"pass", problems.empty()}, {"report", json::parse(rep.to_json())}});
  }
  finish(r, {{"times", reports}}, out_dir);
  return r;
}

CommandResult cmd_simulate(const Config& c, const std::string& out_dir, int threads)
{
  prepare_out(out_dir);
  CommandResult r;
  r.command = "simulate";
  const Problem p = make_problem(c);
  const Study s = run_study(c, p, threads);
  r.log = s.log;
  structural_checks(s, r.checks);
  write_run_files(c, p, s, out_dir, r);
  finish(r, {{"reference_dt", s.reference.dt}, {"reference_nodes", s.reference.nodes},
             {"length_constants", s.length_constants}, {"runs", runs_json(s)}},
         out_dir);
  return r;
}

CommandResult cmd_prepare(const Config& c, const std::string& out_dir)
{
  prepare_out(out_dir);
  CommandResult r;
  r.command = "prepare";
  const Problem p = make_problem(c);
  PreparednessOptions o;
  o.sigma_kind = c.sigma_kind;
  o.kappa = c.kappa;
  o.eps = c.eps;
  o.n_r = ring_counts(c, p.domain);
  o.quad_level = c.quad_level;
  o.calibration_samples = c.length_samples;
  const PreparednessReport rep = verify_preparedness(p.curve, p.domain, p.alpha, p.profile, o);
  r.log = rep.warnings;
  const bool special = c.sigma_kind == SigmaKind::special;
  const auto [lo, hi] = special ? band(c, 1.7, 2.3) : band(c, 0.8, 1.2);
  const double slope = special ? rep.slope_total : rep.slope_boundary;
  r.checks.push_back(check(special ? "slope_total" : "slope_boundary", slope >= lo && slope <= hi,
                           short_num(slope) + " in [" + short_num(lo) + ", " + short_num(hi) + "]"));
  r.checks.push_back(check("quadrature", rep.max_quad_change < 1e-2,
                           "max relative change one level finer " + short_num(rep.max_quad_change)));
  json rows = json::array();
  std::ostringstream csv;
  for (const auto& m : metadata(c, p)) csv << "# " << m << "\n";
  csv << "eps,n_r,h_max,E_relEn,E_bulk,boundary,volume,total,quad_change,resolved\n" << std::setprecision(17);
  for (const auto& row : rep.rows) {
    csv << row.eps << "," << row.n_r << "," << row.h_max << "," << row.E_relEn << "," << row.E_bulk << ","
        << row.boundary << "," << row.volume << "," << row.total() << "," << row.quad_change << ","
        << (row.resolved ? 1 : 0) << "\n";
    rows.push_back({{"eps", row.eps}, {"n_r", row.n_r}, {"h_max", row.h_max}, {"E_relEn", row.E_relEn},
                    {"E_bulk", row.E_bulk}, {"boundary", row.boundary}, {"volume", row.volume},
                    {"quad_change", row.quad_change}, {"resolved", row.resolved}});
  }
  if (!out_dir.empty()) {
    const std::string path = (fs::path(out_dir) / "prepare.csv").string();
    write_file_atomic(path, csv.str());
    r.files.push_back(path);
  }
  finish(r,
         {{"slopes",
           {{"total", rep.slope_total}, {"relative_energy", rep.slope_relEn}, {"boundary", rep.slope_boundary},
            {"bulk", rep.slope_bulk}, {"volume", rep.slope_volume}}},
          {"length_constant", rep.length_constant},
          {"rows", rows}},
         out_dir);
  return r;
}

CommandResult cmd_converge(const Config& c, const std::string& out_dir, int threads)
{
  prepare_out(out_dir);
  CommandResult r;
  r.command = "converge";
  const Problem p = make_problem(c);
  const Convergence cv = run_convergence(c, p, threads);
  r.log = cv.log;
  structural_checks(cv.study, r.checks);
  const bool special = c.sigma_kind == SigmaKind::special;
  const auto [lo, hi] = special ? band(c, 0.8, 1.2) : band(c, 0.4, 0.8);
  r.checks.push_back(check("l1_rate", cv.l1_rate >= lo && cv.l1_rate <= hi,
                           short_num(cv.l1_rate) + " in [" + short_num(lo) + ", " + short_num(hi) + "]"));
  r.checks.push_back(check("gronwall_spread", cv.gronwall_spread <= c.gronwall_spread,
                           "max C / min C = " + short_num(cv.gronwall_spread) + " <= " + short_num(c.gronwall_spread)));
  write_run_files(c, p, cv.study, out_dir, r);
  if (!out_dir.empty()) {
    std::ostringstream csv;
    for (const auto& m : metadata(c, p)) csv << "# " << m << "\n";
    csv << "# T: " << num(c.T) << "\n";
    csv << "# reference: dt = " << num(cv.study.reference.dt) << ", nodes = " << cv.study.reference.nodes << "\n";
    csv << "# l1 rate: " << num(cv.l1_rate) << ", initial rate: " << num(cv.initial_rate) << "\n";
    csv << "eps,n_r,h_max,tau,resolved,used,l1_T,initial_error,sqrt_initial_error,gronwall_C\n"
        << std::setprecision(17);
    for (std::size_t i = 0; i < cv.study.runs.size(); ++i) {
      const auto& run = cv.study.runs[i];
      csv << run.eps << "," << run.n_r << "," << run.h_max << "," << run.tau << "," << (run.resolved ? 1 : 0) << ","
          << (cv.l1_fit.used[i] ? 1 : 0) << "," << run.l1_final() << "," << run.initial_error() << ","
          << std::sqrt(std::max(run.initial_error(), 0.0)) << "," << run.gronwall << "\n";
    }
    const std::string path = (fs::path(out_dir) / "rates.csv").string();
    write_file_atomic(path, csv.str());
    r.files.push_back(path);
  }
  finish(r,
         {{"l1_rate", cv.l1_rate},
          {"l1_fit", {{"slope", cv.l1_fit.slope}, {"intercept", cv.l1_fit.intercept}, {"rms", cv.l1_fit.rms},
                      {"used", cv.l1_fit.used}, {"excluded_largest", cv.l1_fit.excluded_largest}}},
          {"initial_rate", cv.initial_rate},
          {"gronwall_spread", cv.gronwall_spread},
          {"reference_dt", cv.study.reference.dt},
          {"reference_nodes", cv.study.reference.nodes},
          {"length_constants", cv.study.length_constants},
          {"runs", runs_json(cv.study)}},
         out_dir);
  return r;
}

} // namespace cflow
