#include "cflow/experiments.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path)
{
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("cflow_harness_" + name);
  fs::remove_all(p);
  return p;
}

const char* minimal = "[sigma]\nkind = special\n[interface]\nshape = diameter\nalpha = pi/2\n[experiment]\neps = 0.1\n";

// small chord run: two resolved eps, short time
std::string small_run(const char* sigma)
{
  return std::string("[sigma]\n") + sigma +
         "\n[interface]\nshape = chord\nalpha = pi/3\nnodes = 41\n"
         "[solver]\ndissipation = false\n"
         "[experiment]\neps = 0.4, 0.2\nn_r = 18, 36\nT = 0.004\nlog_intervals = 2\nlength_samples = 300\n";
}

int error_line(const std::string& text)
{
  try {
    parse_config_string(text);
  } catch (const config_error& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text)
{
  try {
    parse_config_string(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_CASE("default config")
{
  const Config c = parse_config_string(default_config_text());
  CHECK(c.sigma_kind == SigmaKind::special);
  CHECK(c.interface_shape == "diameter");
  CHECK(c.alpha == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(c.eps == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(c.n_r.empty());
  CHECK(c.samples == 2000);
}

TEST_CASE("config values")
{
  const Config c = parse_config_string(
      "; comment\n[sigma]\nkind = bump   # trailing\nkappa = 0.0625\n"
      "[interface]\nshape = chord\nalpha = 2*pi/6\nhalf_opening = 1.1\n"
      "[experiment]\neps = 0.08, 0.04,0.02\nn_r = 64, 128, 256\nforce = yes\nratio_tol = inf\n");
  CHECK(c.sigma_kind == SigmaKind::bump);
  CHECK(c.kappa == 0.0625);
  CHECK(c.alpha == doctest::Approx(pi / 3).epsilon(1e-15));
  CHECK(c.half_opening == 1.1);
  CHECK(c.n_r == std::vector<int>{64, 128, 256});
  CHECK(c.force);
  CHECK(std::isinf(c.ratio_tol));
}

TEST_CASE("missing required keys are named")
{
  CHECK(error_text("[interface]\nshape = diameter\nalpha = pi/2\n[experiment]\neps = 0.1\n").find("'kind'") !=
        std::string::npos);
  CHECK(error_text("[sigma]\nkind = special\n[interface]\nshape = diameter\n[experiment]\neps = 0.1\n")
            .find("missing required key 'alpha' in [interface]") != std::string::npos);
  CHECK(error_text("[sigma]\nkind = special\n[interface]\nalpha = pi/2\n[experiment]\neps = 0.1\n").find("'shape'") !=
        std::string::npos);
  CHECK(error_text("[sigma]\nkind = special\n[interface]\nshape = diameter\nalpha = pi/2\n").find("'eps'") !=
        std::string::npos);
  CHECK_NOTHROW(parse_config_string(minimal));
}

TEST_CASE("parse errors carry line numbers")
{
  const std::string m = minimal;
  CHECK(error_line("[sigma]\nkind = special\nnonsense\n") == 3);
  CHECK(error_line("[sigma]\nkind = special\ncolour = red\n") == 3);
  CHECK(error_line("[sigma]\nkind = special\n\n[geometry]\n") == 4);
  CHECK(error_line("x = 1\n") == 1);
  CHECK(error_line("[sigma]\nkind = special\nkind = bump\n") == 3);
  CHECK(error_line("[sigma\n") == 1);
  CHECK(error_line("[sigma]\nkind = special\n[interface]\nshape = diameter\nalpha = ninety\n[experiment]\neps = 0.1\n") == 5);
  CHECK(error_line(m + "n_r = 12.5\n") == 8);
  CHECK(error_line(m + "T = -1\n") == 8);
  CHECK(error_line("[sigma]\nkind = special\nkappa = -1\n[interface]\nshape = diameter\nalpha = pi/2\n[experiment]\neps = 0.1\n") == 3);
  CHECK(error_text("[sigma]\nkind = special\nnonsense\n").find(":3:") != std::string::npos);
}

TEST_CASE("consistency of the config")
{
  CHECK_THROWS_AS(parse_config_string(std::string(minimal) + "n_r = 10, 20\n"), config_error);
  CHECK_THROWS_AS(parse_config_string("[sigma]\nkind = special\n[interface]\nshape = diameter\nalpha = pi/3\n"
                                      "[experiment]\neps = 0.1\n"),
                  config_error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), config_error);
}

TEST_CASE("validate")
{
  const CommandResult ok = cmd_validate(parse_config_string(default_config_text()));
  CHECK(ok.pass());
  CHECK(ok.json.find("\"pass\": true") != std::string::npos);

  // kappa = cos(alpha) exceeds the admissible cos(alpha)/4
  const CommandResult bad = cmd_validate(parse_config_string(
      "[sigma]\nkind = bump\nkappa = 0.5\n[interface]\nshape = chord\nalpha = pi/3\n[experiment]\neps = 0.1\n"));
  CHECK_FALSE(bad.pass());
  bool found = false;
  for (const auto& c : bad.checks)
    if (c.name == "sigma") {
      CHECK_FALSE(c.ok);
      found = c.detail.find("monotonicity") != std::string::npos;
    }
  CHECK(found);

  // unresolved mesh is a warning only
  const CommandResult coarse = cmd_validate(parse_config_string(std::string(minimal) + "n_r = 8\n"));
  CHECK(coarse.pass());
  REQUIRE_FALSE(coarse.log.empty());
  CHECK(coarse.log.back().find("> eps/4") != std::string::npos);
}

TEST_CASE("resolving ring count")
{
  const DomainBoundary disk = DomainBoundary::circle();
  for (double eps : {0.2, 0.08}) {
    const int n = resolving_ring_count(disk, eps);
    CHECK(build_disk_mesh(disk, n).quality.h_max <= eps / 4);
    CHECK(build_disk_mesh(disk, n - 1).quality.h_max > eps / 4);
  }
}

TEST_CASE("rate fit")
{
  std::vector<double> eps, err;
  for (int k = 0; k < 20; ++k) {
    eps.push_back(0.1 * std::pow(0.8, k));
    err.push_back(3 * eps.back() * (1 + 0.01 * ((k % 2) ? 1 : -1)));
  }
  std::vector<bool> all(20, true);
  RateFit f = fit_rate(eps, err, all);
  CHECK_FALSE(f.excluded_largest);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-2));

  // a pre-asymptotic largest eps is dropped; at the end of 20 points its residual is
  // sqrt(20 (1 - leverage)) = 4 RMS
  err[0] *= 3;
  f = fit_rate(eps, err, all);
  CHECK(f.excluded_largest);
  CHECK_FALSE(f.used[0]);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-2));

  // three points: the residual/RMS ratio is at most sqrt(3 (1 - leverage)) < 3
  const RateFit three = fit_rate({0.08, 0.04, 0.02}, {1.0, 0.2, 0.1}, {true, true, true});
  CHECK_FALSE(three.excluded_largest);

  const RateFit masked = fit_rate({0.08, 0.04, 0.02}, {5.0, 0.2, 0.1}, {false, true, true});
  CHECK(masked.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(fit_rate({0.1, 0.05}, {1.0, 0.5}, {true, false}));
}

TEST_CASE("calibrate")
{
  Config c = parse_config_string(std::string(minimal) + "samples = 1500\n");
  const CommandResult d = cmd_calibrate(c);
  CHECK(d.pass());
  CHECK(d.json.find("\"_summary\"") != std::string::npos);

  c = parse_config_string("[sigma]\nkind = special\n[interface]\nshape = chord\nalpha = pi/3\nnodes = 61\n"
                          "[experiment]\neps = 0.1\nsamples = 1000\ncalibrate_times = 0.002\n"
                          "equalities = consistency, boundary_xi, boundary_B, weight_zero\n");
  const CommandResult ch = cmd_calibrate(c);
  CHECK(ch.pass());
  REQUIRE(ch.checks.size() == 1);
  CHECK(ch.checks[0].name == "calibration t=0.002");

  // a zero ratio tolerance fails and names the condition
  c.ratio_tol = 0.0;
  c.calibrate_times = {0.0};
  c.samples = 300;
  const CommandResult strict = cmd_calibrate(c);
  CHECK_FALSE(strict.pass());
  CHECK(strict.checks[0].detail.find("calibration2 = ") != std::string::npos);
}

TEST_CASE("simulate output is deterministic and carries metadata")
{
  const Config c = parse_config_string(small_run("kind = special"));
  const fs::path a = scratch("a"), b = scratch("b");
  const CommandResult ra = cmd_simulate(c, a.string());
  const CommandResult rb = cmd_simulate(c, b.string(), 2);
  CHECK(ra.pass());
  REQUIRE(ra.files.size() == rb.files.size());
  REQUIRE(ra.files.size() == 5);
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    const fs::path fa(ra.files[i]), fb(rb.files[i]);
    CHECK(fa.filename() == fb.filename());
    CHECK(slurp(fa.string()) == slurp(fb.string()));
  }
  const std::string csv = slurp((a / "functionals_eps0.2.csv").string());
  for (const char* key : {"# well:", "# sigma: special", "# alpha: 1.0471975511965", "# domain:", "# mesh:",
                          "# eps: 0.2", "# tau:", "# version:", "# dissipation: off"})
    CHECK(csv.find(key) != std::string::npos);
  CHECK(csv.find("t,E_eps,E_relEn,E_bulk,l1,D1,D2,r0") != std::string::npos);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(slurp((a / "energy_eps0.4.csv").string()).find("t,E,dissipation") != std::string::npos);
  for (const auto& e : fs::directory_iterator(a)) CHECK(e.path().extension() != ".tmp");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("study internals")
{
  const Config c = parse_config_string(small_run("kind = bump\nkappa = 0.0625"));
  const Problem p = make_problem(c);
  const Study s = run_study(c, p);
  REQUIRE(s.times.size() == 3);
  CHECK(s.length_constants.size() == 3);
  CHECK(s.reference.nodes == 164);
  CHECK(s.reference.trajectory.snapshots.back().time == doctest::Approx(0.004));
  REQUIRE(s.runs.size() == 2);
  for (const auto& r : s.runs) {
    REQUIRE(r.series.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r.series[k].t == doctest::Approx(s.times[k]).epsilon(1e-12));
    CHECK(r.gronwall >= 0);
    CHECK(r.resolved);
    CHECK(std::isnan(r.series[0].D1));
    CHECK(r.series[0].boundary > 0); // the bump density has a positive boundary term
  }
  // reference dt follows the coarsest run's tau / 16 unless the tracker bound is lower
  CHECK(s.reference.dt <= s.runs[0].tau / 16 * (1 + 1e-12));
}

TEST_CASE("converge writes the rate table and excludes unresolved meshes")
{
  Config c = parse_config_string(small_run("kind = special"));
  c.eps = {0.4, 0.2, 0.1};
  c.n_r = {18, 36, 24}; // the last one is not resolved
  const fs::path out = scratch("conv");
  const CommandResult r = cmd_converge(c, out.string());
  bool excluded = false;
  for (const auto& l : r.log) excluded = excluded || l.find("excluded from the fit") != std::string::npos;
  CHECK(excluded);
  const std::string rates = slurp((out / "rates.csv").string());
  CHECK(rates.find("eps,n_r,h_max,tau,resolved,used,l1_T") != std::string::npos);
  CHECK(rates.find("# l1 rate:") != std::string::npos);
  CHECK(r.json.find("\"l1_rate\"") != std::string::npos);
  bool has_rate = false;
  for (const auto& ch : r.checks) has_rate = has_rate || ch.name == "l1_rate";
  CHECK(has_rate);
  fs::remove_all(out);
}

TEST_CASE("prepare")
{
  Config c = parse_config_string(
      "[sigma]\nkind = bump\nkappa = 0.0625\n[interface]\nshape = chord\nalpha = pi/3\nnodes = 41\n"
      "[experiment]\neps = 0.4, 0.2, 0.1\nlength_samples = 300\n");
  const fs::path out = scratch("prep");
  const CommandResult r = cmd_prepare(c, out.string());
  REQUIRE(r.checks.size() == 2);
  CHECK(r.checks[0].name == "slope_boundary");
  CHECK(r.json.find("\"slopes\"") != std::string::npos);
  const std::string csv = slurp((out / "prepare.csv").string());
  CHECK(csv.find("eps,n_r,h_max,E_relEn") != std::string::npos);
  fs::remove_all(out);
}
