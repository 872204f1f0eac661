#pragma once

#include "cflow/config.hpp"
#include "cflow/initial_data.hpp"
#include "cflow/sharp_mcf.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cflow {

inline constexpr const char* code_version = "cflow 1.0.0";

// Everything a configuration determines before any evolution.
struct Problem {
  ProfileTable profile;
  BoundaryDensity sigma;
  DomainBoundary domain;
  InterfaceCurve curve;
  double alpha = 0.0;
};

// Throws config_error for shapes the config cannot build.
Problem make_problem(const Config& c);
InterfaceCurve make_interface(const Config& c, const DomainBoundary& domain, int nodes);
DomainBoundary make_domain(const Config& c);

// Smallest ring count whose mesh has h_max <= eps/4.
int resolving_ring_count(const DomainBoundary& domain, double eps);
// The configured ring counts, or the resolving ones.
std::vector<int> ring_counts(const Config& c, const DomainBoundary& domain);

// "# key: value" lines: well and sigma identity, alpha, domain, mesh, eps, tau, version.
std::vector<std::string> metadata(const Config& c, const Problem& p, std::optional<double> eps = {},
                                  std::optional<int> n_r = {}, std::optional<double> h_max = {},
                                  std::optional<double> tau = {});

struct ReferenceFlow {
  Trajectory trajectory;
  double dt = 0.0;
  int nodes = 0;
  std::vector<std::string> notes;
};

// Front tracking with dt = tau_coarse / 16 and four times the interface nodes. dt is lowered
// to the step bound of the tracker if needed, and that is noted.
ReferenceFlow reference_flow(const Config& c, const Problem& p, double tau_coarse);

struct EpsRun {
  double eps = 0.0;
  int n_r = 0;
  double h_max = 0.0;
  double tau = 0.0;
  bool resolved = true;
  std::vector<FunctionalReport> series; // at the logged times
  std::vector<EnergyLogEntry> energy_log;
  double gronwall = 0.0;
  std::vector<std::string> warnings;

  double l1_final() const { return series.back().l1; }
  double initial_error() const { return series.front().E_relEn + series.front().E_bulk; }
};

struct RateFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
  std::vector<bool> used;
  bool excluded_largest = false;
};

// Least squares of log err on log eps over the included points. If the residual of the
// largest included eps exceeds 3x the RMS, it is dropped and the fit repeated.
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& err,
                 const std::vector<bool>& include);

struct Study {
  std::vector<double> times;
  std::vector<double> length_constants; // per logged time
  ReferenceFlow reference;
  std::vector<EpsRun> runs;
  std::vector<std::string> log;
};

// Well-prepared start, Allen-Cahn to T and the functionals at each logged time, per eps.
Study run_study(const Config& c, const Problem& p, int threads = 1);

struct Convergence {
  Study study;
  RateFit l1_fit;
  double l1_rate = 0.0;
  double initial_rate = 0.0; // slope of sqrt(E_relEn + E_bulk)(0)
  double gronwall_spread = 0.0; // max C / min C, 1 if all vanish
  std::vector<std::string> log;
};

Convergence run_convergence(const Config& c, const Problem& p, int threads = 1);

struct CheckLine {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct CommandResult {
  std::string command;
  std::vector<CheckLine> checks;
  std::vector<std::string> log;
  std::vector<std::string> files;
  std::string json; // the report also written to <out>/<command>.json

  bool pass() const;
};

// Each command writes its outputs under out_dir (created if missing); an empty out_dir writes nothing.
CommandResult cmd_validate(const Config& c, const std::string& out_dir = {});
CommandResult cmd_calibrate(const Config& c, const std::string& out_dir = {});
CommandResult cmd_simulate(const Config& c, const std::string& out_dir = {}, int threads = 1);
CommandResult cmd_prepare(const Config& c, const std::string& out_dir = {});
CommandResult cmd_converge(const Config& c, const std::string& out_dir = {}, int threads = 1);

// Writes to a temporary file in the same directory and renames it over path.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace cflow
