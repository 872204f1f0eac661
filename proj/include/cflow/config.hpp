#pragma once

#include "cflow/potentials.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cflow {

// Parse and semantic errors; line() is 0 when no line applies (e.g. a missing key).
class config_error : public std::runtime_error {
public:
  config_error(const std::string& what, int line = 0) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Raw "[section] key = value" text. Comments start with '#' or ';'.
class ConfigText {
public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigText parse(std::istream& is, const std::string& source = "<config>");
  static ConfigText parse_string(const std::string& text, const std::string& source = "<config>");

  bool has(const std::string& section, const std::string& key) const;
  const Entry& get(const std::string& section, const std::string& key) const;
  const std::string& source() const { return source_; }
  // "section.key" -> entry
  const std::map<std::string, Entry>& entries() const { return entries_; }

private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

struct Config {
  // [well]
  std::string well = "quartic";
  double r_prof = 12.0;
  double h_ode = 1e-3;
  // [sigma]
  SigmaKind sigma_kind = SigmaKind::special;
  double kappa = 0.0;
  // [domain]
  std::string domain_shape = "circle"; // circle | ellipse
  double semi_a = 1.0, semi_b = 1.0;
  // [interface]
  std::string interface_shape = "diameter"; // diameter | chord | file
  double alpha = 0.0;
  double half_opening = 1.2; // chord: polar angle of the contact points
  int nodes = 81;
  std::string curve_file;
  // [solver]
  double tau = 0.0;         // 0: eps h_max
  double newton_tol = 1e-9; // relative gradient tolerance of each step
  double sharp_dt = 2e-5;   // front tracking step outside of the convergence reference
  int quad_level = 0;
  bool dissipation = true; // D1, D2 in the functional logs
  // [experiment]
  std::vector<double> eps{0.08, 0.04, 0.02};
  std::vector<int> n_r; // empty: smallest ring count with h_max <= eps/4
  double T = 0.02;
  int log_intervals = 4; // functionals at T k / log_intervals
  std::uint64_t seed = 1;
  int samples = 10000;        // calibration checker samples
  int length_samples = 2000;  // samples for the length constant of the functionals
  std::vector<double> calibrate_times{0.0};
  double equality_tol = 1e-6;
  double ratio_tol = std::numeric_limits<double>::infinity();
  std::vector<std::string> equalities; // empty: every equality condition
  bool force = false; // keep unresolved meshes in the rate fit
  double band_low = std::numeric_limits<double>::quiet_NaN(); // NaN: default band of the command
  double band_high = std::numeric_limits<double>::quiet_NaN();
  double gronwall_spread = 2.0;

  std::string source = "<config>";
};

// Required keys: [sigma] kind, [interface] shape and alpha, [experiment] eps.
Config parse_config(const ConfigText& text);
Config parse_config_string(const std::string& text, const std::string& source = "<config>");
Config load_config(const std::string& path);

// Diameter at alpha = pi/2 with the special density.
std::string default_config_text();

// Throws config_error if the values are inconsistent (e.g. eps and n_r lists of different length).
void check_config(const Config& c);

} // namespace cflow
