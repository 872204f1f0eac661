#include "cflow/config.hpp"

#include "cflow/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cflow {

namespace {

const std::map<std::string, std::set<std::string>>& schema()
{
  static const std::map<std::string, std::set<std::string>> s{
      {"well", {"type", "r_prof", "h_ode"}},
      {"sigma", {"kind", "kappa"}},
      {"domain", {"shape", "a", "b"}},
      {"interface", {"shape", "alpha", "half_opening", "nodes", "file"}},
      {"solver", {"tau", "newton_tol", "sharp_dt", "quad_level", "dissipation"}},
      {"experiment",
       {"eps", "n_r", "T", "log_intervals", "seed", "samples", "length_samples", "calibrate_times",
        "equality_tol", "ratio_tol", "equalities", "force", "band_low", "band_high",
        "gronwall_spread"}},
  };
  return s;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& source, int line)
{
  return source + ":" + std::to_string(line) + ": ";
}

double to_double(const std::string& v, const std::string& what)
{
  double x = 0;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  const auto r = std::from_chars(b, e, x);
  if (r.ec != std::errc() || r.ptr != e) throw std::invalid_argument(what);
  return x;
}

// A number, or an expression "a*pi/b" with any of a, pi, b present.
double parse_real(const std::string& v)
{
  const std::string what = "not a number: '" + v + "'";
  if (v == "inf") return std::numeric_limits<double>::infinity();
  const auto p = v.find("pi");
  if (p == std::string::npos) return to_double(v, what);
  double x = pi;
  const std::string head = trim(v.substr(0, p)), tail = trim(v.substr(p + 2));
  if (!head.empty()) {
    if (head.back() != '*') throw std::invalid_argument(what);
    x *= to_double(trim(head.substr(0, head.size() - 1)), what);
  }
  if (!tail.empty()) {
    if (tail.front() != '/') throw std::invalid_argument(what);
    x /= to_double(trim(tail.substr(1)), what);
  }
  return x;
}

std::vector<std::string> split_list(const std::string& v)
{
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
public:
  explicit Reader(const ConfigText& t) : t_(t) {}

  bool has(const std::string& s, const std::string& k) const { return t_.has(s, k); }

  const ConfigText::Entry& required(const std::string& s, const std::string& k) const
  {
    if (!t_.has(s, k))
      throw config_error(t_.source() + ": missing required key '" + k + "' in [" + s + "]");
    return t_.get(s, k);
  }

  template <typename F>
  auto convert(const std::string& s, const std::string& k, F f) const
  {
    const auto& e = t_.get(s, k);
    try {
      return f(e.value);
    } catch (const std::exception& ex) {
      throw config_error(where(t_.source(), e.line) + "[" + s + "] " + k + ": " + ex.what(), e.line);
    }
  }

  void real(const std::string& s, const std::string& k, double& out) const
  {
    if (has(s, k)) out = convert(s, k, parse_real);
  }
  void integer(const std::string& s, const std::string& k, int& out) const
  {
    if (!has(s, k)) return;
    out = convert(s, k, [](const std::string& v) {
      const double x = parse_real(v);
      if (x != std::floor(x) || std::abs(x) > 1e9) throw std::invalid_argument("not an integer: '" + v + "'");
      return static_cast<int>(x);
    });
  }
  void text(const std::string& s, const std::string& k, std::string& out) const
  {
    if (has(s, k)) out = t_.get(s, k).value;
  }
  void reals(const std::string& s, const std::string& k, std::vector<double>& out) const
  {
    if (!has(s, k)) return;
    out = convert(s, k, [](const std::string& v) {
      std::vector<double> r;
      for (const auto& item : split_list(v)) r.push_back(parse_real(item));
      return r;
    });
  }
  void ints(const std::string& s, const std::string& k, std::vector<int>& out) const
  {
    if (!has(s, k)) return;
    out = convert(s, k, [](const std::string& v) {
      std::vector<int> r;
      for (const auto& item : split_list(v)) {
        const double x = parse_real(item);
        if (x != std::floor(x)) throw std::invalid_argument("not an integer: '" + item + "'");
        r.push_back(static_cast<int>(x));
      }
      return r;
    });
  }
  void boolean(const std::string& s, const std::string& k, bool& out) const
  {
    if (!has(s, k)) return;
    out = convert(s, k, [](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw std::invalid_argument("not a boolean: '" + v + "'");
    });
  }
  [[noreturn]] void fail(const std::string& s, const std::string& k, const std::string& msg) const
  {
    const int line = has(s, k) ? t_.get(s, k).line : 0;
    throw config_error((line ? where(t_.source(), line) : t_.source() + ": ") + "[" + s + "] " + k + ": " + msg,
                       line);
  }

private:
  const ConfigText& t_;
};

} // namespace

ConfigText ConfigText::parse(std::istream& is, const std::string& source)
{
  ConfigText t;
  t.source_ = source;
  std::string line, section;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto c = line.find_first_of("#;");
    if (c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(where(source, n) + "unterminated section header", n);
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw config_error(where(source, n) + "unknown section [" + section + "]", n);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(where(source, n) + "expected 'key = value'", n);
    if (section.empty()) throw config_error(where(source, n) + "key outside of a section", n);
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(where(source, n) + "empty key", n);
    if (!schema().at(section).count(key))
      throw config_error(where(source, n) + "unknown key '" + key + "' in [" + section + "]", n);
    if (value.empty()) throw config_error(where(source, n) + "empty value for '" + key + "'", n);
    const std::string full = section + "." + key;
    if (t.entries_.count(full))
      throw config_error(where(source, n) + "duplicate key '" + key + "' (first on line " +
                             std::to_string(t.entries_.at(full).line) + ")",
                         n);
    t.entries_[full] = Entry{value, n};
  }
  return t;
}

ConfigText ConfigText::parse_string(const std::string& text, const std::string& source)
{
  std::istringstream is(text);
  return parse(is, source);
}

bool ConfigText::has(const std::string& section, const std::string& key) const
{
  return entries_.count(section + "." + key) > 0;
}

const ConfigText::Entry& ConfigText::get(const std::string& section, const std::string& key) const
{
  return entries_.at(section + "." + key);
}

Config parse_config(const ConfigText& text)
{
  const Reader r(text);
  Config c;
  c.source = text.source();

  r.text("well", "type", c.well);
  if (c.well != "quartic") r.fail("well", "type", "only 'quartic' is available");
  r.real("well", "r_prof", c.r_prof);
  r.real("well", "h_ode", c.h_ode);

  r.required("sigma", "kind");
  const std::string kind = text.get("sigma", "kind").value;
  if (kind == "special")
    c.sigma_kind = SigmaKind::special;
  else if (kind == "bump")
    c.sigma_kind = SigmaKind::bump;
  else
    r.fail("sigma", "kind", "expected 'special' or 'bump', got '" + kind + "'");
  r.real("sigma", "kappa", c.kappa);

  r.text("domain", "shape", c.domain_shape);
  if (c.domain_shape != "circle" && c.domain_shape != "ellipse")
    r.fail("domain", "shape", "expected 'circle' or 'ellipse'");
  r.real("domain", "a", c.semi_a);
  c.semi_b = c.semi_a;
  r.real("domain", "b", c.semi_b);

  r.required("interface", "shape");
  r.required("interface", "alpha");
  r.text("interface", "shape", c.interface_shape);
  if (c.interface_shape != "diameter" && c.interface_shape != "chord" && c.interface_shape != "file")
    r.fail("interface", "shape", "expected 'diameter', 'chord' or 'file'");
  r.real("interface", "alpha", c.alpha);
  r.real("interface", "half_opening", c.half_opening);
  r.integer("interface", "nodes", c.nodes);
  r.text("interface", "file", c.curve_file);
  if (c.interface_shape == "file") r.required("interface", "file");

  r.real("solver", "tau", c.tau);
  r.real("solver", "newton_tol", c.newton_tol);
  r.real("solver", "sharp_dt", c.sharp_dt);
  r.integer("solver", "quad_level", c.quad_level);
  r.boolean("solver", "dissipation", c.dissipation);

  r.required("experiment", "eps");
  r.reals("experiment", "eps", c.eps);
  r.ints("experiment", "n_r", c.n_r);
  r.real("experiment", "T", c.T);
  r.integer("experiment", "log_intervals", c.log_intervals);
  int seed = static_cast<int>(c.seed);
  r.integer("experiment", "seed", seed);
  if (seed < 0) r.fail("experiment", "seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  r.integer("experiment", "samples", c.samples);
  r.integer("experiment", "length_samples", c.length_samples);
  r.reals("experiment", "calibrate_times", c.calibrate_times);
  r.real("experiment", "equality_tol", c.equality_tol);
  r.real("experiment", "ratio_tol", c.ratio_tol);
  if (r.has("experiment", "equalities")) c.equalities = split_list(text.get("experiment", "equalities").value);
  r.boolean("experiment", "force", c.force);
  r.real("experiment", "band_low", c.band_low);
  r.real("experiment", "band_high", c.band_high);
  r.real("experiment", "gronwall_spread", c.gronwall_spread);

  // per-key ranges, reported on the key's line
  auto positive = [&](const char* s, const char* k, double v) {
    if (!(v > 0)) r.fail(s, k, "must be positive");
  };
  positive("well", "r_prof", c.r_prof);
  positive("well", "h_ode", c.h_ode);
  if (c.kappa < 0) r.fail("sigma", "kappa", "must be nonnegative");
  positive("domain", "a", c.semi_a);
  positive("domain", "b", c.semi_b);
  if (!(c.alpha > 0 && c.alpha <= pi / 2 + 1e-12)) r.fail("interface", "alpha", "must lie in (0, pi/2]");
  if (c.nodes < 4) r.fail("interface", "nodes", "need at least 4 nodes");
  if (c.tau < 0) r.fail("solver", "tau", "must be nonnegative");
  positive("solver", "newton_tol", c.newton_tol);
  positive("solver", "sharp_dt", c.sharp_dt);
  if (c.quad_level < 0 || c.quad_level > 4) r.fail("solver", "quad_level", "must lie in 0..4");
  if (c.eps.empty()) r.fail("experiment", "eps", "empty list");
  for (double e : c.eps)
    if (!(e > 0)) r.fail("experiment", "eps", "values must be positive");
  for (int n : c.n_r)
    if (n < 2) r.fail("experiment", "n_r", "ring counts must be >= 2");
  if (c.T < 0) r.fail("experiment", "T", "must be nonnegative");
  if (c.log_intervals < 1) r.fail("experiment", "log_intervals", "must be >= 1");
  if (c.samples < 1) r.fail("experiment", "samples", "must be >= 1");
  if (c.length_samples < 1) r.fail("experiment", "length_samples", "must be >= 1");
  for (double t : c.calibrate_times)
    if (t < 0) r.fail("experiment", "calibrate_times", "times must be nonnegative");
  positive("experiment", "gronwall_spread", c.gronwall_spread);
  check_config(c);
  return c;
}

Config parse_config_string(const std::string& text, const std::string& source)
{
  return parse_config(ConfigText::parse_string(text, source));
}

Config load_config(const std::string& path)
{
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file '" + path + "'");
  return parse_config(ConfigText::parse(is, path));
}

void check_config(const Config& c)
{
  if (!c.n_r.empty() && c.n_r.size() != c.eps.size())
    throw config_error(c.source + ": [experiment] n_r must have one entry per eps (" +
                       std::to_string(c.eps.size()) + "), got " + std::to_string(c.n_r.size()));
  if (c.interface_shape == "diameter" && std::abs(c.alpha - pi / 2) > 1e-12)
    throw config_error(c.source + ": the diameter needs alpha = pi/2");
  if (c.interface_shape == "diameter" && c.domain_shape != "circle")
    throw config_error(c.source + ": the diameter needs a circular domain");
  if (c.interface_shape == "chord" && (c.domain_shape != "circle" || c.semi_a != 1.0))
    throw config_error(c.source + ": the circular chord needs the unit disk");
  if (c.band_low > c.band_high) throw config_error(c.source + ": band_low > band_high");
}

std::string default_config_text()
{
  return "# stationary diameter in the unit disk\n"
         "[well]\n"
         "type = quartic\n"
         "\n"
         "[sigma]\n"
         "kind = special\n"
         "\n"
         "[domain]\n"
         "shape = circle\n"
         "a = 1\n"
         "\n"
         "[interface]\n"
         "shape = diameter\n"
         "alpha = pi/2\n"
         "nodes = 41\n"
         "\n"
         "[solver]\n"
         "tau = 0\n"
         "\n"
         "[experiment]\n"
         "eps = 0.2, 0.1, 0.05\n"
         "T = 0.01\n"
         "log_intervals = 2\n"
         "samples = 2000\n"
         "length_samples = 500\n";
}

} // namespace cflow
