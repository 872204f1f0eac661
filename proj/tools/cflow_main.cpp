#include "cflow/experiments.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace cflow;

int main(int argc, char** argv)
{
  CLI::App app{"Phase-field contact-angle flow: checks and experiments"};
  app.require_subcommand(1);
  app.fallthrough(); // inherited by the subcommands: options may follow the command
  std::string config_path, out_dir = "out";
  int threads = 1;
  app.add_option("--config", config_path, "config file (key = value with sections)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "concurrent eps runs")->check(CLI::PositiveNumber);
  app.add_flag_callback("--print-default-config", [] {
    std::cout << default_config_text();
    std::exit(0);
  }, "print the default config and exit");

  for (const char* name : {"validate", "calibrate", "simulate", "prepare", "converge"}) app.add_subcommand(name);
  app.get_subcommand("validate")->description("sampled invariants of well, density, domain, interface and mesh");
  app.get_subcommand("calibrate")->description("calibration checker reports at the configured times");
  app.get_subcommand("simulate")->description("Allen-Cahn runs with energy and functional logs");
  app.get_subcommand("prepare")->description("eps-scaling of the well-prepared initial data");
  app.get_subcommand("converge")->description("L1 rate and Gronwall constants over the eps sweep");

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const Config c = config_path.empty() ? parse_config_string(default_config_text(), "<default>")
                                         : load_config(config_path);
    CommandResult r;
    if (cmd == "validate")
      r = cmd_validate(c, out_dir);
    else if (cmd == "calibrate")
      r = cmd_calibrate(c, out_dir);
    else if (cmd == "simulate")
      r = cmd_simulate(c, out_dir, threads);
    else if (cmd == "prepare")
      r = cmd_prepare(c, out_dir);
    else
      r = cmd_converge(c, out_dir, threads);
    for (const auto& l : r.log) std::cerr << "note: " << l << "\n";
    for (const auto& ch : r.checks)
      std::cout << (ch.ok ? "PASS " : "FAIL ") << ch.name << (ch.detail.empty() ? "" : ": " + ch.detail) << "\n";
    for (const auto& f : r.files) std::cerr << "wrote " << f << "\n";
    return r.pass() ? 0 : 1;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
