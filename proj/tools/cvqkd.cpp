// cvqkd: command-line front end for the key-rate engine.
//
//   cvqkd <command> --scenario file.json [--output out.csv] [--format csv|json] [--threads N]
//
// Exit codes: 0 ok, 2 validation error, 3 solver flag (multi_root/unbounded), 4 I/O error.

#include "cvqkd/errors.hpp"
#include "cvqkd/scenario.hpp"
#include "cvqkd/selftest.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <variant>

namespace {

using namespace cvqkd;

constexpr int kExitValidation = 2;
constexpr int kExitSolverFlag = 3;
constexpr int kExitIo = 4;

std::optional<link::CoefficientTables> tables_from_env() {
  const char* dir = std::getenv(std::string(link::kCoefficientDirEnv).c_str());
  if (!dir || !*dir) return std::nullopt;
  return link::CoefficientTables::load(dir);
}

int run_selftest() {
  bool ok = true;
  for (const auto& c : selftest::run()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

std::string summary(const std::string& command, const scenario::SweepResult& r) {
  std::string text = command + " " + r.scenario + ": " + std::to_string(r.rows.size()) + " rows";
  if (command != "sweep" && command != "key") {
    for (const auto& row : r.rows) {
      text += "\n  d_m=" + scenario::format_number(row.d_m) + " nbar=" + scenario::format_number(row.nbar);
      if (!row.flags.empty()) text += " [" + scenario::format_flags(row.flags) + "]";
    }
  }
  return text;
}

int run_command(const std::string& command, const std::string& scenario_path, const std::string& output,
                const std::string& format, int threads) {
  if (scenario_path.empty()) throw ValidationError("--scenario is required for " + command);
  const auto custom_tables = tables_from_env();
  const scenario::RunOptions options{threads, custom_tables ? &*custom_tables : nullptr};
  const auto sc = scenario::load_scenario(scenario_path);

  std::variant<scenario::SweepResult, scenario::AttenuationTable> result;
  if (command == "key") {
    result = scenario::run_key(sc, options);
  } else if (command == "sweep") {
    result = scenario::run_sweep(sc, options);
  } else if (command == "secure-distance") {
    result = scenario::run_secure_distance(sc, options);
  } else if (command == "noise-threshold") {
    result = scenario::run_noise_threshold(sc, options);
  } else if (command == "crossover") {
    result = scenario::run_crossover(sc, options);
  } else {
    result = scenario::run_attenuation(sc, options);
  }

  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::binary);
    if (!file) throw IoError("cannot open output file " + output);
  }
  std::ostream& data = output.empty() ? std::cout : file;
  std::ostream& log = output.empty() ? std::cerr : std::cout;
  std::visit(
      [&](const auto& r) {
        if (format == "json") {
          scenario::write_json(data, r);
        } else {
          scenario::write_csv(data, r);
        }
      },
      result);
  data.flush();
  if (!data) throw IoError("failed writing output");

  if (const auto* sweep = std::get_if<scenario::SweepResult>(&result)) {
    log << summary(command, *sweep) << '\n';
    return sweep->has_solver_flag() ? kExitSolverFlag : 0;
  }
  log << "attenuation " << sc.name << ": " << std::get<scenario::AttenuationTable>(result).rows.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable QKD key rates over open-air microwave and telecom links"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string scenario_path;
  std::string output;
  std::string format = "csv";
  int threads = 1;
  app.add_option("--scenario", scenario_path, "Scenario JSON file");
  app.add_option("--output", output, "Write data here instead of standard output");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "Worker threads for grid evaluation")->check(CLI::PositiveNumber);

  const std::pair<const char*, const char*> commands[] = {
      {"key", "Key figures at the scenario's base point"},
      {"sweep", "Key figures over the scenario's sweep grid"},
      {"secure-distance", "Largest distance with a positive key, per link"},
      {"noise-threshold", "Channel noise at which the key vanishes, per link"},
      {"crossover", "Largest distance where the microwave rate meets the telecom rate"},
      {"attenuation", "Specific attenuation budget per link"},
      {"selftest", "Run the built-in oracle and property checks"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "selftest") return run_selftest();
    return run_command(command, scenario_path, output, format, threads);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const OutOfModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InconsistentChannel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
