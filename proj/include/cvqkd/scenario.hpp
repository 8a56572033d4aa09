#pragma once

// Scenario files, parameter sweeps and the tabular results the CLI emits.
// The JSON schema is documented in README.md.

#include "cvqkd/link.hpp"
#include "cvqkd/protocol.hpp"
#include "cvqkd/security.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cvqkd::scenario {

struct LinkConfig {
  link::LinkScenario link;
  protocol::DetectorModel detector;
};

// One sweep dimension. Numeric ranges are expanded at parse time, so every
// axis is a list of JSON scalars (numbers, or strings for categorical paths).
struct SweepAxis {
  std::string variable;
  std::vector<nlohmann::json> values;
};

struct Scenario {
  std::string name;
  std::vector<LinkConfig> links;
  protocol::ProtocolParams protocol;
  std::optional<link::ChannelParams> channel;  // overrides the link-derived channel
  std::vector<SweepAxis> sweep;
  security::ScanOptions scan;
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

// Sets a dotted parameter path. "link.*" applies to every link, "links[i].*" to one.
void set_parameter(Scenario& scenario, const std::string& path, const nlohmann::json& value);

// Grid points in lexicographic axis order, last axis fastest.
std::vector<std::vector<nlohmann::json>> expand_grid(const std::vector<SweepAxis>& axes);

struct Row {
  std::vector<std::string> axes;  // formatted axis values
  double d_m = 0.0;               // NaN when not applicable
  double tau = 0.0;
  double nbar = 0.0;
  double mutual_info = 0.0;
  double holevo = 0.0;
  double secret_key = 0.0;
  double rate = 0.0;
  std::vector<security::Flag> flags;
};

struct SweepResult {
  std::string scenario;
  std::vector<std::string> axis_names;
  std::vector<Row> rows;

  bool has_solver_flag() const;  // multi_root or unbounded anywhere
};

struct AttenuationRow {
  std::vector<std::string> axes;
  link::Band band = link::Band::microwave;
  double frequency = 0.0;
  std::string weather;
  link::AttenuationBudget budget;
};

struct AttenuationTable {
  std::string scenario;
  std::vector<std::string> axis_names;
  std::vector<AttenuationRow> rows;
};

struct RunOptions {
  int threads = 1;
  const link::CoefficientTables* tables = nullptr;  // embedded tables when null
};

SweepResult run_key(const Scenario& scenario, const RunOptions& options = {});
SweepResult run_sweep(const Scenario& scenario, const RunOptions& options = {});
SweepResult run_secure_distance(const Scenario& scenario, const RunOptions& options = {});
SweepResult run_noise_threshold(const Scenario& scenario, const RunOptions& options = {});
SweepResult run_crossover(const Scenario& scenario, const RunOptions& options = {});
AttenuationTable run_attenuation(const Scenario& scenario, const RunOptions& options = {});

// 9 significant digits, trailing zeros dropped; NaN is written as an empty field.
std::string format_number(double value);
std::string format_flags(const std::vector<security::Flag>& flags);

void write_csv(std::ostream& out, const SweepResult& result);
void write_json(std::ostream& out, const SweepResult& result);
void write_csv(std::ostream& out, const AttenuationTable& table);
void write_json(std::ostream& out, const AttenuationTable& table);

SweepResult read_csv(std::istream& in);

}  // namespace cvqkd::scenario
