#include "cvqkd/errors.hpp"
#include "cvqkd/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace cvqkd;
using namespace cvqkd::scenario;
using nlohmann::json;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = CVQKD_SCENARIO_DIR;

// Scratch directory removed when the test case ends.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("cvqkd-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" CVQKD_CLI "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string validation_message(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

json minimal() {
  return json::parse(R"({"links": [{"band": "microwave", "distance_m": 50}], "protocol": {"squeezing_db": 3}})");
}

}  // namespace

TEST_CASE("minimal scenario takes defaults") {
  const auto s = parse_scenario(minimal());
  CHECK(s.name == "scenario");
  REQUIRE(s.links.size() == 1);
  CHECK(s.links[0].link.frequency == link::kMicrowaveDefaultFrequency);
  CHECK(s.links[0].link.temperature == 300.0);
  CHECK(s.links[0].detector.efficiency() == 1.0);
  CHECK(s.links[0].detector.bandwidth() == 0.0);
  CHECK(s.protocol.reconciliation == protocol::Reconciliation::direct);
  CHECK(s.protocol.beta == 1.0);
  CHECK_FALSE(s.channel.has_value());
  CHECK(s.sweep.empty());
}

TEST_CASE("telecom defaults to a loss detector") {
  const auto s = parse_scenario(json::parse(R"({"links": [{"band": "telecom", "wavelength_nm": 1550,
      "detector": {"efficiency": 0.53}}], "protocol": {"squeezing_db": 3}})"));
  CHECK(s.links[0].detector.noise_mode() == protocol::NoiseMode::pure_loss);
  CHECK(s.links[0].link.wavelength() == Approx(1550e-9).epsilon(1e-12));
}

TEST_CASE("validation errors name the offending field") {
  auto doc = minimal();
  doc["links"][0]["weather"] = json::parse(R"({"haze": {"visibility_km": -1}})");
  CHECK(validation_message(doc).find("links[0].weather.haze.visibility_km") != std::string::npos);

  doc = minimal();
  doc["protocol"]["squeez_db"] = 3;
  CHECK(validation_message(doc).find("squeez_db") != std::string::npos);

  doc = minimal();
  doc["links"][0]["detector"] = json::parse(R"({"efficiency": 0.5, "amplifier_noise": 0.5})");
  CHECK_FALSE(validation_message(doc).empty());

  doc = minimal();
  doc["links"][0]["band"] = "optical";
  CHECK_FALSE(validation_message(doc).empty());

  doc = minimal();
  doc["sweep"] = json::parse(R"([{"variable": "protocol.squeezing", "values": [1, 2]}])");
  CHECK(validation_message(doc).find("protocol.squeezing") != std::string::npos);

  doc = minimal();
  doc["sweep"] = json::parse(R"([{"variable": "protocol.squeezing_db", "values": [1, -2]}])");
  CHECK_FALSE(validation_message(doc).empty());

  doc = json::parse(R"({"protocol": {"squeezing_db": 3}, "channel": {"tau": 1, "nbar": 0.1}})");
  CHECK_FALSE(validation_message(doc).empty());
}

TEST_CASE("sweep axes expand in order") {
  const auto s = load_scenario(kScenarios / "fig4.scenario.json");
  REQUIRE(s.sweep.size() == 3);
  CHECK(s.sweep[0].variable == "protocol.reconciliation");
  CHECK(s.sweep[1].values.size() == 11);
  CHECK(s.sweep[2].values.size() == 60);
  CHECK(s.sweep[2].values.front().get<double>() == Approx(1.0));
  CHECK(s.sweep[2].values.back().get<double>() == Approx(500.0));

  const auto grid = expand_grid({{"a", {1, 2}}, {"b", {"x", "y", "z"}}});
  REQUIRE(grid.size() == 6);
  CHECK(grid[0] == std::vector<json>{1, "x"});
  CHECK(grid[1] == std::vector<json>{1, "y"});
  CHECK(grid[5] == std::vector<json>{2, "z"});
}

TEST_CASE("set_parameter addresses links") {
  auto s = parse_scenario(json::parse(R"({"links": [{"band": "microwave"}, {"band": "telecom"}],
      "protocol": {"squeezing_db": 3}})"));
  set_parameter(s, "link.distance_m", 120.0);
  CHECK(s.links[0].link.distance == 120.0);
  CHECK(s.links[1].link.distance == 120.0);
  set_parameter(s, "links[1].weather", "rain:7");
  CHECK(link::to_string(s.links[1].link.weather) == "rain:7");
  CHECK(link::to_string(s.links[0].link.weather) == "clear");
  set_parameter(s, "links[0].detector.efficiency", 0.5);
  CHECK(s.links[0].detector.efficiency() == Approx(0.5).epsilon(1e-14));
  CHECK_THROWS(set_parameter(s, "links[2].distance_m", 1.0));
  CHECK_THROWS(set_parameter(s, "protocol.nonsense", 1.0));
}

TEST_CASE("key rows and CSV round trip") {
  auto doc = minimal();
  doc["links"][0]["detector"] = json::parse(R"({"efficiency": 1.0, "bandwidth_hz": 3e9})");
  doc["sweep"] = json::parse(R"([{"variable": "link.distance_m", "values": [10, 100, 300]}])");
  const auto result = run_sweep(parse_scenario(doc));
  REQUIRE(result.rows.size() == 3);
  CHECK(result.axis_names == std::vector<std::string>{"link.distance_m"});
  CHECK(result.rows[0].secret_key > 0.0);
  CHECK(result.rows[2].secret_key < 0.0);
  CHECK(result.rows[2].flags == std::vector<security::Flag>{security::Flag::insecure});
  CHECK(result.rows[0].rate == Approx(6e9 * result.rows[0].secret_key).epsilon(1e-15));

  std::ostringstream csv;
  write_csv(csv, result);
  CHECK(csv.str().rfind("scenario,link.distance_m,d_m,tau,nbar,I_bits,chi_bits,K_bits,R_bits_s,flags\n", 0) == 0);
  std::istringstream in(csv.str());
  const auto back = read_csv(in);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.axis_names == result.axis_names);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.rows[i].d_m == result.rows[i].d_m);
    CHECK(back.rows[i].secret_key == Approx(result.rows[i].secret_key).epsilon(1e-8));
    CHECK(back.rows[i].flags == result.rows[i].flags);
  }
  std::istringstream bad("scenario,x\n");
  CHECK_THROWS(read_csv(bad));
}

TEST_CASE("JSON output") {
  auto doc = minimal();
  doc["name"] = "demo";
  const auto result = run_key(parse_scenario(doc));
  std::ostringstream out;
  write_json(out, result);
  const auto j = json::parse(out.str());
  CHECK(j["scenario"] == "demo");
  REQUIRE(j["rows"].size() == 1);
  CHECK(j["rows"][0]["d_m"].get<double>() == 50.0);
  CHECK(j["rows"][0]["K_bits"].get<double>() == Approx(result.rows[0].secret_key).epsilon(1e-8));
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(std::nan("")) == "");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(6e9) == "6e+09");
  CHECK(format_number(1234.5) == "1234.5");
}

TEST_CASE("two links add an implicit link axis") {
  const auto s = load_scenario(kScenarios / "fig6.scenario.json");
  auto base = s;
  base.sweep.resize(2);
  const auto r = run_sweep(base);
  REQUIRE(r.axis_names.size() == 3);
  CHECK(r.axis_names[0] == "link");
  CHECK(r.rows.size() == 2 * 3 * 2);
  CHECK(r.rows.front().axes[0] == "microwave");
  CHECK(r.rows.back().axes[0] == "telecom");
}

TEST_CASE("solver commands on bundled scenarios") {
  const auto fig5 = load_scenario(kScenarios / "fig5_case1.scenario.json");
  const auto cross = run_crossover(fig5);
  REQUIRE(cross.rows.size() == 1);
  CHECK(cross.rows[0].d_m == Approx(15.105).epsilon(1e-3));

  const auto fig3b = load_scenario(kScenarios / "fig3b.scenario.json");
  const auto thresholds = run_noise_threshold(fig3b);
  CHECK(thresholds.rows.size() == 2 * 3);

  const auto att = run_attenuation(load_scenario(kScenarios / "fig6.scenario.json"));
  CHECK(att.axis_names == std::vector<std::string>{"link", "link.weather"});
  CHECK(att.rows.size() == 2 * 3);
  for (const auto& row : att.rows) CHECK(row.budget.total == row.budget.clear_air + row.budget.weather_excess);
}

TEST_CASE("CLI exit codes and determinism") {
  TempDir tmp;
  const auto fig4 = (kScenarios / "fig4.scenario.json").string();
  CHECK(run_cli("sweep --scenario " + fig4 + " --output " + (tmp.path() / "a.csv").string()) == 0);
  CHECK(run_cli("sweep --scenario " + fig4 + " --threads 4 --output " + (tmp.path() / "b.csv").string()) == 0);
  CHECK(slurp(tmp.path() / "a.csv") == slurp(tmp.path() / "b.csv"));
  CHECK(run_cli("sweep --scenario " + fig4 + " --format json --output " + (tmp.path() / "a.json").string()) == 0);
  CHECK(json::parse(slurp(tmp.path() / "a.json"))["rows"].size() == 1320);

  const auto bad = tmp.write("bad.json", R"({"links": [{"band": "microwave", "weather": {"haze": {"visibility_km": -1}}}],
      "protocol": {"squeezing_db": 3}})");
  CHECK(run_cli("key --scenario " + bad.string()) == 2);
  CHECK(run_cli("key --scenario " + (tmp.path() / "missing.json").string()) == 4);
  CHECK(run_cli("key --scenario " + fig4 + " --output /nonexistent-dir/out.csv") == 4);
  CHECK(run_cli("frobnicate") == 2);

  const auto telecom_rr = tmp.write("tel.json", R"({"links": [{"band": "telecom", "wavelength_nm": 1550,
      "detector": {"efficiency": 0.53, "noise_mode": "added-noise"}}],
      "protocol": {"squeezing_db": 3, "reconciliation": "RR"}})");
  CHECK(run_cli("secure-distance --scenario " + telecom_rr.string()) == 3);
  CHECK(run_cli("selftest") == 0);
}

TEST_CASE("coefficient directory override") {
  TempDir tmp;
  const fs::path resources = CVQKD_RESOURCE_DIR;
  fs::copy_file(resources / "itu_p840_liquid_water_300k.csv", tmp.path() / "itu_p840_liquid_water_300k.csv");
  // Rain coefficients ten times the reference k.
  std::ifstream in(resources / "itu_p838_rain_h.csv");
  std::ofstream out(tmp.path() / "itu_p838_rain_h.csv");
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out << line.substr(0, a) << ',' << 10.0 * std::stod(line.substr(a + 1, b - a - 1)) << line.substr(b) << '\n';
  }
  out.close();

  const auto scenario = tmp.write("rain.json", R"({"links": [{"band": "microwave", "weather": "rain:7"}],
      "protocol": {"squeezing_db": 3}})");
  const auto custom = link::CoefficientTables::load(tmp.path());
  const auto s = load_scenario(scenario);
  const auto embedded_row = run_attenuation(s).rows.at(0);
  const auto custom_row = run_attenuation(s, {1, &custom}).rows.at(0);
  CHECK(custom_row.budget.weather_excess == Approx(10.0 * embedded_row.budget.weather_excess).epsilon(1e-6));

  const auto a = tmp.path() / "a.csv";
  const auto b = tmp.path() / "b.csv";
  CHECK(run_cli("attenuation --scenario " + scenario.string() + " --output " + a.string()) == 0);
  CHECK(run_cli("attenuation --scenario " + scenario.string() + " --output " + b.string(),
                "CVQKD_COEFFICIENT_DIR=" + tmp.path().string()) == 0);
  CHECK(slurp(a) != slurp(b));
  CHECK(run_cli("attenuation --scenario " + scenario.string(), "CVQKD_COEFFICIENT_DIR=/nonexistent-dir") == 4);
}
