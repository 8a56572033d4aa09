#include "cvqkd/link.hpp"

#include "cvqkd/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cvqkd::link {

// Defined in the generated embedded_tables.cpp.
extern const char* const kEmbeddedRainCsv;
extern const char* const kEmbeddedCloudCsv;

namespace {

constexpr double kMicrowaveMinGhz = 1.0;
constexpr double kMicrowaveMaxGhz = 10.0;
constexpr double kTelecomMinNm = 780.0;
constexpr double kTelecomMaxNm = 1600.0;

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  while (first != last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("cannot parse number '" + std::string(text) + "' in " + std::string(what));
  }
  return value;
}

std::vector<std::vector<double>> parse_csv(std::string_view csv, std::size_t columns, std::string_view what) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), what));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.size() != columns) {
      throw InvalidArgument(std::string(what) + ": expected " + std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw InvalidArgument(std::string(what) + ": need at least two rows");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i][0] > rows[i - 1][0])) {
      throw InvalidArgument(std::string(what) + ": frequencies must be strictly increasing");
    }
  }
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open coefficient table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Index i such that grid[i] <= x <= grid[i+1].
template <typename Row>
std::size_t bracket(const std::vector<Row>& rows, double f) {
  if (f < rows.front().frequency_ghz || f > rows.back().frequency_ghz) {
    throw OutOfModelError("frequency " + std::to_string(f) + " GHz outside coefficient table [" +
                          std::to_string(rows.front().frequency_ghz) + ", " +
                          std::to_string(rows.back().frequency_ghz) + "] GHz");
  }
  auto it = std::upper_bound(rows.begin(), rows.end(), f,
                             [](double x, const Row& r) { return x < r.frequency_ghz; });
  auto i = static_cast<std::size_t>(std::distance(rows.begin(), it));
  return std::clamp<std::size_t>(i, 1, rows.size() - 1) - 1;
}

}  // namespace

std::string_view to_string(Band band) { return band == Band::microwave ? "microwave" : "telecom"; }

Band band_from_string(std::string_view name) {
  if (name == "microwave") return Band::microwave;
  if (name == "telecom") return Band::telecom;
  throw InvalidArgument("unknown band '" + std::string(name) + "' (expected microwave|telecom)");
}

std::string to_string(const WeatherCondition& weather) {
  std::ostringstream out;
  std::visit(
      [&](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, Clear>) {
          out << "clear";
        } else if constexpr (std::is_same_v<T, Rain>) {
          out << "rain:" << w.rate_mm_h;
        } else {
          out << "haze:" << w.visibility_km;
        }
      },
      weather);
  return out.str();
}

WeatherCondition weather_from_string(std::string_view text) {
  if (text == "clear") return Clear{};
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = text.substr(0, colon);
    const double value = parse_double(text.substr(colon + 1), "weather");
    if (kind == "rain") {
      if (!(value > 0.0)) throw InvalidArgument("weather.rain.rate_mm_h must be > 0");
      return Rain{value};
    }
    if (kind == "haze") {
      if (!(value > 0.0)) throw InvalidArgument("weather.haze.visibility_km must be > 0");
      return Haze{value};
    }
  }
  throw InvalidArgument("unknown weather '" + std::string(text) + "' (expected clear|rain:<mm/h>|haze:<km>)");
}

LinkScenario LinkScenario::microwave(double distance_m, WeatherCondition weather) {
  LinkScenario s;
  s.band = Band::microwave;
  s.frequency = kMicrowaveDefaultFrequency;
  s.distance = distance_m;
  s.weather = weather;
  return s;
}

LinkScenario LinkScenario::telecom(double distance_m, WeatherCondition weather) {
  LinkScenario s;
  s.band = Band::telecom;
  s.frequency = kTelecomDefaultFrequency;
  s.distance = distance_m;
  s.weather = weather;
  return s;
}

void validate(const LinkScenario& s) {
  if (!(s.frequency > 0.0)) throw InvalidArgument("frequency_hz must be > 0");
  if (!(s.distance >= 0.0)) throw InvalidArgument("distance_m must be >= 0");
  if (!(s.temperature > 0.0)) throw InvalidArgument("temperature_k must be > 0");
  if (!(s.gain_tx >= 0.0)) throw InvalidArgument("gain_tx must be >= 0");
  if (!(s.gain_rx >= 0.0)) throw InvalidArgument("gain_rx must be >= 0");
  if (const auto* rain = std::get_if<Rain>(&s.weather); rain && !(rain->rate_mm_h > 0.0)) {
    throw InvalidArgument("weather.rain.rate_mm_h must be > 0");
  }
  if (const auto* haze = std::get_if<Haze>(&s.weather); haze && !(haze->visibility_km > 0.0)) {
    throw InvalidArgument("weather.haze.visibility_km must be > 0");
  }
}

ChannelParams ChannelParams::from_tau(double tau, double nbar) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("channel tau must lie in [0, 1]");
  if (!(nbar >= 0.0)) throw InvalidArgument("channel nbar must be >= 0");
  ChannelParams p;
  p.tau = tau;
  p.loss = 1.0 - tau;
  p.nbar = nbar;
  p.nbar_th = tau < 1.0 ? 2.0 * nbar / p.loss : 0.0;
  return p;
}

const CoefficientTables& CoefficientTables::embedded() {
  static const CoefficientTables tables = parse(kEmbeddedRainCsv, kEmbeddedCloudCsv);
  return tables;
}

CoefficientTables CoefficientTables::load(const std::filesystem::path& dir) {
  return parse(read_file(dir / "itu_p838_rain_h.csv"), read_file(dir / "itu_p840_liquid_water_300k.csv"));
}

CoefficientTables CoefficientTables::parse(std::string_view rain_csv, std::string_view cloud_csv) {
  CoefficientTables t;
  for (const auto& r : parse_csv(rain_csv, 3, "rain coefficient table")) {
    if (!(r[1] > 0.0)) throw InvalidArgument("rain coefficient table: k must be > 0");
    t.rain_.push_back({r[0], r[1], r[2]});
  }
  for (const auto& r : parse_csv(cloud_csv, 2, "liquid water table")) {
    if (!(r[1] > 0.0)) throw InvalidArgument("liquid water table: K_l must be > 0");
    t.cloud_.push_back({r[0], r[1]});
  }
  return t;
}

CoefficientTables::RainRow CoefficientTables::rain_at(double f) const {
  const auto i = bracket(rain_, f);
  const auto& a = rain_[i];
  const auto& b = rain_[i + 1];
  const double w = std::log(f / a.frequency_ghz) / std::log(b.frequency_ghz / a.frequency_ghz);
  const double log_k = std::log(a.k) + w * (std::log(b.k) - std::log(a.k));
  return {f, std::exp(log_k), a.alpha + w * (b.alpha - a.alpha)};
}

double CoefficientTables::liquid_water_at(double f) const {
  const auto i = bracket(cloud_, f);
  const auto& a = cloud_[i];
  const auto& b = cloud_[i + 1];
  const double w = std::log(f / a.frequency_ghz) / std::log(b.frequency_ghz / a.frequency_ghz);
  return std::exp(std::log(a.k_l) + w * (std::log(b.k_l) - std::log(a.k_l)));
}

double CoefficientTables::min_frequency_ghz() const {
  return std::max(rain_.front().frequency_ghz, cloud_.front().frequency_ghz);
}

double CoefficientTables::max_frequency_ghz() const {
  return std::min(rain_.back().frequency_ghz, cloud_.back().frequency_ghz);
}

double planck_occupancy(double frequency, double temperature) {
  if (!(frequency > 0.0)) throw InvalidArgument("planck_occupancy: frequency must be > 0");
  if (!(temperature > 0.0)) throw InvalidArgument("planck_occupancy: temperature must be > 0");
  return 1.0 / std::expm1(kPlanck * frequency / (kBoltzmann * temperature));
}

double path_loss_db(const LinkScenario& s) {
  if (!(s.distance > 0.0)) throw InvalidArgument("path_loss_db: distance must be > 0");
  if (!(s.frequency > 0.0)) throw InvalidArgument("path_loss_db: frequency must be > 0");
  const double ratio = s.wavelength() / (4.0 * std::numbers::pi * s.distance);
  return 10.0 * std::log10(s.gain_tx * s.gain_rx * ratio * ratio);
}

double antenna_directivity(double area, double wavelength, double aperture_efficiency) {
  if (!(area > 0.0)) throw InvalidArgument("antenna_directivity: area must be > 0");
  if (!(wavelength > 0.0)) throw InvalidArgument("antenna_directivity: wavelength must be > 0");
  if (!(aperture_efficiency >= 0.0 && aperture_efficiency <= 1.0)) {
    throw InvalidArgument("antenna_directivity: aperture efficiency must lie in [0, 1]");
  }
  return 4.0 * std::numbers::pi * area * aperture_efficiency / (wavelength * wavelength);
}

double antenna_gain(double radiation_efficiency, double directivity) {
  if (!(radiation_efficiency >= 0.0 && radiation_efficiency <= 1.0)) {
    throw InvalidArgument("antenna_gain: radiation efficiency must lie in [0, 1]");
  }
  if (!(directivity >= 0.0)) throw InvalidArgument("antenna_gain: directivity must be >= 0");
  return radiation_efficiency * directivity;
}

double liquid_water_concentration(double visibility_km) {
  if (!(visibility_km > 0.0)) throw InvalidArgument("weather.haze.visibility_km must be > 0");
  const double a = -std::log10(0.02) / 99.0;
  const double b = 1.0 / 0.92;
  return std::pow(a / visibility_km, b);
}

double telecom_haze_attenuation(double visibility_km, double wavelength_nm) {
  if (!(visibility_km > 0.0)) throw InvalidArgument("weather.haze.visibility_km must be > 0");
  double p = 0.0;
  if (visibility_km > 50.0) {
    p = 1.6;
  } else if (visibility_km > 6.0) {
    p = 1.3;
  } else if (visibility_km > 1.0) {
    p = 0.16 * visibility_km + 0.34;
  } else if (visibility_km > 0.5) {
    p = visibility_km - 0.5;
  }
  const double c = 39.1 * std::log10(std::numbers::e);
  return c / visibility_km * std::pow(wavelength_nm / 550.0, -p);
}

AttenuationBudget specific_attenuation(Band band, double frequency, const WeatherCondition& weather,
                                       const CoefficientTables& tables) {
  if (!(frequency > 0.0)) throw InvalidArgument("specific_attenuation: frequency must be > 0");
  if (const auto* rain = std::get_if<Rain>(&weather); rain && !(rain->rate_mm_h > 0.0)) {
    throw InvalidArgument("weather.rain.rate_mm_h must be > 0");
  }
  if (const auto* haze = std::get_if<Haze>(&weather); haze && !(haze->visibility_km > 0.0)) {
    throw InvalidArgument("weather.haze.visibility_km must be > 0");
  }

  AttenuationBudget budget;
  if (band == Band::microwave) {
    const double f_ghz = frequency * 1e-9;
    if (f_ghz < kMicrowaveMinGhz || f_ghz > kMicrowaveMaxGhz) {
      throw OutOfModelError("microwave attenuation model covers 1-10 GHz, got " + std::to_string(f_ghz) + " GHz");
    }
    budget.clear_air = kMicrowaveClearAir;
    if (const auto* rain = std::get_if<Rain>(&weather)) {
      const auto c = tables.rain_at(f_ghz);
      budget.weather_excess = c.k * std::pow(rain->rate_mm_h, c.alpha);
    } else if (const auto* haze = std::get_if<Haze>(&weather)) {
      budget.weather_excess = tables.liquid_water_at(f_ghz) * liquid_water_concentration(haze->visibility_km);
    }
  } else {
    const double wavelength_nm = kSpeedOfLight / frequency * 1e9;
    if (wavelength_nm < kTelecomMinNm || wavelength_nm > kTelecomMaxNm) {
      throw OutOfModelError("telecom attenuation model covers 780-1600 nm, got " + std::to_string(wavelength_nm) + " nm");
    }
    budget.clear_air = kTelecomClearAir;
    if (const auto* rain = std::get_if<Rain>(&weather)) {
      budget.weather_excess = 1.076 * std::pow(rain->rate_mm_h, 0.67);
    } else if (const auto* haze = std::get_if<Haze>(&weather)) {
      // Haze scattering replaces the scattering already in the clear-air figure.
      const double reference = telecom_haze_attenuation(kTelecomReferenceVisibility, wavelength_nm);
      budget.weather_excess =
          std::max(0.0, telecom_haze_attenuation(haze->visibility_km, wavelength_nm) - reference);
    }
  }
  budget.total = budget.clear_air + budget.weather_excess;
  return budget;
}

Transmissivity transmissivity(double gamma_db_per_km, double distance_m) {
  if (!(gamma_db_per_km >= 0.0)) throw InvalidArgument("transmissivity: gamma must be >= 0");
  if (!(distance_m >= 0.0)) throw InvalidArgument("transmissivity: distance must be >= 0");
  const double exponent = -gamma_db_per_km * (distance_m * 1e-3) / 10.0 * std::numbers::ln10;
  return {std::exp(exponent), -std::expm1(exponent)};
}

ChannelParams channel_params(const LinkScenario& scenario, const CoefficientTables& tables) {
  validate(scenario);
  const auto budget = specific_attenuation(scenario.band, scenario.frequency, scenario.weather, tables);
  const auto t = transmissivity(budget.total, scenario.distance);
  ChannelParams p;
  p.tau = t.tau;
  p.loss = t.loss;
  p.nbar_th = planck_occupancy(scenario.frequency, scenario.temperature);
  p.nbar = 0.5 * t.loss * p.nbar_th;
  return p;
}

}  // namespace cvqkd::link
