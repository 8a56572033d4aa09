#pragma once

// Open-air link budget: antennas, Friis path loss, clear-air and weather
// attenuation for the microwave and telecom bands, and the resulting
// thermal-loss channel seen by the quantum signal.

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cvqkd::link {

inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline constexpr double kMicrowaveDefaultFrequency = 5e9;
inline constexpr double kTelecomDefaultFrequency = 1.9355e14;
inline constexpr double kDefaultTemperature = 300.0;

// Clear-air specific attenuation, dB/km.
inline constexpr double kMicrowaveClearAir = 6.3e-3;
inline constexpr double kTelecomClearAir = 2.02e-1;
// Visibility of the clear-air telecom reference, km.
inline constexpr double kTelecomReferenceVisibility = 23.0;

enum class Band { microwave, telecom };

std::string_view to_string(Band band);
Band band_from_string(std::string_view name);

struct Clear {};
struct Rain {
  double rate_mm_h;
};
struct Haze {
  double visibility_km;
};
using WeatherCondition = std::variant<Clear, Rain, Haze>;

// "clear", "rain:<mm/h>" or "haze:<km>".
std::string to_string(const WeatherCondition& weather);
WeatherCondition weather_from_string(std::string_view text);

struct LinkScenario {
  Band band = Band::microwave;
  double frequency = kMicrowaveDefaultFrequency;  // Hz
  double distance = 0.0;                          // m
  double gain_tx = 1.0;
  double gain_rx = 1.0;
  double temperature = kDefaultTemperature;  // K
  WeatherCondition weather = Clear{};

  double wavelength() const { return kSpeedOfLight / frequency; }

  static LinkScenario microwave(double distance_m, WeatherCondition weather = Clear{});
  static LinkScenario telecom(double distance_m, WeatherCondition weather = Clear{});
};

// Throws InvalidArgument naming the first violated invariant.
void validate(const LinkScenario& scenario);

struct AttenuationBudget {
  double clear_air = 0.0;       // dB/km
  double weather_excess = 0.0;  // dB/km
  double total = 0.0;           // dB/km
};

struct ChannelParams {
  double tau = 1.0;      // transmissivity
  double loss = 0.0;     // 1 - tau, carried separately to keep precision near tau = 1
  double nbar = 0.0;     // output-referred quadrature noise
  double nbar_th = 0.0;  // environment occupancy

  // Direct construction for a given transmissivity and output noise.
  static ChannelParams from_tau(double tau, double nbar);
};

// ITU-R P.838-3 horizontal-polarization rain coefficients and ITU-R P.840
// liquid-water specific attenuation K_l at 300 K, tabulated by frequency.
class CoefficientTables {
 public:
  struct RainRow {
    double frequency_ghz;
    double k;
    double alpha;
  };
  struct CloudRow {
    double frequency_ghz;
    double k_l;
  };

  // Tables compiled into the binary from resources/*.csv.
  static const CoefficientTables& embedded();
  // Loads itu_p838_rain_h.csv and itu_p840_liquid_water_300k.csv from a directory.
  static CoefficientTables load(const std::filesystem::path& dir);
  static CoefficientTables parse(std::string_view rain_csv, std::string_view cloud_csv);

  // Log-frequency interpolation: log k and alpha linear in log f.
  RainRow rain_at(double frequency_ghz) const;
  // log K_l linear in log f.
  double liquid_water_at(double frequency_ghz) const;

  double min_frequency_ghz() const;
  double max_frequency_ghz() const;

 private:
  std::vector<RainRow> rain_;
  std::vector<CloudRow> cloud_;
};

inline constexpr std::string_view kCoefficientDirEnv = "CVQKD_COEFFICIENT_DIR";

// Mean thermal photon number per mode.
double planck_occupancy(double frequency, double temperature);

// 10 log10(G_t G_r (lambda / 4 pi d)^2); negative means net loss.
double path_loss_db(const LinkScenario& scenario);

double antenna_directivity(double area, double wavelength, double aperture_efficiency);
double antenna_gain(double radiation_efficiency, double directivity);

// Liquid water concentration in g/m^3 for a visibility in km.
double liquid_water_concentration(double visibility_km);

// Mie-scattering haze attenuation (Kim model) in dB/km at the given wavelength.
double telecom_haze_attenuation(double visibility_km, double wavelength_nm);

AttenuationBudget specific_attenuation(Band band, double frequency, const WeatherCondition& weather,
                                       const CoefficientTables& tables = CoefficientTables::embedded());

struct Transmissivity {
  double tau;
  double loss;  // 1 - tau
};

// 10^(-gamma d_km / 10), with 1 - tau evaluated through expm1.
Transmissivity transmissivity(double gamma_db_per_km, double distance_m);

ChannelParams channel_params(const LinkScenario& scenario,
                             const CoefficientTables& tables = CoefficientTables::embedded());

}  // namespace cvqkd::link
