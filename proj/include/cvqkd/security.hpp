#pragma once

// Asymptotic key figures for collective Gaussian attacks and the solvers built
// on them: secure distance, noise threshold and microwave/telecom crossover.

#include "cvqkd/link.hpp"
#include "cvqkd/protocol.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cvqkd::security {

// Keys at or below this magnitude (bits/symbol) are not resolved by the
// entropy differences of 6x6 covariance matrices.
inline constexpr double kKeyResolution = 1e-12;

struct KeyReport {
  double mutual_info = 0.0;  // bits/symbol
  double holevo = 0.0;       // bits/symbol
  double secret_key = 0.0;   // beta * I - chi, unclamped
  double rate_upper = 0.0;   // 2 * bandwidth * K, bits/s, unclamped
  protocol::ProtocolParams protocol;
  link::ChannelParams channel;
  protocol::DetectorModel detector;
};

double mutual_information(const protocol::RoundStates& round);
double holevo_dr(const protocol::RoundStates& round);
double holevo_rr(const protocol::RoundStates& round);

KeyReport secret_key(const protocol::ProtocolParams& protocol, const link::ChannelParams& channel,
                     const protocol::DetectorModel& detector);

// One band of a comparison: where the link is, and how Bob detects.
struct BandSetup {
  link::LinkScenario link;
  protocol::DetectorModel detector;
};

KeyReport key_at_distance(const BandSetup& band, const protocol::ProtocolParams& protocol, double distance_m,
                          const link::CoefficientTables& tables = link::CoefficientTables::embedded());

enum class Flag { insecure, multi_root, unbounded };

std::string to_string(Flag flag);

struct ScanOptions {
  double min_distance = 0.1;  // m
  double max_distance = 1e6;  // m
  int points = 256;           // geometric grid
  double tolerance = 0.1;     // m, bisection
  int threads = 1;
};

struct DistanceResult {
  double distance = 0.0;  // m
  std::vector<Flag> flags;
  // Grid intervals that contain a sign change, in increasing distance.
  std::vector<std::pair<double, double>> brackets;

  bool has(Flag f) const;
};

DistanceResult secure_distance(const BandSetup& band, const protocol::ProtocolParams& protocol,
                               const ScanOptions& options = {},
                               const link::CoefficientTables& tables = link::CoefficientTables::embedded());

struct ThresholdResult {
  double nbar = 0.0;
  bool insecure_at_zero = false;
};

ThresholdResult noise_threshold(double tau, const protocol::ProtocolParams& protocol,
                                const protocol::DetectorModel& detector);

DistanceResult crossover_distance(const BandSetup& microwave, const BandSetup& telecom,
                                  const protocol::ProtocolParams& protocol, const ScanOptions& options = {},
                                  const link::CoefficientTables& tables = link::CoefficientTables::embedded());

// Geometric grid used by the distance scans.
std::vector<double> distance_grid(const ScanOptions& options);

}  // namespace cvqkd::security
