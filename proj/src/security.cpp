#include "cvqkd/security.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace cvqkd::security {

using gaussian::von_neumann_entropy;
using protocol::Reconciliation;

double mutual_information(const protocol::RoundStates& round) {
  const double conditional = round.bob_conditional.variance(0, round.encoded);
  if (!(conditional > 0.0)) {
    throw std::logic_error("mutual_information: conditional variance is not positive");
  }
  const double gain = round.sigma_b2 - conditional;
  return 0.5 * std::log1p(gain / conditional) / std::numbers::ln2;
}

double holevo_dr(const protocol::RoundStates& round) {
  return von_neumann_entropy(round.eve_ensemble) - von_neumann_entropy(round.eve_conditional);
}

double holevo_rr(const protocol::RoundStates& round) {
  const auto eve_given_bob = gaussian::homodyne_condition(round.joint_ensemble, protocol::kBobMode, round.encoded);
  return von_neumann_entropy(round.eve_ensemble) - von_neumann_entropy(eve_given_bob);
}

KeyReport secret_key(const protocol::ProtocolParams& protocol, const link::ChannelParams& channel,
                     const protocol::DetectorModel& detector) {
  const auto round = protocol::build_round(protocol, channel, detector);
  KeyReport report;
  report.mutual_info = mutual_information(round);
  report.holevo = protocol.reconciliation == Reconciliation::direct ? holevo_dr(round) : holevo_rr(round);
  report.secret_key = protocol.beta * report.mutual_info - report.holevo;
  report.rate_upper = 2.0 * detector.bandwidth() * report.secret_key;
  report.protocol = protocol;
  report.channel = channel;
  report.detector = detector;
  return report;
}

KeyReport key_at_distance(const BandSetup& band, const protocol::ProtocolParams& protocol, double distance_m,
                          const link::CoefficientTables& tables) {
  auto scenario = band.link;
  scenario.distance = distance_m;
  return secret_key(protocol, link::channel_params(scenario, tables), band.detector);
}

std::string to_string(Flag flag) {
  switch (flag) {
    case Flag::insecure: return "insecure";
    case Flag::multi_root: return "multi_root";
    case Flag::unbounded: return "unbounded";
  }
  return "unknown";
}

bool DistanceResult::has(Flag f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

std::vector<double> distance_grid(const ScanOptions& options) {
  if (!(options.min_distance > 0.0 && options.max_distance > options.min_distance)) {
    throw InvalidArgument("scan range must satisfy 0 < min_distance < max_distance");
  }
  if (options.points < 2) throw InvalidArgument("scan needs at least two points");
  std::vector<double> grid(static_cast<std::size_t>(options.points));
  const double log_min = std::log(options.min_distance);
  const double step = (std::log(options.max_distance) - log_min) / (options.points - 1);
  for (int i = 0; i < options.points; ++i) grid[static_cast<std::size_t>(i)] = std::exp(log_min + step * i);
  grid.front() = options.min_distance;
  grid.back() = options.max_distance;
  return grid;
}

namespace {

// Largest d in [lo, hi] with holds(d), given holds(lo) && !holds(hi).
double bisect_boundary(double lo, double hi, double tolerance, const std::function<bool(double)>& holds) {
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Locates the last true->false transition of a predicate sampled on the grid.
DistanceResult scan_boundary(const std::vector<double>& grid, const std::vector<bool>& holds,
                             const ScanOptions& options, const std::function<bool(double)>& predicate) {
  DistanceResult result;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (holds[i] != holds[i + 1]) result.brackets.emplace_back(grid[i], grid[i + 1]);
  }
  const auto last = std::find(holds.rbegin(), holds.rend(), true);
  if (last == holds.rend()) return result;
  const auto last_index = static_cast<std::size_t>(std::distance(last, holds.rend()) - 1);
  if (result.brackets.size() > 1) result.flags.push_back(Flag::multi_root);
  if (last_index + 1 == grid.size()) {
    result.distance = grid.back();
    result.flags.push_back(Flag::unbounded);
    return result;
  }
  result.distance = bisect_boundary(grid[last_index], grid[last_index + 1], options.tolerance, predicate);
  return result;
}

}  // namespace

DistanceResult secure_distance(const BandSetup& band, const protocol::ProtocolParams& protocol,
                               const ScanOptions& options, const link::CoefficientTables& tables) {
  const auto grid = distance_grid(options);
  const auto keys = parallel_map(grid.size(), options.threads, [&](std::size_t i) {
    return key_at_distance(band, protocol, grid[i], tables).secret_key;
  });
  std::vector<bool> positive(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) positive[i] = keys[i] > kKeyResolution;

  if (!positive.front()) {
    DistanceResult result;
    result.flags.push_back(Flag::insecure);
    return result;
  }
  auto predicate = [&](double d) { return key_at_distance(band, protocol, d, tables).secret_key > kKeyResolution; };
  auto result = scan_boundary(grid, positive, options, predicate);

  // A key that fades into the resolution floor without turning negative has no
  // sign change to locate.
  if (!result.has(Flag::unbounded)) {
    const auto boundary = std::upper_bound(grid.begin(), grid.end(), result.distance);
    const auto first_after = static_cast<std::size_t>(std::distance(grid.begin(), boundary));
    const bool turns_negative = std::any_of(keys.begin() + static_cast<std::ptrdiff_t>(first_after), keys.end(),
                                            [](double k) { return k < -kKeyResolution; });
    if (!turns_negative) result.flags.push_back(Flag::unbounded);
  }
  return result;
}

ThresholdResult noise_threshold(double tau, const protocol::ProtocolParams& protocol,
                                const protocol::DetectorModel& detector) {
  if (!(tau >= 0.0 && tau < 1.0)) throw InvalidArgument("noise_threshold: tau must lie in [0, 1)");
  auto key = [&](double nbar) {
    return secret_key(protocol, link::ChannelParams::from_tau(tau, nbar), detector).secret_key;
  };
  if (!(key(0.0) > kKeyResolution)) return {0.0, true};

  double lo = 0.0;
  double hi = 0.5;
  while (key(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) throw std::runtime_error("noise_threshold: key stays positive for nbar up to 1e9");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double k = key(mid);
    if (std::abs(k) < 1e-13) return {mid, false};
    (k > 0.0 ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

DistanceResult crossover_distance(const BandSetup& microwave, const BandSetup& telecom,
                                  const protocol::ProtocolParams& protocol, const ScanOptions& options,
                                  const link::CoefficientTables& tables) {
  const auto grid = distance_grid(options);
  auto microwave_wins = [&](double d) {
    const double r_mw = key_at_distance(microwave, protocol, d, tables).rate_upper;
    const double r_tel = key_at_distance(telecom, protocol, d, tables).rate_upper;
    return r_mw > 0.0 && r_mw >= std::max(r_tel, 0.0);
  };
  const auto wins = parallel_map(grid.size(), options.threads, [&](std::size_t i) { return microwave_wins(grid[i]); });
  return scan_boundary(grid, std::vector<bool>(wins.begin(), wins.end()), options, microwave_wins);
}

}  // namespace cvqkd::security
