#pragma once

// One round of the displaced-squeezed-state protocol as a three-mode Gaussian
// model: Alice's mode (Bob's after the channel) and Eve's entangling-cloner pair.

#include "cvqkd/gaussian.hpp"
#include "cvqkd/link.hpp"

#include <span>
#include <string_view>

namespace cvqkd::protocol {

enum class Reconciliation { direct, reverse };

std::string_view to_string(Reconciliation rec);
Reconciliation reconciliation_from_string(std::string_view name);

struct ProtocolParams {
  double squeezing_db = 0.0;  // below vacuum
  gaussian::Quadrature basis = gaussian::Quadrature::q;
  double beta = 1.0;
  Reconciliation reconciliation = Reconciliation::direct;
};

void validate(const ProtocolParams& params);

struct AliceVariances {
  double r;             // squeeze factor
  double squeezed;      // sigma_s^2
  double antisqueezed;  // sigma_as^2
  double modulation;    // sigma_A^2 = sigma_as^2 - sigma_s^2
};

AliceVariances alice_variances(double squeezing_db);

enum class NoiseMode { added_noise, pure_loss };

std::string_view to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(std::string_view name);

// Detection chain. Efficiency and amplifier noise are two views of one
// quantity: eta = 1 / (1 + 2 n_amp). Covariances are gain-normalized.
class DetectorModel {
 public:
  DetectorModel() = default;

  static DetectorModel from_efficiency(double efficiency, double bandwidth_hz = 0.0,
                                       NoiseMode mode = NoiseMode::added_noise);
  static DetectorModel from_amplifier_noise(double n_amp, double bandwidth_hz = 0.0,
                                            NoiseMode mode = NoiseMode::added_noise);
  static DetectorModel ideal(double bandwidth_hz = 0.0) { return from_efficiency(1.0, bandwidth_hz); }

  double bandwidth() const { return bandwidth_; }
  double amplifier_noise() const { return n_amp_; }
  double efficiency() const { return 1.0 / (1.0 + 2.0 * n_amp_); }
  // n_g = n_amp / 2, added to each quadrature variance.
  double quadrature_noise() const { return 0.5 * n_amp_; }
  NoiseMode noise_mode() const { return mode_; }

  DetectorModel with_noise_mode(NoiseMode mode) const;

 private:
  double bandwidth_ = 0.0;
  double n_amp_ = 0.0;
  NoiseMode mode_ = NoiseMode::added_noise;
};

// Microwave chains add noise; telecom detectors are modelled as loss.
NoiseMode default_noise_mode(link::Band band);

inline DetectorModel detector_from_efficiency(double efficiency) { return DetectorModel::from_efficiency(efficiency); }

struct AmplifierStage {
  double gain;           // linear power gain
  double added_photons;  // input-referred
};

// n_amp = n_1 + n_2 / G_1 + n_3 / (G_1 G_2) + ...
double friis_cascade(std::span<const AmplifierStage> stages);

// Mode layout of joint states.
inline constexpr int kBobMode = 0;
inline constexpr int kEveCoupledMode = 1;
inline constexpr int kEveRetainedMode = 2;

struct RoundStates {
  gaussian::GaussianState bob_conditional;  // symbol known, detection noise included
  gaussian::GaussianState bob_ensemble;     // averaged over the key distribution
  gaussian::GaussianState eve_conditional;  // (E1, E2)
  gaussian::GaussianState eve_ensemble;
  gaussian::GaussianState joint_conditional;  // (B, E1, E2), detection applied to B
  gaussian::GaussianState joint_ensemble;
  gaussian::Quadrature encoded;  // quadrature carrying the key
  double sigma_b2;               // Bob's ensemble variance in the encoded quadrature
};

// `symbol` is the key value for this round; it displaces means only.
RoundStates build_round(const ProtocolParams& protocol, const link::ChannelParams& channel,
                        const DetectorModel& detector, double symbol = 0.0);

}  // namespace cvqkd::protocol
