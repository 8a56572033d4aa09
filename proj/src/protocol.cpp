#include "cvqkd/protocol.hpp"

#include "cvqkd/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cvqkd::protocol {

using gaussian::GaussianState;
using gaussian::Quadrature;

std::string_view to_string(Reconciliation rec) { return rec == Reconciliation::direct ? "DR" : "RR"; }

Reconciliation reconciliation_from_string(std::string_view name) {
  if (name == "DR") return Reconciliation::direct;
  if (name == "RR") return Reconciliation::reverse;
  throw InvalidArgument("unknown reconciliation '" + std::string(name) + "' (expected DR|RR)");
}

void validate(const ProtocolParams& p) {
  if (!(p.squeezing_db >= 0.0)) throw InvalidArgument("protocol.squeezing_db must be >= 0");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw InvalidArgument("protocol.beta must lie in [0, 1]");
}

AliceVariances alice_variances(double squeezing_db) {
  if (!(squeezing_db >= 0.0)) throw InvalidArgument("alice_variances: squeezing must be >= 0 dB");
  AliceVariances v{};
  v.r = squeezing_db * std::numbers::ln10 / 20.0;
  v.squeezed = gaussian::kVacuumVariance * std::pow(10.0, -squeezing_db / 10.0);
  v.antisqueezed = gaussian::kVacuumVariance * std::pow(10.0, squeezing_db / 10.0);
  v.modulation = v.antisqueezed - v.squeezed;
  return v;
}

std::string_view to_string(NoiseMode mode) { return mode == NoiseMode::added_noise ? "added-noise" : "pure-loss"; }

NoiseMode noise_mode_from_string(std::string_view name) {
  if (name == "added-noise") return NoiseMode::added_noise;
  if (name == "pure-loss") return NoiseMode::pure_loss;
  throw InvalidArgument("unknown noise_mode '" + std::string(name) + "' (expected added-noise|pure-loss)");
}

DetectorModel DetectorModel::from_efficiency(double efficiency, double bandwidth_hz, NoiseMode mode) {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("detector.efficiency must lie in (0, 1]");
  return from_amplifier_noise(0.5 * (1.0 / efficiency - 1.0), bandwidth_hz, mode);
}

DetectorModel DetectorModel::from_amplifier_noise(double n_amp, double bandwidth_hz, NoiseMode mode) {
  if (!(n_amp >= 0.0) || !std::isfinite(n_amp)) throw InvalidArgument("detector.amplifier_noise must be >= 0");
  if (!(bandwidth_hz >= 0.0)) throw InvalidArgument("detector.bandwidth_hz must be >= 0");
  DetectorModel d;
  d.n_amp_ = n_amp;
  d.bandwidth_ = bandwidth_hz;
  d.mode_ = mode;
  return d;
}

DetectorModel DetectorModel::with_noise_mode(NoiseMode mode) const {
  DetectorModel d = *this;
  d.mode_ = mode;
  return d;
}

NoiseMode default_noise_mode(link::Band band) {
  return band == link::Band::microwave ? NoiseMode::added_noise : NoiseMode::pure_loss;
}

double friis_cascade(std::span<const AmplifierStage> stages) {
  if (stages.empty()) throw InvalidArgument("friis_cascade: need at least one stage");
  double total = 0.0;
  double preceding_gain = 1.0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (!(s.added_photons >= 0.0)) throw InvalidArgument("friis_cascade: added photons must be >= 0");
    total += s.added_photons / preceding_gain;
    if (i + 1 < stages.size()) {
      if (!(s.gain > 1.0)) throw InvalidArgument("friis_cascade: stage gains must be > 1");
      preceding_gain *= s.gain;
    }
  }
  return total;
}

namespace {

// Detection on Bob's mode of a (B, E1, E2) state.
GaussianState detect(const GaussianState& joint, const DetectorModel& detector) {
  if (detector.noise_mode() == NoiseMode::added_noise) {
    Eigen::MatrixXd extra = Eigen::MatrixXd::Zero(6, 6);
    extra.block<2, 2>(0, 0) = detector.quadrature_noise() * Eigen::Matrix2d::Identity();
    return joint.with_added_covariance(extra);
  }
  // Loss: mix Bob with a vacuum mode at transmissivity eta, discard the vacuum port.
  const auto widened = gaussian::direct_sum(joint, gaussian::vacuum_state(1));
  const auto mixed = gaussian::apply(widened, gaussian::beam_splitter_transform(detector.efficiency(), 0, 3, 4));
  return gaussian::reduce(mixed, {0, 1, 2});
}

}  // namespace

RoundStates build_round(const ProtocolParams& protocol, const link::ChannelParams& channel,
                        const DetectorModel& detector, double symbol) {
  validate(protocol);
  if (!(channel.tau >= 0.0 && channel.tau <= 1.0)) throw InvalidArgument("channel tau must lie in [0, 1]");
  if (!(channel.nbar >= 0.0)) throw InvalidArgument("channel nbar must be >= 0");
  if (std::abs(channel.tau + channel.loss - 1.0) > 1e-12) {
    throw InvalidArgument("channel tau and loss must sum to 1");
  }
  if (channel.loss <= 0.0 && channel.nbar > 0.0) {
    throw InconsistentChannel("channel noise nbar > 0 requires tau < 1");
  }

  const auto alice = alice_variances(protocol.squeezing_db);
  const Quadrature encoded = protocol.basis;
  const int k = gaussian::quadrature_offset(encoded);
  const double phi = encoded == Quadrature::q ? 0.0 : std::numbers::pi;

  // Eve's ancilla occupancy so that her coupled mode injects nbar at the output.
  const double n_eve = channel.loss > 0.0 ? 2.0 * channel.nbar / channel.loss : 0.0;
  const auto input = gaussian::direct_sum(gaussian::vacuum_state(1), gaussian::two_mode_squeezed_state(n_eve));

  const auto squeeze = gaussian::squeeze_rotate_transform(alice.r, phi, 0, 3);
  const auto encode = gaussian::displacement_transform(0, k == 0 ? symbol : 0.0, k == 1 ? symbol : 0.0, 3);
  const auto channel_bs = gaussian::beam_splitter_transform(channel.tau, channel.loss, 0, 1, 3);
  const auto prepared = gaussian::apply(input, gaussian::compose(encode, squeeze));

  // Averaging the displacement over the Gaussian key distribution adds the
  // modulation variance to Alice's encoded quadrature.
  Eigen::MatrixXd modulation = Eigen::MatrixXd::Zero(6, 6);
  modulation(k, k) = alice.modulation;
  const auto prepared_avg = prepared.with_added_covariance(modulation);

  const auto joint_cond = detect(gaussian::apply(prepared, channel_bs), detector);
  const auto joint_ens = detect(gaussian::apply(prepared_avg, channel_bs), detector);

  return RoundStates{
      .bob_conditional = gaussian::reduce(joint_cond, {kBobMode}),
      .bob_ensemble = gaussian::reduce(joint_ens, {kBobMode}),
      .eve_conditional = gaussian::reduce(joint_cond, {kEveCoupledMode, kEveRetainedMode}),
      .eve_ensemble = gaussian::reduce(joint_ens, {kEveCoupledMode, kEveRetainedMode}),
      .joint_conditional = joint_cond,
      .joint_ensemble = joint_ens,
      .encoded = encoded,
      .sigma_b2 = joint_ens.variance(kBobMode, encoded),
  };
}

}  // namespace cvqkd::protocol
