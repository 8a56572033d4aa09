#include "cvqkd/selftest.hpp"

#include "cvqkd/security.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>

namespace cvqkd::selftest {

namespace {

using namespace cvqkd::gaussian;

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

Check planck_check() {
  const double got = link::planck_occupancy(5e9, 300.0);
  const double want = oracle::planck(5e9, 300.0);
  return {"planck occupancy", std::abs(got - want) <= 1e-12 * want, fmt("%.6f vs %.6f", got, want)};
}

Check symplectic_check() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  const auto omega = symplectic_form(3);
  for (int i = 0; i < 200; ++i) {
    auto t = compose(beam_splitter_transform(unit(rng), 0, 1 + i % 2, 3),
                     squeeze_rotate_transform(3.0 * unit(rng) - 1.5, 2.0 * std::numbers::pi * unit(rng), i % 3, 3));
    const double err = (t.matrix() * omega * t.matrix().transpose() - omega).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
  }
  return {"symplectic form preserved", worst <= 1e-10, fmt("max deviation %.3g", worst)};
}

Check pure_entropy_check() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto s = direct_sum(vacuum_state(1), two_mode_squeezed_state(5.0 * unit(rng)));
    s = apply(s, squeeze_rotate_transform(2.0 * unit(rng), 6.0 * unit(rng), 0, 3));
    s = apply(s, beam_splitter_transform(unit(rng), 0, 1, 3));
    worst = std::max(worst, von_neumann_entropy(s));
  }
  return {"pure-state entropy", worst <= 1e-9, fmt("max %.3g bits", worst)};
}

Check tms_marginal_check() {
  const auto tms = two_mode_squeezed_state(2.0);
  const double got = von_neumann_entropy(reduce(tms, {0}));
  const double want = oracle::g_bits(5.0);
  return {"thermal marginal entropy", std::abs(got - want) <= 1e-12, fmt("%.9f vs %.9f", got, want)};
}

struct RandomPoint {
  double tau, nbar, s_db, eta;
};

std::vector<RandomPoint> random_points(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tau(0.01, 0.99), nbar(0.0, 0.5), s(0.5, 10.0), eta(0.2, 1.0);
  std::vector<RandomPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back({tau(rng), nbar(rng), s(rng), eta(rng)});
  return pts;
}

Check variance_oracle_check() {
  double worst = 0.0;
  for (const auto& p : random_points(50, 13)) {
    const auto det = protocol::DetectorModel::from_efficiency(p.eta);
    const auto round = protocol::build_round({p.s_db}, link::ChannelParams::from_tau(p.tau, p.nbar), det);
    const auto cf = oracle::closed_form_round(p.tau, p.nbar, p.s_db, det.quadrature_noise());
    worst = std::max(worst, std::abs(round.sigma_b2 - cf.sigma_b2));
    worst = std::max(worst, std::abs(round.bob_conditional.variance(0, Quadrature::q) - cf.sigma_b_given_a2));
  }
  return {"Bob variances vs closed form", worst <= 1e-12, fmt("max deviation %.3g", worst)};
}

Check holevo_oracle_check() {
  double worst = 0.0;
  for (const auto& p : random_points(50, 14)) {
    const auto det = protocol::DetectorModel::from_efficiency(p.eta);
    const auto round = protocol::build_round({p.s_db}, link::ChannelParams::from_tau(p.tau, p.nbar), det);
    const auto cf = oracle::closed_form_round(p.tau, p.nbar, p.s_db, det.quadrature_noise());
    worst = std::max(worst, std::abs(security::holevo_dr(round) - oracle::holevo_dr(cf)));
    worst = std::max(worst, std::abs(security::holevo_rr(round) - oracle::holevo_rr(cf)));
    worst = std::max(worst, std::abs(security::mutual_information(round) - oracle::mutual_information(cf)));
  }
  return {"Holevo bounds vs closed form", worst <= 1e-8, fmt("max deviation %.3g bits", worst)};
}

Check rain_table_check() {
  const auto row = link::CoefficientTables::embedded().rain_at(5.0);
  const auto [k, alpha] = oracle::p838_horizontal(5.0);
  const double err = std::max(std::abs(row.k / k - 1.0), std::abs(row.alpha / alpha - 1.0));
  return {"rain coefficients vs fitted formula", err <= 1e-5, fmt("relative deviation %.3g", err)};
}

Check cloud_table_check() {
  double worst = 0.0;
  for (const double f : {1.2, 3.7, 5.0, 8.3, 33.0, 77.0}) {
    const double got = link::CoefficientTables::embedded().liquid_water_at(f);
    worst = std::max(worst, std::abs(got / oracle::p840_liquid_water(f, 300.0) - 1.0));
  }
  return {"liquid water coefficients vs formula", worst <= 5e-3, fmt("relative deviation %.3g", worst)};
}

Check rr_positivity_check() {
  double lowest = 1.0;
  protocol::ProtocolParams p{3.0};
  p.reconciliation = protocol::Reconciliation::reverse;
  for (int i = 1; i <= 99; ++i) {
    const double tau = 0.01 * i;
    lowest = std::min(lowest, security::secret_key(p, link::ChannelParams::from_tau(tau, 0.0),
                                                   protocol::DetectorModel::ideal())
                                  .secret_key);
  }
  return {"RR pure-loss positivity", lowest > 0.0, fmt("min K %.3g bits", lowest)};
}

Check key_reconstruction_check() {
  double worst = 0.0;
  for (const auto& p : random_points(20, 15)) {
    protocol::ProtocolParams proto{p.s_db};
    proto.beta = p.eta;
    const auto r = security::secret_key(proto, link::ChannelParams::from_tau(p.tau, p.nbar),
                                        protocol::DetectorModel::from_efficiency(p.eta, 1e9));
    worst = std::max(worst, std::abs(r.secret_key - (proto.beta * r.mutual_info - r.holevo)));
    worst = std::max(worst, std::abs(r.rate_upper - 2e9 * r.secret_key) / 1e9);
  }
  return {"K = beta I - chi", worst == 0.0, fmt("max deviation %.3g", worst)};
}

}  // namespace

std::vector<Check> run() {
  const std::vector<std::function<Check()>> checks = {
      planck_check,         symplectic_check,       pure_entropy_check,  tms_marginal_check,
      variance_oracle_check, holevo_oracle_check,   rain_table_check,    cloud_table_check,
      rr_positivity_check,  key_reconstruction_check};
  std::vector<Check> results;
  for (const auto& c : checks) {
    try {
      results.push_back(c());
    } catch (const std::exception& e) {
      results.push_back({"exception", false, e.what()});
    }
  }
  return results;
}

}  // namespace cvqkd::selftest
