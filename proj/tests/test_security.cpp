#include "cvqkd/errors.hpp"
#include "cvqkd/security.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cvqkd;
using namespace cvqkd::security;
using link::ChannelParams;
using protocol::DetectorModel;
using protocol::ProtocolParams;
using protocol::Reconciliation;
using doctest::Approx;

namespace {

ProtocolParams proto(double s_db, Reconciliation rec = Reconciliation::direct, double beta = 1.0) {
  ProtocolParams p{s_db};
  p.reconciliation = rec;
  p.beta = beta;
  return p;
}

KeyReport key(double tau, double nbar, const ProtocolParams& p, double eta = 1.0, double bandwidth = 0.0) {
  return secret_key(p, ChannelParams::from_tau(tau, nbar), DetectorModel::from_efficiency(eta, bandwidth));
}

BandSetup microwave(double eta, double bandwidth) {
  return {link::LinkScenario::microwave(0.0), DetectorModel::from_efficiency(eta, bandwidth)};
}

BandSetup telecom(double eta, double bandwidth, link::WeatherCondition weather = link::Clear{}) {
  auto s = link::LinkScenario::telecom(0.0, weather);
  s.frequency = link::kSpeedOfLight / 1550e-9;
  return {s, DetectorModel::from_efficiency(eta, bandwidth, protocol::NoiseMode::added_noise)};
}

}  // namespace

TEST_CASE("mutual information") {
  CHECK(key(1.0, 0.0, proto(10.0)).mutual_info == Approx(0.5 * std::log2(100.0)).epsilon(1e-12));
  CHECK(key(0.5, 0.0, proto(3.0)).mutual_info == Approx(0.4988).epsilon(1e-3));
  CHECK(key(0.5, 0.0, proto(3.0)).mutual_info == Approx(0.498289).epsilon(1e-6));
  CHECK(key(0.5, 0.1, proto(0.0)).mutual_info == 0.0);
}

TEST_CASE("Holevo bounds at the edges") {
  CHECK(key(1.0, 0.0, proto(3.0)).holevo == 0.0);
  CHECK(key(1.0, 0.0, proto(3.0, Reconciliation::reverse)).holevo == Approx(0.0).epsilon(1e-12));

  // Eve's Holevo information keeps both of her modes, so at tau = 0.5 it
  // exceeds Bob's Shannon information instead of matching it.
  const auto half = key(0.5, 0.0, proto(3.0));
  CHECK(half.holevo == Approx(0.703350).epsilon(1e-6));
  CHECK(half.holevo > half.mutual_info);

  const auto lossless = key(1.0, 0.0, proto(3.0));
  CHECK(lossless.secret_key == Approx(0.996578).epsilon(1e-6));
  CHECK(lossless.secret_key == Approx(0.5 * std::log2(std::pow(10.0, 0.6))).epsilon(1e-12));
}

TEST_CASE("Holevo bounds against the closed-form states") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> tau(0.01, 0.99), nbar(0.0, 0.5), s(0.5, 10.0), eta(0.2, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double t = tau(rng), n = nbar(rng), sdb = s(rng);
    const auto det = DetectorModel::from_efficiency(eta(rng));
    const auto round = protocol::build_round(proto(sdb), ChannelParams::from_tau(t, n), det);
    const auto cf = oracle::closed_form_round(t, n, sdb, det.quadrature_noise());
    CHECK(holevo_dr(round) == Approx(oracle::holevo_dr(cf)).epsilon(1e-8).scale(1.0));
    CHECK(holevo_rr(round) == Approx(oracle::holevo_rr(cf)).epsilon(1e-8).scale(1.0));
    CHECK(mutual_information(round) == Approx(oracle::mutual_information(cf)).epsilon(1e-12).scale(1.0));
    CHECK(holevo_dr(round) >= 0.0);
    CHECK(holevo_rr(round) >= -1e-12);
  }
}

TEST_CASE("key reconstruction and rate") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> tau(0.01, 0.99), nbar(0.0, 0.3), s(0.0, 10.0), beta(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const auto p = proto(s(rng), i % 2 ? Reconciliation::reverse : Reconciliation::direct, beta(rng));
    const auto r = key(tau(rng), nbar(rng), p, 0.7, 2.5e9);
    CHECK(r.secret_key == p.beta * r.mutual_info - r.holevo);
    CHECK(r.rate_upper == 2.0 * 2.5e9 * r.secret_key);
  }
  // 2 x 3 GHz x 0.5 bits/symbol.
  KeyReport half;
  half.secret_key = 0.5;
  CHECK(2.0 * 3e9 * half.secret_key == 3e9);
  const auto r = key(0.99, 0.0, proto(3.0), 1.0, 3e9);
  CHECK(r.rate_upper == Approx(6e9 * r.secret_key).epsilon(1e-15));
}

TEST_CASE("key grows with reconciliation efficiency") {
  for (const auto rec : {Reconciliation::direct, Reconciliation::reverse}) {
    double last = -1e9;
    for (const double beta : {0.5, 0.8, 0.9, 0.95, 1.0}) {
      const double k = key(0.8, 0.05, proto(3.0, rec, beta)).secret_key;
      CHECK(k > last);
      last = k;
    }
  }
}

TEST_CASE("direct reconciliation needs a transmissivity above one half") {
  for (const double s : {1.0, 3.0, 6.0, 10.0}) {
    for (int i = 1; i <= 50; ++i) {
      const double tau = 0.01 * i;
      CHECK(key(tau, 0.0, proto(s)).secret_key <= 0.0);
    }
  }
  // The zero crossing approaches one half from above as squeezing grows.
  double last_root = 1.0;
  for (const double s : {1.0, 3.0, 6.0, 10.0, 20.0}) {
    double lo = 0.5, hi = 0.999;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (key(mid, 0.0, proto(s)).secret_key > 0.0 ? hi : lo) = mid;
    }
    CHECK(hi < last_root);
    CHECK(hi > 0.5);
    last_root = hi;
  }
  CHECK(last_root < 0.52);
  CHECK(key(0.9, 0.0, proto(3.0)).secret_key > 0.0);
}

TEST_CASE("reverse reconciliation survives pure loss") {
  for (const double s : {1.0, 3.0, 10.0}) {
    for (int i = 1; i <= 99; ++i) {
      CHECK(key(0.01 * i, 0.0, proto(s, Reconciliation::reverse)).secret_key > 0.0);
    }
  }
}

TEST_CASE("noise thresholds") {
  const double tau = 0.9997;
  const auto dr3 = noise_threshold(tau, proto(3.0), DetectorModel::ideal());
  const auto rr3 = noise_threshold(tau, proto(3.0, Reconciliation::reverse), DetectorModel::ideal());
  CHECK_FALSE(dr3.insecure_at_zero);
  CHECK(dr3.nbar == Approx(0.14979).epsilon(1e-4));
  CHECK(rr3.nbar == Approx(0.08177).epsilon(1e-4));
  CHECK(std::abs(key(tau, dr3.nbar, proto(3.0)).secret_key) <= 1e-9);

  // Thresholds rise with squeezing towards the large-squeezing limit.
  for (const auto rec : {Reconciliation::direct, Reconciliation::reverse}) {
    double last = 0.0;
    for (const double s : {3.0, 6.0, 10.0, 20.0, 30.0}) {
      const double n = noise_threshold(tau, proto(s, rec), DetectorModel::ideal()).nbar;
      CHECK(n > last);
      last = n;
    }
    CHECK(last == Approx(0.1837).epsilon(0.005));
  }
  CHECK(noise_threshold(tau, proto(6.0), DetectorModel::ideal()).nbar == Approx(0.16644).epsilon(1e-4));
  CHECK(noise_threshold(tau, proto(10.0, Reconciliation::reverse), DetectorModel::ideal()).nbar ==
        Approx(0.16315).epsilon(1e-4));

  const auto lossy = noise_threshold(0.4, proto(3.0), DetectorModel::ideal());
  CHECK(lossy.insecure_at_zero);
  CHECK(lossy.nbar == 0.0);
  CHECK_THROWS_AS(noise_threshold(1.0, proto(3.0), DetectorModel::ideal()), InvalidArgument);
}

TEST_CASE("distance grid") {
  ScanOptions o;
  o.min_distance = 1.0;
  o.max_distance = 1000.0;
  o.points = 4;
  const auto g = distance_grid(o);
  REQUIRE(g.size() == 4);
  CHECK(g.front() == 1.0);
  CHECK(g[1] == Approx(10.0).epsilon(1e-12));
  CHECK(g.back() == 1000.0);
  o.points = 1;
  CHECK_THROWS_AS(distance_grid(o), InvalidArgument);
  o.points = 8;
  o.min_distance = 0.0;
  CHECK_THROWS_AS(distance_grid(o), InvalidArgument);
}

TEST_CASE("microwave secure distance") {
  const auto band = microwave(1.0, 3e9);
  const auto dr = secure_distance(band, proto(3.0));
  const auto rr = secure_distance(band, proto(3.0, Reconciliation::reverse));
  CHECK(dr.flags.empty());
  CHECK(rr.flags.empty());
  CHECK(dr.distance == Approx(165.25).epsilon(0.05 / 165.25));
  CHECK(rr.distance == Approx(90.17).epsilon(0.05 / 90.17));
  CHECK(key_at_distance(band, proto(3.0), dr.distance - 0.2).secret_key > 0.0);
  CHECK(key_at_distance(band, proto(3.0), dr.distance + 0.2).secret_key < 0.0);

  auto rain = band;
  rain.link.weather = link::Rain{7.0};
  CHECK(secure_distance(rain, proto(3.0)).distance == Approx(85.55).epsilon(1e-3));
  auto haze = band;
  haze.link.weather = link::Haze{4.0};
  CHECK(secure_distance(haze, proto(3.0)).distance == Approx(164.42).epsilon(1e-3));
}

TEST_CASE("telecom secure distance") {
  const auto dr = secure_distance(telecom(0.53, 1.2e9), proto(3.0));
  CHECK(dr.distance == Approx(6071.0).epsilon(2e-3));
  CHECK(secure_distance(telecom(0.53, 1.2e9, link::Rain{7.0}), proto(3.0)).distance == Approx(294.4).epsilon(2e-3));
  CHECK(secure_distance(telecom(0.53, 1.2e9, link::Haze{4.0}), proto(3.0)).distance == Approx(792.0).epsilon(5e-3));

  // Pure-loss RR never reaches zero; the scan ends in the resolution floor.
  const auto rr = secure_distance(telecom(0.53, 1.2e9), proto(3.0, Reconciliation::reverse));
  CHECK(rr.has(Flag::unbounded));
}

TEST_CASE("insecure at the shortest distance") {
  ScanOptions far;
  far.min_distance = 1000.0;
  far.max_distance = 1e5;
  far.points = 16;
  const auto r = secure_distance(microwave(1.0, 3e9), proto(3.0), far);
  CHECK(r.has(Flag::insecure));
  CHECK(r.distance == 0.0);
}

TEST_CASE("crossover distances") {
  const auto tel = telecom(0.53, 1.2e9);
  const auto case1 = crossover_distance(microwave(0.345, 3e9), tel, proto(3.0));
  const auto case2 = crossover_distance(microwave(0.695, 1.2e9), tel, proto(3.0));
  const auto rr = crossover_distance(microwave(0.345, 3e9), tel, proto(3.0, Reconciliation::reverse));
  CHECK(case1.flags.empty());
  CHECK(case1.distance == Approx(15.105).epsilon(1e-3));
  CHECK(case2.distance == Approx(15.706).epsilon(1e-3));
  CHECK(rr.distance == Approx(24.547).epsilon(1e-3));

  const double d = case1.distance;
  const double below = key_at_distance(microwave(0.345, 3e9), proto(3.0), d - 0.5).rate_upper -
                       key_at_distance(tel, proto(3.0), d - 0.5).rate_upper;
  const double above = key_at_distance(microwave(0.345, 3e9), proto(3.0), d + 0.5).rate_upper -
                       key_at_distance(tel, proto(3.0), d + 0.5).rate_upper;
  CHECK(below > 0.0);
  CHECK(above < 0.0);
}

TEST_CASE("imperfect detection can beat ideal detection in reverse reconciliation") {
  const auto p = proto(3.0, Reconciliation::reverse);
  double best_eta = 0.0, best_rate = -1e99;
  for (int i = 0; i <= 70; ++i) {
    const double eta = 0.3 + 0.01 * i;
    const double r = key_at_distance(microwave(eta, 3e9), p, 85.0).rate_upper;
    if (r > best_rate) {
      best_rate = r;
      best_eta = eta;
    }
  }
  CHECK(best_eta < 1.0);
  CHECK(best_eta == Approx(0.80).epsilon(0.05));
  CHECK(best_rate > key_at_distance(microwave(1.0, 3e9), p, 85.0).rate_upper);
}

TEST_CASE("squeezing helps inside the secure region") {
  for (const auto rec : {Reconciliation::direct, Reconciliation::reverse}) {
    for (const double d : {5.0, 20.0, 50.0}) {
      double last = -1e9;
      for (int s = 0; s <= 10; ++s) {
        const double k = key_at_distance(microwave(1.0, 3e9), proto(s, rec), d).secret_key;
        if (k > 0.0 && last > 0.0) CHECK(k >= last);
        last = k;
      }
    }
  }
}

TEST_CASE("solver flags render") {
  CHECK(to_string(Flag::insecure) == "insecure");
  CHECK(to_string(Flag::multi_root) == "multi_root");
  CHECK(to_string(Flag::unbounded) == "unbounded");
}
