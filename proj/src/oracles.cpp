#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cvqkd::oracle {

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kBoltzmann = 1.380649e-23;

// Invariants of near-pure states cancel heavily, so they are formed in extended precision.
using Wide = long double;
using WideMat4 = std::array<Wide, 16>;

Wide at(const WideMat4& m, int i, int j) { return m[static_cast<std::size_t>(4 * i + j)]; }

Wide det2(Wide a, Wide b, Wide c, Wide d) { return a * d - b * c; }

Wide det4(const WideMat4& m) {
  // Laplace expansion along the first row.
  Wide det = 0.0L;
  for (int col = 0; col < 4; ++col) {
    Wide minor[9];
    int k = 0;
    for (int i = 1; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (j != col) minor[k++] = at(m, i, j);
      }
    }
    const Wide d3 = minor[0] * (minor[4] * minor[8] - minor[5] * minor[7]) -
                      minor[1] * (minor[3] * minor[8] - minor[5] * minor[6]) +
                      minor[2] * (minor[3] * minor[7] - minor[4] * minor[6]);
    det += (col % 2 == 0 ? 1.0L : -1.0L) * at(m, 0, col) * d3;
  }
  return det;
}

void set_block(Mat4& m, int bi, int bj, double a, double b, double c, double d) {
  m[static_cast<std::size_t>(4 * (2 * bi) + 2 * bj)] = a;
  m[static_cast<std::size_t>(4 * (2 * bi) + 2 * bj + 1)] = b;
  m[static_cast<std::size_t>(4 * (2 * bi + 1) + 2 * bj)] = c;
  m[static_cast<std::size_t>(4 * (2 * bi + 1) + 2 * bj + 1)] = d;
}

}  // namespace

double planck(double frequency_hz, double temperature_k) {
  return 1.0 / std::expm1(kPlanck * frequency_hz / (kBoltzmann * temperature_k));
}

double g_bits(double nu) {
  const double m = 0.5 * (nu - 1.0);
  if (m <= 0.0) return 0.0;
  return ((m + 1.0) * std::log1p(m) - m * std::log(m)) / std::numbers::ln2;
}

std::pair<double, double> two_mode_nu(const Mat4& v) {
  WideMat4 w;
  for (std::size_t i = 0; i < 16; ++i) w[i] = 4.0L * v[i];
  const Wide det_a = det2(at(w, 0, 0), at(w, 0, 1), at(w, 1, 0), at(w, 1, 1));
  const Wide det_b = det2(at(w, 2, 2), at(w, 2, 3), at(w, 3, 2), at(w, 3, 3));
  const Wide det_c = det2(at(w, 0, 2), at(w, 0, 3), at(w, 1, 2), at(w, 1, 3));
  const Wide delta = det_a + det_b + 2.0L * det_c;
  const Wide det_w = det4(w);
  const Wide root = std::sqrt(std::max(0.0L, delta * delta - 4.0L * det_w));
  // nu_- from the product nu_- nu_+ = sqrt(det W); the difference form cancels.
  const Wide nu_plus = std::sqrt(0.5L * (delta + root));
  return {static_cast<double>(std::sqrt(det_w) / nu_plus), static_cast<double>(nu_plus)};
}

double two_mode_entropy(const Mat4& v) {
  const auto [lo, hi] = two_mode_nu(v);
  return g_bits(lo) + g_bits(hi);
}

ClosedFormRound closed_form_round(double tau, double nbar, double squeezing_db, double n_g, bool q_basis) {
  const double s2 = 0.25 * std::pow(10.0, -squeezing_db / 10.0);
  const double as2 = 0.25 * std::pow(10.0, squeezing_db / 10.0);
  const double loss = 1.0 - tau;
  const double n_eve = loss > 0.0 ? 2.0 * nbar / loss : 0.0;
  const double v = 0.25 + 0.5 * n_eve;
  const double c = std::sqrt(v * v - 1.0 / 16.0);
  const double rt = std::sqrt(tau);
  const double rl = std::sqrt(loss);

  // Alice's conditional covariance (diagonal) and the thermal ensemble average.
  const double aq = q_basis ? s2 : as2;
  const double ap = q_basis ? as2 : s2;
  const int k = q_basis ? 0 : 1;

  auto eve = [&](double a_q, double a_p) {
    Mat4 m{};
    set_block(m, 0, 0, loss * a_q + tau * v, 0.0, 0.0, loss * a_p + tau * v);
    set_block(m, 1, 1, v, 0.0, 0.0, v);
    set_block(m, 0, 1, rt * c, 0.0, 0.0, -rt * c);
    set_block(m, 1, 0, rt * c, 0.0, 0.0, -rt * c);
    return m;
  };

  ClosedFormRound r;
  r.eve_conditional = eve(aq, ap);
  r.eve_ensemble = eve(as2, as2);
  const double a_cond = k == 0 ? aq : ap;
  r.sigma_b_given_a2 = tau * a_cond + loss * v + n_g;
  r.sigma_b2 = tau * as2 + loss * v + n_g;

  // Cross-covariance of Bob's encoded quadrature with (E1q, E1p, E2q, E2p).
  std::array<double, 4> cross{};
  cross[static_cast<std::size_t>(k)] = -rt * rl * (as2 - v);
  cross[static_cast<std::size_t>(2 + k)] = rl * c * (k == 0 ? 1.0 : -1.0);
  r.eve_given_bob = r.eve_ensemble;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      r.eve_given_bob[static_cast<std::size_t>(4 * i + j)] -=
          cross[static_cast<std::size_t>(i)] * cross[static_cast<std::size_t>(j)] / r.sigma_b2;
    }
  }
  return r;
}

double mutual_information(const ClosedFormRound& r) { return 0.5 * std::log2(r.sigma_b2 / r.sigma_b_given_a2); }

double holevo_dr(const ClosedFormRound& r) {
  return two_mode_entropy(r.eve_ensemble) - two_mode_entropy(r.eve_conditional);
}

double holevo_rr(const ClosedFormRound& r) {
  return two_mode_entropy(r.eve_ensemble) - two_mode_entropy(r.eve_given_bob);
}

std::pair<double, double> p838_horizontal(double frequency_ghz) {
  struct Term {
    double a, b, c;
  };
  constexpr Term k_terms[] = {{-5.33980, -0.10008, 1.13098},
                              {-0.35351, 1.26970, 0.45400},
                              {-0.23789, 0.86036, 0.15354},
                              {-0.94158, 0.64552, 0.16817}};
  constexpr Term alpha_terms[] = {{-0.14318, 1.82442, -0.55187},
                                  {0.29591, 0.77564, 0.19822},
                                  {0.32177, 0.63773, 0.13164},
                                  {-5.37610, -0.96230, 1.47828},
                                  {16.1721, -3.29980, 3.43990}};
  const double x = std::log10(frequency_ghz);
  auto gauss_sum = [x](const auto& terms) {
    double s = 0.0;
    for (const auto& t : terms) s += t.a * std::exp(-std::pow((x - t.b) / t.c, 2));
    return s;
  };
  const double log_k = gauss_sum(k_terms) - 0.18961 * x + 0.71147;
  const double alpha = gauss_sum(alpha_terms) + 0.67849 * x - 1.95537;
  return {std::pow(10.0, log_k), alpha};
}

double p840_liquid_water(double f, double temperature_k) {
  const double theta = 300.0 / temperature_k;
  const double e0 = 77.66 + 103.3 * (theta - 1.0);
  const double e1 = 0.0671 * e0;
  const double e2 = 3.52;
  const double fp = 20.20 - 146.0 * (theta - 1.0) + 316.0 * (theta - 1.0) * (theta - 1.0);
  const double fs = 39.8 * fp;
  const double epp = f * (e0 - e1) / (fp * (1.0 + (f / fp) * (f / fp))) + f * (e1 - e2) / (fs * (1.0 + (f / fs) * (f / fs)));
  const double ep = (e0 - e1) / (1.0 + (f / fp) * (f / fp)) + (e1 - e2) / (1.0 + (f / fs) * (f / fs)) + e2;
  const double eta = (2.0 + ep) / epp;
  return 0.819 * f / (epp * (1.0 + eta * eta));
}

}  // namespace cvqkd::oracle
