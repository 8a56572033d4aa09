#pragma once

// Closed-form reference values computed without the covariance-matrix engine.
// Used by the selftest command and the test suite to cross-check it.

#include <array>
#include <utility>

namespace cvqkd::oracle {

// Row-major 4x4 covariance of two modes (q1, p1, q2, p2), vacuum = 1/4.
using Mat4 = std::array<double, 16>;

double planck(double frequency_hz, double temperature_k);

// Entropy in bits of a mode with symplectic eigenvalue nu (vacuum nu = 1).
double g_bits(double nu);

// Symplectic eigenvalues of 4V from the invariants det A + det B + 2 det C and det(4V).
std::pair<double, double> two_mode_nu(const Mat4& v);
double two_mode_entropy(const Mat4& v);

struct ClosedFormRound {
  double sigma_b2 = 0.0;          // ensemble, encoded quadrature, detection noise included
  double sigma_b_given_a2 = 0.0;  // conditional
  Mat4 eve_conditional{};
  Mat4 eve_ensemble{};
  Mat4 eve_given_bob{};
};

// Entangling-cloner round from the beam-splitter closed forms:
// V_B = tau V_A + (1 - tau) v I, V_E1 = (1 - tau) V_A + tau v I, V_E2 = v I,
// C_BE1 = -sqrt(tau (1 - tau)) (V_A - v I), C_BE2 = sqrt(1 - tau) c Z, C_E1E2 = sqrt(tau) c Z,
// with v = 1/4 + n_Eve/2 and n_Eve = 2 nbar / (1 - tau). Detection adds n_g to Bob.
ClosedFormRound closed_form_round(double tau, double nbar, double squeezing_db, double n_g, bool q_basis = true);

double mutual_information(const ClosedFormRound& r);
double holevo_dr(const ClosedFormRound& r);
double holevo_rr(const ClosedFormRound& r);

// ITU-R P.838-3 horizontal coefficients evaluated from the fitted Gaussian sums.
std::pair<double, double> p838_horizontal(double frequency_ghz);
// ITU-R P.840 liquid-water specific attenuation coefficient, (dB/km)/(g/m^3).
double p840_liquid_water(double frequency_ghz, double temperature_k);

}  // namespace cvqkd::oracle
