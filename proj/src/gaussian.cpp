#include "cvqkd/gaussian.hpp"

#include "cvqkd/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

namespace cvqkd::gaussian {

namespace {

void check_mode(int mode, int n_modes, const char* what) {
  if (mode < 0 || mode >= n_modes) {
    throw InvalidArgument(std::string(what) + ": mode index " + std::to_string(mode) +
                          " out of range for " + std::to_string(n_modes) + " modes");
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0 || mean_.size() % 2 != 0) {
    throw InvalidArgument("GaussianState: mean length must be a positive even number");
  }
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw InvalidArgument("GaussianState: covariance shape does not match mean length");
  }
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("GaussianState: covariance is not symmetric");
  }
}

bool GaussianState::is_physical() const {
  try {
    symplectic_eigenvalues(cov_);
    return true;
  } catch (const PhysicalityError&) {
    return false;
  }
}

GaussianState GaussianState::with_added_covariance(const Eigen::MatrixXd& extra) const {
  return GaussianState(mean_, cov_ + extra);
}

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int i = 0; i < n_modes; ++i) {
    omega(2 * i, 2 * i + 1) = 1.0;
    omega(2 * i + 1, 2 * i) = -1.0;
  }
  return omega;
}

Transform::Transform(Eigen::MatrixXd matrix, Eigen::VectorXd displacement)
    : matrix_(std::move(matrix)), displacement_(std::move(displacement)) {
  const auto dim = displacement_.size();
  if (dim == 0 || dim % 2 != 0 || matrix_.rows() != dim || matrix_.cols() != dim) {
    throw InvalidArgument("Transform: matrix must be 2N x 2N matching the displacement");
  }
  const Eigen::MatrixXd omega = symplectic_form(static_cast<int>(dim / 2));
  const double err = (matrix_ * omega * matrix_.transpose() - omega).cwiseAbs().maxCoeff();
  if (err > kSymplecticTolerance) {
    throw InvalidArgument("Transform: matrix is not symplectic (deviation " + std::to_string(err) + ")");
  }
}

Transform::Transform(Eigen::MatrixXd matrix)
    : Transform(matrix, Eigen::VectorXd::Zero(matrix.rows())) {}

Transform Transform::identity(int n_modes) {
  if (n_modes < 1) throw InvalidArgument("Transform::identity: n_modes must be >= 1");
  return Transform(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

Transform compose(const Transform& then, const Transform& first) {
  if (then.n_modes() != first.n_modes()) throw InvalidArgument("compose: mode count mismatch");
  return Transform(then.matrix() * first.matrix(),
                   then.matrix() * first.displacement() + then.displacement());
}

GaussianState vacuum_state(int n_modes) {
  if (n_modes < 1) throw InvalidArgument("vacuum_state: n_modes must be >= 1");
  return GaussianState(Eigen::VectorXd::Zero(2 * n_modes),
                       kVacuumVariance * Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

GaussianState thermal_state(double n_occ) {
  if (!(n_occ >= 0.0)) throw InvalidArgument("thermal_state: n_occ must be >= 0");
  return GaussianState(Eigen::VectorXd::Zero(2),
                       (1.0 + 2.0 * n_occ) * kVacuumVariance * Eigen::MatrixXd::Identity(2, 2));
}

GaussianState two_mode_squeezed_state(double n_occ) {
  if (!(n_occ >= 0.0)) throw InvalidArgument("two_mode_squeezed_state: n_occ must be >= 0");
  const double v = (1.0 + 2.0 * n_occ) * kVacuumVariance;
  // sqrt(v^2 - 1/16) without cancellation.
  const double c = 0.5 * std::sqrt(n_occ * (n_occ + 1.0));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  cov.diagonal().setConstant(v);
  cov(0, 2) = cov(2, 0) = c;
  cov(1, 3) = cov(3, 1) = -c;
  return GaussianState(Eigen::VectorXd::Zero(4), cov);
}

GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size();
  const auto nb = b.mean().size();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(mean, cov);
}

Transform beam_splitter_transform(double tau, int mode_a, int mode_b, int n_modes) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("beam_splitter_transform: tau must lie in [0, 1]");
  return beam_splitter_transform(tau, 1.0 - tau, mode_a, mode_b, n_modes);
}

Transform beam_splitter_transform(double tau, double one_minus_tau, int mode_a, int mode_b, int n_modes) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("beam_splitter_transform: tau must lie in [0, 1]");
  if (!(one_minus_tau >= 0.0) || std::abs(tau + one_minus_tau - 1.0) > 1e-12) {
    throw InvalidArgument("beam_splitter_transform: tau and 1 - tau are inconsistent");
  }
  check_mode(mode_a, n_modes, "beam_splitter_transform");
  check_mode(mode_b, n_modes, "beam_splitter_transform");
  if (mode_a == mode_b) throw InvalidArgument("beam_splitter_transform: modes must differ");
  const double t = std::sqrt(tau);
  const double s = std::sqrt(one_minus_tau);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  m.block<2, 2>(2 * mode_a, 2 * mode_a) = t * id;
  m.block<2, 2>(2 * mode_a, 2 * mode_b) = s * id;
  m.block<2, 2>(2 * mode_b, 2 * mode_a) = -s * id;
  m.block<2, 2>(2 * mode_b, 2 * mode_b) = t * id;
  return Transform(m);
}

Transform squeeze_rotate_transform(double r, double phi, int target_mode, int n_modes) {
  check_mode(target_mode, n_modes, "squeeze_rotate_transform");
  const double half = 0.5 * phi;
  Eigen::Matrix2d rot;
  rot << std::cos(half), std::sin(half), -std::sin(half), std::cos(half);
  const Eigen::Matrix2d sq = Eigen::Vector2d(std::exp(-r), std::exp(r)).asDiagonal();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  m.block<2, 2>(2 * target_mode, 2 * target_mode) = rot * sq;
  return Transform(m);
}

Transform displacement_transform(int mode, double dq, double dp, int n_modes) {
  check_mode(mode, n_modes, "displacement_transform");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * n_modes);
  d(2 * mode) = dq;
  d(2 * mode + 1) = dp;
  return Transform(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes), d);
}

GaussianState apply(const GaussianState& state, const Transform& t) {
  if (state.n_modes() != t.n_modes()) {
    throw InvalidArgument("apply: transform acts on " + std::to_string(t.n_modes()) +
                          " modes, state has " + std::to_string(state.n_modes()));
  }
  return GaussianState(t.matrix() * state.mean() + t.displacement(),
                       symmetrized(t.matrix() * state.cov() * t.matrix().transpose()));
}

GaussianState reduce(const GaussianState& state, std::span<const int> keep) {
  if (keep.empty()) throw InvalidArgument("reduce: keep list is empty");
  const int n = state.n_modes();
  std::vector<int> seen;
  for (int mode : keep) {
    check_mode(mode, n, "reduce");
    if (std::find(seen.begin(), seen.end(), mode) != seen.end()) {
      throw InvalidArgument("reduce: duplicate mode index " + std::to_string(mode));
    }
    seen.push_back(mode);
  }
  std::vector<Eigen::Index> idx;
  for (int mode : keep) {
    idx.push_back(2 * mode);
    idx.push_back(2 * mode + 1);
  }
  return GaussianState(state.mean()(idx), state.cov()(idx, idx));
}

GaussianState reduce(const GaussianState& state, std::initializer_list<int> keep) {
  return reduce(state, std::span<const int>(keep.begin(), keep.size()));
}

std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  const auto dim = cov.rows();
  if (dim == 0 || dim % 2 != 0 || cov.cols() != dim) {
    throw InvalidArgument("symplectic_eigenvalues: covariance must be 2N x 2N");
  }
  const int n = static_cast<int>(dim / 2);
  const Eigen::MatrixXd scaled = 4.0 * cov;
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  if (llt.info() != Eigen::Success) {
    throw PhysicalityError("symplectic_eigenvalues: covariance is not positive definite");
  }
  // i * L^T Omega L is Hermitian and similar to i * Omega * (4 cov).
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd a = l.transpose() * symplectic_form(n) * l;
  const Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * a.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw PhysicalityError("symplectic_eigenvalues: eigensolver failed");
  }
  // Rounding in the Cholesky route grows with the condition number of 4V,
  // which reaches ~1e7 for strongly squeezed ancillas.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spread(scaled, Eigen::EigenvaluesOnly);
  const double condition = spread.eigenvalues().maxCoeff() / spread.eigenvalues().minCoeff();
  const double tolerance = std::max(kPhysicalityTolerance, 64.0 * std::numeric_limits<double>::epsilon() * condition);
  // Spectrum is {-nu_k, +nu_k}; the positive half is the upper n entries.
  const Eigen::VectorXd ev = solver.eigenvalues();
  std::vector<double> nu(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double v = ev(n + k);
    if (v < 1.0 - tolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", v);
      throw PhysicalityError(std::string("symplectic_eigenvalues: eigenvalue ") + buf + " < 1");
    }
    nu[static_cast<std::size_t>(k)] = std::max(v, 1.0);
  }
  std::sort(nu.begin(), nu.end());
  return nu;
}

double entropy_of_occupation(double m) {
  if (m <= 0.0) return 0.0;
  // (1+m) log(1+m) - m log(m), with log1p for small m.
  const double nats = (1.0 + m) * std::log1p(m) - m * std::log(m);
  return nats / std::numbers::ln2;
}

double von_neumann_entropy(const Eigen::MatrixXd& cov) {
  long double total = 0.0L;
  for (double nu : symplectic_eigenvalues(cov)) {
    total += entropy_of_occupation(0.5 * (nu - 1.0));
  }
  return static_cast<double>(total);
}

GaussianState homodyne_condition(const GaussianState& joint, int measured_mode, Quadrature quad) {
  const int i = 2 * measured_mode + quadrature_offset(quad);
  check_mode(measured_mode, joint.n_modes(), "homodyne_condition");
  return homodyne_condition(joint, measured_mode, quad, joint.mean()(i));
}

GaussianState homodyne_condition(const GaussianState& joint, int measured_mode, Quadrature quad,
                                 double outcome) {
  const int n = joint.n_modes();
  check_mode(measured_mode, n, "homodyne_condition");
  if (n < 2) throw InvalidArgument("homodyne_condition: need at least one unmeasured mode");
  const int i = 2 * measured_mode + quadrature_offset(quad);
  const double var = joint.cov()(i, i);
  if (!(var > kDegenerateVariance)) {
    throw DegenerateMeasurement("homodyne_condition: measured quadrature variance " +
                                std::to_string(var) + " is not positive");
  }
  std::vector<Eigen::Index> rest;
  for (int mode = 0; mode < n; ++mode) {
    if (mode == measured_mode) continue;
    rest.push_back(2 * mode);
    rest.push_back(2 * mode + 1);
  }
  const Eigen::VectorXd cross = joint.cov()(rest, i);
  const Eigen::MatrixXd cov = joint.cov()(rest, rest) - cross * cross.transpose() / var;
  const Eigen::VectorXd mean = joint.mean()(rest) + cross * ((outcome - joint.mean()(i)) / var);
  return GaussianState(mean, symmetrized(cov));
}

}  // namespace cvqkd::gaussian
