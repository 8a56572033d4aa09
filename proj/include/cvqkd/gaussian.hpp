#pragma once

// Gaussian-state algebra in the quadrature convention where the vacuum has
// variance 1/4. Quadratures are ordered (q1, p1, ..., qN, pN).

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace cvqkd::gaussian {

inline constexpr double kVacuumVariance = 0.25;
inline constexpr double kPhysicalityTolerance = 1e-9;
inline constexpr double kSymplecticTolerance = 1e-10;
inline constexpr double kDegenerateVariance = 1e-15;

enum class Quadrature { q, p };

inline int quadrature_offset(Quadrature quad) { return quad == Quadrature::q ? 0 : 1; }

class GaussianState {
 public:
  // Throws InvalidArgument on shape mismatch or an asymmetric covariance.
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int n_modes() const { return static_cast<int>(mean_.size() / 2); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  // 2x2 covariance block of one mode.
  Eigen::Matrix2d mode_cov(int mode) const { return cov_.block<2, 2>(2 * mode, 2 * mode); }

  // Variance of a single quadrature of one mode.
  double variance(int mode, Quadrature quad) const {
    const int i = 2 * mode + quadrature_offset(quad);
    return cov_(i, i);
  }

  bool is_physical() const;

  // Same means, covariance + extra. The result must stay symmetric.
  GaussianState with_added_covariance(const Eigen::MatrixXd& extra) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

// Block-diagonal symplectic form, blocks [[0, 1], [-1, 0]].
Eigen::MatrixXd symplectic_form(int n_modes);

class Transform {
 public:
  // Throws InvalidArgument when matrix * Omega * matrix^T deviates from Omega by more
  // than kSymplecticTolerance, or shapes disagree.
  Transform(Eigen::MatrixXd matrix, Eigen::VectorXd displacement);
  explicit Transform(Eigen::MatrixXd matrix);

  static Transform identity(int n_modes);

  int n_modes() const { return static_cast<int>(displacement_.size() / 2); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::VectorXd& displacement() const { return displacement_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd displacement_;
};

// `then` applied after `first`.
Transform compose(const Transform& then, const Transform& first);

GaussianState vacuum_state(int n_modes);

// Pure TMS vacuum; each marginal is thermal with n_occ mean photons.
GaussianState two_mode_squeezed_state(double n_occ);

// Thermal state with n_occ mean photons, covariance (1 + 2 n_occ)/4 * I.
GaussianState thermal_state(double n_occ);

// Modes of `a` first, then modes of `b`.
GaussianState direct_sum(const GaussianState& a, const GaussianState& b);

// Acts as [[sqrt(t) I, sqrt(1-t) I], [-sqrt(1-t) I, sqrt(t) I]] on modes (a, b).
Transform beam_splitter_transform(double tau, int mode_a, int mode_b, int n_modes);
// Same, with 1 - tau supplied separately (tau + one_minus_tau must equal 1 within 1e-12).
Transform beam_splitter_transform(double tau, double one_minus_tau, int mode_a, int mode_b, int n_modes);

// Target block R(phi/2) * diag(exp(-r), exp(r)), R(x) = [[cos x, sin x], [-sin x, cos x]].
// r = 0 is the identity; negative r undoes a squeeze (allowed for inverses).
Transform squeeze_rotate_transform(double r, double phi, int target_mode, int n_modes);

Transform displacement_transform(int mode, double dq, double dp, int n_modes);

GaussianState apply(const GaussianState& state, const Transform& t);

// Marginal over `keep`, in the given order.
GaussianState reduce(const GaussianState& state, std::span<const int> keep);
GaussianState reduce(const GaussianState& state, std::initializer_list<int> keep);

// Symplectic eigenvalues of 4*cov in ascending order, one per mode. Values within
// max(kPhysicalityTolerance, 64 eps cond(4 cov)) below 1 are clamped to 1; anything
// lower throws PhysicalityError.
std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov);

// g(m) = (m+1) log2(m+1) - m log2(m), g(0) = 0.
double entropy_of_occupation(double m);

// Von Neumann entropy in bits.
double von_neumann_entropy(const Eigen::MatrixXd& cov);
inline double von_neumann_entropy(const GaussianState& state) { return von_neumann_entropy(state.cov()); }

// State of the other modes after a homodyne measurement of `quad` on `measured_mode`.
// The covariance does not depend on the outcome; means are shifted by the Gaussian
// conditional rule for the given outcome (default: the measured mean, i.e. no shift).
GaussianState homodyne_condition(const GaussianState& joint, int measured_mode, Quadrature quad);
GaussianState homodyne_condition(const GaussianState& joint, int measured_mode, Quadrature quad,
                                 double outcome);

}  // namespace cvqkd::gaussian
