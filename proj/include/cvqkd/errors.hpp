#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Bad argument value or shape.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A covariance matrix violates the uncertainty principle (symplectic eigenvalue < 1).
class PhysicalityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Homodyne conditioning on a quadrature with (numerically) zero variance.
class DegenerateMeasurement : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Frequency or wavelength outside the range an attenuation model covers.
class OutOfModelError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Channel parameters that cannot describe a thermal-loss channel (e.g. noise without loss).
class InconsistentChannel : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Scenario file content that fails schema or invariant checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable input or unwritable output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvqkd
