#pragma once

#include <stdexcept>
#include <string>

namespace ifk {

// Every failure raised by the library derives from ifk::error so callers
// (the CLI in particular) can tell numerical failures from config errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class dimension_mismatch : public error {
 public:
  using error::error;
};

class lattice_mismatch : public error {
 public:
  using error::error;
};

class size_cap_exceeded : public error {
 public:
  using error::error;
};

// A payload failed its sampled limit certificate.
class certificate_error : public error {
 public:
  using error::error;
};

class inconsistent_asymptotics : public error {
 public:
  using error::error;
};

// Determinant of a symbol came too close to zero: the bulk gap is closed.
class not_invertible : public error {
 public:
  using error::error;
};

// A spectral point lies inside the hull, there is no gap around it.
class no_gap : public error {
 public:
  using error::error;
};

class solver_error : public error {
 public:
  using error::error;
};

class boundary_reached : public error {
 public:
  using error::error;
};

class hypothesis_violation : public error {
 public:
  using error::error;
};

class unstable_result : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

}  // namespace ifk
