#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dualframe {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Numerical thresholds. Matrices are assumed desk-scale with O(1)
// entries; `psd` and `rank_cutoff` are relative to the largest
// eigenvalue / singular value involved, `consistency` is relative to
// the value being compared. All overridable from the CLI.
struct Tolerances {
  double herm = 1e-9;
  double psd = 1e-9;
  double trace = 1e-9;
  double complete = 1e-9;
  double ortho = 1e-9;
  double span = 1e-9;
  double rank_cutoff = 1e-10;
  double dual = 1e-8;
  double consistency = 1e-7;
  double weight = 1e-12;
};

// Base class of all domain errors. `kind` is the stable machine-readable
// tag emitted in CLI error objects.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error("DimensionError", message) {}
};

class CountMismatch : public Error {
 public:
  explicit CountMismatch(const std::string& message)
      : Error("CountMismatch", message) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message)
      : Error("ParseError", message) {}
};

class SingularFrame : public Error {
 public:
  explicit SingularFrame(const std::string& message)
      : Error("SingularFrame", message) {}
};

class InvalidDual : public Error {
 public:
  explicit InvalidDual(double residual)
      : Error("InvalidDual",
              "dual frame fails the reconstruction identity, residual " +
                  std::to_string(residual)),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class NotInSpan : public Error {
 public:
  explicit NotInSpan(double residual)
      : Error("NotInSpan",
              "operator lies outside the measurement span, residual " +
                  std::to_string(residual)),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class MissingAnalysis : public Error {
 public:
  explicit MissingAnalysis(const std::string& message)
      : Error("MissingAnalysis", message) {}
};

class ZeroWeightOutcome : public Error {
 public:
  ZeroWeightOutcome(std::vector<Index> indices, const std::string& message)
      : Error("ZeroWeightOutcome", message), indices_(std::move(indices)) {}
  const std::vector<Index>& indices() const noexcept { return indices_; }

 private:
  std::vector<Index> indices_;
};

// One violated condition found while validating a measurement.
struct PovmViolation {
  std::string kind;  // NotHermitian | NotPositive | NotFinite | IncompleteSum
  Index index = -1;  // element index, -1 for whole-set conditions
  double value = 0;  // deviation or offending eigenvalue
};

// Validation is exhaustive: every violation is collected before throwing.
class PovmValidationError : public Error {
 public:
  PovmValidationError(Index dim, Index n_outcomes,
                      std::vector<PovmViolation> violations)
      : Error("InvalidPovm", describe(violations)),
        dim_(dim),
        n_outcomes_(n_outcomes),
        violations_(std::move(violations)) {}
  Index dim() const noexcept { return dim_; }
  Index n_outcomes() const noexcept { return n_outcomes_; }
  const std::vector<PovmViolation>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string describe(const std::vector<PovmViolation>& violations);
  Index dim_;
  Index n_outcomes_;
  std::vector<PovmViolation> violations_;
};

}  // namespace dualframe
