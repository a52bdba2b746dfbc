#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace innoprod {

// Base for every error raised by the library. Callers that only need a message
// can catch this; the subclasses let the CLI map failures to stage messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unusable column mapping / config key.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// One or more records violate a field-level rule. `offenders` holds
// "firm_id/year" labels so callers can print them.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> offenders = {});
  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

// Panel-level constraint violated (duplicate keys, unsorted waves, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class CollinearityError : public Error {
 public:
  CollinearityError(const std::string& what, std::vector<std::string> dropped);
  const std::vector<std::string>& dropped_terms() const noexcept { return dropped_; }

 private:
  std::vector<std::string> dropped_;
};

class IdentificationError : public Error {
 public:
  using Error::Error;
};

// Optimizer gave up; carries the best objective seen and iterations used.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double objective, int iterations);
  double objective() const noexcept { return objective_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double objective_;
  int iterations_;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

// Statistical test cannot be computed (degenerate variance, too few points).
class UndefinedTestError : public Error {
 public:
  using Error::Error;
};

class NoOverlapError : public Error {
 public:
  using Error::Error;
};

class IncompleteInputsError : public Error {
 public:
  using Error::Error;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace innoprod
