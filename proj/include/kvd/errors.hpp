#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kvd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// material_model
class DegenerateLaw : public Error { using Error::Error; };
class NotPositiveDefinite : public Error { using Error::Error; };
class NoWitnessFound : public Error {
 public:
  NoWitnessFound(const std::string& what, double margin) : Error(what), margin(margin) {}
  double margin;  ///< max over the alpha grid of gamma'^2/gamma - gamma''/2 (<= 0)
};

// fem_core
class BadSpec : public Error { using Error::Error; };
class FileFormat : public Error { using Error::Error; };
class InconsistentConstraint : public Error { using Error::Error; };

// incremental_potential
class Infeasible : public Error { using Error::Error; };

// step_solver
class LinearSolveFailure : public Error { using Error::Error; };
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int step = -1) : Error(what), step(step) {}
  int step;
};
class MaxSweeps : public NoConvergence { using NoConvergence::NoConvergence; };

// scenarios_cli
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line(line), column(column) {}
  int line;
  int column;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations(std::move(violations)) {}
  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "validation failed";
    for (const auto& x : v) s += "\n  - " + x;
    return s;
  }
};

class UnknownScenario : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace kvd
