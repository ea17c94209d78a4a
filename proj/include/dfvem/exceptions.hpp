#pragma once

#include <stdexcept>
#include <string>

namespace dfvem {

/// Invalid user input or configuration (bad mesh parameters, out-of-range degree, ...).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A mesh that violates a structural invariant.
class MeshError : public std::runtime_error {
public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular local systems, failed factorization, non-converged eigen iteration.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dfvem
