#pragma once

#include <stdexcept>
#include <string>

namespace thbheat {

/// Argument outside the mathematical domain of an operation (e.g. x outside [0,1]).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Inconsistent structural input: non-nested knot vectors, level mismatch.
class StructuralError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Refinement requested beyond the deepest level of the hierarchy.
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

class PreconditionError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// A state vector or cached data was used against a space generation it was not built for.
class StalenessError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Linear solver failure or breakdown.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace thbheat
