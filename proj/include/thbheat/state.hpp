#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "thbheat/errors.hpp"
#include "thbheat/hierarchy/space.hpp"

namespace thbheat {

/// Temperature coefficients over the dof order of one space generation.
struct StateVector {
  Eigen::VectorXd coeffs;
  double t = 0.0;
  std::uint64_t generation = 0;

  static StateVector constant(const HierarchicalSpace &space, double value, double t = 0.0) {
    return {Eigen::VectorXd::Constant(space.num_dofs(), value), t, space.generation()};
  }
};

inline void require_generation(std::uint64_t have, std::uint64_t want, const char *what) {
  if (have != want) {
    throw StalenessError(std::string(what) + ": generation " + std::to_string(have) + " used against generation " +
                         std::to_string(want));
  }
}

inline void require_generation(const HierarchicalSpace &space, const StateVector &s, const char *what) {
  require_generation(s.generation, space.generation(), what);
  if (s.coeffs.size() != space.num_dofs()) throw StalenessError(std::string(what) + ": coefficient count mismatch");
}

} // namespace thbheat
