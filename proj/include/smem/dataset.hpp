#pragma once

#include <cstdint>
#include <string>

#include "smem/linalg.hpp"

namespace smem {

/// One benchmark instance.  Responses are successes out of `m` trials for
/// classification data and real values for regression data.
struct Dataset {
  std::string name;
  DenseMatrix x;
  Vector y;
  Vector m;
  Vector beta_true;
  std::uint64_t seed = 0;
  double target_cond = 1.0;

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }

  // Throws InvalidShape when the pieces disagree in size.
  void validate() const;
};

}  // namespace smem
