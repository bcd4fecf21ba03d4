#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vfrl {

inline constexpr const char* kToolVersion = "0.1.0";

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Thrown when a trial must be abandoned (diverged plant, repeated NaN cost).
struct TrialAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace vfrl
