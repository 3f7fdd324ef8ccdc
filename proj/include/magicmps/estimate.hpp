#pragma once
// Common result type for stochastic estimators.

#include <optional>

namespace magicmps {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  // Integrated autocorrelation time of the underlying chain, when the
  // estimator is built on correlated samples.
  std::optional<double> tau;
  // Metropolis acceptance fraction, when applicable.
  std::optional<double> acceptance_rate;
};

}  // namespace magicmps
