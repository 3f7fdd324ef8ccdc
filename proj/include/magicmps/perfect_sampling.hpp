#pragma once
// Exact sampling of Pauli strings from the distribution
//   Xi(P) = |<psi| T_P |psi>|^2 / d^N
// of a normalized right-canonical MPS, one site at a time via conditional
// marginals, and stabilizer-entropy estimators built on those samples.

#include <random>

#include "magicmps/estimate.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"

namespace magicmps {

struct PauliSample {
  PauliString string;
  double log_prob = 0.0;   // log Xi(string)
  LogScalar amplitude;     // <psi| T_string |psi>
};

// Draws one string.  The state must be normalized with canonical center at
// site 0 (every later tensor right-orthonormal); use canonicalize(state, 0)
// first.  Cost is O(N d^2 chi^3) per draw.
PauliSample sample_pauli_string(const MatrixProductState& state,
                                const QuditAlgebra& alg,
                                std::mt19937_64& gen);

struct SamplingOptions {
  long num_samples = 10000;
  unsigned long seed = 1;
  int threads = 1;
};

// Stabilizer Renyi entropy M_n from independent draws.  Each sample index
// gets its own deterministically derived generator, so results do not depend
// on the thread count.  For n = 1 the estimator is a plain sample mean of
// -log Xi - N log d; otherwise a log of the sample mean of Xi^{n-1} with a
// delta-method error bar.
Estimate estimate_sre_sampling(const MatrixProductState& state,
                               const QuditAlgebra& alg, double n,
                               const SamplingOptions& opts = {});

}  // namespace magicmps
