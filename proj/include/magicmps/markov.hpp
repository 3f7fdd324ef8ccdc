#pragma once
// Metropolis random walks over Pauli strings weighted by powers of |<T_P>|,
// with U(1)-compatible two-site proposals and cached left/right MPS
// environments so an update touching sites [i, j] costs O((j - i) chi^3) plus
// cache movement.  Built on top: estimators for the full-state stabilizer
// Renyi entropy, the Renyi-2 mutual information, the W functional, and the
// long-range magic of two disjoint blocks.

#include <random>
#include <utility>
#include <vector>

#include "magicmps/estimate.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"

namespace magicmps {

struct MarkovConfig {
  // Chain weight is |<T_P>|^weight_exponent.  The mutual-information, W and
  // SRE estimators fix this themselves; it is free for bare chains.
  double weight_exponent = 4.0;
  double move_mix = 0.5;  // probability of a single-site Z-type move
  // Two-site X^dag_i X_j proposals conserve the total shift charge mod d,
  // matching a U(1)-symmetric state.  Disable for generic states to make the
  // walk ergodic over all strings (single-site X moves instead).
  bool u1_moves = true;
  long burn_in = -1;    // discarded steps; -1 means 10 * N
  long thinning = -1;   // steps between records; -1 means N, 0 means 1
  long n_samples = 10000;
  unsigned long seed = 1;
  long recompute_every = 1000;  // from-scratch weight check cadence
};

struct ChainState {
  std::vector<int> support;  // sorted sites the string may act on
  PauliString string;        // one exponent pair per support entry
  double weight = 1.0;       // |<T_P>|^weight_exponent
  double log_magnitude = 0.0;  // log |<T_P>|
};

// Pauli-string expectations <psi| T_string (x) I |psi> of a fixed normalized
// MPS, with lazily maintained left/right environment stacks keyed to the
// current string.  probe() prices a candidate change without committing;
// commit() adopts it and invalidates only the stale cache range.
class PauliExpectationEvaluator {
 public:
  PauliExpectationEvaluator(const MatrixProductState& state,
                            const QuditAlgebra& alg);

  int num_sites() const { return n_; }
  int local_dim() const { return d_; }

  // Install the chain's string (identity on unlisted sites) and value it.
  void set_string(const ChainState& chain);
  Complex value() const { return value_; }

  // Expectation if the listed sites carried the given exponents instead.
  // Changes must be sorted by site and nonempty; caches are reused but not
  // modified beyond extending validity for the *current* string.
  Complex probe(
      const std::vector<std::pair<int, std::pair<int, int>>>& changes);
  // Adopt a probed change; `probed` becomes the current value.
  void commit(
      const std::vector<std::pair<int, std::pair<int, int>>>& changes,
      Complex probed);

  // Expectation of the current string restricted to `sites` (sorted subset;
  // identity elsewhere).  Used for the P_A / P_B pieces of the ratio
  // estimators.
  Complex restricted(const std::vector<int>& sites) const;

  // Full-length recontraction of the current string, bypassing the caches.
  Complex recompute() const;
  // recompute(), adopted as the current value; returns the drift |old - new|.
  double resync();

 private:
  Matrix transfer_left(const Matrix& env, int site, int label) const;
  Matrix transfer_right(const Matrix& env, int site, int label) const;
  void ensure_left(int k);
  void ensure_right(int k);

  int n_ = 0;
  int d_ = 0;
  MatrixProductState work_;          // canonical center 0, norm folded
  std::vector<Matrix> pauli_table_;  // label a*d + a' -> site operator
  std::vector<int> ops_;             // current per-site label, 0 = identity
  std::vector<Matrix> l_env_, r_env_, l_id_;
  int lv_ = 0;  // l_env_[0..lv_] match the current string
  int rv_ = 0;  // r_env_[rv_..n] match the current string
  Complex value_{1.0, 0.0};
};

// Candidate string: with probability move_mix multiply by Z_i or Z_i^dag
// (equal odds, uniform site); otherwise by X_i^dag X_j over a uniform ordered
// pair (u1_moves) or by X_i / X_i^dag on a uniform site.  The kernel is
// symmetric.  A single-site support falls back to Z moves alone.
PauliString propose_move(const ChainState& chain, const MarkovConfig& cfg,
                         int local_dim, std::mt19937_64& gen);

// One Metropolis step with acceptance min(1, w'/w); returns whether the
// proposal was accepted.  Rejections leave chain and evaluator untouched.
bool metropolis_step(ChainState& chain, PauliExpectationEvaluator& eval,
                     const MarkovConfig& cfg, std::mt19937_64& gen);

// Optional per-record dump of a chain run.
struct MarkovRecord {
  long step = 0;          // global step index when recorded
  double log_weight = 0;  // log of the chain weight
  double observable = 0;  // the estimator's per-sample value
};

// M_n from a Xi-weighted chain over the full chain: the sample mean of
// |<T_P>|^{2(n-1)} under Xi, log-transformed (n = 1: mean of -2 log|<T_P>|).
// Error bars carry the integrated autocorrelation time.
Estimate estimate_sre_markov(const MatrixProductState& state,
                             const QuditAlgebra& alg, double n,
                             MarkovConfig cfg = {},
                             std::vector<MarkovRecord>* trace = nullptr);

// W(rho_AB) = -log < (|<T_A>| |<T_B>| / |<T_AB>|)^4 > under the
// |<T_AB>|^4-weighted chain on the A u B support.
Estimate estimate_w(const MatrixProductState& state, const QuditAlgebra& alg,
                    const Partition& part_a, const Partition& part_b,
                    MarkovConfig cfg = {},
                    std::vector<MarkovRecord>* trace = nullptr);

// Renyi-2 mutual information I2 = -log < (|<T_A>| |<T_B>| / |<T_AB>|)^2 >
// under the |<T_AB>|^2-weighted chain.
Estimate estimate_mutual_info2(const MatrixProductState& state,
                               const QuditAlgebra& alg,
                               const Partition& part_a,
                               const Partition& part_b, MarkovConfig cfg = {},
                               std::vector<MarkovRecord>* trace = nullptr);

// L = I2 - W from two independent chains (seeds derived from cfg.seed);
// errors added in quadrature.  The two autocorrelation times are unrelated,
// so none is reported.
Estimate estimate_long_range_magic(const MatrixProductState& state,
                                   const QuditAlgebra& alg,
                                   const Partition& part_a,
                                   const Partition& part_b,
                                   MarkovConfig cfg = {});

}  // namespace magicmps
