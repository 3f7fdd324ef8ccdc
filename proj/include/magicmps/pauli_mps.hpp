#pragma once
// Operator-basis (Pauli-basis) matrix product representation of an MPS:
// exact chi^2 construction, partial trace by identity projection, zip-up
// compression to a target bond, and replica contractions yielding
// stabilizer Renyi entropies and deterministic long-range magic.

#include <vector>

#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"

namespace magicmps {

// MPS over per-site operator labels a*d + a'.  The component at a label
// string is exp(log_scale) times the ordered product of one matrix per
// site.  With the d^{-N/2} convention used throughout, a normalized pure
// source state satisfies sum_alpha |c_alpha|^2 = 1.
struct PauliMPS {
  int local_dim = 0;  // d of the underlying chain; labels run over d*d
  double log_scale = 0.0;
  std::vector<std::vector<Matrix>> tensors;  // [site][a*d+a']: chi_l x chi_r

  int num_sites() const { return static_cast<int>(tensors.size()); }
  int label_dim() const { return local_dim * local_dim; }
  int bond_dim(int bond) const;  // bond in [0, N]
  int max_bond() const;
  void check_consistent() const;
};

// Exact representation, bond chi^2 of the source: component at label alpha
// is Tr(rho T_alpha) / d^{N/2}.  Requires a normalized state and refuses
// tensor sets above an in-memory byte cap (use compressed_pauli_mps past
// that point).
PauliMPS to_pauli_mps(const MatrixProductState& state, const QuditAlgebra& alg);

struct CompressedPauli {
  PauliMPS pmps;
  double truncation_weight = 0.0;  // summed relative discarded squared weight
};

// Single zip-up sweep building the Pauli representation truncated to bond
// chi_p without ever materializing the chi^2 tensors.  Magnitudes are kept
// (no renormalization) so the components stay comparable across chi_p.
CompressedPauli compressed_pauli_mps(const MatrixProductState& state,
                                     const QuditAlgebra& alg, int chi_p);

// Left-to-right zip truncation of an existing Pauli-MPS to bond chi_p,
// keeping magnitudes.  A no-op (weight 0) when every bond already fits.
// For tensors produced by to_pauli_mps the label-summed right environments
// are isometric, so each local truncation discards globally minimal weight.
CompressedPauli compress_pauli(const PauliMPS& pmps, int chi_p);

// Projects each listed site onto the identity label with weight sqrt(d) and
// absorbs the resulting bond matrices into the neighbouring kept sites, so
// the output components equal Tr(rho_A T_alpha) / d^{|A|/2} for the kept
// region A.  Tracing out every site is refused.
PauliMPS trace_out(const PauliMPS& pmps, const std::vector<int>& traced_sites);

// log sum_alpha |c_alpha|^2, evaluated in log scale.  After trace_out this
// equals log Tr(rho_A^2).
double log_pauli_square_sum(const PauliMPS& pmps);

// All d^{2N} components, flat-indexed by encode_pauli_label; same size cap
// as dense_pauli_spectrum.
Vector pauli_mps_components(const PauliMPS& pmps);

enum class ReplicaMode { exact, compressed };

struct SreReplicaResult {
  double value = 0.0;
  ReplicaMode mode = ReplicaMode::exact;
  int chi_p = 0;                   // 0 in exact mode
  double truncation_weight = 0.0;  // accumulated across compressions
};

// Stabilizer Renyi entropy of integer index n >= 2 from 2n replicas of the
// Pauli-MPS (n plain, n conjugated) sharing the physical index sitewise and
// closed with the all-ones label vector.  Exact mode contracts the full
// replica boundary and is refused above a cost cap (bond 144, i.e. a
// chi = 12 source, at n = 2).  Compressed mode first truncates the
// representation to bond chi_p with compress_pauli (exact whenever chi_p
// reaches the source bond, in particular at chi_p = chi^2) and then runs
// the same replica contraction on the truncated tensors, so the boundary
// cost cap applies to chi_p instead.  With for_mixed the 2n-replica sum is
// divided by the 2-replica sum (the purity), giving the mixed-state entropy
// of a reduced input.
SreReplicaResult sre_replica(const PauliMPS& pmps, int n, ReplicaMode mode,
                             int chi_p = 0, bool for_mixed = false);

// m2(rho_AB) - m2(rho_A) - m2(rho_B) with every term evaluated through
// trace_out + sre_replica(n = 2, for_mixed).  chi_p = 0 selects the exact
// contraction, chi_p > 0 the compressed one; the returned truncation weight
// sums the three terms.
SreReplicaResult long_range_magic_pauli_mps(const MatrixProductState& state,
                                            const QuditAlgebra& alg,
                                            const Partition& part_a,
                                            const Partition& part_b,
                                            int chi_p = 0);

}  // namespace magicmps
