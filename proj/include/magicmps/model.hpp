#pragma once
// Spin-1 anisotropic Heisenberg chain with single-ion anisotropy,
//   H = sum_i [ Sx_i Sx_{i+1} + Sy_i Sy_{i+1} + Jz Sz_i Sz_{i+1} ]
//       + D sum_i (Sz_i)^2,
// open boundaries.  Site basis |k> = |m mod 3>, i.e. k = 0, 1, 2 holds
// m = 0, +1, -1, so the qutrit shift operator acts as m -> m + 1 and the
// phase-space parity implements m -> -m.

#include <string>
#include <vector>

#include "magicmps/mps.hpp"

namespace magicmps {

struct SpinOneOperators {
  Matrix sz, sp, sm, sx, sy, sz2, id;
  static SpinOneOperators make();
};

struct ModelParams {
  double jz = 1.0;  // Sz Sz coupling
  double dz = 0.0;  // single-ion (Sz)^2 strength
};

// Matrix product operator: per site a (bond_in x bond_out) grid of d x d
// blocks.  Bulk bond dimension is 5; the edges are 1.
struct Mpo {
  std::vector<std::vector<std::vector<Matrix>>> tensors;  // [site][l][r]
  int local_dim = 3;

  int num_sites() const { return static_cast<int>(tensors.size()); }
  int bond_dim(int i) const;  // left bond of site i; i = N gives 1
};

Mpo xxz_mpo(int n_sites, const ModelParams& params);

// Dense d^N x d^N reconstruction, capped at 8 sites.
Matrix mpo_to_dense(const Mpo& mpo);

// <state| mpo |state>, real part (the operator is Hermitian).
double mpo_expectation(const MatrixProductState& state, const Mpo& mpo);

struct ExactGroundState {
  double energy = 0.0;
  Vector amplitudes;  // full d^N vector
};

// Lanczos on the structured matrix-vector product; never builds the dense
// Hamiltonian.  With restrict_sector the search runs in the total-Sz = 0
// block (where the ground state of this model lives).  Capped at 10 sites.
ExactGroundState exact_ground_state(int n_sites, const ModelParams& params,
                                    bool restrict_sector = true,
                                    unsigned long seed = 7);

struct CriticalPoint {
  std::string name;
  ModelParams params;
  std::string transition;
};

// Pinned transition points used throughout: large-d-xy, haldane-large-d,
// haldane-neel.
CriticalPoint preset_critical_point(const std::string& name);
std::vector<CriticalPoint> list_presets();

}  // namespace magicmps
