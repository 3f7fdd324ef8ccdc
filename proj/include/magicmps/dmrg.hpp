#pragma once
// Two-site DMRG ground-state search for an MPO Hamiltonian.

#include <vector>

#include "magicmps/model.hpp"
#include "magicmps/mps.hpp"

namespace magicmps {

struct DmrgOptions {
  int chi_max = 64;
  double cutoff = 1e-12;      // discarded squared Schmidt weight per bond
  int max_sweeps = 16;
  double energy_tol = 1e-10;  // relative sweep-to-sweep change
  int lanczos_iters = 30;
  double lanczos_tol = 1e-11;
  unsigned long seed = 12345;
};

struct DmrgResult {
  MatrixProductState state;  // normalized, canonical center at site 0
  double energy = 0.0;
  bool converged = false;
  std::vector<double> sweep_energies;  // energy after each full sweep
};

DmrgResult dmrg_ground_state(const Mpo& mpo, const DmrgOptions& opts = {});

}  // namespace magicmps
