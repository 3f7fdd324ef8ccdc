#pragma once
// Qudit Heisenberg-Weyl operator algebra, phase-space point operators, and
// dense brute-force evaluation of stabilizer Renyi entropies, mana
// entropies, mixed-state SRE and long-range magic at small N.

#include <ostream>
#include <utility>
#include <vector>

#include "magicmps/mps.hpp"

namespace magicmps {

struct QuditAlgebra {
  int d = 3;
  Complex omega;      // primitive d-th root of unity
  int half_inverse;   // multiplicative inverse of 2 mod d (odd d only)

  static QuditAlgebra make(int d);
  bool odd() const { return d % 2 == 1; }
};

// Per-site exponent pairs (a, a') in Z_d x Z_d; the global phase of the
// corresponding operator is deliberately not tracked.
struct PauliString {
  std::vector<std::pair<int, int>> exponents;

  int size() const { return static_cast<int>(exponents.size()); }
  bool is_identity() const;
  static PauliString identity(int n_sites);
};

// T_{aa'} = omega^{-a a'/2} Z^a X^{a'} with the fractional exponent realized
// as -a a' * half_inverse mod d.  Errors for even d.
Matrix heisenberg_weyl_matrix(const QuditAlgebra& alg, int a, int ap);

// heisenberg_weyl_matrix for odd d; for d = 2 the Hermitian sigma set
// (-i)^{aa'} Z^a X^{a'}.
Matrix pauli_matrix(const QuditAlgebra& alg, int a, int ap);

// Exponentwise sum mod d; global phase discarded.
PauliString multiply_strings(const QuditAlgebra& alg, const PauliString& p,
                             const PauliString& q);

// Flat label with site 0 most significant and per-site code a*d + a'.
long encode_pauli_label(const QuditAlgebra& alg, const PauliString& string);
PauliString decode_pauli_label(const QuditAlgebra& alg, long label,
                               int n_sites);

// Single-site phase-space point operator A_u = T_u A_0 T_u^dagger, with
// A_0 the parity |k> -> |-k mod d>.  Odd d only.
Matrix phase_point_operator_site(const QuditAlgebra& alg, int a, int ap);
// N-site A_u as a dense d^N x d^N matrix (A_u factorizes over sites).
Matrix phase_point_operator(const QuditAlgebra& alg,
                            const std::vector<std::pair<int, int>>& u,
                            int n_sites);

// All Tr(rho T_a) via a site-by-site linear basis change, flat-indexed by
// encode_pauli_label.  Total cost O(N d^{2N}).
Vector dense_pauli_spectrum(const QuditAlgebra& alg, const Matrix& rho);
Vector dense_pauli_spectrum(const QuditAlgebra& alg, const Vector& psi);
// Same transform in the phase-space point basis (odd d).
Vector dense_phase_point_spectrum(const QuditAlgebra& alg, const Matrix& rho);
Vector dense_phase_point_spectrum(const QuditAlgebra& alg, const Vector& psi);

// Density matrix of the kept sites from a dense pure state.
Matrix dense_partial_trace(const QuditAlgebra& alg, const Vector& psi,
                           const std::vector<int>& keep);

// Stabilizer Renyi entropy M_n of a pure normalized state (Shannon limit at
// n = 1).
double brute_force_sre(const QuditAlgebra& alg, const Vector& psi, double n);
// Mixed-state SRE  -log( sum |Tr(rho P)|^4 / sum |Tr(rho P)|^2 ).
double brute_force_mixed_sre(const QuditAlgebra& alg, const Matrix& rho,
                             double n = 2.0);
// Mana entropy of order n from dense phase-point expectations (odd d).
double brute_force_mana_entropy(const QuditAlgebra& alg, const Vector& psi,
                                double n);
// L = m2(rho_AB) - m2(rho_A) - m2(rho_B) from dense partial traces.
double brute_force_long_range_magic(const QuditAlgebra& alg, const Vector& psi,
                                    const Partition& part_a,
                                    const Partition& part_b);

// True iff ||A_u |psi> - |psi>|| < 1e-10.
bool check_phase_point_stabilizer(const QuditAlgebra& alg, const Vector& psi,
                                  const std::vector<std::pair<int, int>>& u);

// U|psi>, normalized; rejects non-unitary U.
Vector apply_dense_unitary(const Vector& psi, const Matrix& u);

// <psi| T_string (x) identity |psi> on an MPS; string exponents are defined
// on the support sites only.
Complex expectation_pauli_string(const MatrixProductState& state,
                                 const QuditAlgebra& alg,
                                 const PauliString& string,
                                 const std::vector<int>& support);
LogScalar expectation_pauli_string_log(const MatrixProductState& state,
                                       const QuditAlgebra& alg,
                                       const PauliString& string,
                                       const std::vector<int>& support);

// CSV rows "label,real,imag" for a spectrum table.
void write_spectrum_csv(std::ostream& out, const Vector& spectrum);

}  // namespace magicmps
