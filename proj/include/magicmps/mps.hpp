#pragma once
// Dense-tensor matrix product state machinery: canonical forms, SVD
// truncation, expectation values, entanglement and Renyi-2 entropies,
// dense conversion and binary serialization.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace magicmps {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Rank-3 site tensor stored as one chi_l x chi_r matrix per physical level.
using SiteTensor = std::vector<Matrix>;

// A scalar kept in log-magnitude form so that length-1024 chains cannot
// underflow a double.  value() may still flush to zero when exported.
struct LogScalar {
  double log_abs = 0.0;   // -inf encodes an exact zero
  Complex phase = 1.0;    // unit modulus (0 when log_abs == -inf)

  Complex value() const;
  static LogScalar from(Complex z);
};

// Ordered disjoint site-index blocks, each a half-open interval [begin, end).
struct Partition {
  std::vector<std::pair<int, int>> blocks;

  static Partition block(int begin, int end);
  static Partition from_sites(std::vector<int> sites);

  std::vector<int> sites() const;
  bool contains(int site) const;
  int num_sites() const;
  int min_site() const;
  int max_site() const;
  void validate(int n_total) const;
};

// Union of two partitions; throws if they overlap.
Partition disjoint_union(const Partition& a, const Partition& b);

struct SchmidtSpectrum {
  int cut = 0;                 // split [0, cut) | [cut, N)
  std::vector<double> values;  // descending, sum of squares == 1
};

class MatrixProductState {
 public:
  std::vector<SiteTensor> tensors;  // tensors[j][s]: chi_l x chi_r
  int local_dim = 0;
  std::optional<int> center;  // canonical center when known
  double log_norm = 0.0;      // represented vector = exp(log_norm) * contraction

  int num_sites() const { return static_cast<int>(tensors.size()); }
  int bond_dim(int bond) const;  // bond in [0, N]
  int max_bond() const;
  void check_consistent() const;
};

// --------------------------------------------------------------- constructors

MatrixProductState random_mps(int n_sites, int local_dim, int chi,
                              std::uint64_t seed);
MatrixProductState product_mps(const std::vector<Vector>& site_kets);
MatrixProductState basis_product_mps(int n_sites, int local_dim,
                                     const std::vector<int>& levels);
// (|0..0> + |1..1> + ... + |d-1..d-1>)/sqrt(d)
MatrixProductState ghz_mps(int n_sites, int local_dim);

// --------------------------------------------------------------------- gauges

// Returns a state representing the same vector with isometry conditions
// holding on both sides of `center` (tolerance 1e-10).  The tensor part is
// rescaled to unit norm; the scale moves into log_norm.
MatrixProductState canonicalize(const MatrixProductState& state, int center);

// True when the isometry conditions implied by state.center hold within tol.
bool check_canonical(const MatrixProductState& state, double tol = 1e-10);

// SVD truncation to chi_max with a secondary cutoff on squared Schmidt
// weight.  Output is normalized; second member is the total discarded
// squared Schmidt weight.
std::pair<MatrixProductState, double> compress(const MatrixProductState& state,
                                               int chi_max,
                                               double cutoff = 1e-12);

// ----------------------------------------------------------------- contractions

Complex inner(const MatrixProductState& a, const MatrixProductState& b);
double norm(const MatrixProductState& state);

// <psi| O_1 x O_2 x ... (x identity elsewhere) |psi> for single-site
// operators ops[k] acting on support[k].  Support must be strictly
// increasing.  Cost O(window * d^2 * chi^3) plus one canonicalization.
LogScalar expectation_product_operator_log(const MatrixProductState& state,
                                           const std::vector<Matrix>& ops,
                                           const std::vector<int>& support);
Complex expectation_product_operator(const MatrixProductState& state,
                                     const std::vector<Matrix>& ops,
                                     const std::vector<int>& support);

// ------------------------------------------------------------------- entropies

SchmidtSpectrum schmidt_spectrum(const MatrixProductState& state, int cut);
double entanglement_entropy(const MatrixProductState& state, int cut);

// S2 = -log Tr(rho_partition^2) by a four-layer (two-replica swap)
// transfer contraction; handles disconnected blocks.  Refuses bond
// dimensions above chi_cap inside the contraction window.
double renyi2_entropy_exact(const MatrixProductState& state,
                            const Partition& partition, int chi_cap = 64);
double mutual_info_renyi2_exact(const MatrixProductState& state,
                                const Partition& part_a,
                                const Partition& part_b, int chi_cap = 64);

// --------------------------------------------------------------- dense bridge

Vector mps_to_dense(const MatrixProductState& state);
MatrixProductState mps_from_dense(const Vector& amplitudes, int local_dim,
                                  double tol = 1e-14);

// --------------------------------------------------------------- serialization

void save_mps(const MatrixProductState& state, const std::string& path);
MatrixProductState load_mps(const std::string& path);

}  // namespace magicmps
