#include "magicmps/pauli.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace magicmps {

namespace {

constexpr long kMaxDenseDim = 4096;        // dense operators
constexpr long kMaxSpectrumSize = 1 << 23; // d^{2N} expectation tables

int mod(int x, int d) { return ((x % d) + d) % d; }

long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void require_odd(const QuditAlgebra& alg, const char* what) {
  if (!alg.odd())
    throw std::invalid_argument(
        fmt::format("{}: phase convention undefined for even d = {}", what,
                    alg.d));
}

int infer_sites(const QuditAlgebra& alg, long dim, const char* what) {
  long p = 1;
  for (int n = 0; n <= 40; ++n) {
    if (p == dim) return n;
    p *= alg.d;
  }
  throw std::invalid_argument(
      fmt::format("{}: dimension {} is not a power of d = {}", what, dim,
                  alg.d));
}

void require_normalized(const Vector& psi, const char* what) {
  if (std::abs(psi.norm() - 1.0) > 1e-8)
    throw std::invalid_argument(fmt::format("{}: state is not normalized",
                                            what));
}

// out[..., m, ...] = sum_c M(m, c) in[..., c, ...] on the given axis of a
// row-major tensor with `outer` slower and `inner` faster indices.
Vector apply_axis_matrix(const Vector& in, const Matrix& m, long outer,
                         long inner) {
  const long din = m.cols();
  const long dout = m.rows();
  Vector out(outer * dout * inner);
  using Stride = Eigen::Stride<Eigen::Dynamic, 1>;
  for (long o = 0; o < outer; ++o) {
    Eigen::Map<const Matrix, 0, Stride> src(in.data() + o * din * inner, inner,
                                            din, Stride(inner, 1));
    Eigen::Map<Matrix, 0, Stride> dst(out.data() + o * dout * inner, inner,
                                      dout, Stride(inner, 1));
    dst.noalias() = src * m.transpose();
  }
  return out;
}

// Flattens rho into a tensor with one combined (bra, ket) index per site and
// applies one basis-change matrix B per site, where B(m, s*d + t) is the
// (t, s) entry of the m-th basis operator.  The result collects Tr(rho O_m1
// (x) O_m2 (x) ...) for every label.
Vector site_transform(const QuditAlgebra& alg, const Matrix& rho,
                      const std::vector<Matrix>& ops, const char* what) {
  const int d = alg.d;
  const int n = infer_sites(alg, rho.rows(), what);
  if (rho.rows() != rho.cols())
    throw std::invalid_argument(fmt::format("{}: matrix is not square", what));
  const long dd = static_cast<long>(d) * d;
  const long total = ipow(dd, n);
  if (total > kMaxSpectrumSize)
    throw std::runtime_error(
        fmt::format("{}: d^2N = {} exceeds the dense size cap", what, total));

  Matrix basis(ops.size(), dd);
  for (size_t m = 0; m < ops.size(); ++m)
    for (int s = 0; s < d; ++s)
      for (int t = 0; t < d; ++t) basis(m, s * d + t) = ops[m](t, s);

  // Interleave bra/ket digits: site i contributes (s_i*d + t_i) at weight
  // (d^2)^{n-1-i}.
  Vector work(total);
  std::vector<int> row_digits(std::max(n, 1));
  const long dim = rho.rows();
  for (long row = 0; row < dim; ++row) {
    long r = row;
    for (int i = n - 1; i >= 0; --i) {
      row_digits[i] = static_cast<int>(r % d);
      r /= d;
    }
    for (long col = 0; col < dim; ++col) {
      long c = col;
      long flat = 0;
      long weight = 1;
      for (int i = n - 1; i >= 0; --i) {
        flat += (row_digits[i] * d + c % d) * weight;
        c /= d;
        weight *= dd;
      }
      work(flat) = rho(row, col);
    }
  }

  for (int i = 0; i < n; ++i)
    work = apply_axis_matrix(work, basis, ipow(dd, i), ipow(dd, n - 1 - i));
  return work;
}

std::vector<Matrix> pauli_site_basis(const QuditAlgebra& alg) {
  std::vector<Matrix> ops(static_cast<size_t>(alg.d) * alg.d);
  for (int a = 0; a < alg.d; ++a)
    for (int ap = 0; ap < alg.d; ++ap)
      ops[a * alg.d + ap] = pauli_matrix(alg, a, ap);
  return ops;
}

std::vector<Matrix> phase_point_site_basis(const QuditAlgebra& alg) {
  std::vector<Matrix> ops(static_cast<size_t>(alg.d) * alg.d);
  for (int a = 0; a < alg.d; ++a)
    for (int ap = 0; ap < alg.d; ++ap)
      ops[a * alg.d + ap] = phase_point_operator_site(alg, a, ap);
  return ops;
}

// Renyi entropy of the (already normalized) distribution minus N log d.
double magic_entropy(const Eigen::VectorXd& probs, double n, int n_sites,
                     int d) {
  const double offset = n_sites * std::log(static_cast<double>(d));
  if (std::abs(n - 1.0) < 1e-12) {
    double h = 0.0;
    for (long i = 0; i < probs.size(); ++i)
      if (probs(i) > 1e-300) h -= probs(i) * std::log(probs(i));
    return h - offset;
  }
  double z = 0.0;
  for (long i = 0; i < probs.size(); ++i)
    if (probs(i) > 1e-300) z += std::pow(probs(i), n);
  return std::log(z) / (1.0 - n) - offset;
}

double mixed_sre2_from_spectrum(const Vector& spectrum) {
  double sum2 = 0.0, sum4 = 0.0;
  for (long i = 0; i < spectrum.size(); ++i) {
    const double w = std::norm(spectrum(i));
    sum2 += w;
    sum4 += w * w;
  }
  return -std::log(sum4 / sum2);
}

}  // namespace

QuditAlgebra QuditAlgebra::make(int d) {
  if (d < 2) throw std::invalid_argument("local dimension must be at least 2");
  QuditAlgebra alg;
  alg.d = d;
  alg.omega = std::exp(Complex(0.0, 2.0 * std::numbers::pi / d));
  alg.half_inverse = d % 2 == 1 ? (d + 1) / 2 : 0;
  return alg;
}

bool PauliString::is_identity() const {
  for (const auto& [a, ap] : exponents)
    if (a != 0 || ap != 0) return false;
  return true;
}

PauliString PauliString::identity(int n_sites) {
  return PauliString{std::vector<std::pair<int, int>>(n_sites, {0, 0})};
}

Matrix heisenberg_weyl_matrix(const QuditAlgebra& alg, int a, int ap) {
  require_odd(alg, "heisenberg_weyl_matrix");
  const int d = alg.d;
  a = mod(a, d);
  ap = mod(ap, d);
  const int front = mod(-a * ap * alg.half_inverse, d);
  Matrix t = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const int j = mod(k + ap, d);
    t(j, k) = std::pow(alg.omega, mod(front + a * j, d));
  }
  return t;
}

Matrix pauli_matrix(const QuditAlgebra& alg, int a, int ap) {
  if (alg.odd()) return heisenberg_weyl_matrix(alg, a, ap);
  if (alg.d != 2)
    throw std::invalid_argument(
        "pauli_matrix: even local dimensions other than 2 are unsupported");
  a = mod(a, 2);
  ap = mod(ap, 2);
  Matrix t = Matrix::Zero(2, 2);
  for (int k = 0; k < 2; ++k)
    t(mod(k + ap, 2), k) = a * (k + ap) % 2 == 0 ? 1.0 : -1.0;
  if (a == 1 && ap == 1) t *= Complex(0.0, -1.0);
  return t;
}

PauliString multiply_strings(const QuditAlgebra& alg, const PauliString& p,
                             const PauliString& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("multiply_strings: mismatched supports");
  PauliString r;
  r.exponents.reserve(p.exponents.size());
  for (int i = 0; i < p.size(); ++i)
    r.exponents.emplace_back(mod(p.exponents[i].first + q.exponents[i].first,
                                 alg.d),
                             mod(p.exponents[i].second + q.exponents[i].second,
                                 alg.d));
  return r;
}

long encode_pauli_label(const QuditAlgebra& alg, const PauliString& string) {
  long label = 0;
  for (const auto& [a, ap] : string.exponents)
    label = label * alg.d * alg.d + mod(a, alg.d) * alg.d + mod(ap, alg.d);
  return label;
}

PauliString decode_pauli_label(const QuditAlgebra& alg, long label,
                               int n_sites) {
  const long dd = static_cast<long>(alg.d) * alg.d;
  PauliString s;
  s.exponents.assign(n_sites, {0, 0});
  for (int i = n_sites - 1; i >= 0; --i) {
    const int code = static_cast<int>(label % dd);
    s.exponents[i] = {code / alg.d, code % alg.d};
    label /= dd;
  }
  if (label != 0)
    throw std::invalid_argument("decode_pauli_label: label out of range");
  return s;
}

Matrix phase_point_operator_site(const QuditAlgebra& alg, int a, int ap) {
  require_odd(alg, "phase_point_operator_site");
  const int d = alg.d;
  Matrix parity = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) parity(mod(-k, d), k) = 1.0;
  if (a == 0 && ap == 0) return parity;
  const Matrix t = heisenberg_weyl_matrix(alg, a, ap);
  return t * parity * t.adjoint();
}

Matrix phase_point_operator(const QuditAlgebra& alg,
                            const std::vector<std::pair<int, int>>& u,
                            int n_sites) {
  require_odd(alg, "phase_point_operator");
  if (static_cast<int>(u.size()) != n_sites)
    throw std::invalid_argument(
        "phase_point_operator: label size does not match site count");
  if (ipow(alg.d, n_sites) > kMaxDenseDim)
    throw std::runtime_error("phase_point_operator: dense operator too large");
  Matrix full = Matrix::Identity(1, 1);
  for (const auto& [a, ap] : u) {
    const Matrix site = phase_point_operator_site(alg, a, ap);
    Matrix next(full.rows() * alg.d, full.cols() * alg.d);
    for (int r = 0; r < full.rows(); ++r)
      for (int c = 0; c < full.cols(); ++c)
        next.block(r * alg.d, c * alg.d, alg.d, alg.d) = full(r, c) * site;
    full = std::move(next);
  }
  return full;
}

Vector dense_pauli_spectrum(const QuditAlgebra& alg, const Matrix& rho) {
  return site_transform(alg, rho, pauli_site_basis(alg),
                        "dense_pauli_spectrum");
}

Vector dense_pauli_spectrum(const QuditAlgebra& alg, const Vector& psi) {
  return dense_pauli_spectrum(alg, Matrix(psi * psi.adjoint()));
}

Vector dense_phase_point_spectrum(const QuditAlgebra& alg, const Matrix& rho) {
  require_odd(alg, "dense_phase_point_spectrum");
  return site_transform(alg, rho, phase_point_site_basis(alg),
                        "dense_phase_point_spectrum");
}

Vector dense_phase_point_spectrum(const QuditAlgebra& alg, const Vector& psi) {
  return dense_phase_point_spectrum(alg, Matrix(psi * psi.adjoint()));
}

Matrix dense_partial_trace(const QuditAlgebra& alg, const Vector& psi,
                           const std::vector<int>& keep) {
  const int d = alg.d;
  const int n = infer_sites(alg, psi.size(), "dense_partial_trace");
  std::vector<bool> kept(n, false);
  for (int site : keep) {
    if (site < 0 || site >= n)
      throw std::invalid_argument("dense_partial_trace: site out of range");
    if (kept[site])
      throw std::invalid_argument("dense_partial_trace: repeated site");
    kept[site] = true;
  }
  // Weights of each site index in the kept / traced flat indices.
  long wk = ipow(d, static_cast<int>(keep.size()));
  long wt = ipow(d, n - static_cast<int>(keep.size()));
  std::vector<long> keep_stride(n, 0), trace_stride(n, 0);
  for (int i = 0; i < n; ++i) {
    if (kept[i]) {
      wk /= d;
      keep_stride[i] = wk;
    } else {
      wt /= d;
      trace_stride[i] = wt;
    }
  }
  const long dim_keep = ipow(d, static_cast<int>(keep.size()));
  const long dim_trace = ipow(d, n - static_cast<int>(keep.size()));
  // Row index of psi with site 0 most significant, split into the two groups.
  std::vector<long> to_full(psi.size());
  for (long idx = 0; idx < psi.size(); ++idx) {
    long rest = idx;
    long k = 0, t = 0;
    for (int i = n - 1; i >= 0; --i) {
      const long digit = rest % d;
      rest /= d;
      k += digit * keep_stride[i];
      t += digit * trace_stride[i];
    }
    to_full[k * dim_trace + t] = idx;
  }
  Matrix grouped(dim_keep, dim_trace);
  for (long k = 0; k < dim_keep; ++k)
    for (long t = 0; t < dim_trace; ++t)
      grouped(k, t) = psi(to_full[k * dim_trace + t]);
  return grouped * grouped.adjoint();
}

double brute_force_sre(const QuditAlgebra& alg, const Vector& psi, double n) {
  require_normalized(psi, "brute_force_sre");
  if (n < 0.0)
    throw std::invalid_argument("brute_force_sre: order must be nonnegative");
  const int sites = infer_sites(alg, psi.size(), "brute_force_sre");
  const Vector spectrum = dense_pauli_spectrum(alg, psi);
  const double dn = std::pow(static_cast<double>(alg.d), sites);
  Eigen::VectorXd probs = spectrum.cwiseAbs2() / dn;
  return magic_entropy(probs, n, sites, alg.d);
}

double brute_force_mixed_sre(const QuditAlgebra& alg, const Matrix& rho,
                             double n) {
  if (std::abs(n - 2.0) > 1e-12)
    throw std::invalid_argument(
        "brute_force_mixed_sre: only order 2 is implemented");
  if (rho.rows() != rho.cols())
    throw std::invalid_argument("brute_force_mixed_sre: matrix not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("brute_force_mixed_sre: matrix not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-8)
    throw std::invalid_argument("brute_force_mixed_sre: trace is not 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument(
        "brute_force_mixed_sre: matrix has negative eigenvalues");
  return mixed_sre2_from_spectrum(dense_pauli_spectrum(alg, rho));
}

double brute_force_mana_entropy(const QuditAlgebra& alg, const Vector& psi,
                                double n) {
  require_odd(alg, "brute_force_mana_entropy");
  require_normalized(psi, "brute_force_mana_entropy");
  if (n < 0.0)
    throw std::invalid_argument(
        "brute_force_mana_entropy: order must be nonnegative");
  const int sites = infer_sites(alg, psi.size(), "brute_force_mana_entropy");
  if (sites > 6)
    throw std::runtime_error(
        "brute_force_mana_entropy: dense phase-space pass capped at 6 sites");
  const Vector spectrum = dense_phase_point_spectrum(alg, psi);
  const double dn = std::pow(static_cast<double>(alg.d), sites);
  // Phase-point expectations of a pure state are real; |.|^2 keeps the
  // distribution well defined either way.
  Eigen::VectorXd probs = spectrum.cwiseAbs2() / dn;
  return magic_entropy(probs, n, sites, alg.d);
}

double brute_force_long_range_magic(const QuditAlgebra& alg, const Vector& psi,
                                    const Partition& part_a,
                                    const Partition& part_b) {
  require_normalized(psi, "brute_force_long_range_magic");
  const int n = infer_sites(alg, psi.size(), "brute_force_long_range_magic");
  part_a.validate(n);
  part_b.validate(n);
  const Partition joint = disjoint_union(part_a, part_b);
  if (joint.num_sites() > 6)
    throw std::runtime_error(
        "brute_force_long_range_magic: joint block capped at 6 sites");
  auto mixed = [&](const Partition& p) {
    return mixed_sre2_from_spectrum(
        dense_pauli_spectrum(alg, dense_partial_trace(alg, psi, p.sites())));
  };
  return mixed(joint) - mixed(part_a) - mixed(part_b);
}

bool check_phase_point_stabilizer(const QuditAlgebra& alg, const Vector& psi,
                                  const std::vector<std::pair<int, int>>& u) {
  require_normalized(psi, "check_phase_point_stabilizer");
  const int n = infer_sites(alg, psi.size(), "check_phase_point_stabilizer");
  const Matrix a = phase_point_operator(alg, u, n);
  return (a * psi - psi).norm() < 1e-10;
}

Vector apply_dense_unitary(const Vector& psi, const Matrix& u) {
  if (u.rows() != u.cols() || u.rows() != psi.size())
    throw std::invalid_argument("apply_dense_unitary: dimension mismatch");
  const Matrix defect =
      u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
  if (defect.cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("apply_dense_unitary: matrix is not unitary");
  Vector out = u * psi;
  return out / out.norm();
}

Complex expectation_pauli_string(const MatrixProductState& state,
                                 const QuditAlgebra& alg,
                                 const PauliString& string,
                                 const std::vector<int>& support) {
  return expectation_pauli_string_log(state, alg, string, support).value();
}

LogScalar expectation_pauli_string_log(const MatrixProductState& state,
                                       const QuditAlgebra& alg,
                                       const PauliString& string,
                                       const std::vector<int>& support) {
  if (string.size() != static_cast<int>(support.size()))
    throw std::invalid_argument(
        "expectation_pauli_string: string and support sizes differ");
  if (state.local_dim != alg.d)
    throw std::invalid_argument(
        "expectation_pauli_string: local dimension mismatch");
  std::vector<Matrix> ops;
  ops.reserve(string.exponents.size());
  for (const auto& [a, ap] : string.exponents)
    ops.push_back(pauli_matrix(alg, a, ap));
  return expectation_product_operator_log(state, ops, support);
}

void write_spectrum_csv(std::ostream& out, const Vector& spectrum) {
  out << "label,real,imag\n";
  for (long i = 0; i < spectrum.size(); ++i)
    out << fmt::format("{},{:.17g},{:.17g}\n", i, spectrum(i).real(),
                       spectrum(i).imag());
}

}  // namespace magicmps
