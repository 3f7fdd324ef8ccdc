#include "magicmps/pauli_mps.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

namespace magicmps {

namespace {

constexpr double kMaxExactBytes = 1024.0 * 1024.0 * 1024.0;  // to_pauli_mps
constexpr long kMaxComponentTable = 1 << 23;
// Replica boundary element cap, 144^4: admits a chi = 12 source at n = 2.
constexpr double kMaxReplicaElements = 429981696.0;
constexpr double kSquaredCutoff = 1e-28;  // relative sigma^2 noise floor

struct LabelTerm {  // one nonzero entry of T_alpha / sqrt(d)
  int s = 0, t = 0;
  Complex coeff;
};

// The single-site operators are generalized permutations, so each label
// carries exactly d nonzero (s, t) entries.
std::vector<std::vector<LabelTerm>> label_terms(const QuditAlgebra& alg) {
  const int d = alg.d;
  const double root = std::sqrt(static_cast<double>(d));
  std::vector<std::vector<LabelTerm>> terms(static_cast<size_t>(d) * d);
  for (int a = 0; a < d; ++a)
    for (int ap = 0; ap < d; ++ap) {
      const Matrix t = pauli_matrix(alg, a, ap);
      auto& list = terms[a * d + ap];
      for (int s = 0; s < d; ++s)
        for (int tt = 0; tt < d; ++tt)
          if (std::abs(t(s, tt)) > 1e-14)
            list.push_back({s, tt, t(s, tt) / root});
    }
  return terms;
}

Eigen::RowVectorXcd flat_row_major(const Matrix& g) {
  Eigen::RowVectorXcd v(g.size());
  long k = 0;
  for (long r = 0; r < g.rows(); ++r)
    for (long c = 0; c < g.cols(); ++c) v(k++) = g(r, c);
  return v;
}

// carry(r, a*cols + b) -> X(a, b)
Matrix carry_row_matrix(const Matrix& carry, long r, long rows, long cols) {
  Matrix x(rows, cols);
  for (long a = 0; a < rows; ++a)
    for (long b = 0; b < cols; ++b) x(a, b) = carry(r, a * cols + b);
  return x;
}

// out[..., m, ...] = sum_c M(m, c) in[..., c, ...] on the given axis of a
// row-major tensor with `outer` slower and `inner` faster indices.
Vector apply_axis(const Vector& in, const Matrix& m, long outer, long inner) {
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

MatrixProductState normalized_copy(const MatrixProductState& state,
                                   const char* what) {
  MatrixProductState work = canonicalize(state, 0);
  if (std::abs(std::exp(work.log_norm) - 1.0) > 1e-8)
    throw std::invalid_argument(
        fmt::format("{}: state is not normalized", what));
  const Complex scale = std::exp(work.log_norm);
  for (auto& m : work.tensors[0]) m *= scale;
  work.log_norm = 0.0;
  return work;
}

struct ThetaSplit {
  Matrix u;      // rows x keep, orthonormal columns
  Matrix carry;  // keep x cols, rescaled to unit Frobenius norm
};

// Truncated factorization theta ~= u * carry with at most chi_p columns
// kept, via an eigendecomposition of the smaller Gram matrix (several times
// faster than a direct SVD at zip-up shapes).  Magnitudes stay with the
// carry; its norm moves into *log_scale and the relative discarded squared
// weight is added to *weight.
ThetaSplit split_theta(const Matrix& theta, int chi_p, double* weight,
                       double* log_scale) {
  const double total = theta.squaredNorm();
  if (!(total > 0.0))
    throw std::runtime_error("zip-up block collapsed to zero");
  const bool left = theta.rows() <= theta.cols();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(
      left ? Matrix(theta * theta.adjoint())
           : Matrix(theta.adjoint() * theta));
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("zip-up eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const long avail = lambda.size();
  long keep = 0;
  for (long i = avail - 1; i >= 0 && keep < chi_p; --i) {
    if (lambda(i) <= total * kSquaredCutoff) break;
    ++keep;
  }
  keep = std::max<long>(keep, 1);
  double kept_sq = 0.0;
  for (long i = avail - keep; i < avail; ++i)
    kept_sq += std::max(lambda(i), 0.0);
  *weight += std::max(0.0, 1.0 - kept_sq / total);

  const Matrix basis = eig.eigenvectors().rightCols(keep);
  ThetaSplit out;
  if (left) {
    out.u = basis;
    out.carry = basis.adjoint() * theta;
  } else {
    Eigen::VectorXd sigma(keep);
    for (long i = 0; i < keep; ++i)
      sigma(i) = std::sqrt(
          std::max(lambda(avail - keep + i), total * kSquaredCutoff));
    out.u = theta * basis;
    for (long i = 0; i < keep; ++i) out.u.col(i) /= sigma(i);
    out.carry = sigma.cast<Complex>().asDiagonal() * basis.adjoint();
  }
  const double s = out.carry.norm();
  if (!(s > 0.0)) throw std::runtime_error("zip-up block collapsed to zero");
  out.carry /= s;
  *log_scale += std::log(s);
  return out;
}

// log sum_alpha |c_alpha|^{2 n_rep} by contracting 2 n_rep replica layers
// against a shared label index, rescaling the boundary tensor per site.
double log_replica_sum_exact(const PauliMPS& p, int n_rep) {
  p.check_consistent();
  const int axes = 2 * n_rep;
  for (int b = 0; b <= p.num_sites(); ++b)
    if (std::pow(static_cast<double>(p.bond_dim(b)), axes) >
        kMaxReplicaElements)
      throw std::runtime_error(fmt::format(
          "exact replica contraction refused: bond {} with {} replica layers "
          "exceeds the cost cap",
          p.bond_dim(b), axes));

  std::vector<long> dims(axes, 1);
  Vector v = Vector::Ones(1);
  double log_acc = 0.0;
  for (int j = 0; j < p.num_sites(); ++j) {
    const auto& site = p.tensors[j];
    const long chi_r = site[0].cols();
    long out_size = 1;
    for (int k = 0; k < axes; ++k) out_size *= chi_r;
    Vector acc = Vector::Zero(out_size);
    for (int al = 0; al < p.label_dim(); ++al) {
      Vector w = v;
      std::vector<long> cur = dims;
      for (int k = 0; k < axes; ++k) {
        long outer = 1, inner = 1;
        for (int i = 0; i < k; ++i) outer *= cur[i];
        for (int i = k + 1; i < axes; ++i) inner *= cur[i];
        w = apply_axis(
            w, k < n_rep ? Matrix(site[al].transpose())
                         : Matrix(site[al].adjoint()),
            outer, inner);
        cur[k] = chi_r;
      }
      acc += w;
    }
    v = std::move(acc);
    dims.assign(axes, chi_r);
    const double s = v.norm();
    if (!(s > 0.0)) throw std::runtime_error("replica contraction vanished");
    v /= s;
    log_acc += std::log(s);
  }
  const double val = v(0).real();
  if (!(val > 0.0))
    throw std::runtime_error("replica contraction lost positivity");
  return log_acc + std::log(val) + axes * p.log_scale;
}

}  // namespace

int PauliMPS::bond_dim(int bond) const {
  if (bond < 0 || bond > num_sites())
    throw std::invalid_argument("bond index out of range");
  if (bond == 0) return static_cast<int>(tensors[0][0].rows());
  return static_cast<int>(tensors[bond - 1][0].cols());
}

int PauliMPS::max_bond() const {
  int m = 1;
  for (int b = 0; b <= num_sites(); ++b) m = std::max(m, bond_dim(b));
  return m;
}

void PauliMPS::check_consistent() const {
  if (local_dim < 2)
    throw std::invalid_argument("Pauli-MPS local dimension must be at least 2");
  if (tensors.empty()) throw std::invalid_argument("empty Pauli-MPS");
  long prev = 1;
  for (int j = 0; j < num_sites(); ++j) {
    const auto& site = tensors[j];
    if (static_cast<int>(site.size()) != label_dim())
      throw std::invalid_argument("site label dimension mismatch");
    for (const auto& a : site)
      if (a.rows() != site[0].rows() || a.cols() != site[0].cols())
        throw std::invalid_argument("ragged Pauli-MPS site tensor");
    if (site[0].rows() != prev)
      throw std::invalid_argument("adjacent bond dimensions do not match");
    prev = site[0].cols();
  }
  if (prev != 1) throw std::invalid_argument("right boundary bond must be 1");
}

PauliMPS to_pauli_mps(const MatrixProductState& state,
                      const QuditAlgebra& alg) {
  state.check_consistent();
  if (alg.d != state.local_dim)
    throw std::invalid_argument("to_pauli_mps: local dimension mismatch");
  const MatrixProductState work = normalized_copy(state, "to_pauli_mps");

  const int n = work.num_sites();
  const int d = alg.d;
  const int labels = d * d;
  double bytes = 0.0;
  for (int j = 0; j < n; ++j) {
    const double chi_l = static_cast<double>(work.tensors[j][0].rows());
    const double chi_r = static_cast<double>(work.tensors[j][0].cols());
    bytes += 16.0 * labels * chi_l * chi_l * chi_r * chi_r;
  }
  if (bytes > kMaxExactBytes)
    throw std::runtime_error(fmt::format(
        "to_pauli_mps: exact tensors need {:.0f} MiB (cap {:.0f} MiB); use "
        "compressed_pauli_mps",
        bytes / 1048576.0, kMaxExactBytes / 1048576.0));

  const auto terms = label_terms(alg);
  PauliMPS out;
  out.local_dim = d;
  out.tensors.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto& a = work.tensors[j];
    const long chi_l = a[0].rows(), chi_r = a[0].cols();
    out.tensors[j].resize(labels);
    for (int al = 0; al < labels; ++al) {
      Matrix b = Matrix::Zero(chi_l * chi_l, chi_r * chi_r);
      for (const auto& term : terms[al]) {
        const Matrix k =
            Eigen::kroneckerProduct(a[term.s].conjugate(), a[term.t]);
        b += term.coeff * k;
      }
      out.tensors[j][al] = std::move(b);
    }
  }
  return out;
}

CompressedPauli compressed_pauli_mps(const MatrixProductState& state,
                                     const QuditAlgebra& alg, int chi_p) {
  state.check_consistent();
  if (alg.d != state.local_dim)
    throw std::invalid_argument(
        "compressed_pauli_mps: local dimension mismatch");
  if (chi_p < 1)
    throw std::invalid_argument("compressed_pauli_mps: chi_p must be positive");
  const MatrixProductState work = normalized_copy(state, "compressed_pauli_mps");

  const int n = work.num_sites();
  const int d = alg.d;
  const int labels = d * d;
  const auto terms = label_terms(alg);

  CompressedPauli out;
  out.pmps.local_dim = d;
  Matrix carry = Matrix::Ones(1, 1);  // m x chi_l^2
  Matrix gst;                         // per carry row, all (s, t) products
  for (int j = 0; j < n; ++j) {
    const auto& a = work.tensors[j];
    const long chi_l = a[0].rows(), chi_r = a[0].cols();
    const long m = carry.rows();
    Matrix theta(labels * m, chi_r * chi_r);
    gst.resize(labels, chi_r * chi_r);
    for (long r = 0; r < m; ++r) {
      const Matrix x = carry_row_matrix(carry, r, chi_l, chi_l);
      for (int s = 0; s < d; ++s) {
        const Matrix p = a[s].adjoint() * x;  // chi_r x chi_l
        for (int t = 0; t < d; ++t)
          gst.row(s * d + t) = flat_row_major(p * a[t]);
      }
      for (int al = 0; al < labels; ++al) {
        Eigen::RowVectorXcd row =
            Eigen::RowVectorXcd::Zero(chi_r * chi_r);
        for (const auto& term : terms[al])
          row += term.coeff * gst.row(term.s * d + term.t);
        theta.row(al * m + r) = row;
      }
    }
    std::vector<Matrix> site(labels);
    if (j == n - 1) {
      for (int al = 0; al < labels; ++al)
        site[al] = theta.block(al * m, 0, m, 1);
    } else {
      auto split = split_theta(theta, chi_p, &out.truncation_weight,
                               &out.pmps.log_scale);
      for (int al = 0; al < labels; ++al)
        site[al] = split.u.middleRows(al * m, m);
      carry = std::move(split.carry);
    }
    out.pmps.tensors.push_back(std::move(site));
  }
  return out;
}

CompressedPauli compress_pauli(const PauliMPS& pmps, int chi_p) {
  pmps.check_consistent();
  if (chi_p < 1)
    throw std::invalid_argument("compress_pauli: chi_p must be positive");
  const int n = pmps.num_sites();
  const int labels = pmps.label_dim();
  CompressedPauli out;
  out.pmps.local_dim = pmps.local_dim;
  out.pmps.log_scale = pmps.log_scale;
  Matrix carry = Matrix::Ones(1, 1);
  for (int j = 0; j < n; ++j) {
    const auto& site = pmps.tensors[j];
    const long cols = site[0].cols();
    const long m = carry.rows();
    Matrix theta(labels * m, cols);
    for (int al = 0; al < labels; ++al)
      theta.middleRows(al * m, m) = carry * site[al];
    std::vector<Matrix> next(labels);
    if (j == n - 1) {
      for (int al = 0; al < labels; ++al)
        next[al] = theta.middleRows(al * m, m);
    } else {
      auto split = split_theta(theta, chi_p, &out.truncation_weight,
                               &out.pmps.log_scale);
      for (int al = 0; al < labels; ++al)
        next[al] = split.u.middleRows(al * m, m);
      carry = std::move(split.carry);
    }
    out.pmps.tensors.push_back(std::move(next));
  }
  return out;
}

PauliMPS trace_out(const PauliMPS& pmps, const std::vector<int>& traced_sites) {
  pmps.check_consistent();
  const int n = pmps.num_sites();
  std::vector<char> traced(n, 0);
  for (int s : traced_sites) {
    if (s < 0 || s >= n)
      throw std::invalid_argument(
          fmt::format("trace_out: site {} outside [0, {})", s, n));
    if (traced[s])
      throw std::invalid_argument(
          fmt::format("trace_out: site {} listed twice", s));
    traced[s] = 1;
  }
  if (static_cast<int>(traced_sites.size()) == n)
    throw std::invalid_argument(
        "trace_out: tracing every site leaves a scalar, not a Pauli-MPS");

  const double root = std::sqrt(static_cast<double>(pmps.local_dim));
  PauliMPS out;
  out.local_dim = pmps.local_dim;
  out.log_scale = pmps.log_scale;
  Matrix pending;  // product of sqrt(d)-weighted identity-label matrices
  for (int j = 0; j < n; ++j) {
    if (traced[j]) {
      const Matrix e = root * pmps.tensors[j][0];
      pending = pending.size() ? Matrix(pending * e) : e;
    } else {
      std::vector<Matrix> site = pmps.tensors[j];
      if (pending.size()) {
        for (auto& m : site) m = pending * m;
        pending.resize(0, 0);
      }
      out.tensors.push_back(std::move(site));
    }
  }
  if (pending.size())  // trailing traced block
    for (auto& m : out.tensors.back()) m = m * pending;
  return out;
}

double log_pauli_square_sum(const PauliMPS& pmps) {
  return log_replica_sum_exact(pmps, 1);
}

Vector pauli_mps_components(const PauliMPS& pmps) {
  pmps.check_consistent();
  const long labels = pmps.label_dim();
  long total = 1;
  for (int j = 0; j < pmps.num_sites(); ++j) {
    total *= labels;
    if (total > kMaxComponentTable)
      throw std::runtime_error(
          "pauli_mps_components: d^2N exceeds the dense size cap");
  }
  Matrix cur = Matrix::Ones(1, 1);
  for (int j = 0; j < pmps.num_sites(); ++j) {
    const auto& site = pmps.tensors[j];
    const long rows = cur.rows();
    Matrix next(rows * labels, site[0].cols());
    for (long al = 0; al < labels; ++al) {
      const Matrix prod = cur * site[al];
      for (long r = 0; r < rows; ++r) next.row(r * labels + al) = prod.row(r);
    }
    cur = std::move(next);
  }
  return std::exp(pmps.log_scale) * cur.col(0);
}

SreReplicaResult sre_replica(const PauliMPS& pmps, int n, ReplicaMode mode,
                             int chi_p, bool for_mixed) {
  pmps.check_consistent();
  if (n < 2)
    throw std::invalid_argument(
        "sre_replica: replica contraction needs an integer index n >= 2");
  SreReplicaResult res;
  res.mode = mode;
  const PauliMPS* src = &pmps;
  CompressedPauli truncated;
  if (mode == ReplicaMode::exact) {
    if (chi_p != 0)
      throw std::invalid_argument(
          "sre_replica: chi_p is a compressed-mode parameter");
  } else {
    if (chi_p < 1)
      throw std::invalid_argument(
          "sre_replica: compressed mode needs chi_p >= 1");
    res.chi_p = chi_p;
    if (pmps.max_bond() > chi_p) {
      truncated = compress_pauli(pmps, chi_p);
      res.truncation_weight = truncated.truncation_weight;
      src = &truncated.pmps;
    }
  }
  double value = log_replica_sum_exact(*src, n);
  if (for_mixed) value -= log_pauli_square_sum(*src);
  res.value = value / (1.0 - n) -
              pmps.num_sites() * std::log(static_cast<double>(pmps.local_dim));
  return res;
}

SreReplicaResult long_range_magic_pauli_mps(const MatrixProductState& state,
                                            const QuditAlgebra& alg,
                                            const Partition& part_a,
                                            const Partition& part_b,
                                            int chi_p) {
  state.check_consistent();
  if (chi_p < 0)
    throw std::invalid_argument("long_range_magic_pauli_mps: negative chi_p");
  const int n = state.num_sites();
  part_a.validate(n);
  part_b.validate(n);
  const Partition joint = disjoint_union(part_a, part_b);
  const PauliMPS pmps = to_pauli_mps(state, alg);
  const ReplicaMode mode =
      chi_p > 0 ? ReplicaMode::compressed : ReplicaMode::exact;
  auto reduced_term = [&](const Partition& region) {
    std::vector<int> traced;
    for (int s = 0; s < n; ++s)
      if (!region.contains(s)) traced.push_back(s);
    return sre_replica(trace_out(pmps, traced), 2, mode, chi_p, true);
  };
  const SreReplicaResult ab = reduced_term(joint);
  const SreReplicaResult a = reduced_term(part_a);
  const SreReplicaResult b = reduced_term(part_b);
  SreReplicaResult res;
  res.mode = mode;
  res.chi_p = chi_p;
  res.value = ab.value - a.value - b.value;
  res.truncation_weight =
      ab.truncation_weight + a.truncation_weight + b.truncation_weight;
  return res;
}

}  // namespace magicmps
