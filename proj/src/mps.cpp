#include "magicmps/mps.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace magicmps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMajorMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Box-Muller on explicit uniforms: identical streams across standard
// libraries, unlike std::normal_distribution.
double standard_normal(std::mt19937_64& gen) {
  double u;
  do {
    u = uniform01(gen);
  } while (u == 0.0);
  double v = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

Matrix stack_left(const SiteTensor& site) {
  // (chi_l * d) x chi_r with row s * chi_l + a
  long cl = site[0].rows(), cr = site[0].cols();
  long d = static_cast<long>(site.size());
  Matrix m(cl * d, cr);
  for (long s = 0; s < d; ++s) m.block(s * cl, 0, cl, cr) = site[s];
  return m;
}

Matrix stack_right(const SiteTensor& site) {
  // chi_l x (d * chi_r) with column s * chi_r + b
  long cl = site[0].rows(), cr = site[0].cols();
  long d = static_cast<long>(site.size());
  Matrix m(cl, d * cr);
  for (long s = 0; s < d; ++s) m.block(0, s * cr, cl, cr) = site[s];
  return m;
}

void left_orthonormalize_step(MatrixProductState& st, int j) {
  auto& site = st.tensors[j];
  long cl = site[0].rows(), cr = site[0].cols();
  long d = static_cast<long>(site.size());
  Matrix m = stack_left(site);
  Eigen::HouseholderQR<Matrix> qr(m);
  long k = std::min(cl * d, cr);
  Matrix q = qr.householderQ() * Matrix::Identity(cl * d, k);
  Matrix r = Matrix(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>());
  for (long s = 0; s < d; ++s) site[s] = q.block(s * cl, 0, cl, k);
  for (auto& next : st.tensors[j + 1]) next = r * next;
}

void right_orthonormalize_step(MatrixProductState& st, int j) {
  auto& site = st.tensors[j];
  long cl = site[0].rows(), cr = site[0].cols();
  long d = static_cast<long>(site.size());
  Matrix m = stack_right(site);
  Eigen::HouseholderQR<Matrix> qr(m.adjoint());
  long k = std::min(cl, d * cr);
  Matrix q = qr.householderQ() * Matrix::Identity(d * cr, k);
  Matrix l = Matrix(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>())
                 .adjoint();  // chi_l x k
  for (long s = 0; s < d; ++s) site[s] = q.block(s * cr, 0, cr, k).adjoint();
  for (auto& prev : st.tensors[j - 1]) prev = prev * l;
}

// Center tensor carries the norm; strip it into log_norm.
void normalize_center(MatrixProductState& st, int center) {
  double sq = 0.0;
  for (const auto& a : st.tensors[center]) sq += a.squaredNorm();
  double r = std::sqrt(sq);
  if (!(r > 1e-300)) throw std::runtime_error("null state");
  for (auto& a : st.tensors[center]) a /= r;
  st.log_norm += std::log(r);
}

// ---- four-index transfer helpers for the two-replica contraction ----------

// out[..., j', ...] = sum_j m(j, j') in[..., j, ...] on the given axis of a
// row-major 4-index tensor.
Vector axis_apply(const Vector& in, std::array<long, 4>& dims, int axis,
                  const Matrix& m) {
  long outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= dims[i];
  for (int i = axis + 1; i < 4; ++i) inner *= dims[i];
  long dk = dims[axis], dn = m.cols();
  Vector out(outer * dn * inner);
  for (long o = 0; o < outer; ++o) {
    Eigen::Map<const RowMajorMatrix> src(in.data() + o * dk * inner, dk, inner);
    Eigen::Map<RowMajorMatrix> dst(out.data() + o * dn * inner, dn, inner);
    dst.noalias() = m.transpose() * src;
  }
  dims[axis] = dn;
  return out;
}

// sum_s apply(ax_bra, conj(A^s)) apply(ax_ket, A^s)
Vector pair_transfer(const Vector& in, std::array<long, 4>& dims, int ax_bra,
                     int ax_ket, const SiteTensor& site) {
  Vector acc;
  std::array<long, 4> dims_out{};
  bool first = true;
  for (const auto& a : site) {
    std::array<long, 4> dd = dims;
    Vector t = axis_apply(in, dd, ax_bra, a.conjugate());
    t = axis_apply(t, dd, ax_ket, a);
    if (first) {
      acc = std::move(t);
      dims_out = dd;
      first = false;
    } else {
      acc += t;
    }
  }
  dims = dims_out;
  return acc;
}

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("truncated MPS file");
}

}  // namespace

// ------------------------------------------------------------------ LogScalar

Complex LogScalar::value() const {
  if (log_abs == -kInf) return 0.0;
  return phase * std::exp(log_abs);
}

LogScalar LogScalar::from(Complex z) {
  double a = std::abs(z);
  if (a == 0.0) return {-kInf, 0.0};
  return {std::log(a), z / a};
}

// ------------------------------------------------------------------ Partition

Partition Partition::block(int begin, int end) {
  Partition p;
  p.blocks.emplace_back(begin, end);
  return p;
}

Partition Partition::from_sites(std::vector<int> sites) {
  std::sort(sites.begin(), sites.end());
  Partition p;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i > 0 && sites[i] == sites[i - 1])
      throw std::invalid_argument("duplicate site in partition");
    if (!p.blocks.empty() && p.blocks.back().second == sites[i])
      p.blocks.back().second = sites[i] + 1;
    else
      p.blocks.emplace_back(sites[i], sites[i] + 1);
  }
  return p;
}

std::vector<int> Partition::sites() const {
  std::vector<int> out;
  for (auto [b, e] : blocks)
    for (int s = b; s < e; ++s) out.push_back(s);
  return out;
}

bool Partition::contains(int site) const {
  for (auto [b, e] : blocks)
    if (site >= b && site < e) return true;
  return false;
}

int Partition::num_sites() const {
  int n = 0;
  for (auto [b, e] : blocks) n += e - b;
  return n;
}

int Partition::min_site() const { return blocks.front().first; }
int Partition::max_site() const { return blocks.back().second - 1; }

void Partition::validate(int n_total) const {
  if (blocks.empty()) throw std::invalid_argument("empty partition");
  int prev_end = 0;
  bool first = true;
  for (auto [b, e] : blocks) {
    if (b >= e) throw std::invalid_argument("empty partition block");
    if (b < 0 || e > n_total)
      throw std::invalid_argument(
          fmt::format("partition block [{}, {}) outside [0, {})", b, e, n_total));
    if (!first && b < prev_end)
      throw std::invalid_argument("partition blocks overlap or are unsorted");
    prev_end = e;
    first = false;
  }
}

Partition disjoint_union(const Partition& a, const Partition& b) {
  auto sa = a.sites();
  auto sb = b.sites();
  for (int s : sb)
    if (a.contains(s)) throw std::invalid_argument("overlapping partitions");
  sa.insert(sa.end(), sb.begin(), sb.end());
  return Partition::from_sites(std::move(sa));
}

// ------------------------------------------------------- MatrixProductState

int MatrixProductState::bond_dim(int bond) const {
  if (bond < 0 || bond > num_sites())
    throw std::invalid_argument("bond index out of range");
  if (bond == 0) return static_cast<int>(tensors[0][0].rows());
  return static_cast<int>(tensors[bond - 1][0].cols());
}

int MatrixProductState::max_bond() const {
  int m = 1;
  for (int b = 0; b <= num_sites(); ++b) m = std::max(m, bond_dim(b));
  return m;
}

void MatrixProductState::check_consistent() const {
  if (tensors.empty()) throw std::invalid_argument("empty MPS");
  long prev = 1;
  for (int j = 0; j < num_sites(); ++j) {
    const auto& site = tensors[j];
    if (static_cast<int>(site.size()) != local_dim)
      throw std::invalid_argument("site physical dimension mismatch");
    for (const auto& a : site)
      if (a.rows() != site[0].rows() || a.cols() != site[0].cols())
        throw std::invalid_argument("ragged site tensor");
    if (site[0].rows() != prev)
      throw std::invalid_argument("adjacent bond dimensions do not match");
    prev = site[0].cols();
  }
  if (prev != 1) throw std::invalid_argument("right boundary bond must be 1");
}

// --------------------------------------------------------------- constructors

MatrixProductState random_mps(int n_sites, int local_dim, int chi,
                              std::uint64_t seed) {
  if (n_sites < 1 || local_dim < 2 || chi < 1)
    throw std::invalid_argument("random_mps: bad shape");
  std::vector<long> bonds(n_sites + 1, 1);
  for (int j = 1; j <= n_sites; ++j)
    bonds[j] = std::min<long>(chi, bonds[j - 1] * local_dim);
  bonds[n_sites] = 1;
  for (int j = n_sites - 1; j >= 0; --j)
    bonds[j] = std::min(bonds[j], bonds[j + 1] * local_dim);

  std::mt19937_64 gen(seed);
  MatrixProductState st;
  st.local_dim = local_dim;
  st.tensors.resize(n_sites);
  for (int j = 0; j < n_sites; ++j) {
    st.tensors[j].resize(local_dim);
    for (auto& a : st.tensors[j]) {
      a.resize(bonds[j], bonds[j + 1]);
      for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c)
          a(r, c) = Complex(standard_normal(gen), standard_normal(gen));
    }
  }
  st = canonicalize(st, 0);
  st.log_norm = 0.0;  // normalized output
  return st;
}

MatrixProductState product_mps(const std::vector<Vector>& site_kets) {
  if (site_kets.empty()) throw std::invalid_argument("empty product state");
  int d = static_cast<int>(site_kets[0].size());
  MatrixProductState st;
  st.local_dim = d;
  for (const auto& ket : site_kets) {
    if (static_cast<int>(ket.size()) != d)
      throw std::invalid_argument("inhomogeneous local dimensions");
    double nrm = ket.norm();
    if (!(nrm > 1e-300)) throw std::invalid_argument("null site ket");
    SiteTensor site(d);
    for (int s = 0; s < d; ++s) {
      site[s].resize(1, 1);
      site[s](0, 0) = ket[s] / nrm;
    }
    st.tensors.push_back(std::move(site));
  }
  st.center = 0;
  return st;
}

MatrixProductState basis_product_mps(int n_sites, int local_dim,
                                     const std::vector<int>& levels) {
  if (static_cast<int>(levels.size()) != n_sites)
    throw std::invalid_argument("levels size mismatch");
  std::vector<Vector> kets;
  for (int lv : levels) {
    if (lv < 0 || lv >= local_dim) throw std::invalid_argument("bad level");
    Vector v = Vector::Zero(local_dim);
    v[lv] = 1.0;
    kets.push_back(std::move(v));
  }
  return product_mps(kets);
}

MatrixProductState ghz_mps(int n_sites, int local_dim) {
  if (n_sites < 2) throw std::invalid_argument("GHZ needs at least 2 sites");
  int d = local_dim;
  MatrixProductState st;
  st.local_dim = d;
  st.tensors.resize(n_sites);
  for (int j = 0; j < n_sites; ++j) {
    long cl = (j == 0) ? 1 : d;
    long cr = (j == n_sites - 1) ? 1 : d;
    st.tensors[j].resize(d);
    for (int s = 0; s < d; ++s) {
      Matrix a = Matrix::Zero(cl, cr);
      a(j == 0 ? 0 : s, j == n_sites - 1 ? 0 : s) = 1.0;
      st.tensors[j][s] = a;
    }
  }
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& a : st.tensors[n_sites - 1]) a *= scale;
  return st;
}

// --------------------------------------------------------------------- gauges

MatrixProductState canonicalize(const MatrixProductState& state, int center) {
  state.check_consistent();
  int n = state.num_sites();
  if (center < 0 || center >= n)
    throw std::invalid_argument("canonical center out of range");
  MatrixProductState out = state;
  for (int j = 0; j < center; ++j) left_orthonormalize_step(out, j);
  for (int j = n - 1; j > center; --j) right_orthonormalize_step(out, j);
  normalize_center(out, center);
  out.center = center;
  return out;
}

bool check_canonical(const MatrixProductState& state, double tol) {
  if (!state.center) return false;
  int c = *state.center;
  for (int j = 0; j < state.num_sites(); ++j) {
    if (j == c) continue;
    const auto& site = state.tensors[j];
    long cl = site[0].rows(), cr = site[0].cols();
    if (j < c) {
      Matrix g = Matrix::Zero(cr, cr);
      for (const auto& a : site) g += a.adjoint() * a;
      if ((g - Matrix::Identity(cr, cr)).norm() > tol * std::sqrt((double)cr))
        return false;
    } else {
      Matrix g = Matrix::Zero(cl, cl);
      for (const auto& a : site) g += a * a.adjoint();
      if ((g - Matrix::Identity(cl, cl)).norm() > tol * std::sqrt((double)cl))
        return false;
    }
  }
  return true;
}

std::pair<MatrixProductState, double> compress(const MatrixProductState& state,
                                               int chi_max, double cutoff) {
  if (chi_max < 1) throw std::invalid_argument("chi_max must be positive");
  if (cutoff < 0) throw std::invalid_argument("negative cutoff");
  int n = state.num_sites();
  MatrixProductState out = canonicalize(state, n - 1);
  double weight = 0.0;
  for (int j = n - 1; j > 0; --j) {
    auto& site = out.tensors[j];
    long cl = site[0].rows(), cr = site[0].cols();
    long d = out.local_dim;
    Matrix m = stack_right(site);  // cl x (d*cr)
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    long full = sv.size();
    long keep = 0;
    for (long i = 0; i < full; ++i)
      if (i < chi_max && sv[i] * sv[i] >= cutoff) ++keep;
    keep = std::max<long>(keep, 1);
    double discarded = 0.0;
    for (long i = keep; i < full; ++i) discarded += sv[i] * sv[i];
    weight += discarded;
    double renorm = std::sqrt(std::max(1.0 - discarded, 1e-300));
    Matrix v = svd.matrixV().leftCols(keep);  // (d*cr) x keep
    for (long s = 0; s < d; ++s)
      site[s] = v.block(s * cr, 0, cr, keep).adjoint();
    Matrix carry = svd.matrixU().leftCols(keep) *
                   (sv.head(keep) / renorm).asDiagonal();
    (void)cl;
    for (auto& prev : out.tensors[j - 1]) prev = prev * carry;
  }
  out.center = 0;
  return {std::move(out), weight};
}

// ---------------------------------------------------------------- contractions

Complex inner(const MatrixProductState& a, const MatrixProductState& b) {
  a.check_consistent();
  b.check_consistent();
  if (a.num_sites() != b.num_sites() || a.local_dim != b.local_dim)
    throw std::invalid_argument("inner: incompatible states");
  Matrix e = Matrix::Ones(1, 1);
  double acc = 0.0;
  for (int j = 0; j < a.num_sites(); ++j) {
    Matrix next = Matrix::Zero(a.tensors[j][0].cols(), b.tensors[j][0].cols());
    for (int s = 0; s < a.local_dim; ++s)
      next.noalias() += a.tensors[j][s].adjoint() * e * b.tensors[j][s];
    double nrm = next.norm();
    if (nrm == 0.0) return 0.0;
    next /= nrm;
    acc += std::log(nrm);
    e = std::move(next);
  }
  return e(0, 0) * std::exp(acc + a.log_norm + b.log_norm);
}

double norm(const MatrixProductState& state) {
  return std::sqrt(std::abs(inner(state, state)));
}

LogScalar expectation_product_operator_log(const MatrixProductState& state,
                                           const std::vector<Matrix>& ops,
                                           const std::vector<int>& support) {
  if (ops.size() != support.size())
    throw std::invalid_argument("operator/support size mismatch");
  if (support.empty()) return LogScalar::from(inner(state, state));
  int n = state.num_sites();
  int d = state.local_dim;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] < 0 || support[k] >= n)
      throw std::invalid_argument(
          fmt::format("support site {} outside [0, {})", support[k], n));
    if (k > 0 && support[k] <= support[k - 1])
      throw std::invalid_argument("support must be strictly increasing");
    if (ops[k].rows() != d || ops[k].cols() != d)
      throw std::invalid_argument("operator dimension mismatch");
  }

  int first = support.front(), last = support.back();
  MatrixProductState work =
      (state.center && *state.center >= first && *state.center <= last &&
       check_canonical(state))
          ? state
          : canonicalize(state, first);

  long b0 = work.bond_dim(first);
  Matrix e = Matrix::Identity(b0, b0);
  double acc = 0.0;
  std::size_t k = 0;
  for (int j = first; j <= last; ++j) {
    const auto& site = work.tensors[j];
    Matrix next = Matrix::Zero(site[0].cols(), site[0].cols());
    if (k < support.size() && support[k] == j) {
      const Matrix& o = ops[k];
      for (int s = 0; s < d; ++s) {
        Matrix c = Matrix::Zero(site[0].rows(), site[0].cols());
        for (int t = 0; t < d; ++t)
          if (o(s, t) != 0.0) c.noalias() += o(s, t) * site[t];
        next.noalias() += site[s].adjoint() * (e * c);
      }
      ++k;
    } else {
      for (int s = 0; s < d; ++s)
        next.noalias() += site[s].adjoint() * (e * site[s]);
    }
    double nrm = next.norm();
    if (nrm == 0.0) return {-kInf, 0.0};
    next /= nrm;
    acc += std::log(nrm);
    e = std::move(next);
  }
  Complex z = e.trace();
  double za = std::abs(z);
  if (za == 0.0) return {-kInf, 0.0};
  return {std::log(za) + acc + 2.0 * work.log_norm, z / za};
}

Complex expectation_product_operator(const MatrixProductState& state,
                                     const std::vector<Matrix>& ops,
                                     const std::vector<int>& support) {
  return expectation_product_operator_log(state, ops, support).value();
}

// ------------------------------------------------------------------- entropies

SchmidtSpectrum schmidt_spectrum(const MatrixProductState& state, int cut) {
  int n = state.num_sites();
  if (cut <= 0 || cut >= n)
    throw std::invalid_argument("cut must be an interior bond");
  MatrixProductState work = canonicalize(state, cut - 1);
  Matrix m = stack_left(work.tensors[cut - 1]);
  Eigen::BDCSVD<Matrix> svd(m);
  Eigen::VectorXd sv = svd.singularValues();
  double total = sv.squaredNorm();
  if (!(total > 0)) throw std::runtime_error("null state");
  sv /= std::sqrt(total);
  SchmidtSpectrum out;
  out.cut = cut;
  out.values.assign(sv.data(), sv.data() + sv.size());
  return out;
}

double entanglement_entropy(const MatrixProductState& state, int cut) {
  auto spec = schmidt_spectrum(state, cut);
  double s = 0.0;
  for (double v : spec.values) {
    double p = v * v;
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

double renyi2_entropy_exact(const MatrixProductState& state,
                            const Partition& partition, int chi_cap) {
  int n = state.num_sites();
  partition.validate(n);
  int first = partition.min_site(), last = partition.max_site();

  MatrixProductState work = canonicalize(state, first);
  for (int b = first; b <= last + 1; ++b)
    if (work.bond_dim(b) > chi_cap)
      throw std::runtime_error(
          fmt::format("contraction too large: bond dimension {} exceeds cap {}",
                      work.bond_dim(b), chi_cap));

  long b0 = work.bond_dim(first);
  std::array<long, 4> dims{b0, b0, b0, b0};
  Vector e = Vector::Zero(b0 * b0 * b0 * b0);
  for (long a = 0; a < b0; ++a)
    for (long c = 0; c < b0; ++c) e[((a * b0 + a) * b0 + c) * b0 + c] = 1.0;

  double acc = 0.0;
  for (int j = first; j <= last; ++j) {
    const auto& site = work.tensors[j];
    if (partition.contains(j)) {
      // replica-swapped wiring: layer pairs (bra1, ket2) and (ket1, bra2)
      e = pair_transfer(e, dims, 0, 3, site);
      e = pair_transfer(e, dims, 2, 1, site);
    } else {
      e = pair_transfer(e, dims, 0, 1, site);
      e = pair_transfer(e, dims, 2, 3, site);
    }
    double nrm = e.norm();
    if (!(nrm > 0)) throw std::runtime_error("vanishing replica contraction");
    e /= nrm;
    acc += std::log(nrm);
  }

  long b1 = dims[0];
  Complex val = 0.0;
  for (long a = 0; a < b1; ++a)
    for (long c = 0; c < b1; ++c) val += e[((a * b1 + a) * b1 + c) * b1 + c];
  double purity_log = std::log(std::abs(val)) + acc;
  if (std::abs(val) == 0.0 || std::real(val) < 0)
    throw std::runtime_error("vanishing replica contraction");
  return -purity_log;
}

double mutual_info_renyi2_exact(const MatrixProductState& state,
                                const Partition& part_a,
                                const Partition& part_b, int chi_cap) {
  Partition ab = disjoint_union(part_a, part_b);
  double sa = renyi2_entropy_exact(state, part_a, chi_cap);
  double sb = renyi2_entropy_exact(state, part_b, chi_cap);
  double sab = renyi2_entropy_exact(state, ab, chi_cap);
  return sa + sb - sab;
}

// ----------------------------------------------------------------- dense bridge

Vector mps_to_dense(const MatrixProductState& state) {
  state.check_consistent();
  int n = state.num_sites(), d = state.local_dim;
  double logdim = n * std::log(static_cast<double>(d));
  if (logdim > std::log(1.0e7))
    throw std::runtime_error("dense conversion too large");
  long dim = 1;
  for (int j = 0; j < n; ++j) dim *= d;

  Matrix v = Matrix::Ones(1, 1);
  long rows = 1;
  for (int j = 0; j < n; ++j) {
    long cr = state.tensors[j][0].cols();
    Matrix next(rows * d, cr);
    for (int s = 0; s < d; ++s) {
      Matrix part = v * state.tensors[j][s];
      for (long i = 0; i < rows; ++i) next.row(i * d + s) = part.row(i);
    }
    v = std::move(next);
    rows *= d;
  }
  Vector out = v.col(0);
  (void)dim;
  return out * std::exp(state.log_norm);
}

MatrixProductState mps_from_dense(const Vector& amplitudes, int local_dim,
                                  double tol) {
  long dim = amplitudes.size();
  int n = 0;
  long p = 1;
  while (p < dim) {
    p *= local_dim;
    ++n;
  }
  if (p != dim || n == 0)
    throw std::invalid_argument("dense vector size is not a power of d");
  double nrm = amplitudes.norm();
  if (!(nrm > 1e-300)) throw std::runtime_error("null state");

  MatrixProductState st;
  st.local_dim = local_dim;
  st.log_norm = std::log(nrm);
  st.tensors.resize(n);

  RowMajorMatrix carrier = Eigen::Map<const RowMajorMatrix>(
                               amplitudes.data(), local_dim, dim / local_dim) /
                           nrm;
  long chi = 1;
  for (int j = 0; j < n; ++j) {
    long rest = carrier.cols();
    if (j == n - 1) {
      st.tensors[j].resize(local_dim);
      for (int s = 0; s < local_dim; ++s) {
        Matrix a(chi, 1);
        for (long r = 0; r < chi; ++r) a(r, 0) = carrier(r * local_dim + s, 0);
        st.tensors[j][s] = a;
      }
      break;
    }
    Eigen::BDCSVD<Matrix> svd(carrier,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    long keep = 0;
    for (long i = 0; i < sv.size(); ++i)
      if (sv[i] > tol * sv[0]) ++keep;
    keep = std::max<long>(keep, 1);
    st.tensors[j].resize(local_dim);
    for (int s = 0; s < local_dim; ++s) {
      Matrix a(chi, keep);
      for (long r = 0; r < chi; ++r)
        a.row(r) = svd.matrixU().row(r * local_dim + s).head(keep);
      st.tensors[j][s] = a;
    }
    RowMajorMatrix next =
        sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
    carrier = Eigen::Map<const RowMajorMatrix>(next.data(), keep * local_dim,
                                               rest / local_dim);
    chi = keep;
  }
  return st;
}

// ----------------------------------------------------------------- serialization

void save_mps(const MatrixProductState& state, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "serialization assumes a little-endian host");
  state.check_consistent();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  out.write("MMPS", 4);
  std::uint32_t version = 1;
  write_bytes(out, &version, 4);
  std::uint64_t n = state.num_sites(), d = state.local_dim;
  write_bytes(out, &n, 8);
  write_bytes(out, &d, 8);
  std::int64_t center = state.center ? *state.center : -1;
  write_bytes(out, &center, 8);
  write_bytes(out, &state.log_norm, 8);
  for (int b = 0; b <= state.num_sites(); ++b) {
    std::uint64_t bd = state.bond_dim(b);
    write_bytes(out, &bd, 8);
  }
  for (const auto& site : state.tensors)
    for (const auto& a : site)
      for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c) {
          double re = a(r, c).real(), im = a(r, c).imag();
          write_bytes(out, &re, 8);
          write_bytes(out, &im, 8);
        }
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path));
}

MatrixProductState load_mps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  char magic[4];
  read_bytes(in, magic, 4);
  if (std::memcmp(magic, "MMPS", 4) != 0)
    throw std::runtime_error("not an MPS container");
  std::uint32_t version = 0;
  read_bytes(in, &version, 4);
  if (version != 1)
    throw std::runtime_error(fmt::format("unsupported version {}", version));
  std::uint64_t n = 0, d = 0;
  read_bytes(in, &n, 8);
  read_bytes(in, &d, 8);
  if (n == 0 || n > 1000000 || d < 2 || d > 4096)
    throw std::runtime_error("corrupt MPS header");
  std::int64_t center = -1;
  MatrixProductState st;
  read_bytes(in, &center, 8);
  read_bytes(in, &st.log_norm, 8);
  std::vector<std::uint64_t> bonds(n + 1);
  for (auto& b : bonds) read_bytes(in, &b, 8);
  st.local_dim = static_cast<int>(d);
  if (center >= 0) st.center = static_cast<int>(center);
  st.tensors.resize(n);
  for (std::uint64_t j = 0; j < n; ++j) {
    st.tensors[j].resize(d);
    for (auto& a : st.tensors[j]) {
      a.resize(bonds[j], bonds[j + 1]);
      for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c) {
          double re, im;
          read_bytes(in, &re, 8);
          read_bytes(in, &im, 8);
          a(r, c) = Complex(re, im);
        }
    }
  }
  st.check_consistent();
  return st;
}

}  // namespace magicmps
