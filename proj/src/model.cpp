#include "magicmps/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "magicmps/lanczos.hpp"

namespace magicmps {

namespace {

constexpr int kMaxDenseSites = 8;
constexpr int kMaxExactSites = 10;

long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// m value held by basis state k (k = m mod 3).
constexpr int kMagnet[3] = {0, 1, -1};

}  // namespace

SpinOneOperators SpinOneOperators::make() {
  SpinOneOperators ops;
  const double r2 = std::sqrt(2.0);
  ops.sz = Matrix::Zero(3, 3);
  ops.sz(1, 1) = 1.0;
  ops.sz(2, 2) = -1.0;
  ops.sp = Matrix::Zero(3, 3);
  ops.sp(1, 0) = r2;  // m = 0 -> +1
  ops.sp(0, 2) = r2;  // m = -1 -> 0
  ops.sm = ops.sp.adjoint();
  ops.sx = 0.5 * (ops.sp + ops.sm);
  ops.sy = Complex(0.0, -0.5) * (ops.sp - ops.sm);
  ops.sz2 = ops.sz * ops.sz;
  ops.id = Matrix::Identity(3, 3);
  return ops;
}

int Mpo::bond_dim(int i) const {
  if (i < 0 || i > num_sites())
    throw std::out_of_range("Mpo::bond_dim: index out of range");
  if (i == num_sites()) return 1;
  return static_cast<int>(tensors[i].size());
}

Mpo xxz_mpo(int n_sites, const ModelParams& params) {
  if (n_sites < 2)
    throw std::invalid_argument("xxz_mpo: need at least two sites");
  const SpinOneOperators op = SpinOneOperators::make();
  const Matrix zero = Matrix::Zero(3, 3);

  // Lower-triangular bulk tensor; row 4 starts new terms, column 0 closes
  // them.  SxSx + SySy enters as (S+S- + S-S+)/2.
  std::vector<std::vector<Matrix>> bulk(5, std::vector<Matrix>(5, zero));
  bulk[0][0] = op.id;
  bulk[1][0] = op.sp;
  bulk[2][0] = op.sm;
  bulk[3][0] = op.sz;
  bulk[4][0] = params.dz * op.sz2;
  bulk[4][1] = 0.5 * op.sm;
  bulk[4][2] = 0.5 * op.sp;
  bulk[4][3] = params.jz * op.sz;
  bulk[4][4] = op.id;

  Mpo mpo;
  mpo.local_dim = 3;
  mpo.tensors.resize(n_sites);
  // First site: the last row; last site: the first column.
  mpo.tensors[0] = {bulk[4]};
  for (int i = 1; i + 1 < n_sites; ++i) mpo.tensors[i] = bulk;
  mpo.tensors[n_sites - 1].assign(5, std::vector<Matrix>(1, zero));
  for (int l = 0; l < 5; ++l) mpo.tensors[n_sites - 1][l][0] = bulk[l][0];
  return mpo;
}

Matrix mpo_to_dense(const Mpo& mpo) {
  const int n = mpo.num_sites();
  if (n > kMaxDenseSites)
    throw std::runtime_error("mpo_to_dense: capped at 8 sites");
  const int d = mpo.local_dim;
  // Running block-row of partial contractions indexed by the open MPO bond.
  std::vector<Matrix> acc(1, Matrix::Ones(1, 1));
  for (int i = 0; i < n; ++i) {
    const int br = mpo.bond_dim(i + 1);
    const long dim = acc[0].rows() * d;
    std::vector<Matrix> next(br, Matrix::Zero(dim, dim));
    for (size_t l = 0; l < mpo.tensors[i].size(); ++l)
      for (int r = 0; r < br; ++r) {
        const Matrix& block = mpo.tensors[i][l][r];
        if (block.cwiseAbs().maxCoeff() == 0.0) continue;
        for (long a = 0; a < acc[l].rows(); ++a)
          for (long b = 0; b < acc[l].cols(); ++b) {
            if (acc[l](a, b) == Complex(0, 0)) continue;
            next[r].block(a * d, b * d, d, d) += acc[l](a, b) * block;
          }
      }
    acc = std::move(next);
  }
  return acc[0];
}

double mpo_expectation(const MatrixProductState& state, const Mpo& mpo) {
  state.check_consistent();
  if (state.num_sites() != mpo.num_sites() ||
      state.local_dim != mpo.local_dim)
    throw std::invalid_argument("mpo_expectation: shape mismatch");
  const int n = state.num_sites();
  std::vector<Matrix> env(1, Matrix::Ones(1, 1));
  for (int i = 0; i < n; ++i) {
    const int br = mpo.bond_dim(i + 1);
    const int chi = state.bond_dim(i + 1);
    std::vector<Matrix> next(br, Matrix::Zero(chi, chi));
    for (size_t l = 0; l < mpo.tensors[i].size(); ++l)
      for (int r = 0; r < br; ++r) {
        const Matrix& block = mpo.tensors[i][l][r];
        if (block.cwiseAbs().maxCoeff() == 0.0) continue;
        for (int s = 0; s < state.local_dim; ++s)
          for (int t = 0; t < state.local_dim; ++t) {
            if (block(s, t) == Complex(0, 0)) continue;
            next[r].noalias() += block(s, t) *
                                 (state.tensors[i][s].adjoint() *
                                  (env[l] * state.tensors[i][t]));
          }
      }
    env = std::move(next);
  }
  return (env[0](0, 0) * std::exp(2.0 * state.log_norm)).real();
}

namespace {

// Structured matvec for the chain on an explicit basis-index list.  The
// Hamiltonian is real in this basis; work in doubles.
struct ExactBasis {
  int n = 0;
  ModelParams params;
  std::vector<long> states;          // full-index of each basis vector
  std::vector<long> position;        // full-index -> basis slot (-1 if absent)

  static ExactBasis make(int n, const ModelParams& params, bool restrict_sector) {
    ExactBasis basis;
    basis.n = n;
    basis.params = params;
    const long dim = ipow(3, n);
    basis.position.assign(dim, -1);
    for (long idx = 0; idx < dim; ++idx) {
      if (restrict_sector) {
        long rest = idx;
        int total = 0;
        for (int i = 0; i < n; ++i) {
          total += kMagnet[rest % 3];
          rest /= 3;
        }
        if (total != 0) continue;
      }
      basis.position[idx] = static_cast<long>(basis.states.size());
      basis.states.push_back(idx);
    }
    return basis;
  }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero();
    std::vector<int> m(n);
    for (long slot = 0; slot < static_cast<long>(states.size()); ++slot) {
      const double amp = x(slot);
      if (amp == 0.0) continue;
      const long idx = states[slot];
      long rest = idx;
      for (int i = 0; i < n; ++i) {
        m[i] = kMagnet[rest % 3];
        rest /= 3;
      }
      double diag = 0.0;
      for (int i = 0; i < n; ++i) {
        diag += params.dz * m[i] * m[i];
        if (i + 1 < n) diag += params.jz * m[i] * m[i + 1];
      }
      y(slot) += diag * amp;
      // Transverse part: every allowed neighbor hop (m_i, m_{i+1}) ->
      // (m_i +- 1, m_{i+1} -+ 1) has amplitude 1 because each S+- step
      // carries sqrt(2) and the bond term carries 1/2.
      for (int i = 0; i + 1 < n; ++i) {
        const long wi = ipow(3, i), wj = ipow(3, i + 1);
        for (int dir : {+1, -1}) {
          const int mi = m[i] + dir, mj = m[i + 1] - dir;
          if (mi < -1 || mi > 1 || mj < -1 || mj > 1) continue;
          const long target = idx + (((mi + 3) % 3) - ((m[i] + 3) % 3)) * wi +
                              (((mj + 3) % 3) - ((m[i + 1] + 3) % 3)) * wj;
          const long tslot = position[target];
          if (tslot >= 0) y(tslot) += amp;
        }
      }
    }
  }
};

}  // namespace

ExactGroundState exact_ground_state(int n_sites, const ModelParams& params,
                                    bool restrict_sector, unsigned long seed) {
  if (n_sites < 2)
    throw std::invalid_argument("exact_ground_state: need at least two sites");
  if (n_sites > kMaxExactSites)
    throw std::runtime_error("exact_ground_state: capped at 10 sites");
  const ExactBasis basis = ExactBasis::make(n_sites, params, restrict_sector);
  const long dim = static_cast<long>(basis.states.size());

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd init(dim);
  for (long i = 0; i < dim; ++i) init(i) = dist(gen);

  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    basis.apply(x, y);
  };
  const auto lan = lanczos_lowest(apply, init, 180, 1e-12);
  if (!lan.converged)
    throw std::runtime_error("exact_ground_state: Lanczos did not converge");

  ExactGroundState out;
  out.energy = lan.eigenvalue;
  // Scatter back to the full Hilbert space.  Site 0 is the most significant
  // digit in the dense index, while the basis uses site 0 as the least
  // significant; convert here.
  out.amplitudes = Vector::Zero(ipow(3, n_sites));
  for (long slot = 0; slot < dim; ++slot) {
    long rest = basis.states[slot];
    long dense_idx = 0;
    long weight = ipow(3, n_sites - 1);
    for (int i = 0; i < n_sites; ++i) {
      dense_idx += (rest % 3) * weight;
      rest /= 3;
      weight /= 3;
    }
    out.amplitudes(dense_idx) = lan.eigenvector(slot);
  }
  return out;
}

CriticalPoint preset_critical_point(const std::string& name) {
  for (const CriticalPoint& p : list_presets())
    if (p.name == name) return p;
  throw std::invalid_argument(
      fmt::format("preset_critical_point: unknown preset '{}'", name));
}

std::vector<CriticalPoint> list_presets() {
  return {
      {"large-d-xy", {-0.183, 0.5}, "BKT"},
      {"haldane-large-d", {0.5, 0.635}, "Gaussian"},
      {"haldane-neel", {2.93, 2.6}, "Ising"},
  };
}

}  // namespace magicmps
