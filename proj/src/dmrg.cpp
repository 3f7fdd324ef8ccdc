#include "magicmps/dmrg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "magicmps/lanczos.hpp"

namespace magicmps {

namespace {

using RowMat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Env = std::vector<Matrix>;  // one (chi_bra x chi_ket) block per MPO bond

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

bool nonzero(const Matrix& m) { return m.cwiseAbs().maxCoeff() != 0.0; }

Env contract_left(const Env& left, const std::vector<std::vector<Matrix>>& w,
                  const SiteTensor& a) {
  const int d = static_cast<int>(a.size());
  const int br = static_cast<int>(w[0].size());
  const long chi = a[0].cols();
  Env next(br, Matrix::Zero(chi, chi));
  std::vector<Matrix> la(a.size());
  for (size_t l = 0; l < w.size(); ++l) {
    for (int t = 0; t < d; ++t) la[t].noalias() = left[l] * a[t];
    for (int r = 0; r < br; ++r) {
      if (!nonzero(w[l][r])) continue;
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
          const Complex coeff = w[l][r](s, t);
          if (coeff == Complex(0, 0)) continue;
          next[r].noalias() += coeff * (a[s].adjoint() * la[t]);
        }
    }
  }
  return next;
}

Env contract_right(const Env& right, const std::vector<std::vector<Matrix>>& w,
                   const SiteTensor& a) {
  const int d = static_cast<int>(a.size());
  const int bl = static_cast<int>(w.size());
  const int br = static_cast<int>(w[0].size());
  const long chi = a[0].rows();
  Env next(bl, Matrix::Zero(chi, chi));
  std::vector<Matrix> ra(a.size());
  for (int r = 0; r < br; ++r) {
    for (int t = 0; t < d; ++t) ra[t].noalias() = right[r] * a[t].transpose();
    for (int l = 0; l < bl; ++l) {
      if (!nonzero(w[l][r])) continue;
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
          const Complex coeff = w[l][r](s, t);
          if (coeff == Complex(0, 0)) continue;
          next[l].noalias() += coeff * (a[s].conjugate() * ra[t]);
        }
    }
  }
  return next;
}

// Random product state with total magnetization zero (m picked site by site
// among values that keep zero reachable), plus a small noise kick so the
// two-site updates can leave the initial symmetry sector pattern.
MatrixProductState initial_state(int n, unsigned long seed) {
  std::mt19937_64 gen(seed);
  std::vector<int> ks(n);
  int total = 0;
  for (int i = 0; i < n; ++i) {
    const int remaining = n - 1 - i;
    std::vector<int> allowed;
    for (int m : {0, 1, -1})
      if (std::abs(total + m) <= remaining) allowed.push_back(m);
    const int m = allowed[gen() % allowed.size()];
    total += m;
    ks[i] = (m + 3) % 3;
  }
  MatrixProductState state = basis_product_mps(n, 3, ks);
  std::normal_distribution<double> dist;
  for (SiteTensor& site : state.tensors)
    for (Matrix& block : site)
      for (long r = 0; r < block.rows(); ++r)
        for (long c = 0; c < block.cols(); ++c)
          block(r, c) += 0.05 * Complex(dist(gen), dist(gen));
  state.center.reset();
  state = canonicalize(state, 0);
  state.log_norm = 0.0;
  return state;
}

}  // namespace

DmrgResult dmrg_ground_state(const Mpo& mpo, const DmrgOptions& opts) {
  const int n = mpo.num_sites();
  if (n < 2)
    throw std::invalid_argument("dmrg_ground_state: need at least two sites");
  if (opts.chi_max < 1)
    throw std::invalid_argument("dmrg_ground_state: chi_max must be positive");
  const int d = mpo.local_dim;

  DmrgResult result;
  result.state = initial_state(n, opts.seed);
  MatrixProductState& state = result.state;

  std::vector<Env> lenv(n + 1), renv(n + 1);
  lenv[0] = Env(1, Matrix::Ones(1, 1));
  renv[n] = Env(1, Matrix::Ones(1, 1));
  for (int i = n - 1; i >= 1; --i)
    renv[i] = contract_right(renv[i + 1], mpo.tensors[i], state.tensors[i]);

  double energy = 0.0;

  auto solve_bond = [&](int i, bool moving_right) {
    const long chi_l = state.bond_dim(i);
    const long chi_r = state.bond_dim(i + 2);
    const long rows = chi_l * d, cols = d * chi_r;

    // Effective operator as sum_c LW_c . theta . RW_c^T with row index
    // (alpha*d + s) and column index (t*chi_r + beta).
    const int mid = mpo.bond_dim(i + 1);
    std::vector<Matrix> lw, rw;
    lw.reserve(mid);
    rw.reserve(mid);
    for (int c = 0; c < mid; ++c) {
      Matrix l = Matrix::Zero(rows, rows), r = Matrix::Zero(cols, cols);
      for (size_t a = 0; a < mpo.tensors[i].size(); ++a)
        if (nonzero(mpo.tensors[i][a][c]))
          l += kron(lenv[i][a], mpo.tensors[i][a][c]);
      for (size_t b = 0; b < mpo.tensors[i + 1][c].size(); ++b)
        if (nonzero(mpo.tensors[i + 1][c][b]))
          r += kron(mpo.tensors[i + 1][c][b], renv[i + 2][b]);
      lw.push_back(std::move(l));
      rw.push_back(std::move(r));
    }

    Vector theta(rows * cols);
    {
      Eigen::Map<RowMat> m1(theta.data(), rows, cols);
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
          const Matrix block = state.tensors[i][s] * state.tensors[i + 1][t];
          for (long al = 0; al < chi_l; ++al)
            m1.block(al * d + s, t * chi_r, 1, chi_r) = block.row(al);
        }
    }
    theta /= theta.norm();

    auto apply = [&](const Vector& x, Vector& y) {
      Eigen::Map<const RowMat> xm(x.data(), rows, cols);
      Eigen::Map<RowMat> ym(y.data(), rows, cols);
      ym.setZero();
      for (int c = 0; c < mid; ++c)
        ym.noalias() += lw[c] * (xm * rw[c].transpose());
    };
    const auto lan =
        lanczos_lowest(apply, theta, opts.lanczos_iters, opts.lanczos_tol);
    energy = lan.eigenvalue;

    const Matrix theta_mat =
        Eigen::Map<const RowMat>(lan.eigenvector.data(), rows, cols);
    Eigen::BDCSVD<Matrix> svd(theta_mat,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    long keep = 0;
    double kept_sq = 0.0;
    for (long k = 0; k < sv.size(); ++k) {
      if (k >= opts.chi_max) break;
      if (sv(k) * sv(k) < opts.cutoff && k > 0) break;
      kept_sq += sv(k) * sv(k);
      ++keep;
    }
    const Matrix u = svd.matrixU().leftCols(keep);
    const Matrix vh = svd.matrixV().leftCols(keep).adjoint();
    const Vector s =
        (sv.head(keep) / std::sqrt(kept_sq)).cast<Complex>();

    SiteTensor left(d), right(d);
    for (int t = 0; t < d; ++t) {
      left[t].resize(chi_l, keep);
      right[t].resize(keep, chi_r);
    }
    if (moving_right) {
      const Matrix sv_right = s.asDiagonal() * vh;
      for (int t = 0; t < d; ++t) {
        for (long al = 0; al < chi_l; ++al)
          left[t].row(al) = u.row(al * d + t);
        right[t] = sv_right.middleCols(t * chi_r, chi_r);
      }
      state.tensors[i] = std::move(left);
      state.tensors[i + 1] = std::move(right);
      state.center = i + 1;
      lenv[i + 1] = contract_left(lenv[i], mpo.tensors[i], state.tensors[i]);
    } else {
      const Matrix us = u * s.asDiagonal();
      for (int t = 0; t < d; ++t) {
        for (long al = 0; al < chi_l; ++al)
          left[t].row(al) = us.row(al * d + t);
        right[t] = vh.middleCols(t * chi_r, chi_r);
      }
      state.tensors[i] = std::move(left);
      state.tensors[i + 1] = std::move(right);
      state.center = i;
      renv[i + 1] =
          contract_right(renv[i + 2], mpo.tensors[i + 1], state.tensors[i + 1]);
    }
  };

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (int i = 0; i + 1 < n; ++i) solve_bond(i, true);
    for (int i = n - 2; i >= 0; --i) solve_bond(i, false);
    result.sweep_energies.push_back(energy);
    const size_t k = result.sweep_energies.size();
    if (k >= 2) {
      const double diff =
          std::abs(result.sweep_energies[k - 1] - result.sweep_energies[k - 2]);
      if (diff < opts.energy_tol * std::max(1.0, std::abs(energy))) {
        result.converged = true;
        break;
      }
    }
  }
  result.energy = energy;
  state.log_norm = 0.0;
  return result;
}

}  // namespace magicmps
