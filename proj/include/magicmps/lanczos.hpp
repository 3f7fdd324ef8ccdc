#pragma once
// Lanczos iteration for the lowest eigenpair of a Hermitian operator given
// only its action on a vector.  Full reorthogonalization; restart until the
// residual converges or the iteration budget runs out.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace magicmps {

template <class Vec>
struct LanczosResult {
  double eigenvalue = 0.0;
  Vec eigenvector;
  int iterations = 0;
  bool converged = false;
};

namespace detail {
inline double real_part(double x) { return x; }
inline double real_part(const std::complex<double>& x) { return x.real(); }
}  // namespace detail

// apply(x, y) writes y = H x.  `init` seeds the Krylov space and must be
// nonzero.
template <class Vec, class MatVec>
LanczosResult<Vec> lanczos_lowest(const MatVec& apply, const Vec& init,
                                  int max_iters, double tol) {
  const long dim = init.size();
  if (dim == 0) throw std::invalid_argument("lanczos_lowest: empty operator");
  if (init.norm() < 1e-300)
    throw std::invalid_argument("lanczos_lowest: zero starting vector");

  LanczosResult<Vec> result;
  result.eigenvector = init / init.norm();

  const int max_space = static_cast<int>(std::min<long>(max_iters, dim));
  for (int restart = 0; restart < 4 && !result.converged; ++restart) {
    std::vector<Vec> basis;
    basis.reserve(max_space);
    basis.push_back(result.eigenvector);
    std::vector<double> alpha, beta;
    Vec w(dim);

    for (int k = 0; k < max_space; ++k) {
      apply(basis[k], w);
      ++result.iterations;
      alpha.push_back(detail::real_part(basis[k].dot(w)));
      w -= alpha[k] * basis[k];
      if (k > 0) w -= beta[k - 1] * basis[k - 1];
      // Two-pass reorthogonalization keeps the basis clean for long runs.
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& b : basis) w -= b.dot(w) * b;
      const double nw = w.norm();
      if (nw < 1e-12 || k == max_space - 1) break;
      beta.push_back(nw);
      basis.push_back(w / nw);
    }

    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const Eigen::VectorXd coeff = es.eigenvectors().col(0);
    result.eigenvalue = es.eigenvalues()(0);

    Vec ritz = coeff(0) * basis[0];
    for (int i = 1; i < m; ++i) ritz += coeff(i) * basis[i];
    ritz /= ritz.norm();
    result.eigenvector = ritz;

    apply(ritz, w);
    const double residual = (w - result.eigenvalue * ritz).norm();
    result.converged =
        residual < tol * std::max(1.0, std::abs(result.eigenvalue));
    if (m >= dim) {  // exhausted the space: the Ritz pair is exact
      result.converged = true;
    }
  }
  return result;
}

}  // namespace magicmps
