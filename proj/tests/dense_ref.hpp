#pragma once
// Naive dense reference implementations used as test oracles.  These are
// deliberately written with explicit index loops and Kronecker products,
// independent of the library's transfer-matrix code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace dense_ref {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline long ipow(long base, int e) {
  long r = 1;
  while (e-- > 0) r *= base;
  return r;
}

// Density matrix of the kept sites (site 0 is the most significant digit).
inline Mat partial_trace(const Vec& psi, std::vector<int> keep, int d, int n) {
  std::sort(keep.begin(), keep.end());
  std::vector<int> rest;
  for (int j = 0; j < n; ++j)
    if (!std::binary_search(keep.begin(), keep.end(), j)) rest.push_back(j);
  long dk = ipow(d, static_cast<int>(keep.size()));
  long dr = ipow(d, static_cast<int>(rest.size()));
  std::vector<long> weight(n);
  for (int j = 0; j < n; ++j) weight[j] = ipow(d, n - 1 - j);

  auto full_index = [&](long ki, long ri) {
    long idx = 0;
    for (int a = static_cast<int>(keep.size()) - 1; a >= 0; --a) {
      idx += (ki % d) * weight[keep[a]];
      ki /= d;
    }
    for (int a = static_cast<int>(rest.size()) - 1; a >= 0; --a) {
      idx += (ri % d) * weight[rest[a]];
      ri /= d;
    }
    return idx;
  };

  Mat rho = Mat::Zero(dk, dk);
  for (long ki = 0; ki < dk; ++ki)
    for (long kj = 0; kj < dk; ++kj) {
      Complex acc = 0.0;
      for (long ri = 0; ri < dr; ++ri)
        acc += psi[full_index(ki, ri)] * std::conj(psi[full_index(kj, ri)]);
      rho(ki, kj) = acc;
    }
  return rho;
}

inline double renyi2(const Mat& rho) {
  return -std::log((rho * rho).trace().real());
}

inline double von_neumann_at_cut(const Vec& psi, int cut, int d, int n) {
  long rows = ipow(d, cut), cols = ipow(d, n - cut);
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = psi[r * cols + c];
  Eigen::JacobiSVD<Mat> svd(m);
  double s = 0.0;
  for (long i = 0; i < svd.singularValues().size(); ++i) {
    double p = svd.singularValues()[i];
    p *= p;
    if (p > 1e-15) s -= p * std::log(p);
  }
  return s;
}

// Single-qutrit Heisenberg-Weyl matrices built directly from clock and shift.
inline std::vector<Mat> weyl_matrices_d3() {
  const Complex w = std::exp(Complex(0, 2.0 * M_PI / 3.0));
  Mat z = Mat::Zero(3, 3), x = Mat::Zero(3, 3);
  for (int k = 0; k < 3; ++k) {
    z(k, k) = std::pow(w, k);
    x((k + 1) % 3, k) = 1.0;
  }
  std::vector<Mat> out;
  for (int a = 0; a < 3; ++a)
    for (int ap = 0; ap < 3; ++ap) {
      Mat za = Mat::Identity(3, 3), xa = Mat::Identity(3, 3);
      for (int i = 0; i < a; ++i) za = za * z;
      for (int i = 0; i < ap; ++i) xa = xa * x;
      out.push_back(std::pow(w, (3 - (a * ap * 2) % 3) % 3) * za * xa);
    }
  return out;
}

}  // namespace dense_ref
