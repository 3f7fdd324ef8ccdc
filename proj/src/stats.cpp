#include "magicmps/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace magicmps {

namespace {

constexpr long kFftThreshold = 10000;

double trace_mean(const std::vector<double>& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(f.size());
}

// c_f(t) = (1/(N_S - t)) sum_{n} (f_n - mu)(f_{n+t} - mu), t = 0..t_max.
std::vector<double> autocovariance(const std::vector<double>& f, int t_max) {
  const long n = static_cast<long>(f.size());
  const double mu = trace_mean(f);
  std::vector<double> cov(static_cast<std::size_t>(t_max) + 1, 0.0);
  if (n < kFftThreshold) {
    for (int t = 0; t <= t_max; ++t) {
      double s = 0.0;
      for (long i = 0; i + t < n; ++i) s += (f[i] - mu) * (f[i + t] - mu);
      cov[t] = s / static_cast<double>(n - t);
    }
    return cov;
  }
  // lag sums via a zero-padded correlation theorem pass
  long m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  for (long i = 0; i < n; ++i) padded[i] = f[i] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& z : spec) z = std::norm(z);
  std::vector<double> corr;
  fft.inv(corr, spec);
  for (int t = 0; t <= t_max; ++t)
    cov[t] = corr[t] / static_cast<double>(n - t);
  return cov;
}

void check_trace(const std::vector<double>& f, const char* what) {
  if (f.size() < 2)
    throw std::invalid_argument(
        fmt::format("{}: needs at least 2 samples, got {}", what, f.size()));
}

}  // namespace

std::vector<double> autocorr_function(const std::vector<double>& trace,
                                      int t_max) {
  check_trace(trace, "autocorr_function");
  if (t_max < 0 || t_max >= static_cast<long>(trace.size()))
    throw std::invalid_argument(
        fmt::format("autocorr_function: t_max {} outside [0, {})", t_max,
                    trace.size()));
  std::vector<double> cov = autocovariance(trace, t_max);
  const double c0 = cov[0];
  if (c0 <= 0.0)
    throw std::invalid_argument(
        "autocorr_function: constant trace has no autocorrelation");
  for (double& v : cov) v /= c0;
  return cov;
}

AutocorrTime integrated_autocorr_time(const std::vector<double>& trace,
                                      double c) {
  check_trace(trace, "integrated_autocorr_time");
  const long n = static_cast<long>(trace.size());
  const int t_max = static_cast<int>(n - 1);
  const std::vector<double> rho = autocorr_function(trace, t_max);

  AutocorrTime out;
  double run = 0.0;
  for (int m = 1; m <= t_max; ++m) {
    run += rho[m];
    const double tau = 1.0 + 2.0 * run;
    out.tau = tau;
    out.window = m;
    if (static_cast<double>(m) >= c * tau) {
      out.short_chain = m > n / 50;
      return out;
    }
  }
  out.converged = false;  // no window qualified; best effort at t_max
  out.short_chain = true;
  return out;
}

double corrected_std_error(const std::vector<double>& trace) {
  check_trace(trace, "corrected_std_error");
  const long n = static_cast<long>(trace.size());
  const double mu = trace_mean(trace);
  double var = 0.0;
  for (double v : trace) var += (v - mu) * (v - mu);
  var /= static_cast<double>(n - 1);
  if (var <= 0.0) return 0.0;
  const double tau = std::max(integrated_autocorr_time(trace).tau, 0.0);
  return std::sqrt(var * tau / static_cast<double>(n));
}

InverseChiSquaredFit fit_inverse_chi_squared(
    const std::vector<double>& chis, const std::vector<double>& values,
    const std::vector<double>& errors) {
  const std::size_t n = chis.size();
  if (values.size() != n)
    throw std::invalid_argument("fit_inverse_chi_squared: size mismatch");
  if (!errors.empty() && errors.size() != n)
    throw std::invalid_argument(
        "fit_inverse_chi_squared: one error bar per point or none");
  if (n < 3)
    throw std::invalid_argument(fmt::format(
        "fit_inverse_chi_squared: needs at least 3 points, got {}", n));

  std::vector<double> x(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (chis[i] <= 0.0)
      throw std::invalid_argument("fit_inverse_chi_squared: chi must be > 0");
    x[i] = 1.0 / (chis[i] * chis[i]);
    if (!errors.empty()) {
      if (errors[i] <= 0.0)
        throw std::invalid_argument(
            "fit_inverse_chi_squared: error bars must be > 0");
      w[i] = 1.0 / (errors[i] * errors[i]);
    }
  }

  double s = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s += w[i];
    sx += w[i] * x[i];
    sxx += w[i] * x[i] * x[i];
    sy += w[i] * values[i];
    sxy += w[i] * x[i] * values[i];
  }
  const double det = s * sxx - sx * sx;
  if (det <= 1e-300 * s * sxx || !(det > 0))
    throw std::invalid_argument(
        "fit_inverse_chi_squared: needs at least two distinct chi");

  InverseChiSquaredFit fit;
  fit.m0 = (sxx * sy - sx * sxy) / det;
  fit.c = (s * sxy - sx * sy) / det;

  const double y_bar = sy / s;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = values[i] - (fit.m0 + fit.c * x[i]);
    ss_res += w[i] * r * r;
    ss_tot += w[i] * (values[i] - y_bar) * (values[i] - y_bar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  // parameter covariance: (X^T W X)^{-1}, scaled by the residual variance
  // when the points came without error bars
  double scale = 1.0;
  if (errors.empty() && n > 2)
    scale = ss_res / static_cast<double>(n - 2);
  fit.m0_err = std::sqrt(std::max(scale * sxx / det, 0.0));
  fit.c_err = std::sqrt(std::max(scale * s / det, 0.0));
  return fit;
}

void write_autocorr_csv(std::ostream& out, const std::vector<double>& rho) {
  out << "t,rho\n";
  for (std::size_t t = 0; t < rho.size(); ++t)
    out << fmt::format("{},{:.17g}\n", t, rho[t]);
}

}  // namespace magicmps
