#pragma once
// Autocorrelation analysis and error bars for Markov-chain traces, plus the
// 1/chi^2 extrapolation fit used by the bond-dimension scans.

#include <ostream>
#include <string>
#include <vector>

namespace magicmps {

struct ChainTrace {
  std::vector<double> values;
  std::string label;
};

// Normalized autocorrelation rho_f(t) for t = 0..t_max, with
//   c_f(t) = (1/(N_S - t)) sum_n (f_n - mu)(f_{n+t} - mu).
// Uses an FFT for long traces and a direct sum below that; the two agree to
// machine precision.  Throws for a constant trace (c_f(0) = 0).
std::vector<double> autocorr_function(const std::vector<double>& trace,
                                      int t_max);

struct AutocorrTime {
  double tau = 1.0;
  int window = 0;      // Sokal window M actually used
  bool converged = true;   // false: no M <= t_max satisfied M >= c*tau(M)
  bool short_chain = false;  // window exceeds N_S/50; tau is unreliable
};

// Integrated autocorrelation time tau = 1 + 2 sum_{t<=M} rho_f(t) with the
// self-consistent window: the smallest M satisfying M >= c*tau(M).
AutocorrTime integrated_autocorr_time(const std::vector<double>& trace,
                                      double c = 5.0);

// sample_std * sqrt(tau / N_S); returns 0 for a constant trace.
double corrected_std_error(const std::vector<double>& trace);

// Weighted least squares for value = m0 + c/chi^2.
struct InverseChiSquaredFit {
  double m0 = 0.0;
  double c = 0.0;
  double m0_err = 0.0;
  double c_err = 0.0;
  double r_squared = 0.0;
};

// errors may be empty (unweighted); otherwise one positive sigma per point.
// Needs at least 3 points with distinct chi.
InverseChiSquaredFit fit_inverse_chi_squared(
    const std::vector<double>& chis, const std::vector<double>& values,
    const std::vector<double>& errors = {});

// CSV rows "t,rho" for an autocorrelation table.
void write_autocorr_csv(std::ostream& out, const std::vector<double>& rho);

}  // namespace magicmps
