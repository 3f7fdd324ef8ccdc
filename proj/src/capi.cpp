#include "magicmps/magicmps.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "magicmps/dmrg.hpp"
#include "magicmps/markov.hpp"
#include "magicmps/model.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"
#include "magicmps/pauli_mps.hpp"
#include "magicmps/perfect_sampling.hpp"
#include "magicmps/stats.hpp"

struct mm_state {
  magicmps::MatrixProductState impl;
};

namespace {

using namespace magicmps;

thread_local std::string g_last_error;

void set_error(std::string msg) { g_last_error = std::move(msg); }

template <typename F>
mm_status wrap(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return MM_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return MM_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return MM_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MM_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return MM_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string("null ") + what);
}

const MatrixProductState& deref(const mm_state* state) {
  require(state, "state handle");
  return state->impl;
}

Partition to_partition(const int* blocks, int n_blocks, const char* what) {
  require(blocks, what);
  if (n_blocks <= 0)
    throw std::invalid_argument(std::string(what) + ": need at least one block");
  Partition out = Partition::block(blocks[0], blocks[1]);
  for (int k = 1; k < n_blocks; ++k)
    out = disjoint_union(out,
                         Partition::block(blocks[2 * k], blocks[2 * k + 1]));
  return out;
}

DmrgOptions to_dmrg_options(const mm_dmrg_options* opts) {
  DmrgOptions out;
  if (!opts) return out;
  out.chi_max = opts->chi_max;
  out.cutoff = opts->cutoff;
  out.max_sweeps = opts->max_sweeps;
  out.energy_tol = opts->energy_tol;
  out.lanczos_iters = opts->lanczos_iters;
  out.lanczos_tol = opts->lanczos_tol;
  out.seed = static_cast<unsigned long>(opts->seed);
  return out;
}

MarkovConfig to_markov_config(const mm_markov_options* opts) {
  MarkovConfig out;
  if (!opts) return out;
  out.move_mix = opts->move_mix;
  out.u1_moves = opts->u1_moves != 0;
  out.burn_in = static_cast<long>(opts->burn_in);
  out.thinning = static_cast<long>(opts->thinning);
  out.n_samples = static_cast<long>(opts->n_samples);
  out.seed = opts->seed;
  out.recompute_every = static_cast<long>(opts->recompute_every);
  return out;
}

void export_estimate(const Estimate& est, mm_estimate* out) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  out->mean = est.mean;
  out->std_error = est.std_error;
  out->n_samples = est.n_samples;
  out->tau = est.tau ? *est.tau : nan;
  out->acceptance_rate = est.acceptance_rate ? *est.acceptance_rate : nan;
}

void export_trace(const std::vector<MarkovRecord>& trace, long long* step,
                  double* log_weight, double* observable) {
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (step) step[k] = trace[k].step;
    if (log_weight) log_weight[k] = trace[k].log_weight;
    if (observable) observable[k] = trace[k].observable;
  }
}

bool wants_trace(const long long* step, const double* log_weight,
                 const double* observable) {
  return step || log_weight || observable;
}

template <typename Estimator>
void ratio_markov(const mm_state* state, const int* blocks_a, int n_blocks_a,
                  const int* blocks_b, int n_blocks_b,
                  const mm_markov_options* opts, mm_estimate* out,
                  long long* trace_step, double* trace_log_weight,
                  double* trace_observable, Estimator&& estimator) {
  require(out, "output estimate");
  const MatrixProductState& psi = deref(state);
  const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
  const Partition a = to_partition(blocks_a, n_blocks_a, "blocks_a");
  const Partition b = to_partition(blocks_b, n_blocks_b, "blocks_b");
  const MarkovConfig cfg = to_markov_config(opts);
  if (wants_trace(trace_step, trace_log_weight, trace_observable)) {
    std::vector<MarkovRecord> trace;
    export_estimate(estimator(psi, alg, a, b, cfg, &trace), out);
    export_trace(trace, trace_step, trace_log_weight, trace_observable);
  } else {
    export_estimate(estimator(psi, alg, a, b, cfg, nullptr), out);
  }
}

}  // namespace

extern "C" {

const char* mm_last_error(void) { return g_last_error.c_str(); }

const char* mm_version(void) { return "1.0.0"; }

/* ------------------------------------------------------------------ states */

void mm_state_free(mm_state* state) { delete state; }

mm_status mm_state_random(int n_sites, int local_dim, int chi,
                          unsigned long long seed, mm_state** out) {
  return wrap([&] {
    require(out, "output handle");
    *out = new mm_state{random_mps(n_sites, local_dim, chi, seed)};
  });
}

mm_status mm_state_save(const mm_state* state, const char* path) {
  return wrap([&] {
    require(path, "path");
    save_mps(deref(state), path);
  });
}

mm_status mm_state_load(const char* path, mm_state** out) {
  return wrap([&] {
    require(path, "path");
    require(out, "output handle");
    *out = new mm_state{load_mps(path)};
  });
}

int mm_state_num_sites(const mm_state* state) {
  return state ? state->impl.num_sites() : -1;
}

int mm_state_local_dim(const mm_state* state) {
  return state ? state->impl.local_dim : -1;
}

int mm_state_max_bond(const mm_state* state) {
  return state ? state->impl.max_bond() : -1;
}

/* --------------------------------------------------------- model and DMRG */

void mm_dmrg_options_init(mm_dmrg_options* opts) {
  if (!opts) return;
  const DmrgOptions d;
  opts->chi_max = d.chi_max;
  opts->cutoff = d.cutoff;
  opts->max_sweeps = d.max_sweeps;
  opts->energy_tol = d.energy_tol;
  opts->lanczos_iters = d.lanczos_iters;
  opts->lanczos_tol = d.lanczos_tol;
  opts->seed = d.seed;
}

int mm_num_presets(void) {
  static const int n = static_cast<int>(list_presets().size());
  return n;
}

const char* mm_preset_name(int index) {
  static const std::vector<CriticalPoint> presets = list_presets();
  if (index < 0 || index >= static_cast<int>(presets.size())) return nullptr;
  return presets[static_cast<std::size_t>(index)].name.c_str();
}

mm_status mm_preset_params(const char* name, double* jz, double* dz) {
  return wrap([&] {
    require(name, "preset name");
    const CriticalPoint point = preset_critical_point(name);
    if (jz) *jz = point.params.jz;
    if (dz) *dz = point.params.dz;
  });
}

mm_status mm_ground_state(int n_sites, double jz, double dz,
                          const mm_dmrg_options* opts, mm_state** out,
                          double* energy, int* converged,
                          double* sweep_energies, int* n_sweeps) {
  return wrap([&] {
    require(out, "output handle");
    const DmrgOptions options = to_dmrg_options(opts);
    DmrgResult result =
        dmrg_ground_state(xxz_mpo(n_sites, ModelParams{jz, dz}), options);
    if (energy) *energy = result.energy;
    if (converged) *converged = result.converged ? 1 : 0;
    const int sweeps = std::min(static_cast<int>(result.sweep_energies.size()),
                                options.max_sweeps);
    if (sweep_energies)
      std::memcpy(sweep_energies, result.sweep_energies.data(),
                  static_cast<std::size_t>(sweeps) * sizeof(double));
    if (n_sweeps) *n_sweeps = sweeps;
    *out = new mm_state{std::move(result.state)};
  });
}

/* ----------------------------------------------------------- entanglement */

mm_status mm_entanglement_entropy(const mm_state* state, int cut,
                                  double* out) {
  return wrap([&] {
    require(out, "output value");
    *out = entanglement_entropy(deref(state), cut);
  });
}

mm_status mm_renyi2_entropy(const mm_state* state, const int* blocks,
                            int n_blocks, int chi_cap, double* out) {
  return wrap([&] {
    require(out, "output value");
    const Partition part = to_partition(blocks, n_blocks, "blocks");
    *out = chi_cap > 0 ? renyi2_entropy_exact(deref(state), part, chi_cap)
                       : renyi2_entropy_exact(deref(state), part);
  });
}

mm_status mm_mutual_info2(const mm_state* state, const int* blocks_a,
                          int n_blocks_a, const int* blocks_b, int n_blocks_b,
                          int chi_cap, double* out) {
  return wrap([&] {
    require(out, "output value");
    const Partition a = to_partition(blocks_a, n_blocks_a, "blocks_a");
    const Partition b = to_partition(blocks_b, n_blocks_b, "blocks_b");
    *out = chi_cap > 0 ? mutual_info_renyi2_exact(deref(state), a, b, chi_cap)
                       : mutual_info_renyi2_exact(deref(state), a, b);
  });
}

/* ------------------------------------------------------------- estimators */

mm_status mm_sre_brute_force(const mm_state* state, double order,
                             double* out) {
  return wrap([&] {
    require(out, "output value");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    *out = brute_force_sre(alg, mps_to_dense(psi), order);
  });
}

mm_status mm_sre_replica(const mm_state* state, int order, int chi_p,
                         double* out, double* truncation_weight) {
  return wrap([&] {
    require(out, "output value");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    double built_weight = 0.0;
    PauliMPS pmps;
    if (chi_p > 0) {
      CompressedPauli compressed = compressed_pauli_mps(psi, alg, chi_p);
      built_weight = compressed.truncation_weight;
      pmps = std::move(compressed.pmps);
    } else {
      pmps = to_pauli_mps(psi, alg);
    }
    const SreReplicaResult result = sre_replica(
        pmps, order, chi_p > 0 ? ReplicaMode::compressed : ReplicaMode::exact,
        chi_p);
    *out = result.value;
    if (truncation_weight)
      *truncation_weight = built_weight + result.truncation_weight;
  });
}

mm_status mm_sre_sampling(const mm_state* state, double order,
                          long long n_samples, unsigned long long seed,
                          int threads, mm_estimate* out) {
  return wrap([&] {
    require(out, "output estimate");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    SamplingOptions opts;
    opts.num_samples = static_cast<long>(n_samples);
    opts.seed = static_cast<unsigned long>(seed);
    opts.threads = threads;
    export_estimate(estimate_sre_sampling(psi, alg, order, opts), out);
  });
}

void mm_markov_options_init(mm_markov_options* opts) {
  if (!opts) return;
  const MarkovConfig d;
  opts->move_mix = d.move_mix;
  opts->u1_moves = d.u1_moves ? 1 : 0;
  opts->burn_in = d.burn_in;
  opts->thinning = d.thinning;
  opts->n_samples = d.n_samples;
  opts->seed = d.seed;
  opts->recompute_every = d.recompute_every;
}

mm_status mm_sre_markov(const mm_state* state, double order,
                        const mm_markov_options* opts, mm_estimate* out,
                        long long* trace_step, double* trace_log_weight,
                        double* trace_observable) {
  return wrap([&] {
    require(out, "output estimate");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    const MarkovConfig cfg = to_markov_config(opts);
    if (wants_trace(trace_step, trace_log_weight, trace_observable)) {
      std::vector<MarkovRecord> trace;
      export_estimate(estimate_sre_markov(psi, alg, order, cfg, &trace), out);
      export_trace(trace, trace_step, trace_log_weight, trace_observable);
    } else {
      export_estimate(estimate_sre_markov(psi, alg, order, cfg), out);
    }
  });
}

mm_status mm_w_markov(const mm_state* state, const int* blocks_a,
                      int n_blocks_a, const int* blocks_b, int n_blocks_b,
                      const mm_markov_options* opts, mm_estimate* out,
                      long long* trace_step, double* trace_log_weight,
                      double* trace_observable) {
  return wrap([&] {
    ratio_markov(state, blocks_a, n_blocks_a, blocks_b, n_blocks_b, opts, out,
                 trace_step, trace_log_weight, trace_observable,
                 [](auto&&... args) { return estimate_w(args...); });
  });
}

mm_status mm_mutual_info2_markov(const mm_state* state, const int* blocks_a,
                                 int n_blocks_a, const int* blocks_b,
                                 int n_blocks_b,
                                 const mm_markov_options* opts,
                                 mm_estimate* out, long long* trace_step,
                                 double* trace_log_weight,
                                 double* trace_observable) {
  return wrap([&] {
    ratio_markov(state, blocks_a, n_blocks_a, blocks_b, n_blocks_b, opts, out,
                 trace_step, trace_log_weight, trace_observable,
                 [](auto&&... args) { return estimate_mutual_info2(args...); });
  });
}

mm_status mm_long_range_magic_markov(const mm_state* state,
                                     const int* blocks_a, int n_blocks_a,
                                     const int* blocks_b, int n_blocks_b,
                                     const mm_markov_options* opts,
                                     mm_estimate* out) {
  return wrap([&] {
    require(out, "output estimate");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    const Partition a = to_partition(blocks_a, n_blocks_a, "blocks_a");
    const Partition b = to_partition(blocks_b, n_blocks_b, "blocks_b");
    export_estimate(
        estimate_long_range_magic(psi, alg, a, b, to_markov_config(opts)),
        out);
  });
}

mm_status mm_long_range_magic_replica(const mm_state* state,
                                      const int* blocks_a, int n_blocks_a,
                                      const int* blocks_b, int n_blocks_b,
                                      int chi_p, double* out,
                                      double* truncation_weight) {
  return wrap([&] {
    require(out, "output value");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    const Partition a = to_partition(blocks_a, n_blocks_a, "blocks_a");
    const Partition b = to_partition(blocks_b, n_blocks_b, "blocks_b");
    const SreReplicaResult result =
        long_range_magic_pauli_mps(psi, alg, a, b, chi_p);
    *out = result.value;
    if (truncation_weight) *truncation_weight = result.truncation_weight;
  });
}

mm_status mm_long_range_magic_brute_force(const mm_state* state,
                                          const int* blocks_a, int n_blocks_a,
                                          const int* blocks_b, int n_blocks_b,
                                          double* out) {
  return wrap([&] {
    require(out, "output value");
    const MatrixProductState& psi = deref(state);
    const QuditAlgebra alg = QuditAlgebra::make(psi.local_dim);
    const Partition a = to_partition(blocks_a, n_blocks_a, "blocks_a");
    const Partition b = to_partition(blocks_b, n_blocks_b, "blocks_b");
    *out = brute_force_long_range_magic(alg, mps_to_dense(psi), a, b);
  });
}

/* ------------------------------------------------------- trace statistics */

mm_status mm_autocorr_function(const double* trace, long long n, int t_max,
                               double* rho) {
  return wrap([&] {
    require(trace, "trace");
    require(rho, "output array");
    const std::vector<double> values(trace, trace + n);
    const std::vector<double> result = autocorr_function(values, t_max);
    std::memcpy(rho, result.data(), result.size() * sizeof(double));
  });
}

mm_status mm_autocorr_time(const double* trace, long long n, double c,
                           double* tau, int* window, int* converged,
                           int* short_chain) {
  return wrap([&] {
    require(trace, "trace");
    require(tau, "output value");
    const std::vector<double> values(trace, trace + n);
    const AutocorrTime result = c > 0.0
                                    ? integrated_autocorr_time(values, c)
                                    : integrated_autocorr_time(values);
    *tau = result.tau;
    if (window) *window = result.window;
    if (converged) *converged = result.converged ? 1 : 0;
    if (short_chain) *short_chain = result.short_chain ? 1 : 0;
  });
}

mm_status mm_fit_inverse_chi_squared(const double* chis, const double* values,
                                     const double* errors, int n_points,
                                     double* m0, double* c_coef,
                                     double* m0_err, double* c_err,
                                     double* r_squared) {
  return wrap([&] {
    require(chis, "chis");
    require(values, "values");
    require(m0, "output m0");
    require(c_coef, "output coefficient");
    if (n_points <= 0)
      throw std::invalid_argument("fit: need a positive point count");
    const std::vector<double> x(chis, chis + n_points);
    const std::vector<double> y(values, values + n_points);
    const std::vector<double> e =
        errors ? std::vector<double>(errors, errors + n_points)
               : std::vector<double>{};
    const InverseChiSquaredFit fit = fit_inverse_chi_squared(x, y, e);
    *m0 = fit.m0;
    *c_coef = fit.c;
    if (m0_err) *m0_err = fit.m0_err;
    if (c_err) *c_err = fit.c_err;
    if (r_squared) *r_squared = fit.r_squared;
  });
}

} /* extern "C" */
