#pragma once
/* C interface to the magicmps core: opaque state handles, status-code
 * errors, and flat-array in/out parameters.  Every function is safe to
 * call from multiple threads as long as no two calls share an mm_state;
 * the error message returned by mm_last_error() is thread-local.
 *
 * Site blocks are passed as flattened half-open intervals: the array
 * {b0, e0, b1, e1, ...} of length 2*n_blocks denotes [b0,e0) u [b1,e1).
 * Option-struct pointers may be NULL to select the defaults.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mm_status {
  MM_OK = 0,
  MM_ERR_INVALID_ARGUMENT = 1, /* bad input; nothing was computed */
  MM_ERR_RUNTIME = 2,          /* I/O failure, cost-cap refusal, ... */
  MM_ERR_OUT_OF_MEMORY = 3,
  MM_ERR_INTERNAL = 4
} mm_status;

/* Message for the most recent failing call on this thread ("" if none). */
const char* mm_last_error(void);
const char* mm_version(void);

/* ------------------------------------------------------------------ states */

typedef struct mm_state mm_state; /* immutable matrix product state */

void mm_state_free(mm_state* state); /* NULL is fine */

mm_status mm_state_random(int n_sites, int local_dim, int chi,
                          unsigned long long seed, mm_state** out);

/* Binary container round-trip (format documented in docs/mps-container.md). */
mm_status mm_state_save(const mm_state* state, const char* path);
mm_status mm_state_load(const char* path, mm_state** out);

/* Queries return -1 on a NULL handle. */
int mm_state_num_sites(const mm_state* state);
int mm_state_local_dim(const mm_state* state);
int mm_state_max_bond(const mm_state* state);

/* --------------------------------------------------------- model and DMRG */

typedef struct mm_dmrg_options {
  int chi_max;
  double cutoff; /* discarded squared Schmidt weight per bond */
  int max_sweeps;
  double energy_tol; /* relative sweep-to-sweep change */
  int lanczos_iters;
  double lanczos_tol;
  unsigned long long seed;
} mm_dmrg_options;

void mm_dmrg_options_init(mm_dmrg_options* opts);

/* Pinned critical-point presets; index runs over 0..mm_num_presets()-1.
 * mm_preset_name returns a static string, NULL past the end. */
int mm_num_presets(void);
const char* mm_preset_name(int index);
mm_status mm_preset_params(const char* name, double* jz, double* dz);

/* Ground state of the spin-1 chain
 *   H = sum_i [Sx Sx + Sy Sy + jz Sz Sz] + dz sum_i (Sz)^2
 * with open boundaries.  energy, converged, sweep_energies (capacity
 * opts->max_sweeps) and n_sweeps may each be NULL. */
mm_status mm_ground_state(int n_sites, double jz, double dz,
                          const mm_dmrg_options* opts, mm_state** out,
                          double* energy, int* converged,
                          double* sweep_energies, int* n_sweeps);

/* ----------------------------------------------------------- entanglement */

/* Von Neumann entropy of the cut [0,cut) | [cut,N). */
mm_status mm_entanglement_entropy(const mm_state* state, int cut, double* out);

/* -log Tr rho_A^2 by the two-replica transfer contraction; handles
 * disconnected blocks.  chi_cap <= 0 selects the default refusal cap. */
mm_status mm_renyi2_entropy(const mm_state* state, const int* blocks,
                            int n_blocks, int chi_cap, double* out);
mm_status mm_mutual_info2(const mm_state* state, const int* blocks_a,
                          int n_blocks_a, const int* blocks_b, int n_blocks_b,
                          int chi_cap, double* out);

/* ------------------------------------------------------------- estimators */

typedef struct mm_estimate {
  double mean;
  double std_error;
  long long n_samples;
  double tau;             /* integrated autocorrelation time; NaN if n/a */
  double acceptance_rate; /* Metropolis acceptance fraction; NaN if n/a */
} mm_estimate;

/* Dense enumeration of all d^(2N) strings; practical to about 6 qutrits. */
mm_status mm_sre_brute_force(const mm_state* state, double order, double* out);

/* Replica contraction of the operator-basis representation, integer
 * order >= 2.  chi_p = 0 contracts exactly (refused above the cost cap),
 * chi_p > 0 compresses to that bond.  truncation_weight may be NULL. */
mm_status mm_sre_replica(const mm_state* state, int order, int chi_p,
                         double* out, double* truncation_weight);

/* Perfect sampling: independent draws, any order >= 0. */
mm_status mm_sre_sampling(const mm_state* state, double order,
                          long long n_samples, unsigned long long seed,
                          int threads, mm_estimate* out);

typedef struct mm_markov_options {
  double move_mix; /* probability of a phase move vs a shift move */
  int u1_moves;    /* nonzero: charge-conserving shift pairs;
                      zero: free single-site shifts */
  long long burn_in;  /* -1: 10 N steps */
  long long thinning; /* -1: N steps between records */
  long long n_samples;
  unsigned long long seed;
  long long recompute_every; /* cache self-check interval */
} mm_markov_options;

void mm_markov_options_init(mm_markov_options* opts);

/* Metropolis estimators.  When any trace_* array is non-NULL it must hold
 * opts->n_samples entries and receives the recorded chain (absolute step
 * index, log sampling weight, observable). */
mm_status mm_sre_markov(const mm_state* state, double order,
                        const mm_markov_options* opts, mm_estimate* out,
                        long long* trace_step, double* trace_log_weight,
                        double* trace_observable);

mm_status mm_w_markov(const mm_state* state, const int* blocks_a,
                      int n_blocks_a, const int* blocks_b, int n_blocks_b,
                      const mm_markov_options* opts, mm_estimate* out,
                      long long* trace_step, double* trace_log_weight,
                      double* trace_observable);

mm_status mm_mutual_info2_markov(const mm_state* state, const int* blocks_a,
                                 int n_blocks_a, const int* blocks_b,
                                 int n_blocks_b,
                                 const mm_markov_options* opts,
                                 mm_estimate* out, long long* trace_step,
                                 double* trace_log_weight,
                                 double* trace_observable);

/* L = I2 - W from two independent chains; errors added in quadrature. */
mm_status mm_long_range_magic_markov(const mm_state* state,
                                     const int* blocks_a, int n_blocks_a,
                                     const int* blocks_b, int n_blocks_b,
                                     const mm_markov_options* opts,
                                     mm_estimate* out);

/* Deterministic counterparts of the same quantity. */
mm_status mm_long_range_magic_replica(const mm_state* state,
                                      const int* blocks_a, int n_blocks_a,
                                      const int* blocks_b, int n_blocks_b,
                                      int chi_p, double* out,
                                      double* truncation_weight);
mm_status mm_long_range_magic_brute_force(const mm_state* state,
                                          const int* blocks_a, int n_blocks_a,
                                          const int* blocks_b, int n_blocks_b,
                                          double* out);

/* ------------------------------------------------------- trace statistics */

/* Normalized autocorrelation rho(0..t_max); rho must hold t_max+1 entries. */
mm_status mm_autocorr_function(const double* trace, long long n, int t_max,
                               double* rho);

/* Integrated autocorrelation time with the self-consistent window
 * (smallest M >= c*tau(M); c = 0 selects the default 5).  window,
 * converged and short_chain may each be NULL. */
mm_status mm_autocorr_time(const double* trace, long long n, double c,
                           double* tau, int* window, int* converged,
                           int* short_chain);

/* Least squares for value = m0 + c_coef / chi^2, weighted by 1/errors^2
 * when errors is non-NULL.  m0_err, c_err and r_squared may be NULL. */
mm_status mm_fit_inverse_chi_squared(const double* chis, const double* values,
                                     const double* errors, int n_points,
                                     double* m0, double* c_coef,
                                     double* m0_err, double* c_err,
                                     double* r_squared);

#ifdef __cplusplus
} /* extern "C" */
#endif
