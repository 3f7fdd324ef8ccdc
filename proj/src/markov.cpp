#include "magicmps/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "magicmps/stats.hpp"

namespace magicmps {

namespace {

// Cache self-check: relative drift allowed between the incremental value and
// a from-scratch recontraction, with an absolute floor for near-zero
// expectations.
constexpr double kCacheRelTol = 1e-8;
constexpr double kCacheAbsFloor = 1e-12;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

long resolve_burn_in(const MarkovConfig& cfg, int n) {
  if (cfg.burn_in >= 0) return cfg.burn_in;
  if (cfg.burn_in != -1)
    throw std::invalid_argument("markov: burn_in must be >= 0 or -1");
  return 10L * n;
}

long resolve_thinning(const MarkovConfig& cfg, int n) {
  if (cfg.thinning == -1) return n;
  if (cfg.thinning < 0)
    throw std::invalid_argument("markov: thinning must be >= 0 or -1");
  return std::max(cfg.thinning, 1L);
}

void validate_config(const MarkovConfig& cfg) {
  if (cfg.move_mix < 0.0 || cfg.move_mix > 1.0)
    throw std::invalid_argument(
        fmt::format("markov: move_mix {} outside [0, 1]", cfg.move_mix));
  if (cfg.weight_exponent <= 0.0)
    throw std::invalid_argument("markov: weight_exponent must be > 0");
  if (cfg.n_samples < 2)
    throw std::invalid_argument("markov: need at least two samples");
  if (cfg.recompute_every < 1)
    throw std::invalid_argument("markov: recompute_every must be >= 1");
}

// Fraction of the Pauli weight |<P>|^2 carried by strings whose total shift
// exponent is nonzero mod d.  The pair proposals conserve that charge, so a
// chain started from the identity never leaves the zero-charge sector; for
// eigenstates of the clock twirl U_k = prod_j diag(omega^{k j}) the sector
// holds all of the weight and the restriction is exact, otherwise the
// restricted averages are biased.
double off_charge_sector_mass(const MatrixProductState& state, int d) {
  std::vector<int> all(state.num_sites());
  std::iota(all.begin(), all.end(), 0);
  double in_sector = 0.0;
  for (int k = 0; k < d; ++k) {
    Matrix u = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j)
      u(j, j) = std::polar(1.0, 2.0 * M_PI * k * j / d);
    std::vector<Matrix> ops(static_cast<std::size_t>(state.num_sites()), u);
    in_sector += std::norm(expectation_product_operator(state, ops, all));
  }
  return std::max(0.0, 1.0 - in_sector / d);
}

void warn_if_sector_restricted(const MatrixProductState& state,
                               const QuditAlgebra& alg,
                               const MarkovConfig& cfg) {
  if (!cfg.u1_moves || cfg.move_mix >= 1.0) return;
  const double off = off_charge_sector_mass(state, alg.d);
  if (off > 1e-6)
    std::fputs(
        fmt::format("markov: {:.2e} of the state's Pauli weight lies outside "
                    "the zero-shift-charge sector, which pair moves cannot "
                    "reach; expect a bias unless u1_moves is disabled\n",
                    off)
            .c_str(),
        stderr);
}

// One Metropolis trajectory; f holds the per-record observable.
struct ChainRun {
  std::vector<double> f;
  double acceptance_rate = 0.0;
};

template <typename Observable>
ChainRun run_chain(PauliExpectationEvaluator& eval,
                   const std::vector<int>& support, const MarkovConfig& cfg,
                   std::uint64_t seed_salt, Observable&& observe,
                   std::vector<MarkovRecord>* trace) {
  if (support.empty())
    throw std::invalid_argument("markov: empty support");
  if (support.size() == 1 && cfg.move_mix < 1.0)
    std::fputs(
        "markov: single-site support, shift-type moves are unavailable\n",
        stderr);

  ChainState chain;
  chain.support = support;
  chain.string = PauliString::identity(static_cast<int>(support.size()));
  eval.set_string(chain);
  chain.weight = std::pow(std::abs(eval.value()), cfg.weight_exponent);
  chain.log_magnitude = std::log(std::abs(eval.value()));

  std::mt19937_64 gen(splitmix64(cfg.seed ^ seed_salt));
  const long burn = resolve_burn_in(cfg, eval.num_sites());
  const long thin = resolve_thinning(cfg, eval.num_sites());

  long steps = 0, accepted = 0;
  auto advance = [&]() {
    if (steps > 0 && steps % cfg.recompute_every == 0) {
      const double drift = eval.resync();
      const double mag = std::abs(eval.value());
      if (drift > std::max(kCacheRelTol * mag, kCacheAbsFloor))
        throw std::runtime_error(fmt::format(
            "markov: cached expectation drifted by {:.3e} (|value| {:.3e})",
            drift, mag));
      chain.weight = std::pow(mag, cfg.weight_exponent);
      chain.log_magnitude = std::log(mag);
    }
    if (metropolis_step(chain, eval, cfg, gen)) ++accepted;
    ++steps;
  };

  for (long s = 0; s < burn; ++s) advance();
  ChainRun run;
  run.f.resize(cfg.n_samples);
  for (long k = 0; k < cfg.n_samples; ++k) {
    for (long t = 0; t < thin; ++t) advance();
    run.f[k] = observe(chain);
    if (trace)
      trace->push_back(
          {steps, cfg.weight_exponent * chain.log_magnitude, run.f[k]});
  }
  run.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(steps);
  return run;
}

// scale * log(mean f) with a jackknife error over blocks of ~2 tau samples.
void log_mean_with_jackknife(const std::vector<double>& f, double scale,
                             Estimate* est) {
  const long n = static_cast<long>(f.size());
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(n);
  if (!(mean > 0.0))
    throw std::runtime_error(
        "markov: observable mean vanished; the chain never left a "
        "zero-numerator region");
  est->mean = scale * std::log(mean);

  double tau = 1.0;
  try {
    tau = std::max(integrated_autocorr_time(f).tau, 1e-3);
  } catch (const std::invalid_argument&) {
    // constant observable: exact to this chain, no error bar
    est->std_error = 0.0;
    est->tau = 1.0;
    return;
  }
  est->tau = tau;

  long block = std::lround(2.0 * tau);
  block = std::clamp(block, 1L, std::max(1L, n / 8));
  const long nb = n / block;
  const long used = nb * block;
  double total = 0.0;
  std::vector<double> block_sums(nb, 0.0);
  for (long i = 0; i < used; ++i) {
    block_sums[i / block] += f[i];
    total += f[i];
  }
  double jk_mean = 0.0;
  std::vector<double> theta(nb);
  for (long i = 0; i < nb; ++i) {
    const double rest = (total - block_sums[i]) /
                        static_cast<double>(used - block);
    theta[i] = rest > 0.0 ? scale * std::log(rest) : est->mean;
    jk_mean += theta[i];
  }
  jk_mean /= static_cast<double>(nb);
  double var = 0.0;
  for (double t : theta) var += (t - jk_mean) * (t - jk_mean);
  est->std_error = std::sqrt(var * static_cast<double>(nb - 1) /
                             static_cast<double>(nb));
}

Estimate ratio_estimate(const MatrixProductState& state,
                        const QuditAlgebra& alg, const Partition& part_a,
                        const Partition& part_b, MarkovConfig cfg,
                        double exponent, std::uint64_t salt,
                        std::vector<MarkovRecord>* trace) {
  part_a.validate(state.num_sites());
  part_b.validate(state.num_sites());
  const Partition joint = disjoint_union(part_a, part_b);
  cfg.weight_exponent = exponent;
  validate_config(cfg);
  warn_if_sector_restricted(state, alg, cfg);

  PauliExpectationEvaluator eval(state, alg);
  const std::vector<int> sites_a = part_a.sites();
  const std::vector<int> sites_b = part_b.sites();
  auto observe = [&](const ChainState& chain) {
    const double mag_a = std::abs(eval.restricted(sites_a));
    const double mag_b = std::abs(eval.restricted(sites_b));
    const double mag_ab = std::exp(chain.log_magnitude);
    return std::pow(mag_a * mag_b / mag_ab, exponent);
  };
  ChainRun run = run_chain(eval, joint.sites(), cfg, salt, observe, trace);

  Estimate est;
  est.n_samples = cfg.n_samples;
  est.acceptance_rate = run.acceptance_rate;
  log_mean_with_jackknife(run.f, -1.0, &est);
  return est;
}

}  // namespace

// ----------------------------------------------------------------- evaluator

PauliExpectationEvaluator::PauliExpectationEvaluator(
    const MatrixProductState& state, const QuditAlgebra& alg) {
  if (state.local_dim != alg.d)
    throw std::invalid_argument(
        "PauliExpectationEvaluator: local dimension mismatch");
  state.check_consistent();
  work_ = canonicalize(state, 0);
  if (std::abs(std::exp(work_.log_norm) - 1.0) > 1e-8)
    throw std::invalid_argument(
        "PauliExpectationEvaluator: state is not normalized");
  for (Matrix& m : work_.tensors[0]) m *= std::exp(work_.log_norm);
  work_.log_norm = 0.0;

  n_ = work_.num_sites();
  d_ = alg.d;
  pauli_table_.reserve(static_cast<std::size_t>(d_) * d_);
  for (int a = 0; a < d_; ++a)
    for (int ap = 0; ap < d_; ++ap)
      pauli_table_.push_back(pauli_matrix(alg, a, ap));

  ops_.assign(n_, 0);
  l_env_.resize(n_ + 1);
  r_env_.resize(n_ + 1);
  l_env_[0] = Matrix::Identity(1, 1);
  r_env_[n_] = Matrix::Identity(1, 1);
  lv_ = 0;
  rv_ = n_;

  l_id_.resize(n_ + 1);
  l_id_[0] = Matrix::Identity(1, 1);
  for (int j = 0; j < n_; ++j)
    l_id_[j + 1] = transfer_left(l_id_[j], j, 0);
  value_ = l_id_[n_](0, 0);
}

Matrix PauliExpectationEvaluator::transfer_left(const Matrix& env, int site,
                                                int label) const {
  const auto& a = work_.tensors[site];
  const Matrix& t = pauli_table_[label];
  Matrix out = Matrix::Zero(a[0].cols(), a[0].cols());
  for (int s = 0; s < d_; ++s)
    for (int tt = 0; tt < d_; ++tt) {
      const Complex c = t(s, tt);
      if (c == 0.0) continue;
      out.noalias() += c * (a[s].adjoint() * (env * a[tt]));
    }
  return out;
}

Matrix PauliExpectationEvaluator::transfer_right(const Matrix& env, int site,
                                                 int label) const {
  const auto& a = work_.tensors[site];
  const Matrix& t = pauli_table_[label];
  Matrix out = Matrix::Zero(a[0].rows(), a[0].rows());
  for (int s = 0; s < d_; ++s)
    for (int tt = 0; tt < d_; ++tt) {
      const Complex c = t(s, tt);
      if (c == 0.0) continue;
      out.noalias() += c * (a[s].conjugate() * (env * a[tt].transpose()));
    }
  return out;
}

void PauliExpectationEvaluator::ensure_left(int k) {
  for (; lv_ < k; ++lv_)
    l_env_[lv_ + 1] = transfer_left(l_env_[lv_], lv_, ops_[lv_]);
}

void PauliExpectationEvaluator::ensure_right(int k) {
  for (; rv_ > k; --rv_)
    r_env_[rv_ - 1] = transfer_right(r_env_[rv_], rv_ - 1, ops_[rv_ - 1]);
}

void PauliExpectationEvaluator::set_string(const ChainState& chain) {
  if (chain.string.size() != static_cast<int>(chain.support.size()))
    throw std::invalid_argument("set_string: string/support size mismatch");
  ops_.assign(n_, 0);
  for (std::size_t k = 0; k < chain.support.size(); ++k) {
    const int site = chain.support[k];
    if (site < 0 || site >= n_)
      throw std::invalid_argument(
          fmt::format("set_string: site {} outside [0, {})", site, n_));
    if (k > 0 && site <= chain.support[k - 1])
      throw std::invalid_argument(
          "set_string: support must be strictly increasing");
    const auto& [a, ap] = chain.string.exponents[k];
    ops_[site] = a * d_ + ap;
  }
  lv_ = 0;
  rv_ = n_;
  value_ = recompute();
}

Complex PauliExpectationEvaluator::probe(
    const std::vector<std::pair<int, std::pair<int, int>>>& changes) {
  if (changes.empty())
    throw std::invalid_argument("probe: empty change set");
  const int first = changes.front().first;
  const int last = changes.back().first;
  if (first < 0 || last >= n_)
    throw std::invalid_argument("probe: site outside the chain");
  ensure_left(first);
  ensure_right(last + 1);
  Matrix e = l_env_[first];
  std::size_t c = 0;
  for (int j = first; j <= last; ++j) {
    int label = ops_[j];
    if (c < changes.size() && changes[c].first == j) {
      const auto& [a, ap] = changes[c].second;
      label = a * d_ + ap;
      ++c;
    }
    e = transfer_left(e, j, label);
  }
  if (c != changes.size())
    throw std::invalid_argument("probe: changes must be sorted by site");
  return (e.cwiseProduct(r_env_[last + 1])).sum();
}

void PauliExpectationEvaluator::commit(
    const std::vector<std::pair<int, std::pair<int, int>>>& changes,
    Complex probed) {
  for (const auto& [site, exps] : changes)
    ops_[site] = exps.first * d_ + exps.second;
  lv_ = std::min(lv_, changes.front().first);
  rv_ = std::max(rv_, changes.back().first + 1);
  value_ = probed;
}

Complex PauliExpectationEvaluator::restricted(
    const std::vector<int>& sites) const {
  if (sites.empty()) return l_id_[n_](0, 0);
  const int first = sites.front();
  const int last = sites.back();
  if (first < 0 || last >= n_)
    throw std::invalid_argument("restricted: site outside the chain");
  Matrix e = l_id_[first];
  std::size_t c = 0;
  for (int j = first; j <= last; ++j) {
    int label = 0;
    if (c < sites.size() && sites[c] == j) {
      label = ops_[j];
      ++c;
    }
    e = transfer_left(e, j, label);
  }
  // right of `last` the gauge makes the identity environment trivial
  return e.trace();
}

Complex PauliExpectationEvaluator::recompute() const {
  int first = n_, last = -1;
  for (int j = 0; j < n_; ++j)
    if (ops_[j] != 0) {
      first = std::min(first, j);
      last = std::max(last, j);
    }
  if (last < 0) return l_id_[n_](0, 0);
  Matrix e = l_id_[first];
  for (int j = first; j <= last; ++j) e = transfer_left(e, j, ops_[j]);
  return e.trace();
}

double PauliExpectationEvaluator::resync() {
  const Complex fresh = recompute();
  const double drift = std::abs(fresh - value_);
  value_ = fresh;
  return drift;
}

// ----------------------------------------------------------------- proposals

PauliString propose_move(const ChainState& chain, const MarkovConfig& cfg,
                         int local_dim, std::mt19937_64& gen) {
  const int m = static_cast<int>(chain.support.size());
  if (m == 0) throw std::invalid_argument("propose_move: empty support");
  const int d = local_dim;
  PauliString out = chain.string;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, m - 1);
  const bool z_move = m == 1 || unit(gen) < cfg.move_mix;
  if (z_move) {
    const int i = pick(gen);
    const int sign = unit(gen) < 0.5 ? 1 : d - 1;  // Z or Z^dag
    out.exponents[i].first = (out.exponents[i].first + sign) % d;
    return out;
  }
  if (cfg.u1_moves) {
    const int i = pick(gen);
    std::uniform_int_distribution<int> other(0, m - 2);
    int j = other(gen);
    if (j >= i) ++j;
    // X_i^dag X_j: the total shift charge mod d is unchanged
    out.exponents[i].second = (out.exponents[i].second + d - 1) % d;
    out.exponents[j].second = (out.exponents[j].second + 1) % d;
    return out;
  }
  const int i = pick(gen);
  const int sign = unit(gen) < 0.5 ? 1 : d - 1;  // X or X^dag
  out.exponents[i].second = (out.exponents[i].second + sign) % d;
  return out;
}

bool metropolis_step(ChainState& chain, PauliExpectationEvaluator& eval,
                     const MarkovConfig& cfg, std::mt19937_64& gen) {
  const PauliString prop =
      propose_move(chain, cfg, eval.local_dim(), gen);
  std::vector<std::pair<int, std::pair<int, int>>> changes;
  for (std::size_t k = 0; k < chain.support.size(); ++k)
    if (prop.exponents[k] != chain.string.exponents[k])
      changes.emplace_back(chain.support[k], prop.exponents[k]);

  const Complex probed = eval.probe(changes);
  const double mag = std::abs(probed);
  const double weight = std::pow(mag, cfg.weight_exponent);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(gen) * chain.weight >= weight) return false;

  eval.commit(changes, probed);
  chain.string = prop;
  chain.weight = weight;
  chain.log_magnitude = std::log(mag);
  return true;
}

// ---------------------------------------------------------------- estimators

Estimate estimate_sre_markov(const MatrixProductState& state,
                             const QuditAlgebra& alg, double n,
                             MarkovConfig cfg,
                             std::vector<MarkovRecord>* trace) {
  if (n < 0.0)
    throw std::invalid_argument(
        "estimate_sre_markov: order must be nonnegative");
  cfg.weight_exponent = 2.0;  // the estimator needs the Xi-weighted chain
  validate_config(cfg);
  warn_if_sector_restricted(state, alg, cfg);

  PauliExpectationEvaluator eval(state, alg);
  std::vector<int> all(eval.num_sites());
  for (int j = 0; j < eval.num_sites(); ++j) all[j] = j;

  const bool shannon = std::abs(n - 1.0) < 1e-12;
  auto observe = [&](const ChainState& chain) {
    return shannon ? -2.0 * chain.log_magnitude
                   : std::exp(2.0 * (n - 1.0) * chain.log_magnitude);
  };
  ChainRun run = run_chain(eval, all, cfg, 0x5245u, observe, trace);

  Estimate est;
  est.n_samples = cfg.n_samples;
  est.acceptance_rate = run.acceptance_rate;
  if (shannon) {
    double mean = 0.0;
    for (double v : run.f) mean += v;
    est.mean = mean / static_cast<double>(run.f.size());
    est.std_error = corrected_std_error(run.f);
    try {
      est.tau = integrated_autocorr_time(run.f).tau;
    } catch (const std::invalid_argument&) {
      est.tau = 1.0;
    }
    return est;
  }
  log_mean_with_jackknife(run.f, 1.0 / (1.0 - n), &est);
  return est;
}

Estimate estimate_w(const MatrixProductState& state, const QuditAlgebra& alg,
                    const Partition& part_a, const Partition& part_b,
                    MarkovConfig cfg, std::vector<MarkovRecord>* trace) {
  return ratio_estimate(state, alg, part_a, part_b, cfg, 4.0, 0x57u, trace);
}

Estimate estimate_mutual_info2(const MatrixProductState& state,
                               const QuditAlgebra& alg,
                               const Partition& part_a,
                               const Partition& part_b, MarkovConfig cfg,
                               std::vector<MarkovRecord>* trace) {
  return ratio_estimate(state, alg, part_a, part_b, cfg, 2.0, 0x49u, trace);
}

Estimate estimate_long_range_magic(const MatrixProductState& state,
                                   const QuditAlgebra& alg,
                                   const Partition& part_a,
                                   const Partition& part_b,
                                   MarkovConfig cfg) {
  MarkovConfig cfg_i = cfg, cfg_w = cfg;
  cfg_i.seed = splitmix64(cfg.seed ^ 0x6c726d49u);
  cfg_w.seed = splitmix64(cfg.seed ^ 0x6c726d57u);
  const Estimate i2 =
      estimate_mutual_info2(state, alg, part_a, part_b, cfg_i);
  const Estimate w = estimate_w(state, alg, part_a, part_b, cfg_w);

  Estimate est;
  est.mean = i2.mean - w.mean;
  est.std_error = std::hypot(i2.std_error, w.std_error);
  est.n_samples = cfg.n_samples;
  return est;
}

}  // namespace magicmps
