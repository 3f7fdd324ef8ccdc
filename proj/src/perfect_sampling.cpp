#include "magicmps/perfect_sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace magicmps {

namespace {

struct Term {
  int s, t;
  Complex coeff;
};

// Reusable per-state context: horizontal stacks H_i = [A^0 A^1 ...] and the
// sparse expansions of every single-site basis operator.
struct SamplerContext {
  const MatrixProductState* state = nullptr;
  int d = 0;
  std::vector<Matrix> hstack;              // per site, chi_i x (d chi_{i+1})
  std::vector<std::vector<Term>> labels;   // d^2 entries

  static SamplerContext make(const MatrixProductState& state,
                             const QuditAlgebra& alg) {
    state.check_consistent();
    if (state.local_dim != alg.d)
      throw std::invalid_argument(
          "sample_pauli_string: local dimension mismatch");
    if (!state.center.has_value() || *state.center != 0)
      throw std::invalid_argument(
          "sample_pauli_string: requires right-canonical gauge (center 0)");
    const double nrm =
        std::exp(state.log_norm) * std::sqrt([&] {
          double s = 0.0;
          for (const Matrix& block : state.tensors[0])
            s += block.squaredNorm();
          return s;
        }());
    if (std::abs(nrm - 1.0) > 1e-8)
      throw std::invalid_argument("sample_pauli_string: state not normalized");

    SamplerContext ctx;
    ctx.state = &state;
    ctx.d = alg.d;
    ctx.hstack.reserve(state.num_sites());
    for (int i = 0; i < state.num_sites(); ++i) {
      const long chi_r = state.tensors[i][0].cols();
      Matrix h(state.tensors[i][0].rows(), alg.d * chi_r);
      for (int s = 0; s < alg.d; ++s)
        h.middleCols(s * chi_r, chi_r) = state.tensors[i][s];
      ctx.hstack.push_back(std::move(h));
    }
    ctx.labels.resize(static_cast<size_t>(alg.d) * alg.d);
    for (int a = 0; a < alg.d; ++a)
      for (int ap = 0; ap < alg.d; ++ap) {
        const Matrix op = pauli_matrix(alg, a, ap);
        auto& terms = ctx.labels[a * alg.d + ap];
        for (int s = 0; s < alg.d; ++s)
          for (int t = 0; t < alg.d; ++t)
            if (std::abs(op(s, t)) > 1e-14) terms.push_back({s, t, op(s, t)});
      }
    return ctx;
  }

  PauliSample sample(std::mt19937_64& gen) const {
    const int n = state->num_sites();
    const int dd = d * d;
    PauliSample out;
    out.string.exponents.reserve(n);
    Matrix m = Matrix::Ones(1, 1);
    double log_abs = 0.0;
    Complex phase_carrier(1.0, 0.0);  // tracked via the final 1x1 entry
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<Matrix> candidates(dd);
    std::vector<double> weights(dd);
    for (int i = 0; i < n; ++i) {
      const long chi_r = state->tensors[i][0].cols();
      // All G_{st} = A^s^dag M A^t blocks in two products.
      const Matrix ma = m * hstack[i];
      const Matrix g = hstack[i].adjoint() * ma;
      double total = 0.0;
      for (int label = 0; label < dd; ++label) {
        Matrix cand = Matrix::Zero(chi_r, chi_r);
        for (const Term& term : labels[label])
          cand.noalias() +=
              term.coeff *
              g.block(term.s * chi_r, term.t * chi_r, chi_r, chi_r);
        weights[label] = cand.squaredNorm();
        total += weights[label];
        candidates[label] = std::move(cand);
      }
      // Conditional law: p(label | prefix) = |M'|^2 / (d |M|^2), and M is
      // kept normalized, so the weights sum to d up to roundoff.
      const double draw = uniform(gen) * total;
      double acc = 0.0;
      int chosen = dd - 1;
      for (int label = 0; label < dd; ++label) {
        acc += weights[label];
        if (draw < acc) {
          chosen = label;
          break;
        }
      }
      out.string.exponents.emplace_back(chosen / d, chosen % d);
      const double kappa = std::sqrt(weights[chosen]);
      if (kappa < 1e-300)
        throw std::runtime_error(
            "sample_pauli_string: vanishing conditional weight");
      m = candidates[chosen] / kappa;
      log_abs += std::log(kappa);
      out.log_prob += std::log(weights[chosen] / total);
    }
    phase_carrier = m(0, 0);  // unit modulus: the leftover phase
    out.amplitude.log_abs = log_abs;
    out.amplitude.phase = phase_carrier;
    return out;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t sample_seed(std::uint64_t base, long index) {
  return splitmix64(splitmix64(base) ^
                    (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1)));
}

}  // namespace

PauliSample sample_pauli_string(const MatrixProductState& state,
                                const QuditAlgebra& alg,
                                std::mt19937_64& gen) {
  return SamplerContext::make(state, alg).sample(gen);
}

Estimate estimate_sre_sampling(const MatrixProductState& state,
                               const QuditAlgebra& alg, double n,
                               const SamplingOptions& opts) {
  if (opts.num_samples < 2)
    throw std::invalid_argument(
        "estimate_sre_sampling: need at least two samples");
  if (opts.threads < 1)
    throw std::invalid_argument("estimate_sre_sampling: bad thread count");
  if (n < 0.0)
    throw std::invalid_argument(
        "estimate_sre_sampling: order must be nonnegative");

  MatrixProductState work = canonicalize(state, 0);
  work.log_norm = 0.0;  // sampling needs the normalized state
  const SamplerContext ctx = SamplerContext::make(work, alg);

  const long total = opts.num_samples;
  std::vector<double> log_xi(total);
  auto run_chunk = [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      std::mt19937_64 gen(sample_seed(opts.seed, i));
      log_xi[i] = ctx.sample(gen).log_prob;
    }
  };
  if (opts.threads == 1) {
    run_chunk(0, total);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (total + opts.threads - 1) / opts.threads;
    for (int t = 0; t < opts.threads; ++t) {
      const long begin = t * chunk;
      const long end = std::min(total, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_chunk, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  const double offset =
      work.num_sites() * std::log(static_cast<double>(alg.d));
  Estimate est;
  est.n_samples = total;
  if (std::abs(n - 1.0) < 1e-12) {
    double mean = 0.0;
    for (double v : log_xi) mean += -v;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (double v : log_xi) var += (-v - mean) * (-v - mean);
    var /= static_cast<double>(total - 1);
    est.mean = mean - offset;
    est.std_error = std::sqrt(var / static_cast<double>(total));
    return est;
  }

  // Y_i = Xi^{n-1}; all moments handled in log space.
  auto log_sum_exp = [&](double factor) {
    double peak = -1e300;
    for (double v : log_xi) peak = std::max(peak, factor * v);
    double acc = 0.0;
    for (double v : log_xi) acc += std::exp(factor * v - peak);
    return peak + std::log(acc);
  };
  const double log_s = std::log(static_cast<double>(total));
  const double l1 = log_sum_exp(n - 1.0) - log_s;          // log mean(Y)
  const double l2 = log_sum_exp(2.0 * (n - 1.0)) - log_s;  // log mean(Y^2)
  est.mean = l1 / (1.0 - n) - offset;
  const double ratio = std::exp(l2 - 2.0 * l1) - 1.0;  // var(Y)/mean(Y)^2
  est.std_error = std::sqrt(std::max(0.0, ratio) /
                            static_cast<double>(total)) /
                  std::abs(1.0 - n);
  return est;
}

}  // namespace magicmps
