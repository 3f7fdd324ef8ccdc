#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <complex>
#include <map>
#include <random>

#include "dense_ref.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"
#include "magicmps/perfect_sampling.hpp"

using namespace magicmps;

namespace {

Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i)
    for (long j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

Vector strange_state() {
  Vector v = Vector::Zero(3);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = -1.0 / std::sqrt(2.0);
  return v;
}

}  // namespace

TEST_CASE("draws carry the exact probability and amplitude of their string") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const MatrixProductState state = random_mps(3, 3, 4, 2024);
  const Vector spec = dense_pauli_spectrum(alg, mps_to_dense(state));
  const double dn = 27.0;

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const PauliSample sample = sample_pauli_string(state, alg, gen);
    REQUIRE(sample.string.size() == 3);
    const long label = encode_pauli_label(alg, sample.string);
    const Complex c = spec(label);
    CHECK(std::exp(sample.log_prob) ==
          doctest::Approx(std::norm(c) / dn).epsilon(1e-10));
    CHECK(std::abs(sample.amplitude.value() - c) < 1e-10);
  }
}

TEST_CASE("sampled frequencies match the dense distribution") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const MatrixProductState state = random_mps(2, 3, 3, 99);
  const Vector spec = dense_pauli_spectrum(alg, mps_to_dense(state));

  const long draws = 50000;
  std::vector<long> counts(81, 0);
  std::mt19937_64 gen(17);
  for (long i = 0; i < draws; ++i)
    ++counts[encode_pauli_label(alg, sample_pauli_string(state, alg, gen).string)];

  // Pearson statistic with low-expectation bins pooled.
  double stat = 0.0;
  int dof = -1;  // one constraint: totals match
  double pooled_expected = 0.0;
  long pooled_observed = 0;
  for (int label = 0; label < 81; ++label) {
    const double expected = draws * std::norm(spec(label)) / 9.0;
    if (expected < 10.0) {
      pooled_expected += expected;
      pooled_observed += counts[label];
      continue;
    }
    stat += (counts[label] - expected) * (counts[label] - expected) / expected;
    ++dof;
  }
  if (pooled_expected > 0.0) {
    stat += (pooled_observed - pooled_expected) *
            (pooled_observed - pooled_expected) / pooled_expected;
    ++dof;
  }
  REQUIRE(dof > 10);
  boost::math::chi_squared dist(dof);
  const double p_value = 1.0 - boost::math::cdf(dist, stat);
  CHECK(p_value > 0.01);
}

TEST_CASE("entropy estimates agree with the dense brute force") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const MatrixProductState state = random_mps(4, 3, 4, 7);
  const Vector psi = mps_to_dense(state);

  for (double n : {0.5, 1.0, 2.0}) {
    const double exact = brute_force_sre(alg, psi, n);
    SamplingOptions opts;
    opts.num_samples = 20000;
    opts.seed = 11;
    const Estimate est = estimate_sre_sampling(state, alg, n, opts);
    CHECK(est.n_samples == 20000);
    CHECK(est.std_error < 0.05);
    CHECK(std::abs(est.mean - exact) < 3.5 * std::max(est.std_error, 1e-4));
    CHECK_FALSE(est.tau.has_value());
    CHECK_FALSE(est.acceptance_rate.has_value());
  }
}

TEST_CASE("stabilizer states sample a flat distribution with zero entropy") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  SamplingOptions opts;
  opts.num_samples = 500;
  opts.seed = 3;
  for (const MatrixProductState& state :
       {ghz_mps(4, 3), basis_product_mps(4, 3, {0, 1, 2, 0})}) {
    for (double n : {1.0, 2.0}) {
      const Estimate est = estimate_sre_sampling(state, alg, n, opts);
      CHECK(std::abs(est.mean) < 1e-10);
      CHECK(est.std_error < 1e-10);
    }
  }
}

TEST_CASE("magic product chain reproduces the additive entropy") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const Vector dense =
      kron_vec(kron_vec(strange_state(), strange_state()), strange_state());
  const MatrixProductState state = mps_from_dense(dense, 3);

  SamplingOptions opts;
  opts.num_samples = 10000;
  opts.seed = 21;
  const Estimate e2 = estimate_sre_sampling(state, alg, 2.0, opts);
  CHECK(std::abs(e2.mean - 3.0 * std::log(2.0)) < 3.5 * e2.std_error);
  const Estimate e1 = estimate_sre_sampling(state, alg, 1.0, opts);
  CHECK(std::abs(e1.mean - 3.0 * 0.924196240747) < 3.5 * e1.std_error);
}

TEST_CASE("qubit chains sample their sigma-basis distribution") {
  const QuditAlgebra alg = QuditAlgebra::make(2);
  const MatrixProductState state = random_mps(3, 2, 3, 31);
  const Vector spec = dense_pauli_spectrum(alg, mps_to_dense(state));
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const PauliSample sample = sample_pauli_string(state, alg, gen);
    const long label = encode_pauli_label(alg, sample.string);
    CHECK(std::exp(sample.log_prob) ==
          doctest::Approx(std::norm(spec(label)) / 8.0).epsilon(1e-10));
  }
}

TEST_CASE("thread fan-out does not change the estimate") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const MatrixProductState state = random_mps(3, 3, 4, 55);
  SamplingOptions opts;
  opts.num_samples = 4000;
  opts.seed = 9;
  opts.threads = 1;
  const Estimate serial = estimate_sre_sampling(state, alg, 2.0, opts);
  opts.threads = 3;
  const Estimate parallel = estimate_sre_sampling(state, alg, 2.0, opts);
  CHECK(serial.mean == parallel.mean);
  CHECK(serial.std_error == parallel.std_error);
}

TEST_CASE("runs are reproducible for a fixed seed") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const MatrixProductState state = random_mps(3, 3, 4, 77);
  SamplingOptions opts;
  opts.num_samples = 1000;
  opts.seed = 123;
  const Estimate a = estimate_sre_sampling(state, alg, 2.0, opts);
  const Estimate b = estimate_sre_sampling(state, alg, 2.0, opts);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  opts.seed = 124;
  const Estimate c = estimate_sre_sampling(state, alg, 2.0, opts);
  CHECK(c.mean != a.mean);  // different draws
}

TEST_CASE("input validation") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  std::mt19937_64 gen(1);

  const MatrixProductState off_center =
      canonicalize(random_mps(4, 3, 4, 5), 2);
  CHECK_THROWS_AS(sample_pauli_string(off_center, alg, gen),
                  std::invalid_argument);

  MatrixProductState scaled = random_mps(4, 3, 4, 5);
  scaled.log_norm = 0.5;
  CHECK_THROWS_AS(sample_pauli_string(scaled, alg, gen),
                  std::invalid_argument);

  const MatrixProductState state = random_mps(3, 3, 4, 5);
  CHECK_THROWS_AS(sample_pauli_string(state, QuditAlgebra::make(2), gen),
                  std::invalid_argument);

  SamplingOptions opts;
  opts.num_samples = 1;
  CHECK_THROWS_AS(estimate_sre_sampling(state, alg, 2.0, opts),
                  std::invalid_argument);
  opts.num_samples = 100;
  opts.threads = 0;
  CHECK_THROWS_AS(estimate_sre_sampling(state, alg, 2.0, opts),
                  std::invalid_argument);
  opts.threads = 1;
  CHECK_THROWS_AS(estimate_sre_sampling(state, alg, -0.5, opts),
                  std::invalid_argument);
}
