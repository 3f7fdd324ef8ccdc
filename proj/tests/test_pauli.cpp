#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "dense_ref.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"

using namespace magicmps;

namespace {

// Values frozen from an independent dense implementation of the same
// conventions.
constexpr double kStrangeSreHalf = 1.0216512475319814;  // = 2 log(5/3)
constexpr double kStrangeSreOne = 0.924196240747;
constexpr double kStrangeSreTwo = 0.6931471805599453;  // = log 2

Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i)
    for (long j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

Vector random_state(int dim, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(dist(gen), dist(gen));
  return v / v.norm();
}

Vector strange_state() {
  Vector v = Vector::Zero(3);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = -1.0 / std::sqrt(2.0);
  return v;
}

Vector ghz_state(int n) {
  const long dim = dense_ref::ipow(3, n);
  long stride = 0;
  for (int i = 0; i < n; ++i) stride = stride * 3 + 1;
  Vector v = Vector::Zero(dim);
  for (int k = 0; k < 3; ++k) v(k * stride) = 1.0 / std::sqrt(3.0);
  return v;
}

Vector basis_state(int dim, long idx) {
  Vector v = Vector::Zero(dim);
  v(idx) = 1.0;
  return v;
}

// |psi> +- (parity |psi>), normalized: an eigenstate of the all-sites
// phase-space parity with the given sign.
Vector parity_symmetrized(const Vector& psi, int n, int sign) {
  const long dim = psi.size();
  Vector out = Vector::Zero(dim);
  for (long idx = 0; idx < dim; ++idx) {
    long rest = idx, mirror = 0, weight = 1;
    for (int i = 0; i < n; ++i) {
      mirror += ((3 - rest % 3) % 3) * weight;
      rest /= 3;
      weight *= 3;
    }
    out(idx) = psi(idx) + static_cast<double>(sign) * psi(mirror);
  }
  return out / out.norm();
}

Matrix qutrit_fourier() {
  const Complex w = std::exp(Complex(0, 2.0 * M_PI / 3.0));
  Matrix f(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) f(j, k) = std::pow(w, j * k) / std::sqrt(3.0);
  return f;
}

Matrix qutrit_sum_gate() {
  Matrix u = Matrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) u(i * 3 + (i + j) % 3, i * 3 + j) = 1.0;
  return u;
}

}  // namespace

TEST_CASE("algebra construction") {
  const QuditAlgebra q3 = QuditAlgebra::make(3);
  CHECK(q3.d == 3);
  CHECK(q3.half_inverse == 2);
  CHECK(q3.odd());
  CHECK(std::abs(std::pow(q3.omega, 3) - Complex(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(q3.omega - Complex(-0.5, std::sqrt(3.0) / 2.0)) < 1e-14);

  const QuditAlgebra q2 = QuditAlgebra::make(2);
  CHECK(q2.half_inverse == 0);
  CHECK_FALSE(q2.odd());
  CHECK(std::abs(q2.omega - Complex(-1.0, 0.0)) < 1e-14);

  CHECK_THROWS_AS(QuditAlgebra::make(1), std::invalid_argument);
}

TEST_CASE("Heisenberg-Weyl matrices match the clock-shift construction") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const auto ref = dense_ref::weyl_matrices_d3();
  for (int a = 0; a < 3; ++a)
    for (int ap = 0; ap < 3; ++ap) {
      const Matrix t = heisenberg_weyl_matrix(alg, a, ap);
      CHECK((t - ref[a * 3 + ap]).cwiseAbs().maxCoeff() < 1e-14);
    }

  // Pure clock and shift.
  CHECK((heisenberg_weyl_matrix(alg, 0, 0) - Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  const Matrix z = heisenberg_weyl_matrix(alg, 1, 0);
  CHECK(std::abs(z(0, 0) - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(z(1, 1) - alg.omega) < 1e-14);
  CHECK(std::abs(z(2, 2) - alg.omega * alg.omega) < 1e-14);
  const Matrix x = heisenberg_weyl_matrix(alg, 0, 1);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(x((k + 1) % 3, k) - Complex(1, 0)) < 1e-14);

  // Commutation ZX = w XZ.
  CHECK((z * x - alg.omega * x * z).cwiseAbs().maxCoeff() < 1e-14);

  // Unitarity and trace orthogonality Tr(T_a^dag T_b) = 3 delta_ab.
  for (int i = 0; i < 9; ++i) {
    const Matrix ti = heisenberg_weyl_matrix(alg, i / 3, i % 3);
    CHECK((ti.adjoint() * ti - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-14);
    for (int j = 0; j < 9; ++j) {
      const Matrix tj = heisenberg_weyl_matrix(alg, j / 3, j % 3);
      const Complex tr = (ti.adjoint() * tj).trace();
      CHECK(std::abs(tr - (i == j ? Complex(3, 0) : Complex(0, 0))) < 1e-13);
    }
  }

  // Adjoint = negated exponents.
  for (int a = 0; a < 3; ++a)
    for (int ap = 0; ap < 3; ++ap)
      CHECK((heisenberg_weyl_matrix(alg, a, ap).adjoint() -
             heisenberg_weyl_matrix(alg, -a, -ap))
                .cwiseAbs()
                .maxCoeff() < 1e-14);

  CHECK_THROWS_AS(heisenberg_weyl_matrix(QuditAlgebra::make(4), 1, 1),
                  std::invalid_argument);
}

TEST_CASE("qubit operators are the Hermitian sigma set") {
  const QuditAlgebra alg = QuditAlgebra::make(2);
  for (int a = 0; a < 2; ++a)
    for (int ap = 0; ap < 2; ++ap) {
      const Matrix t = pauli_matrix(alg, a, ap);
      CHECK((t - t.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((t * t - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
      if (a != 0 || ap != 0) CHECK(std::abs(t.trace()) < 1e-14);
    }
  Matrix sy(2, 2);
  sy << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  CHECK((pauli_matrix(alg, 1, 1) - sy).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("string multiplication matches dense products up to phase") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const int n = 2;
  for (long lp = 0; lp < 81; ++lp)
    for (long lq = 0; lq < 81; ++lq) {
      const PauliString p = decode_pauli_label(alg, lp, n);
      const PauliString q = decode_pauli_label(alg, lq, n);
      const PauliString r = multiply_strings(alg, p, q);
      auto dense = [&](const PauliString& s) {
        Matrix m = Matrix::Identity(1, 1);
        for (const auto& [a, ap] : s.exponents)
          m = dense_ref::kron(m, heisenberg_weyl_matrix(alg, a, ap));
        return m;
      };
      const Matrix prod = dense(p) * dense(q);
      const Matrix expect = dense(r);
      // Find a nonzero entry to fix the phase.
      Complex phase(0, 0);
      for (int i = 0; i < 9 && std::abs(phase) < 0.5; ++i)
        for (int j = 0; j < 9; ++j)
          if (std::abs(expect(i, j)) > 0.5) {
            phase = prod(i, j) / expect(i, j);
            break;
          }
      REQUIRE(std::abs(std::abs(phase) - 1.0) < 1e-12);
      CHECK((prod - phase * expect).cwiseAbs().maxCoeff() < 1e-12);
    }

  PauliString bad = PauliString::identity(3);
  CHECK_THROWS_AS(multiply_strings(alg, PauliString::identity(2), bad),
                  std::invalid_argument);
}

TEST_CASE("label encode and decode round trip") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  PauliString s;
  s.exponents = {{1, 2}, {0, 0}};
  CHECK(encode_pauli_label(alg, s) == 45);  // (1*3+2) * 9
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const long label = static_cast<long>(gen() % 729);
    const PauliString t = decode_pauli_label(alg, label, 3);
    CHECK(encode_pauli_label(alg, t) == label);
  }
  CHECK(decode_pauli_label(alg, 0, 2).is_identity());
  CHECK_THROWS_AS(decode_pauli_label(alg, 81, 2), std::invalid_argument);
}

TEST_CASE("phase-space point operators") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  const Matrix a0 = phase_point_operator_site(alg, 0, 0);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(a0((3 - k) % 3, k) - Complex(1, 0)) < 1e-14);

  Matrix sum = Matrix::Zero(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int ap = 0; ap < 3; ++ap) {
      const Matrix au = phase_point_operator_site(alg, a, ap);
      CHECK(std::abs(au.trace() - Complex(1, 0)) < 1e-13);
      CHECK((au - au.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((au * au - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-13);
      sum += au;
    }
  // Completeness: sum over phase space equals d * identity.
  CHECK((sum - 3.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  // Trace orthogonality Tr(A_u A_v) = 3^N delta_uv at N = 2.
  std::vector<Matrix> two_site;
  for (long label = 0; label < 81; ++label) {
    PauliString u = decode_pauli_label(alg, label, 2);
    two_site.push_back(phase_point_operator(alg, u.exponents, 2));
  }
  for (int i = 0; i < 81; ++i)
    for (int j = i; j < 81; ++j) {
      const Complex tr = (two_site[i] * two_site[j]).trace();
      CHECK(std::abs(tr - (i == j ? Complex(9, 0) : Complex(0, 0))) < 1e-11);
    }

  // Factorization over sites.
  const Matrix left = phase_point_operator_site(alg, 1, 2);
  const Matrix right = phase_point_operator_site(alg, 2, 0);
  CHECK((phase_point_operator(alg, {{1, 2}, {2, 0}}, 2) -
         dense_ref::kron(left, right))
            .cwiseAbs()
            .maxCoeff() < 1e-13);

  CHECK_THROWS_AS(phase_point_operator(alg, {{0, 0}}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(phase_point_operator_site(QuditAlgebra::make(2), 0, 0),
                  std::invalid_argument);
}

TEST_CASE("dense Pauli spectrum") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  SUBCASE("computational basis state") {
    const Vector psi = basis_state(3, 0);
    const Vector spec = dense_pauli_spectrum(alg, psi);
    for (int a = 0; a < 3; ++a)
      for (int ap = 0; ap < 3; ++ap) {
        const Complex want = ap == 0 ? Complex(1, 0) : Complex(0, 0);
        CHECK(std::abs(spec(a * 3 + ap) - want) < 1e-13);
      }
  }

  SUBCASE("identity label carries the trace") {
    const Vector spec = dense_pauli_spectrum(alg, random_state(27, 11));
    CHECK(std::abs(spec(0) - Complex(1, 0)) < 1e-12);
  }

  SUBCASE("Parseval for pure states") {
    for (int n = 1; n <= 3; ++n) {
      const Vector psi = random_state(dense_ref::ipow(3, n), 100 + n);
      const Vector spec = dense_pauli_spectrum(alg, psi);
      CHECK(spec.squaredNorm() ==
            doctest::Approx(std::pow(3.0, n)).epsilon(1e-10));
    }
  }

  SUBCASE("agrees with naive per-string traces") {
    const Vector psi = random_state(9, 23);
    const Matrix rho = psi * psi.adjoint();
    const auto ref = dense_ref::weyl_matrices_d3();
    const Vector spec = dense_pauli_spectrum(alg, rho);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) {
        const Complex naive =
            (rho * dense_ref::kron(ref[i], ref[j])).trace();
        CHECK(std::abs(spec(i * 9 + j) - naive) < 1e-12);
      }
  }

  SUBCASE("phase-point spectrum against naive traces") {
    const Vector psi = random_state(9, 29);
    const Matrix rho = psi * psi.adjoint();
    const Vector spec = dense_phase_point_spectrum(alg, rho);
    for (long label = 0; label < 81; ++label) {
      PauliString u = decode_pauli_label(alg, label, 2);
      const Complex naive =
          (rho * phase_point_operator(alg, u.exponents, 2)).trace();
      CHECK(std::abs(spec(label) - naive) < 1e-11);
      // Expectations of Hermitian A_u in a pure state are real.
      CHECK(std::abs(naive.imag()) < 1e-11);
    }
  }
}

TEST_CASE("stabilizer Renyi entropy brute force") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const std::vector<double> orders = {0.5, 1.0, 2.0};

  SUBCASE("stabilizer states have zero magic") {
    for (double n : orders) {
      CHECK(std::abs(brute_force_sre(alg, basis_state(27, 5), n)) < 1e-10);
      CHECK(std::abs(brute_force_sre(alg, ghz_state(3), n)) < 1e-10);
      const Vector uniform =
          apply_dense_unitary(basis_state(3, 0), qutrit_fourier());
      CHECK(std::abs(brute_force_sre(alg, kron_vec(uniform, uniform), n)) <
            1e-10);
    }
  }

  SUBCASE("single-qutrit magic fixture") {
    const Vector s = strange_state();
    CHECK(brute_force_sre(alg, s, 0.5) ==
          doctest::Approx(kStrangeSreHalf).epsilon(1e-12));
    CHECK(brute_force_sre(alg, s, 0.5) ==
          doctest::Approx(2.0 * std::log(5.0 / 3.0)).epsilon(1e-12));
    CHECK(brute_force_sre(alg, s, 1.0) ==
          doctest::Approx(kStrangeSreOne).epsilon(1e-9));
    CHECK(brute_force_sre(alg, s, 2.0) ==
          doctest::Approx(kStrangeSreTwo).epsilon(1e-12));
  }

  SUBCASE("additive over tensor products") {
    const Vector a = random_state(9, 41);
    const Vector b = random_state(3, 42);
    for (double n : orders)
      CHECK(brute_force_sre(alg, kron_vec(a, b), n) ==
            doctest::Approx(brute_force_sre(alg, a, n) +
                            brute_force_sre(alg, b, n))
                .epsilon(1e-9));
  }

  SUBCASE("faithful on generic states") {
    CHECK(brute_force_sre(alg, strange_state(), 2.0) > 0.2);
    CHECK(brute_force_sre(alg, random_state(27, 51), 2.0) > 1e-2);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(brute_force_sre(alg, Vector::Ones(3), 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(brute_force_sre(alg, basis_state(3, 0), -1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(brute_force_sre(alg, random_state(8, 1), 2.0),
                    std::invalid_argument);
  }
}

TEST_CASE("Clifford gates leave the entropy invariant") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const Vector psi = random_state(9, 61);
  const Matrix eye = Matrix::Identity(3, 3);
  Matrix p = Matrix::Zero(3, 3);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  p(2, 2) = alg.omega;
  const std::vector<Matrix> gates = {
      dense_ref::kron(qutrit_fourier(), eye), dense_ref::kron(eye, p),
      qutrit_sum_gate()};
  for (const Matrix& u : gates) {
    const Vector rotated = apply_dense_unitary(psi, u);
    for (double n : {0.5, 1.0, 2.0})
      CHECK(brute_force_sre(alg, rotated, n) ==
            doctest::Approx(brute_force_sre(alg, psi, n)).epsilon(1e-9));
  }
  // A non-Clifford rotation does change it.
  Matrix t = Matrix::Identity(3, 3);
  t(2, 2) = std::exp(Complex(0, 0.4));
  const Vector rotated = apply_dense_unitary(psi, dense_ref::kron(t, eye));
  CHECK(std::abs(brute_force_sre(alg, rotated, 2.0) -
                 brute_force_sre(alg, psi, 2.0)) > 1e-4);
}

TEST_CASE("mixed-state entropy") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  SUBCASE("stabilizer mixed states vanish") {
    CHECK(std::abs(brute_force_mixed_sre(alg, Matrix::Identity(3, 3) / 3.0)) <
          1e-12);
    const Matrix marginal =
        dense_partial_trace(alg, ghz_state(3), {0, 1});
    CHECK(std::abs(brute_force_mixed_sre(alg, marginal)) < 1e-10);
  }

  SUBCASE("pure-state consistency") {
    const Vector psi = random_state(9, 71);
    const Matrix rho = psi * psi.adjoint();
    CHECK(brute_force_mixed_sre(alg, rho) ==
          doctest::Approx(brute_force_sre(alg, psi, 2.0)).epsilon(1e-10));
  }

  SUBCASE("rejects non-density matrices") {
    Matrix m = Matrix::Identity(3, 3) / 3.0;
    m(0, 1) = Complex(0.2, 0.0);  // not Hermitian
    CHECK_THROWS_AS(brute_force_mixed_sre(alg, m), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_mixed_sre(alg, Matrix::Identity(3, 3)),
                    std::invalid_argument);
    Matrix neg = Matrix::Zero(3, 3);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(brute_force_mixed_sre(alg, neg), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_mixed_sre(alg, Matrix::Identity(3, 2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        brute_force_mixed_sre(alg, Matrix::Identity(3, 3) / 3.0, 1.0),
        std::invalid_argument);
  }
}

TEST_CASE("mana entropy") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const std::vector<double> orders = {0.5, 1.0, 2.0};

  SUBCASE("vanishes on the computational basis") {
    for (double n : orders)
      CHECK(std::abs(brute_force_mana_entropy(alg, basis_state(9, 4), n)) <
            1e-10);
  }

  SUBCASE("strange-state values match the stabilizer entropies") {
    const Vector s = strange_state();
    CHECK(brute_force_mana_entropy(alg, s, 0.5) ==
          doctest::Approx(2.0 * std::log(5.0 / 3.0)).epsilon(1e-12));
    for (double n : orders)
      CHECK(brute_force_mana_entropy(alg, s, n) ==
            doctest::Approx(brute_force_sre(alg, s, n)).epsilon(1e-11));
  }

  SUBCASE("coincides with the stabilizer entropy on parity eigenstates") {
    for (int sign : {+1, -1}) {
      const Vector psi = parity_symmetrized(random_state(9, 80 + sign), 2,
                                            sign);
      const std::vector<std::pair<int, int>> origin(2, {0, 0});
      const Matrix a0 = phase_point_operator(alg, origin, 2);
      CHECK((a0 * psi - static_cast<double>(sign) * psi).norm() < 1e-12);
      CHECK(check_phase_point_stabilizer(alg, psi, origin) == (sign == 1));
      for (double n : orders)
        CHECK(brute_force_mana_entropy(alg, psi, n) ==
              doctest::Approx(brute_force_sre(alg, psi, n)).epsilon(1e-9));
    }
  }

  SUBCASE("generic states split the two entropies at order 1/2 and 1") {
    const Vector psi = random_state(9, 90);
    CHECK(std::abs(brute_force_mana_entropy(alg, psi, 0.5) -
                   brute_force_sre(alg, psi, 0.5)) > 1e-3);
    CHECK(std::abs(brute_force_mana_entropy(alg, psi, 1.0) -
                   brute_force_sre(alg, psi, 1.0)) > 1e-3);
    // At order 2 the fourth moments of the two spectra agree for every pure
    // state (the phase-space transform preserves the 4-norm of a pure-state
    // characteristic function), so no parity symmetry is needed there.
    CHECK(brute_force_mana_entropy(alg, psi, 2.0) ==
          doctest::Approx(brute_force_sre(alg, psi, 2.0)).epsilon(1e-10));
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(
        brute_force_mana_entropy(QuditAlgebra::make(2), basis_state(2, 0), 2.0),
        std::invalid_argument);
    CHECK_THROWS_AS(brute_force_mana_entropy(alg, basis_state(2187, 0), 2.0),
                    std::runtime_error);
  }
}

TEST_CASE("phase-point stabilizer detection") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const Vector zero = basis_state(3, 0);
  CHECK(check_phase_point_stabilizer(alg, zero, {{0, 0}}));
  CHECK(check_phase_point_stabilizer(alg, zero, {{1, 0}}));
  CHECK_FALSE(check_phase_point_stabilizer(alg, zero, {{0, 1}}));
  // The single-qutrit magic fixture has parity eigenvalue -1.
  CHECK_FALSE(check_phase_point_stabilizer(alg, strange_state(), {{0, 0}}));
}

TEST_CASE("partial trace") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  SUBCASE("fixtures") {
    const Matrix one_site = dense_partial_trace(alg, ghz_state(3), {1});
    CHECK((one_site - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() <
          1e-13);
    const Matrix two_site = dense_partial_trace(alg, ghz_state(3), {0, 2});
    Matrix want = Matrix::Zero(9, 9);
    for (int k = 0; k < 3; ++k) want(k * 3 + k, k * 3 + k) = 1.0 / 3.0;
    CHECK((two_site - want).cwiseAbs().maxCoeff() < 1e-13);
  }

  SUBCASE("matches the loop reference on random states") {
    const Vector psi = random_state(81, 33);
    for (const auto& keep :
         {std::vector<int>{0}, {2}, {0, 2}, {1, 3}, {0, 1, 3}}) {
      const Matrix mine = dense_partial_trace(alg, psi, keep);
      const Matrix ref = dense_ref::partial_trace(psi, keep, 3, 4);
      CHECK((mine - ref).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(mine.trace() - Complex(1, 0)) < 1e-12);
    }
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(dense_partial_trace(alg, random_state(9, 1), {2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dense_partial_trace(alg, random_state(9, 1), {0, 0}),
                    std::invalid_argument);
  }
}

TEST_CASE("long-range magic brute force") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  SUBCASE("vanishes for product and GHZ states") {
    const Vector prod = kron_vec(strange_state(), strange_state());
    CHECK(std::abs(brute_force_long_range_magic(
              alg, prod, Partition::block(0, 1), Partition::block(1, 2))) <
          1e-10);
    CHECK(std::abs(brute_force_long_range_magic(
              alg, ghz_state(4), Partition::block(0, 1),
              Partition::block(2, 3))) < 1e-10);
  }

  SUBCASE("matches a naive evaluation on random states") {
    const Vector psi = random_state(81, 55);
    const Partition pa = Partition::block(0, 1);
    const Partition pb = Partition::block(3, 4);
    const auto ref = dense_ref::weyl_matrices_d3();
    auto naive_mixed = [&](const std::vector<int>& keep) {
      const Matrix rho = dense_ref::partial_trace(psi, keep, 3, 4);
      double sum2 = 0.0, sum4 = 0.0;
      const int sites = static_cast<int>(keep.size());
      const long count = dense_ref::ipow(9, sites);
      for (long label = 0; label < count; ++label) {
        Matrix op = Matrix::Identity(1, 1);
        long rest = label;
        std::vector<int> codes(sites);
        for (int i = sites - 1; i >= 0; --i) {
          codes[i] = static_cast<int>(rest % 9);
          rest /= 9;
        }
        for (int i = 0; i < sites; ++i)
          op = dense_ref::kron(op, ref[codes[i]]);
        const double w = std::norm((rho * op).trace());
        sum2 += w;
        sum4 += w * w;
      }
      return -std::log(sum4 / sum2);
    };
    const double want =
        naive_mixed({0, 3}) - naive_mixed({0}) - naive_mixed({3});
    CHECK(brute_force_long_range_magic(alg, psi, pa, pb) ==
          doctest::Approx(want).epsilon(1e-9));
  }

  SUBCASE("input validation") {
    const Vector psi = random_state(81, 56);
    CHECK_THROWS_AS(
        brute_force_long_range_magic(alg, psi, Partition::block(0, 2),
                                     Partition::block(1, 3)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        brute_force_long_range_magic(alg, basis_state(2187, 0),
                                     Partition::block(0, 4),
                                     Partition::block(4, 7)),
        std::runtime_error);
  }
}

TEST_CASE("dense unitary application") {
  const Vector zero = basis_state(3, 0);
  const Vector uniform = apply_dense_unitary(zero, qutrit_fourier());
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(uniform(k) - Complex(1.0 / std::sqrt(3.0), 0.0)) < 1e-13);
  CHECK_THROWS_AS(apply_dense_unitary(zero, 2.0 * Matrix::Identity(3, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_dense_unitary(zero, Matrix::Identity(9, 9)),
                  std::invalid_argument);
}

TEST_CASE("string expectations on matrix product states") {
  const QuditAlgebra alg = QuditAlgebra::make(3);

  SUBCASE("GHZ fixtures") {
    const MatrixProductState ghz = ghz_mps(3, 3);
    PauliString zzz;
    zzz.exponents = {{1, 0}, {1, 0}, {1, 0}};
    CHECK(std::abs(expectation_pauli_string(ghz, alg, zzz, {0, 1, 2}) -
                   Complex(1, 0)) < 1e-12);
    PauliString xxx;
    xxx.exponents = {{0, 1}, {0, 1}, {0, 1}};
    CHECK(std::abs(expectation_pauli_string(ghz, alg, xxx, {0, 1, 2}) -
                   Complex(1, 0)) < 1e-12);
    PauliString z1;
    z1.exponents = {{1, 0}};
    CHECK(std::abs(expectation_pauli_string(ghz, alg, z1, {1})) < 1e-12);
  }

  SUBCASE("random states against the dense spectrum") {
    const MatrixProductState state = random_mps(4, 3, 5, 1234);
    const Vector psi = mps_to_dense(state);
    const Vector spec = dense_pauli_spectrum(alg, psi);
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 25; ++trial) {
      const long label = static_cast<long>(gen() % dense_ref::ipow(9, 4));
      const PauliString s = decode_pauli_label(alg, label, 4);
      const Complex got = expectation_pauli_string(state, alg, s, {0, 1, 2, 3});
      CHECK(std::abs(got - spec(label)) < 1e-10);
    }
    // Partial support with a gap.
    PauliString gap;
    gap.exponents = {{1, 2}, {2, 1}};
    PauliString padded;
    padded.exponents = {{0, 0}, {1, 2}, {0, 0}, {2, 1}};
    CHECK(std::abs(expectation_pauli_string(state, alg, gap, {1, 3}) -
                   spec(encode_pauli_label(alg, padded))) < 1e-10);
  }

  SUBCASE("input validation") {
    const MatrixProductState state = random_mps(3, 3, 4, 5);
    PauliString s = PauliString::identity(2);
    CHECK_THROWS_AS(expectation_pauli_string(state, alg, s, {0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        expectation_pauli_string(state, QuditAlgebra::make(2), s, {0, 1}),
        std::invalid_argument);
  }
}

TEST_CASE("spectrum CSV export") {
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const Vector spec = dense_pauli_spectrum(alg, strange_state());
  std::ostringstream out;
  write_spectrum_csv(out, spec);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "label,real,imag");
  int rows = 0;
  double first_real = 0.0;
  while (std::getline(in, line)) {
    if (rows == 0) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      CHECK(line.substr(0, c1) == "0");
      first_real = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    }
    ++rows;
  }
  CHECK(rows == 9);
  CHECK(first_real == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure magic entropies from spectra at several sizes") {
  // Spot-check the N-scaling path: entropy of a product of strange states is
  // N times the single-site value for every order.
  const QuditAlgebra alg = QuditAlgebra::make(3);
  Vector psi = strange_state();
  for (int n = 2; n <= 4; ++n) {
    psi = kron_vec(psi, strange_state());
    CHECK(brute_force_sre(alg, psi, 0.5) ==
          doctest::Approx(n * kStrangeSreHalf).epsilon(1e-10));
    CHECK(brute_force_mana_entropy(alg, psi, 2.0) ==
          doctest::Approx(n * kStrangeSreTwo).epsilon(1e-10));
  }
}
