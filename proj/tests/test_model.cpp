#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "dense_ref.hpp"
#include "magicmps/model.hpp"
#include "magicmps/mps.hpp"
#include "magicmps/pauli.hpp"

using namespace magicmps;

namespace {

// Independent dense chain Hamiltonian assembled with explicit Kronecker
// padding in the same k = m mod 3 basis.
Matrix reference_hamiltonian(int n, double jz, double dz) {
  const double r2 = std::sqrt(2.0);
  Matrix sz = Matrix::Zero(3, 3), sp = Matrix::Zero(3, 3);
  sz(1, 1) = 1.0;
  sz(2, 2) = -1.0;
  sp(1, 0) = r2;
  sp(0, 2) = r2;
  const Matrix sm = sp.adjoint();
  const Matrix sx = 0.5 * (sp + sm);
  const Matrix sy = Complex(0, -0.5) * (sp - sm);
  const Matrix eye = Matrix::Identity(3, 3);

  auto embed = [&](const Matrix& op, int site) {
    Matrix full = Matrix::Identity(1, 1);
    for (int i = 0; i < n; ++i)
      full = dense_ref::kron(full, i == site ? op : eye);
    return full;
  };
  const long dim = dense_ref::ipow(3, n);
  Matrix h = Matrix::Zero(dim, dim);
  for (int i = 0; i + 1 < n; ++i)
    h += embed(sx, i) * embed(sx, i + 1) + embed(sy, i) * embed(sy, i + 1) +
         jz * embed(sz, i) * embed(sz, i + 1);
  for (int i = 0; i < n; ++i) h += dz * embed(sz * sz, i);
  return h;
}

}  // namespace

TEST_CASE("spin-1 operator algebra") {
  const SpinOneOperators op = SpinOneOperators::make();
  CHECK(std::abs(op.sz(0, 0)) < 1e-15);
  CHECK(std::abs(op.sz(1, 1) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(op.sz(2, 2) - Complex(-1, 0)) < 1e-15);
  CHECK(std::abs(op.sp(1, 0) - Complex(std::sqrt(2.0), 0)) < 1e-15);
  CHECK(std::abs(op.sp(0, 2) - Complex(std::sqrt(2.0), 0)) < 1e-15);

  // su(2) commutators and the Casimir for S = 1.
  CHECK(((op.sz * op.sp - op.sp * op.sz) - op.sp).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK(((op.sp * op.sm - op.sm * op.sp) - 2.0 * op.sz).cwiseAbs().maxCoeff() <
        1e-14);
  const Matrix casimir = op.sx * op.sx + op.sy * op.sy + op.sz * op.sz;
  CHECK((casimir - 2.0 * op.id).cwiseAbs().maxCoeff() < 1e-14);
  for (const Matrix* m : {&op.sx, &op.sy, &op.sz, &op.sz2})
    CHECK((*m - m->adjoint()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("MPO structure and dense reconstruction") {
  SUBCASE("bond dimensions") {
    const Mpo mpo = xxz_mpo(6, {1.0, 0.5});
    CHECK(mpo.bond_dim(0) == 1);
    for (int i = 1; i < 6; ++i) CHECK(mpo.bond_dim(i) == 5);
    CHECK(mpo.bond_dim(6) == 1);
    CHECK(mpo.num_sites() == 6);
  }

  SUBCASE("matches the Kronecker-product Hamiltonian") {
    const std::vector<ModelParams> params = {
        {1.0, 0.0}, {2.93, 2.6}, {-0.183, 0.5}, {0.7, -0.4}};
    for (const ModelParams& p : params)
      for (int n : {2, 3, 4}) {
        const Matrix dense = mpo_to_dense(xxz_mpo(n, p));
        const Matrix ref = reference_hamiltonian(n, p.jz, p.dz);
        CHECK((dense - ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((dense - dense.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
      }
  }

  SUBCASE("caps and validation") {
    CHECK_THROWS_AS(xxz_mpo(1, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(mpo_to_dense(xxz_mpo(9, {1.0, 0.0})), std::runtime_error);
  }
}

TEST_CASE("MPO expectation values on matrix product states") {
  const Mpo mpo = xxz_mpo(5, {1.7, 0.9});
  const MatrixProductState state = random_mps(5, 3, 6, 99);
  const Vector psi = mps_to_dense(state);
  const Matrix h = reference_hamiltonian(5, 1.7, 0.9);
  const double want = (psi.adjoint() * h * psi)(0).real();
  CHECK(mpo_expectation(state, mpo) == doctest::Approx(want).epsilon(1e-10));

  CHECK_THROWS_AS(mpo_expectation(random_mps(4, 3, 4, 1), mpo),
                  std::invalid_argument);
}

TEST_CASE("exact diagonalization") {
  SUBCASE("two-site Heisenberg point") {
    const auto gs = exact_ground_state(2, {1.0, 0.0});
    CHECK(gs.energy == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(gs.amplitudes.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("agrees with a dense eigensolver") {
    for (const ModelParams& p :
         {ModelParams{1.0, 0.0}, ModelParams{0.7, -0.4}}) {
      const Matrix h = reference_hamiltonian(4, p.jz, p.dz);
      Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
      const auto gs = exact_ground_state(4, p, /*restrict_sector=*/false);
      CHECK(gs.energy == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
      // Residual of the returned vector.
      CHECK((h * gs.amplitudes - gs.energy * gs.amplitudes).norm() < 1e-8);
    }
  }

  SUBCASE("sector restriction finds the same ground state") {
    for (int n : {4, 6}) {
      const ModelParams p{2.93, 2.6};
      const double free_energy =
          exact_ground_state(n, p, /*restrict_sector=*/false).energy;
      const double restricted = exact_ground_state(n, p).energy;
      CHECK(restricted == doctest::Approx(free_energy).epsilon(1e-10));
    }
  }

  SUBCASE("pinned six-site energy at the Ising transition point") {
    const auto gs = exact_ground_state(6, {2.93, 2.6});
    CHECK(gs.energy == doctest::Approx(-3.1389394424).epsilon(1e-8));
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(exact_ground_state(1, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(exact_ground_state(11, {1.0, 0.0}), std::runtime_error);
  }
}

TEST_CASE("magic entropies of the six-site critical ground state") {
  // The ground state at the Ising transition point is a parity eigenstate,
  // so its mana and stabilizer entropies coincide order by order.
  const QuditAlgebra alg = QuditAlgebra::make(3);
  const Vector psi = exact_ground_state(6, {2.93, 2.6}).amplitudes;

  const std::vector<std::pair<int, int>> origin(6, {0, 0});
  CHECK(check_phase_point_stabilizer(alg, psi, origin));

  CHECK(brute_force_sre(alg, psi, 0.5) ==
        doctest::Approx(4.4287861860).epsilon(1e-8));
  CHECK(brute_force_sre(alg, psi, 1.0) ==
        doctest::Approx(3.6999080900).epsilon(1e-8));
  CHECK(brute_force_sre(alg, psi, 2.0) ==
        doctest::Approx(2.6494792978).epsilon(1e-8));
  for (double n : {0.5, 1.0, 2.0})
    CHECK(brute_force_mana_entropy(alg, psi, n) ==
          doctest::Approx(brute_force_sre(alg, psi, n)).epsilon(1e-9));
}

TEST_CASE("critical point presets") {
  CHECK(list_presets().size() == 3);
  const CriticalPoint bkt = preset_critical_point("large-d-xy");
  CHECK(bkt.params.jz == doctest::Approx(-0.183));
  CHECK(bkt.params.dz == doctest::Approx(0.5));
  CHECK(bkt.transition == "BKT");
  const CriticalPoint gauss = preset_critical_point("haldane-large-d");
  CHECK(gauss.params.jz == doctest::Approx(0.5));
  CHECK(gauss.params.dz == doctest::Approx(0.635));
  CHECK(gauss.transition == "Gaussian");
  const CriticalPoint ising = preset_critical_point("haldane-neel");
  CHECK(ising.params.jz == doctest::Approx(2.93));
  CHECK(ising.params.dz == doctest::Approx(2.6));
  CHECK(ising.transition == "Ising");
  CHECK_THROWS_AS(preset_critical_point("nonsense"), std::invalid_argument);
}
