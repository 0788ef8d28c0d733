#include <doctest.h>

#include <cmath>
#include <numbers>

#include "steerml/errors.hpp"
#include "steerml/qstate.hpp"

using namespace steerml;

namespace {

double purity(const TwoQubitState& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

Mat4 bell_phi_plus() {
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    return psi * psi.adjoint();
}

} // namespace

TEST_CASE("random states are valid and deterministic") {
    RandomStream a(5);
    RandomStream b(5);
    for (int i = 0; i < 50; ++i) {
        const TwoQubitState r1 = random_two_qubit_state(a);
        const TwoQubitState r2 = random_two_qubit_state(b);
        CHECK(r1.serialize() == r2.serialize());
        CHECK(std::abs(r1.matrix().trace() - Complex(1.0, 0.0)) < 1e-12);
        CHECK(is_hermitian(r1.matrix()));
        Eigen::SelfAdjointEigenSolver<Mat4> eig(r1.matrix());
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("Ginibre ensemble mean purity is 8/17") {
    RandomStream rng(2024);
    const int n = 20000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = purity(random_two_qubit_state(rng));
        sum += p;
        sum_sq += p * p;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - 8.0 / 17.0) < 5.0 * se);
}

TEST_CASE("state_from_ginibre normalizes H = G G^dagger") {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d n = Eigen::Matrix4d::Zero();
    const TwoQubitState rho = state_from_ginibre(m, n);
    CHECK((rho.matrix() - Mat4::Identity() / 4.0).norm() < 1e-15);
    CHECK_THROWS_AS(state_from_ginibre(Eigen::Matrix4d::Zero(), Eigen::Matrix4d::Zero()), ValidationError);
}

TEST_CASE("from_matrix validation") {
    CHECK_NOTHROW(TwoQubitState::from_matrix(bell_phi_plus()));
    Mat4 bad = bell_phi_plus();
    bad(0, 1) = Complex(0.1, 0.0);
    CHECK_THROWS_AS(TwoQubitState::from_matrix(bad), ValidationError);
    CHECK_THROWS_AS(TwoQubitState::from_matrix(2.0 * bell_phi_plus()), ValidationError);
    Mat4 neg = Mat4::Zero();
    neg(0, 0) = 1.2;
    neg(1, 1) = -0.2;
    CHECK_THROWS_AS(TwoQubitState::from_matrix(neg), ValidationError);
    Mat4 nan = Mat4::Identity() / 4.0;
    nan(2, 2) = std::nan("");
    CHECK_THROWS_AS(TwoQubitState::from_matrix(nan), ValidationError);
}

TEST_CASE("serialization round trip is exact") {
    RandomStream rng(9);
    const TwoQubitState rho = random_two_qubit_state(rng);
    const auto v = rho.serialize();
    CHECK(v[0] == rho.matrix()(0, 0).real());
    CHECK(v[1] == rho.matrix()(0, 0).imag());
    CHECK(v[2] == rho.matrix()(0, 1).real());
    CHECK(v[3] == rho.matrix()(0, 1).imag());
    CHECK(TwoQubitState::deserialize(v).serialize() == v);
    std::vector<double> short_v(v.begin(), v.begin() + 31);
    CHECK_THROWS_AS(TwoQubitState::deserialize(short_v), ValidationError);
}

TEST_CASE("generalized Werner Pauli decomposition") {
    for (double xi : {0.1, 0.4, std::numbers::pi / 4.0, 1.2}) {
        for (double p : {0.0, 0.3, 0.77, 1.0}) {
            const PauliDecomposition d = pauli_decompose(generalized_werner(p, xi));
            const double c = std::cos(2.0 * xi);
            const double s = std::sin(2.0 * xi);
            CHECK((d.r - Eigen::Vector3d(0, 0, c)).norm() < 1e-12);
            CHECK((d.s - Eigen::Vector3d(0, 0, p * c)).norm() < 1e-12);
            Eigen::Matrix3d tau = Eigen::Matrix3d::Zero();
            tau.diagonal() << p * s, -p * s, p;
            CHECK((d.tau - tau).norm() < 1e-12);
        }
    }
    CHECK((generalized_werner(1.0, std::numbers::pi / 4.0).matrix() - bell_phi_plus()).norm() < 1e-12);
    CHECK_THROWS_AS(generalized_werner(1.1, 0.5), ValidationError);
    CHECK_THROWS_AS(generalized_werner(0.5, 0.0), ValidationError);
}

TEST_CASE("Pauli decomposition reconstructs the state") {
    RandomStream rng(17);
    for (int i = 0; i < 20; ++i) {
        const TwoQubitState rho = random_two_qubit_state(rng);
        CHECK((pauli_decompose(rho).reconstruct() - rho.matrix()).norm() < 1e-12);
    }
}

TEST_CASE("one-way unsteerability bound") {
    const double q = std::numbers::pi / 4.0;
    CHECK(unsteerable_bound_holds(0.5, q));
    CHECK_FALSE(unsteerable_bound_holds(0.8, q));
    CHECK(unsteerable_bound_holds(0.6, q / 3.0));
    CHECK(unsteerable_bound_holds(0.0, q));
    CHECK(unsteerable_bound_holds(0.3, 0.2));
    CHECK_THROWS_AS(unsteerable_bound_holds(0.5, 1.0), ValidationError);
}

TEST_CASE("partial traces and kron") {
    RandomStream rng(3);
    const TwoQubitState a = random_two_qubit_state(rng);
    const Mat2 ra = partial_trace_B(a);
    const Mat2 rb = partial_trace_A(a);
    const TwoQubitState prod = TwoQubitState::from_matrix(kron(ra, rb));
    CHECK((partial_trace_B(prod) - ra).norm() < 1e-12);
    CHECK((partial_trace_A(prod) - rb).norm() < 1e-12);
    const Mat4 k = kron(pauli(1), pauli(3));
    CHECK(k(0, 2) == Complex(1.0, 0.0));
    CHECK(k(1, 3) == Complex(-1.0, 0.0));
    CHECK((partial_trace_A(TwoQubitState::from_matrix(bell_phi_plus())) - Mat2::Identity() / 2.0).norm() < 1e-12);
}

TEST_CASE("PSD square root") {
    RandomStream rng(21);
    const TwoQubitState rho = random_two_qubit_state(rng);
    const Mat4 s = matrix_sqrt_psd(rho.matrix());
    CHECK((s * s - rho.matrix()).norm() < 1e-12);
    const Mat2 b = partial_trace_A(rho);
    const Mat2 sb = matrix_sqrt_psd(b);
    CHECK((sb * sb - b).norm() < 1e-12);
    Mat2 neg = Mat2::Identity();
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(matrix_sqrt_psd(neg), ValidationError);
}
