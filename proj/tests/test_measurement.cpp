#include <doctest.h>

#include <cmath>
#include <numbers>

#include "steerml/errors.hpp"
#include "steerml/measurement.hpp"

using namespace steerml;

TEST_CASE("Bloch directions must be unit vectors") {
    CHECK_NOTHROW(BlochDirection(Eigen::Vector3d(0, 0, 1)));
    CHECK_THROWS_AS(BlochDirection(Eigen::Vector3d(0, 0, 1.001)), ValidationError);
    CHECK(std::abs(BlochDirection::normalized(Eigen::Vector3d(3, 4, 0)).vector().norm() - 1.0) < 1e-15);
    CHECK_THROWS_AS(BlochDirection::normalized(Eigen::Vector3d::Zero()), ValidationError);
}

TEST_CASE("projectors are complementary rank-one projections") {
    RandomStream rng(1);
    for (const auto& n : sample_directions(5, DirectionStrategy::uniform_random, rng)) {
        const auto [p0, p1] = projectors(n);
        CHECK((p0 + p1 - Mat2::Identity()).norm() < 1e-14);
        CHECK((p0 * p0 - p0).norm() < 1e-14);
        CHECK(std::abs(p0.trace() - Complex(1.0, 0.0)) < 1e-14);
        const Mat2 ns = n[0] * pauli(1) + n[1] * pauli(2) + n[2] * pauli(3);
        CHECK(((ns * p0) - p0).norm() < 1e-14);
    }
}

TEST_CASE("Bell state assemblage for x") {
    const TwoQubitState bell = generalized_werner(1.0, std::numbers::pi / 4.0);
    const MeasurementSet ms{BlochDirection(Eigen::Vector3d(1, 0, 0)), BlochDirection(Eigen::Vector3d(0, 0, 1))};
    const Assemblage a = assemblage(bell, ms);
    CHECK((a(0, 0) - (Mat2::Identity() + pauli(1)) / 4.0).norm() < 1e-14);
    CHECK((a(1, 0) - (Mat2::Identity() - pauli(1)) / 4.0).norm() < 1e-14);
    CHECK((a(0, 1) - (Mat2::Identity() + pauli(3)) / 4.0).norm() < 1e-14);
}

TEST_CASE("assemblages of states are no-signalling with marginal rho_B") {
    RandomStream rng(8);
    for (int i = 0; i < 10; ++i) {
        const TwoQubitState rho = random_two_qubit_state(rng);
        const Assemblage a = assemblage(rho, sample_directions(4, DirectionStrategy::uniform_random, rng));
        CHECK(a.settings() == 4);
        CHECK(a.signalling_defect() < 1e-14);
        CHECK((a.bob_marginal() - partial_trace_A(rho)).norm() < 1e-14);
        for (int x = 0; x < 4; ++x)
            for (int o = 0; o < 2; ++o) {
                Eigen::SelfAdjointEigenSolver<Mat2> eig(a(o, x));
                CHECK(eig.eigenvalues().minCoeff() > -1e-14);
            }
    }
}

TEST_CASE("direction strategies") {
    RandomStream rng(4);
    const auto mub = sample_directions(3, DirectionStrategy::mub_xyz, rng);
    CHECK(mub[0].vector() == Eigen::Vector3d(1, 0, 0));
    CHECK(mub[1].vector() == Eigen::Vector3d(0, 1, 0));
    CHECK(mub[2].vector() == Eigen::Vector3d(0, 0, 1));
    CHECK_THROWS_AS(sample_directions(4, DirectionStrategy::mub_xyz, rng), ValidationError);
    CHECK_THROWS_AS(sample_directions(1, DirectionStrategy::uniform_random, rng), ValidationError);

    RandomStream r1(4);
    RandomStream r2(99);
    const auto f1 = sample_directions(6, DirectionStrategy::fibonacci, r1);
    const auto f2 = sample_directions(6, DirectionStrategy::fibonacci, r2);
    for (int i = 0; i < 6; ++i) CHECK(f1[static_cast<std::size_t>(i)].vector() == f2[static_cast<std::size_t>(i)].vector());

    RandomStream u(12);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    const int n = 20000;
    for (const auto& d : sample_directions(n, DirectionStrategy::uniform_random, u)) mean += d.vector();
    CHECK((mean / n).norm() < 0.03);

    CHECK(parse_direction_strategy("uniform") == DirectionStrategy::uniform_random);
    CHECK(parse_direction_strategy("mub") == DirectionStrategy::mub_xyz);
    CHECK(parse_direction_strategy("fibonacci") == DirectionStrategy::fibonacci);
    CHECK_THROWS_AS(parse_direction_strategy("grid"), ValidationError);
}

TEST_CASE("nested axes are nested and distinct") {
    const auto big = nested_axes(13);
    for (int m = 2; m <= 13; ++m) {
        const auto s = nested_axes(m);
        REQUIRE(static_cast<int>(s.size()) == m);
        for (int i = 0; i < m; ++i) CHECK(s[static_cast<std::size_t>(i)].vector() == big[static_cast<std::size_t>(i)].vector());
    }
    for (std::size_t i = 0; i < big.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(std::abs(big[i].vector().dot(big[j].vector())) - 1.0) > 1e-6);
    CHECK_THROWS_AS(nested_axes(14), ValidationError);
}
