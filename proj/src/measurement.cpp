#include "steerml/measurement.hpp"

#include <cmath>
#include <numbers>

#include "steerml/errors.hpp"

namespace steerml {

BlochDirection::BlochDirection(const Eigen::Vector3d& n) : n_(n) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-12) {
        throw ValidationError("Bloch direction must be a unit vector");
    }
}

BlochDirection BlochDirection::normalized(const Eigen::Vector3d& v) {
    const double len = v.norm();
    if (!(len > 0.0) || !std::isfinite(len)) throw ValidationError("cannot normalize a zero direction");
    return BlochDirection(v / len);
}

std::string_view to_string(DirectionStrategy s) {
    switch (s) {
    case DirectionStrategy::uniform_random: return "uniform";
    case DirectionStrategy::mub_xyz: return "mub";
    case DirectionStrategy::fibonacci: return "fibonacci";
    }
    return "?";
}

DirectionStrategy parse_direction_strategy(std::string_view name) {
    if (name == "uniform" || name == "uniform-random") return DirectionStrategy::uniform_random;
    if (name == "mub" || name == "mub-xyz") return DirectionStrategy::mub_xyz;
    if (name == "fibonacci") return DirectionStrategy::fibonacci;
    throw ValidationError("unknown direction strategy: " + std::string(name));
}

std::pair<Mat2, Mat2> projectors(const BlochDirection& n) {
    Mat2 ns = n[0] * pauli(1) + n[1] * pauli(2) + n[2] * pauli(3);
    return {(Mat2::Identity() + ns) / 2.0, (Mat2::Identity() - ns) / 2.0};
}

MeasurementSet sample_directions(int m, DirectionStrategy strategy, RandomStream& rng) {
    if (m < 2) throw ValidationError("need at least two measurement settings");
    MeasurementSet out;
    out.reserve(static_cast<std::size_t>(m));
    switch (strategy) {
    case DirectionStrategy::mub_xyz:
        if (m != 3) throw ValidationError("mub-xyz directions require m = 3");
        out.emplace_back(Eigen::Vector3d::UnitX());
        out.emplace_back(Eigen::Vector3d::UnitY());
        out.emplace_back(Eigen::Vector3d::UnitZ());
        break;
    case DirectionStrategy::uniform_random:
        while (static_cast<int>(out.size()) < m) {
            Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
            if (v.norm() > 1e-12) out.push_back(BlochDirection::normalized(v));
        }
        break;
    case DirectionStrategy::fibonacci: {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < m; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / m;
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * i;
            out.push_back(BlochDirection::normalized({rad * std::cos(phi), rad * std::sin(phi), z}));
        }
        break;
    }
    }
    return out;
}

MeasurementSet nested_axes(int m) {
    static const std::array<Eigen::Vector3d, 13> axes = {
        Eigen::Vector3d(1, 0, 0),  Eigen::Vector3d(0, 0, 1),  Eigen::Vector3d(0, 1, 0),
        Eigen::Vector3d(1, 1, 1),  Eigen::Vector3d(1, -1, 1), Eigen::Vector3d(-1, 1, 1),
        Eigen::Vector3d(-1, -1, 1), Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, -1, 0),
        Eigen::Vector3d(1, 0, 1),  Eigen::Vector3d(1, 0, -1), Eigen::Vector3d(0, 1, 1),
        Eigen::Vector3d(0, 1, -1)};
    if (m < 2 || m > static_cast<int>(axes.size())) throw ValidationError("nested_axes: m must lie in [2, 13]");
    MeasurementSet out;
    for (int i = 0; i < m; ++i) out.push_back(BlochDirection::normalized(axes[static_cast<std::size_t>(i)]));
    return out;
}

Assemblage::Assemblage(std::vector<std::array<Mat2, 2>> sigma) : sigma_(std::move(sigma)) {
    if (sigma_.size() < 2) throw ValidationError("assemblage needs at least two settings");
    for (const auto& pair : sigma_)
        for (const auto& s : pair)
            if (!is_hermitian(s, 1e-10)) throw ValidationError("assemblage element is not Hermitian");
}

Mat2 Assemblage::bob_marginal() const {
    Mat2 acc = Mat2::Zero();
    for (const auto& pair : sigma_) acc += pair[0] + pair[1];
    return acc / static_cast<double>(sigma_.size());
}

double Assemblage::signalling_defect() const {
    const Mat2 first = sigma_.front()[0] + sigma_.front()[1];
    double worst = 0.0;
    for (const auto& pair : sigma_) worst = std::max(worst, (pair[0] + pair[1] - first).norm());
    return worst;
}

Assemblage assemblage(const TwoQubitState& rho, const MeasurementSet& ms) {
    if (ms.size() < 2) throw ValidationError("need at least two measurement settings");
    std::vector<std::array<Mat2, 2>> sigma;
    sigma.reserve(ms.size());
    for (const auto& n : ms) {
        const auto [p0, p1] = projectors(n);
        const Mat2 s0 = partial_trace_A(kron(p0, Mat2::Identity()) * rho.matrix());
        const Mat2 s1 = partial_trace_A(kron(p1, Mat2::Identity()) * rho.matrix());
        sigma.push_back({(s0 + s0.adjoint()) / 2.0, (s1 + s1.adjoint()) / 2.0});
    }
    return Assemblage(std::move(sigma));
}

} // namespace steerml
