#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "steerml/qstate.hpp"
#include "steerml/rng.hpp"

namespace steerml {

// Unit vector on the Bloch sphere defining the projectors (I +- n.sigma)/2.
class BlochDirection {
public:
    // Throws ValidationError unless |n| = 1 within 1e-12.
    explicit BlochDirection(const Eigen::Vector3d& n);
    // Normalizes a nonzero vector.
    static BlochDirection normalized(const Eigen::Vector3d& v);

    const Eigen::Vector3d& vector() const { return n_; }
    double operator[](int i) const { return n_(i); }

private:
    Eigen::Vector3d n_;
};

using MeasurementSet = std::vector<BlochDirection>;

enum class DirectionStrategy { uniform_random, mub_xyz, fibonacci };

std::string_view to_string(DirectionStrategy s);
// Accepts "uniform", "mub", "fibonacci" and the long names.
DirectionStrategy parse_direction_strategy(std::string_view name);

// first: outcome 0, (I + n.sigma)/2; second: outcome 1, (I - n.sigma)/2.
std::pair<Mat2, Mat2> projectors(const BlochDirection& n);

// m >= 2. mub_xyz requires m = 3. The rng is only consumed by uniform_random.
MeasurementSet sample_directions(int m, DirectionStrategy strategy, RandomStream& rng);

// First m axes of the fixed sequence x, z, y, the four cube diagonals and the
// six face diagonals; sets for increasing m are nested. 2 <= m <= 13.
MeasurementSet nested_axes(int m);

// sigma_{a|x} = Tr_A[(P^a_x (x) I) rho] for outcomes a in {0, 1}.
class Assemblage {
public:
    explicit Assemblage(std::vector<std::array<Mat2, 2>> sigma);

    int settings() const { return static_cast<int>(sigma_.size()); }
    const Mat2& operator()(int a, int x) const { return sigma_[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)]; }
    // sum_a sigma_{a|x} averaged over x.
    Mat2 bob_marginal() const;
    // Largest deviation of sum_a sigma_{a|x} between settings (Frobenius).
    double signalling_defect() const;

private:
    std::vector<std::array<Mat2, 2>> sigma_;
};

Assemblage assemblage(const TwoQubitState& rho, const MeasurementSet& ms);

} // namespace steerml
