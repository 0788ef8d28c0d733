#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "steerml/features.hpp"
#include "steerml/rng.hpp"

namespace steerml {

struct Hyperparams {
    double c = 1.0;
    double gamma = 1.0;
};

struct TrainingSet {
    FeatureKind kind = FeatureKind::F1;
    std::vector<std::vector<double>> x;
    std::vector<int> y; // -1 or +1

    std::size_t size() const { return x.size(); }
    std::size_t dim() const { return x.empty() ? 0 : x.front().size(); }
    // Throws ValidationError on ragged rows, bad labels or a missing class.
    void validate(bool require_both_classes = true) const;
    // FNV-1a over the rows and labels.
    std::uint64_t checksum() const;
};

// Per-feature affine map z = (x + offset) * scale.
struct Scaler {
    std::vector<double> offset;
    std::vector<double> scale;

    static Scaler identity(std::size_t dim);
    std::vector<double> apply(std::span<const double> x) const;
    TrainingSet apply(const TrainingSet& data) const;
};

// Zero mean, unit (population) variance per feature on the given data.
// Constant columns get scale 1.
Scaler fit_scaler(const TrainingSet& data);

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

enum class WorkingSetSelection {
    max_violating_pair, // i and j both by maximal KKT violation
    second_order,       // i by maximal violation, j by largest second-order gain
};

struct SmoOptions {
    double tol = 1e-3;
    WorkingSetSelection selection = WorkingSetSelection::second_order;
    std::int64_t max_updates = 10'000'000;
};

struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::int64_t updates = 0;
    bool converged = false;
    double kkt_gap = 0.0; // max violating pair gap at exit
};

// SMO on the soft-margin dual
//   min 1/2 a^T Q a - 1^T a,  Q_ij = y_i y_j K_ij,  y^T a = 0,  0 <= a_i <= C
// Stops when the maximal violating pair gap drops below opts.tol.
// A non-empty warm_start must be feasible.
DualSolution solve_dual_smo(const Eigen::MatrixXd& kernel, std::span<const int> y, double c,
                            const SmoOptions& opts = {}, std::span<const double> warm_start = {});

struct SvmModel {
    FeatureKind kind = FeatureKind::F1;
    Scaler scaler;
    Hyperparams hp;
    std::vector<std::vector<double>> support_vectors; // scaled coordinates
    std::vector<double> coef;                         // alpha_i * y_i
    double bias = 0.0;
    std::uint64_t training_checksum = 0;
    bool converged = true;
    std::map<std::string, std::string> metadata;

    // Scaler is applied internally.
    double decision_value(std::span<const double> raw) const;
    // Sign of the decision value; exact zero maps to +1.
    int predict(std::span<const double> raw) const;
    std::size_t dim() const { return scaler.offset.size(); }
};

// Expects data already mapped through `scaler`, which is stored in the model.
SvmModel train_smo(const TrainingSet& scaled, const Hyperparams& hp, const SmoOptions& opts = {},
                   const Scaler* scaler = nullptr);

struct CvCell {
    Hyperparams hp;
    double accuracy = 0.0;
};

struct CvResult {
    Hyperparams best;
    double cv_accuracy = 0.0;
    std::vector<CvCell> cells; // grid order
};

// Stratified k-fold split (seeded); mean validation accuracy per cell. Ties
// go to smaller C, then smaller gamma.
CvResult cross_validate(const TrainingSet& scaled, int k, const std::vector<Hyperparams>& grid, RandomStream rng,
                        const SmoOptions& opts = {}, int workers = 1);

// Fold index per sample; throws if a class has fewer than k samples.
std::vector<int> stratified_folds(std::span<const int> y, int k, RandomStream& rng);

// C in 2^{-5, -3, ..., 15}, gamma in 2^{-15, -13, ..., 3}.
std::vector<Hyperparams> default_grid();
// "default", or "C=lo:hi:step,gamma=lo:hi:step" with log2 exponents.
std::vector<Hyperparams> parse_grid(const std::string& spec);

// Versioned text format; see README for field order.
void write_model(std::ostream& os, const SvmModel& model);
SvmModel read_model(std::istream& is);
void save_model(const std::string& path, const SvmModel& model);
SvmModel load_model(const std::string& path);

} // namespace steerml
