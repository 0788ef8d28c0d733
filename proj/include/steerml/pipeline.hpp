#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "steerml/features.hpp"
#include "steerml/measurement.hpp"
#include "steerml/steering_sdp.hpp"
#include "steerml/svm.hpp"

namespace steerml {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetHeader {
    int version = kDatasetFormatVersion;
    int m = 2;
    int trials = 20;
    DirectionStrategy strategy = DirectionStrategy::uniform_random;
    std::uint64_t master_seed = 42;
    int n_pos = 0;
    int n_neg = 0;
};

struct DatasetRow {
    std::uint64_t index = 0; // raw draw index
    std::uint64_t seed = 0;  // mix_seed(master_seed, index)
    int label = 1;
    int m = 2;
    int trials = 0;
    std::uint64_t digest = 0; // trace_digest(trace)
    std::array<double, 32> state{};
    std::vector<TrialRecord> trace;

    TwoQubitState rho() const { return TwoQubitState::deserialize(state); }
};

struct Dataset {
    DatasetHeader header;
    std::vector<DatasetRow> rows;
};

// Draw and label sample `index` of the stream defined by master_seed.
DatasetRow label_sample(std::uint64_t master_seed, std::uint64_t index, int m, int trials,
                        DirectionStrategy strategy);

// Re-derives the row from its seeds; true when state, label and digest match.
bool audit_row(const DatasetRow& row, const DatasetHeader& header);

struct GenerateOptions {
    DatasetHeader header;
    int workers = 1;
    std::uint64_t max_samples = 0; // 0: 1000 * (n_pos + n_neg)
    std::size_t batch = 64;
    std::function<void(const std::string&)> log; // progress / discarded samples
};

struct GenerateStats {
    std::uint64_t draws = 0;
    std::uint64_t positives = 0; // label +1 among draws
    std::uint64_t negatives = 0; // label -1 among draws
    std::uint64_t discarded = 0; // numerical failures
};

// Labels draws 0, 1, 2, ... in batches and keeps rows in index order until
// both quotas are met. Output does not depend on the worker count. Throws
// ValidationError when max_samples draws do not fill the quotas.
Dataset generate_dataset(const GenerateOptions& opts, GenerateStats* stats = nullptr);

void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Positive class for confusion counts is "steerable" (label -1).
struct Confusion {
    std::size_t true_steerable = 0;     // truth -1, predicted -1
    std::size_t true_unsteerable = 0;   // truth +1, predicted +1
    std::size_t false_steerable = 0;    // truth +1, predicted -1
    std::size_t missed_steerable = 0;   // truth -1, predicted +1

    std::size_t total() const { return true_steerable + true_unsteerable + false_steerable + missed_steerable; }
    double accuracy() const;
    void add(int truth, int predicted);
};

struct DataSplit {
    TrainingSet train;
    TrainingSet test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

// The last round(test_fraction * class count) rows of each class form the
// test tail; the rest is training data, both in file order.
DataSplit split_dataset(const Dataset& ds, FeatureKind kind, double test_fraction,
                        CanonicalVariant variant = CanonicalVariant::inverse_sqrt);

struct TrainOptions {
    FeatureKind kind = FeatureKind::F1;
    int folds = 4;
    std::vector<Hyperparams> grid = default_grid();
    std::uint64_t seed = 1;
    double test_fraction = 0.2;
    SmoOptions smo;
    int workers = 1;
    CanonicalVariant variant = CanonicalVariant::inverse_sqrt;
};

struct TrainReport {
    FeatureKind kind = FeatureKind::F1;
    CvResult cv;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double train_accuracy = 0.0;
    Confusion test;
    std::size_t support_vectors = 0;
};

struct TrainResult {
    SvmModel model;
    TrainReport report;
};

TrainResult train_model(const Dataset& ds, const TrainOptions& opts);

void write_train_report_json(std::ostream& os, const TrainReport& r);
void write_cv_csv(std::ostream& os, const CvResult& cv);

// Canonical variant recorded in the model metadata.
CanonicalVariant model_variant(const SvmModel& model);
std::vector<double> model_features(const SvmModel& model, const TwoQubitState& rho);

struct EvalRecord {
    std::size_t index = 0;
    std::optional<double> p; // Werner parameter, when applicable
    int truth = 1;
    int predicted = 1;
    double decision = 0.0;
};

struct EvaluationReport {
    std::string source;
    FeatureKind kind = FeatureKind::F1;
    Confusion confusion;
    std::vector<EvalRecord> records;
    double seconds_per_prediction = 0.0; // wall clock, excluded from artifacts

    double accuracy() const { return confusion.accuracy(); }
    double error() const { return 1.0 - confusion.accuracy(); }
};

enum class DatasetSplitChoice { all, train, test };
DatasetSplitChoice parse_split_choice(const std::string& s);

EvaluationReport evaluate_on_dataset(const SvmModel& model, const Dataset& ds, DatasetSplitChoice which,
                                     double test_fraction = 0.2);

enum class WernerTruth { sdp, bound };
WernerTruth parse_werner_truth(const std::string& s);

struct WernerGridSpec {
    double xi = 0.7853981633974483;
    int count = 1000;
    std::uint64_t seed = 7;
    WernerTruth truth = WernerTruth::sdp;
    // Labeling protocol for WernerTruth::sdp.
    int m = 2;
    int trials = 20;
    DirectionStrategy strategy = DirectionStrategy::uniform_random;
    int workers = 1;
};

struct WernerSample {
    double p = 0.0;
    int truth = 1;
};

// p uniform on [0, 1] from the seed; truth by label_state with the spec's
// protocol, or by the analytic bound.
std::vector<WernerSample> werner_grid(const WernerGridSpec& spec);

EvaluationReport evaluate_on_samples(const SvmModel& model, double xi, const std::vector<WernerSample>& samples);

void write_evaluation_json(std::ostream& os, const EvaluationReport& r);
void write_evaluation_csv(std::ostream& os, const EvaluationReport& r);

// Smallest p in (0, 1] violating the one-way bound; nullopt if none.
std::optional<double> analytic_threshold(double xi, double tol = 1e-10);

struct SweepRow {
    double xi = 0.0;
    int m = 0;
    std::string method;
    std::optional<double> threshold;
    std::optional<double> bound;
    bool monotone = true;
};

// SDP bisection with nested_axes(m) for each (xi, m).
std::vector<SweepRow> sweep_sdp(const std::vector<double>& xis, const std::vector<int>& ms, double tol);
// Ascending scan p = tol, 2 tol, ..., 1; threshold is the first p predicted -1.
SweepRow sweep_model(const SvmModel& model, double xi, int m, double tol);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

struct BenchReport {
    int m = 3;
    int trials = 20;
    int n_states = 0;
    double predict_mean = 0.0;
    double predict_stddev = 0.0;
    double sdp_mean = 0.0;
    double sdp_stddev = 0.0;
    double ratio = 0.0; // sdp_mean / predict_mean
};

BenchReport bench(const SvmModel& model, int m, int n_states, int trials, DirectionStrategy strategy,
                  std::uint64_t seed);

void write_bench_csv(std::ostream& os, const BenchReport& r);

} // namespace steerml
