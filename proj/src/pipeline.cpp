#include "steerml/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "steerml/errors.hpp"
#include "steerml/parallel.hpp"

namespace steerml {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    try {
        return std::stoull(s, nullptr, 16);
    } catch (const std::logic_error&) {
        throw ValidationError("bad hex digest '" + s + "'");
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SolverStatus parse_status(const std::string& s) {
    if (s == "optimal") return SolverStatus::optimal;
    if (s == "max-iterations") return SolverStatus::max_iterations;
    if (s == "numerical-failure") return SolverStatus::numerical_failure;
    throw ValidationError("unknown solver status '" + s + "'");
}

Json row_to_json(const DatasetRow& r) {
    Json trace = Json::array();
    for (const auto& t : r.trace) {
        Json dirs = Json::array();
        for (const auto& n : t.directions) dirs.push_back({n[0], n[1], n[2]});
        trace.push_back({{"directions", dirs}, {"objective", t.objective}, {"status", std::string(to_string(t.status))}});
    }
    return Json{{"index", r.index}, {"seed", r.seed},   {"label", r.label},
                {"m", r.m},         {"trials", r.trials}, {"digest", hex64(r.digest)},
                {"state", r.state}, {"trace", trace}};
}

DatasetRow row_from_json(const Json& j) {
    DatasetRow r;
    r.index = j.at("index").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.label = j.at("label").get<int>();
    r.m = j.at("m").get<int>();
    r.trials = j.at("trials").get<int>();
    r.digest = parse_hex64(j.at("digest").get<std::string>());
    const auto state = j.at("state").get<std::vector<double>>();
    if (state.size() != 32) throw ValidationError("dataset row: state needs 32 reals");
    std::copy(state.begin(), state.end(), r.state.begin());
    for (const auto& t : j.at("trace")) {
        TrialRecord rec;
        for (const auto& d : t.at("directions")) {
            const auto v = d.get<std::vector<double>>();
            if (v.size() != 3) throw ValidationError("dataset row: direction needs 3 reals");
            rec.directions.emplace_back(Eigen::Vector3d(v[0], v[1], v[2]));
        }
        rec.objective = t.at("objective").get<double>();
        rec.status = parse_status(t.at("status").get<std::string>());
        r.trace.push_back(std::move(rec));
    }
    if (r.label != 1 && r.label != -1) throw ValidationError("dataset row: label must be -1 or +1");
    (void)r.rho(); // validates the state
    return r;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::string variant_name(CanonicalVariant v) { return v == CanonicalVariant::sqrt ? "sqrt" : "inverse-sqrt"; }

} // namespace

DatasetRow label_sample(std::uint64_t master_seed, std::uint64_t index, int m, int trials,
                        DirectionStrategy strategy) {
    DatasetRow row;
    row.index = index;
    row.seed = mix_seed(master_seed, index);
    row.m = m;
    row.trials = trials;
    RandomStream rng(row.seed);
    const TwoQubitState rho = random_two_qubit_state(rng);
    row.state = rho.serialize();
    LabelResult lr = label_state(rho, m, trials, strategy, rng.substream(0));
    row.label = lr.label;
    row.trace = std::move(lr.trials);
    row.digest = trace_digest(row.trace);
    return row;
}

bool audit_row(const DatasetRow& row, const DatasetHeader& header) {
    if (row.seed != mix_seed(header.master_seed, row.index)) return false;
    if (trace_digest(row.trace) != row.digest) return false;
    const DatasetRow again = label_sample(header.master_seed, row.index, header.m, header.trials, header.strategy);
    return again.state == row.state && again.label == row.label && again.digest == row.digest;
}

Dataset generate_dataset(const GenerateOptions& opts, GenerateStats* stats) {
    const DatasetHeader& h = opts.header;
    if (h.n_pos < 1 || h.n_neg < 1) throw ValidationError("generate: class quotas must be at least 1");
    if (h.trials < 1) throw ValidationError("generate: trials must be at least 1");
    if (h.m < 2 || h.m > kMaxDualSettings) throw ValidationError("generate: m must lie in [2, 10]");
    if (h.strategy == DirectionStrategy::mub_xyz && h.m != 3) throw ValidationError("generate: mub requires m = 3");
    const std::uint64_t cap =
        opts.max_samples > 0 ? opts.max_samples : 1000ULL * static_cast<std::uint64_t>(h.n_pos + h.n_neg);
    const std::size_t batch = std::max<std::size_t>(opts.batch, 1);

    Dataset ds;
    ds.header = h;
    GenerateStats local;
    int pos = 0;
    int neg = 0;
    std::uint64_t next = 0;
    while (pos < h.n_pos || neg < h.n_neg) {
        if (next >= cap) {
            std::ostringstream msg;
            msg << "generate: quotas not met after " << next << " draws (+1: " << pos << "/" << h.n_pos
                << ", -1: " << neg << "/" << h.n_neg << ", discarded " << local.discarded << ")";
            throw ValidationError(msg.str());
        }
        const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(batch, cap - next));
        std::vector<std::optional<DatasetRow>> results(count);
        std::vector<std::string> errors(count);
        parallel_for(count, opts.workers, [&](std::size_t i) {
            try {
                results[i] = label_sample(h.master_seed, next + i, h.m, h.trials, h.strategy);
            } catch (const NumericalError& e) {
                errors[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < count && (pos < h.n_pos || neg < h.n_neg); ++i) {
            ++local.draws;
            if (!results[i]) {
                ++local.discarded;
                if (opts.log) opts.log("discarded sample " + std::to_string(next + i) + ": " + errors[i]);
                continue;
            }
            DatasetRow& row = *results[i];
            if (row.label == 1) {
                ++local.positives;
                if (pos < h.n_pos) {
                    ++pos;
                    ds.rows.push_back(std::move(row));
                }
            } else {
                ++local.negatives;
                if (neg < h.n_neg) {
                    ++neg;
                    ds.rows.push_back(std::move(row));
                }
            }
        }
        next += count;
        if (opts.log) {
            std::ostringstream msg;
            msg << "draws " << local.draws << ": +1 " << pos << "/" << h.n_pos << ", -1 " << neg << "/" << h.n_neg;
            opts.log(msg.str());
        }
    }
    if (stats != nullptr) *stats = local;
    return ds;
}

void write_dataset(std::ostream& os, const Dataset& ds) {
    const auto& h = ds.header;
    Json header{{"format", "steerml-dataset"},
                {"version", h.version},
                {"m", h.m},
                {"trials", h.trials},
                {"strategy", std::string(to_string(h.strategy))},
                {"master_seed", h.master_seed},
                {"n_pos", h.n_pos},
                {"n_neg", h.n_neg}};
    os << header.dump() << "\n";
    for (const auto& r : ds.rows) os << row_to_json(r).dump() << "\n";
}

Dataset read_dataset(std::istream& is) {
    Dataset ds;
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("dataset: empty file");
    try {
        const Json h = Json::parse(line);
        if (h.at("format").get<std::string>() != "steerml-dataset") throw ValidationError("dataset: wrong format tag");
        ds.header.version = h.at("version").get<int>();
        if (ds.header.version != kDatasetFormatVersion) throw ValidationError("dataset: unsupported version");
        ds.header.m = h.at("m").get<int>();
        ds.header.trials = h.at("trials").get<int>();
        ds.header.strategy = parse_direction_strategy(h.at("strategy").get<std::string>());
        ds.header.master_seed = h.at("master_seed").get<std::uint64_t>();
        ds.header.n_pos = h.at("n_pos").get<int>();
        ds.header.n_neg = h.at("n_neg").get<int>();
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            ds.rows.push_back(row_from_json(Json::parse(line)));
        }
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("dataset: ") + e.what());
    }
    return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write dataset " + path);
    write_dataset(os, ds);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open dataset " + path);
    return read_dataset(is);
}

double Confusion::accuracy() const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(true_steerable + true_unsteerable) / static_cast<double>(n);
}

void Confusion::add(int truth, int predicted) {
    if (truth == -1) (predicted == -1 ? true_steerable : missed_steerable) += 1;
    else (predicted == 1 ? true_unsteerable : false_steerable) += 1;
}

DataSplit split_dataset(const Dataset& ds, FeatureKind kind, double test_fraction, CanonicalVariant variant) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in [0, 1)");
    DataSplit split;
    split.train.kind = split.test.kind = kind;
    for (int label : {1, -1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.rows.size(); ++i)
            if (ds.rows[i].label == label) idx.push_back(i);
        const auto ntest = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t p = 0; p < idx.size(); ++p) (p + ntest < idx.size() ? split.train_rows : split.test_rows).push_back(idx[p]);
    }
    std::sort(split.train_rows.begin(), split.train_rows.end());
    std::sort(split.test_rows.begin(), split.test_rows.end());
    auto fill = [&](TrainingSet& set, const std::vector<std::size_t>& rows) {
        for (std::size_t i : rows) {
            set.x.push_back(extract_features(kind, ds.rows[i].rho(), variant).values);
            set.y.push_back(ds.rows[i].label);
        }
    };
    fill(split.train, split.train_rows);
    fill(split.test, split.test_rows);
    return split;
}

TrainResult train_model(const Dataset& ds, const TrainOptions& opts) {
    const DataSplit split = split_dataset(ds, opts.kind, opts.test_fraction, opts.variant);
    if (split.train.size() < 2 * static_cast<std::size_t>(opts.folds)) throw ValidationError("train: too few rows");
    split.train.validate(true);
    const Scaler scaler = fit_scaler(split.train);
    const TrainingSet scaled = scaler.apply(split.train);

    TrainResult out;
    out.report.kind = opts.kind;
    out.report.cv = cross_validate(scaled, opts.folds, opts.grid, RandomStream(opts.seed), opts.smo, opts.workers);
    out.model = train_smo(scaled, out.report.cv.best, opts.smo, &scaler);
    out.model.metadata["m"] = std::to_string(ds.header.m);
    out.model.metadata["trials"] = std::to_string(ds.header.trials);
    out.model.metadata["strategy"] = std::string(to_string(ds.header.strategy));
    out.model.metadata["dataset_seed"] = std::to_string(ds.header.master_seed);
    out.model.metadata["canonical"] = variant_name(opts.variant);

    out.report.train_size = split.train.size();
    out.report.test_size = split.test.size();
    out.report.support_vectors = out.model.support_vectors.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.train.size(); ++i)
        if (out.model.predict(split.train.x[i]) == split.train.y[i]) ++correct;
    out.report.train_accuracy = static_cast<double>(correct) / static_cast<double>(split.train.size());
    for (std::size_t i = 0; i < split.test.size(); ++i) out.report.test.add(split.test.y[i], out.model.predict(split.test.x[i]));
    return out;
}

void write_train_report_json(std::ostream& os, const TrainReport& r) {
    Json j{{"features", std::string(to_string(r.kind))},
           {"best_C", r.cv.best.c},
           {"best_gamma", r.cv.best.gamma},
           {"cv_accuracy", r.cv.cv_accuracy},
           {"train_size", r.train_size},
           {"train_accuracy", r.train_accuracy},
           {"test_size", r.test_size},
           {"test_accuracy", r.test.accuracy()},
           {"test_confusion",
            {{"true_steerable", r.test.true_steerable},
             {"true_unsteerable", r.test.true_unsteerable},
             {"false_steerable", r.test.false_steerable},
             {"missed_steerable", r.test.missed_steerable}}},
           {"support_vectors", r.support_vectors}};
    os << j.dump(2) << "\n";
}

void write_cv_csv(std::ostream& os, const CvResult& cv) {
    os << "C,gamma,cv_accuracy\n";
    for (const auto& cell : cv.cells) os << fmt(cell.hp.c) << "," << fmt(cell.hp.gamma) << "," << fmt(cell.accuracy) << "\n";
}

CanonicalVariant model_variant(const SvmModel& model) {
    const auto it = model.metadata.find("canonical");
    if (it == model.metadata.end() || it->second == "inverse-sqrt") return CanonicalVariant::inverse_sqrt;
    if (it->second == "sqrt") return CanonicalVariant::sqrt;
    throw ValidationError("model: unknown canonical variant " + it->second);
}

std::vector<double> model_features(const SvmModel& model, const TwoQubitState& rho) {
    return extract_features(model.kind, rho, model_variant(model)).values;
}

DatasetSplitChoice parse_split_choice(const std::string& s) {
    if (s == "all") return DatasetSplitChoice::all;
    if (s == "train") return DatasetSplitChoice::train;
    if (s == "test") return DatasetSplitChoice::test;
    throw ValidationError("unknown split '" + s + "' (all|train|test)");
}

EvaluationReport evaluate_on_dataset(const SvmModel& model, const Dataset& ds, DatasetSplitChoice which,
                                     double test_fraction) {
    std::vector<std::size_t> rows;
    if (which == DatasetSplitChoice::all) {
        rows.resize(ds.rows.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    } else {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < ds.rows.size(); ++i) (ds.rows[i].label == 1 ? pos : neg).push_back(i);
        for (const auto* idx : {&pos, &neg}) {
            const auto ntest = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx->size())));
            for (std::size_t p = 0; p < idx->size(); ++p) {
                const bool is_test = p + ntest >= idx->size();
                if (is_test == (which == DatasetSplitChoice::test)) rows.push_back((*idx)[p]);
            }
        }
        std::sort(rows.begin(), rows.end());
    }
    EvaluationReport rep;
    rep.source = "dataset";
    rep.kind = model.kind;
    double seconds = 0.0;
    for (std::size_t i : rows) {
        const DatasetRow& row = ds.rows[i];
        const TwoQubitState rho = row.rho();
        const auto t0 = Clock::now();
        const double dv = model.decision_value(model_features(model, rho));
        seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        EvalRecord rec{row.index, std::nullopt, row.label, dv < 0.0 ? -1 : 1, dv};
        rep.confusion.add(rec.truth, rec.predicted);
        rep.records.push_back(rec);
    }
    rep.seconds_per_prediction = rows.empty() ? 0.0 : seconds / static_cast<double>(rows.size());
    return rep;
}

WernerTruth parse_werner_truth(const std::string& s) {
    if (s == "sdp") return WernerTruth::sdp;
    if (s == "bound") return WernerTruth::bound;
    throw ValidationError("unknown truth '" + s + "' (sdp|bound)");
}

std::vector<WernerSample> werner_grid(const WernerGridSpec& spec) {
    if (spec.count < 1) throw ValidationError("werner grid: count must be positive");
    std::vector<WernerSample> out(static_cast<std::size_t>(spec.count));
    parallel_for(out.size(), spec.workers, [&](std::size_t i) {
        RandomStream rng(mix_seed(spec.seed, i));
        WernerSample s;
        s.p = rng.uniform();
        if (spec.truth == WernerTruth::bound) {
            s.truth = unsteerable_bound_holds(s.p, spec.xi) ? 1 : -1;
        } else {
            s.truth = label_state(generalized_werner(s.p, spec.xi), spec.m, spec.trials, spec.strategy, rng.substream(1)).label;
        }
        out[i] = s;
    });
    return out;
}

EvaluationReport evaluate_on_samples(const SvmModel& model, double xi, const std::vector<WernerSample>& samples) {
    EvaluationReport rep;
    rep.source = "werner";
    rep.kind = model.kind;
    double seconds = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const TwoQubitState rho = generalized_werner(samples[i].p, xi);
        const auto t0 = Clock::now();
        const double dv = model.decision_value(model_features(model, rho));
        seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        EvalRecord rec{i, samples[i].p, samples[i].truth, dv < 0.0 ? -1 : 1, dv};
        rep.confusion.add(rec.truth, rec.predicted);
        rep.records.push_back(rec);
    }
    rep.seconds_per_prediction = samples.empty() ? 0.0 : seconds / static_cast<double>(samples.size());
    return rep;
}

void write_evaluation_json(std::ostream& os, const EvaluationReport& r) {
    Json j{{"source", r.source},
           {"features", std::string(to_string(r.kind))},
           {"size", r.confusion.total()},
           {"accuracy", r.accuracy()},
           {"confusion",
            {{"true_steerable", r.confusion.true_steerable},
             {"true_unsteerable", r.confusion.true_unsteerable},
             {"false_steerable", r.confusion.false_steerable},
             {"missed_steerable", r.confusion.missed_steerable}}}};
    os << j.dump(2) << "\n";
}

void write_evaluation_csv(std::ostream& os, const EvaluationReport& r) {
    os << "index,p,truth,predicted,decision\n";
    for (const auto& rec : r.records) {
        os << rec.index << "," << (rec.p ? fmt(*rec.p) : "") << "," << rec.truth << "," << rec.predicted << ","
           << fmt(rec.decision) << "\n";
    }
}

std::optional<double> analytic_threshold(double xi, double tol) {
    if (unsteerable_bound_holds(1.0, xi)) return std::nullopt;
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (unsteerable_bound_holds(mid, xi) ? lo : hi) = mid;
    }
    return hi;
}

std::vector<SweepRow> sweep_sdp(const std::vector<double>& xis, const std::vector<int>& ms, double tol) {
    std::vector<SweepRow> rows;
    for (double xi : xis)
        for (int m : ms) {
            SweepRow r;
            r.xi = xi;
            r.m = m;
            r.method = "sdp";
            r.threshold = steering_threshold_scan(xi, nested_axes(m), tol);
            r.bound = analytic_threshold(xi);
            rows.push_back(r);
        }
    return rows;
}

SweepRow sweep_model(const SvmModel& model, double xi, int m, double tol) {
    if (!(tol > 0.0 && tol <= 0.5)) throw ValidationError("sweep: tol must lie in (0, 0.5]");
    SweepRow r;
    r.xi = xi;
    r.m = m;
    r.method = "model-" + std::string(to_string(model.kind));
    r.bound = analytic_threshold(xi);
    const auto steps = static_cast<long>(std::llround(1.0 / tol));
    for (long k = 1; k <= steps; ++k) {
        const double p = std::min(1.0, static_cast<double>(k) * tol);
        const int label = model.predict(model_features(model, generalized_werner(p, xi)));
        if (label == -1 && !r.threshold) r.threshold = p;
        if (label == 1 && r.threshold) r.monotone = false;
    }
    return r;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "xi,m,method,threshold,bound,monotone\n";
    for (const auto& r : rows) {
        os << fmt(r.xi) << "," << r.m << "," << r.method << "," << (r.threshold ? fmt(*r.threshold) : "none") << ","
           << (r.bound ? fmt(*r.bound) : "none") << "," << (r.monotone ? 1 : 0) << "\n";
    }
}

BenchReport bench(const SvmModel& model, int m, int n_states, int trials, DirectionStrategy strategy,
                  std::uint64_t seed) {
    if (n_states < 10) throw ValidationError("bench: need at least 10 states");
    BenchReport rep;
    rep.m = m;
    rep.trials = trials;
    rep.n_states = n_states;
    std::vector<double> predict_times;
    std::vector<double> sdp_times;
    int sink = 0;
    for (int i = 0; i < n_states; ++i) {
        RandomStream rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        const TwoQubitState rho = random_two_qubit_state(rng);
        auto t0 = Clock::now();
        sink += model.predict(model_features(model, rho));
        predict_times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        t0 = Clock::now();
        sink += label_state(rho, m, trials, strategy, rng.substream(0)).label;
        sdp_times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    (void)sink;
    rep.predict_mean = mean_of(predict_times);
    rep.predict_stddev = stddev_of(predict_times);
    rep.sdp_mean = mean_of(sdp_times);
    rep.sdp_stddev = stddev_of(sdp_times);
    rep.ratio = rep.sdp_mean / rep.predict_mean;
    return rep;
}

void write_bench_csv(std::ostream& os, const BenchReport& r) {
    os << "m,trials,n_states,predict_mean_s,predict_stddev_s,sdp_mean_s,sdp_stddev_s,ratio\n";
    os << r.m << "," << r.trials << "," << r.n_states << "," << fmt(r.predict_mean) << "," << fmt(r.predict_stddev)
       << "," << fmt(r.sdp_mean) << "," << fmt(r.sdp_stddev) << "," << fmt(r.ratio) << "\n";
}

} // namespace steerml
