// steerml: dataset generation, training, evaluation, sweeps and timing.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steerml/errors.hpp"
#include "steerml/pipeline.hpp"

using namespace steerml;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + path);
    return os;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    auto os = open_out(path);
    os << text;
}

template <class F>
std::string render(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

std::vector<double> parse_reals(const std::string& text) {
    std::vector<double> out;
    std::string tok;
    std::stringstream ss(text);
    while (ss >> tok) {
        std::stringstream parts(tok);
        std::string piece;
        while (std::getline(parts, piece, ',')) {
            if (piece.empty()) continue;
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(piece, &used);
            } catch (const std::exception&) {
                throw ValidationError("not a number: '" + piece + "'");
            }
            if (used != piece.size()) throw ValidationError("not a number: '" + piece + "'");
            out.push_back(v);
        }
    }
    return out;
}

struct Common {
    int m = 2;
    int trials = 20;
    std::string strategy = "uniform";
    std::string features = "F1";
    std::uint64_t seed = 42;
    std::string grid = "default";
    int folds = 4;
    double tol = 1e-3;
    std::string out;
    int workers = 1;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-qubit steerability: SDP labeling and SVM classifiers"};
    app.require_subcommand(1);

    // generate
    Common gen;
    int n_pos = 2000;
    int n_neg = 2000;
    std::uint64_t max_samples = 0;
    bool quiet = false;
    auto* generate = app.add_subcommand("generate", "Draw and label random states into a dataset file");
    generate->add_option("--m", gen.m, "Measurement settings")->capture_default_str();
    generate->add_option("--trials", gen.trials, "Direction sets per state")->capture_default_str();
    generate->add_option("--strategy", gen.strategy, "uniform|mub|fibonacci")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    generate->add_option("--pos", n_pos, "Rows with label +1")->capture_default_str();
    generate->add_option("--neg", n_neg, "Rows with label -1")->capture_default_str();
    generate->add_option("--max-samples", max_samples, "Draw cap (0: 1000 x quota)")->capture_default_str();
    generate->add_option("--workers", gen.workers, "Labeling threads")->capture_default_str();
    generate->add_option("--out", gen.out, "Dataset path")->required();
    generate->add_flag("--quiet", quiet, "No progress output");

    // train
    Common tr;
    std::string train_data;
    std::string train_report;
    std::string train_cv_csv;
    std::string train_canonical = "inverse-sqrt";
    double test_fraction = 0.2;
    auto* train = app.add_subcommand("train", "Grid-search cross-validation and final SVM fit");
    train->add_option("--data", train_data, "Dataset path")->required();
    train->add_option("--features", tr.features, "F1|F2|F3|F4")->capture_default_str();
    train->add_option("--grid", tr.grid, "default or C=lo:hi:step,gamma=lo:hi:step (log2)")->capture_default_str();
    train->add_option("--folds", tr.folds, "Cross-validation folds")->capture_default_str();
    train->add_option("--seed", tr.seed, "Fold assignment seed")->capture_default_str();
    train->add_option("--tol", tr.tol, "SMO KKT tolerance")->capture_default_str();
    train->add_option("--test-fraction", test_fraction, "Reserved tail per class")->capture_default_str();
    train->add_option("--canonical", train_canonical, "sqrt|inverse-sqrt (F3, F4)")->capture_default_str();
    train->add_option("--workers", tr.workers, "Cross-validation threads")->capture_default_str();
    train->add_option("--out", tr.out, "Model path")->required();
    train->add_option("--report", train_report, "Training report (JSON)");
    train->add_option("--cv-csv", train_cv_csv, "Per-cell CV accuracy (CSV)");

    // evaluate
    Common ev;
    std::string eval_model;
    std::string eval_data;
    std::string eval_split = "test";
    std::string eval_csv;
    std::string eval_truth = "sdp";
    double eval_xi = 0.0;
    int eval_count = 1000;
    auto* evaluate = app.add_subcommand("evaluate", "Accuracy on a dataset or a generalized Werner grid");
    evaluate->add_option("--model", eval_model, "Model path")->required();
    auto* data_opt = evaluate->add_option("--data", eval_data, "Dataset path");
    auto* xi_opt = evaluate->add_option("--werner-xi", eval_xi, "Werner grid angle");
    data_opt->excludes(xi_opt);
    evaluate->add_option("--split", eval_split, "all|train|test (dataset source)")->capture_default_str();
    evaluate->add_option("--test-fraction", test_fraction, "Reserved tail per class")->capture_default_str();
    evaluate->add_option("--count", eval_count, "Werner grid size")->capture_default_str();
    evaluate->add_option("--truth", eval_truth, "sdp|bound (Werner labels)")->capture_default_str();
    evaluate->add_option("--m", ev.m, "Settings for sdp truth")->capture_default_str();
    evaluate->add_option("--trials", ev.trials, "Trials for sdp truth")->capture_default_str();
    evaluate->add_option("--strategy", ev.strategy, "Directions for sdp truth")->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "Werner grid seed")->capture_default_str();
    evaluate->add_option("--workers", ev.workers, "Labeling threads")->capture_default_str();
    evaluate->add_option("--out", ev.out, "Report (JSON); stdout if omitted");
    evaluate->add_option("--csv", eval_csv, "Per-sample predictions (CSV)");

    // sweep
    std::string sweep_method = "sdp";
    std::vector<double> sweep_xi{0.7853981633974483};
    std::vector<int> sweep_m{2, 3, 4};
    std::vector<std::string> sweep_models;
    double sweep_tol = 1e-3;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Steerability thresholds along the generalized Werner family");
    sweep->add_option("--method", sweep_method, "sdp|model")->capture_default_str();
    sweep->add_option("--xi", sweep_xi, "Angles")->capture_default_str();
    sweep->add_option("--m", sweep_m, "Settings (nested axes for sdp)")->capture_default_str();
    sweep->add_option("--model", sweep_models, "Model paths (method=model)");
    sweep->add_option("--tol", sweep_tol, "Bisection width / scan step")->capture_default_str();
    sweep->add_option("--out", sweep_out, "CSV path; stdout if omitted");

    // predict
    std::string pred_model;
    std::string pred_state_file;
    std::string pred_values;
    auto* predict = app.add_subcommand("predict", "Classify one state given as 32 reals");
    predict->add_option("--model", pred_model, "Model path")->required();
    auto* file_opt = predict->add_option("--state", pred_state_file, "File with 32 reals");
    auto* inline_opt = predict->add_option("--values", pred_values, "32 comma separated reals");
    file_opt->excludes(inline_opt);
    std::string pred_out;
    predict->add_option("--out", pred_out, "CSV path; stdout if omitted");

    // bench
    Common be;
    std::string bench_model;
    int bench_n = 20;
    be.m = 3;
    auto* benchcmd = app.add_subcommand("bench", "Prediction time versus SDP labeling time");
    benchcmd->add_option("--model", bench_model, "Model path")->required();
    benchcmd->add_option("--m", be.m, "Settings")->capture_default_str();
    benchcmd->add_option("--n", bench_n, "States (>= 10)")->capture_default_str();
    benchcmd->add_option("--trials", be.trials, "Trials per label")->capture_default_str();
    benchcmd->add_option("--strategy", be.strategy, "uniform|mub|fibonacci")->capture_default_str();
    benchcmd->add_option("--seed", be.seed, "State seed")->capture_default_str();
    benchcmd->add_option("--out", be.out, "CSV path; stdout if omitted");

    // audit
    std::string audit_data;
    auto* audit = app.add_subcommand("audit", "Re-derive every row of a dataset from its seeds");
    audit->add_option("--data", audit_data, "Dataset path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*generate) {
            GenerateOptions opts;
            opts.header.m = gen.m;
            opts.header.trials = gen.trials;
            opts.header.strategy = parse_direction_strategy(gen.strategy);
            opts.header.master_seed = gen.seed;
            opts.header.n_pos = n_pos;
            opts.header.n_neg = n_neg;
            opts.workers = gen.workers;
            opts.max_samples = max_samples;
            if (!quiet) opts.log = [](const std::string& s) { std::cerr << s << "\n"; };
            GenerateStats stats;
            const Dataset ds = generate_dataset(opts, &stats);
            save_dataset(gen.out, ds);
            std::cerr << "draws " << stats.draws << " (+1: " << stats.positives << ", -1: " << stats.negatives
                      << ", discarded: " << stats.discarded << ")\n";
        } else if (*train) {
            TrainOptions opts;
            opts.kind = parse_feature_kind(tr.features);
            opts.folds = tr.folds;
            opts.grid = parse_grid(tr.grid);
            opts.seed = tr.seed;
            opts.smo.tol = tr.tol;
            opts.test_fraction = test_fraction;
            opts.workers = tr.workers;
            if (train_canonical == "sqrt") opts.variant = CanonicalVariant::sqrt;
            else if (train_canonical == "inverse-sqrt") opts.variant = CanonicalVariant::inverse_sqrt;
            else throw ValidationError("unknown canonical variant '" + train_canonical + "'");
            const Dataset ds = load_dataset(train_data);
            const TrainResult res = train_model(ds, opts);
            save_model(tr.out, res.model);
            if (!train_report.empty()) write_text(train_report, render([&](std::ostream& os) { write_train_report_json(os, res.report); }));
            if (!train_cv_csv.empty()) write_text(train_cv_csv, render([&](std::ostream& os) { write_cv_csv(os, res.report.cv); }));
            std::cerr << to_string(opts.kind) << ": cv " << res.report.cv.cv_accuracy << " at C=" << res.report.cv.best.c
                      << " gamma=" << res.report.cv.best.gamma << ", test " << res.report.test.accuracy() << "\n";
        } else if (*evaluate) {
            const SvmModel model = load_model(eval_model);
            EvaluationReport rep;
            if (!eval_data.empty()) {
                rep = evaluate_on_dataset(model, load_dataset(eval_data), parse_split_choice(eval_split), test_fraction);
            } else if (*xi_opt) {
                WernerGridSpec spec;
                spec.xi = eval_xi;
                spec.count = eval_count;
                spec.seed = ev.seed;
                spec.truth = parse_werner_truth(eval_truth);
                spec.m = ev.m;
                spec.trials = ev.trials;
                spec.strategy = parse_direction_strategy(ev.strategy);
                spec.workers = ev.workers;
                rep = evaluate_on_samples(model, eval_xi, werner_grid(spec));
            } else {
                throw ValidationError("evaluate: give --data or --werner-xi");
            }
            write_text(ev.out, render([&](std::ostream& os) { write_evaluation_json(os, rep); }));
            if (!eval_csv.empty()) write_text(eval_csv, render([&](std::ostream& os) { write_evaluation_csv(os, rep); }));
        } else if (*sweep) {
            std::vector<SweepRow> rows;
            if (sweep_method == "sdp") {
                rows = sweep_sdp(sweep_xi, sweep_m, sweep_tol);
            } else if (sweep_method == "model") {
                if (sweep_models.empty()) throw ValidationError("sweep: method=model needs --model");
                for (const auto& path : sweep_models) {
                    const SvmModel model = load_model(path);
                    int m = 0;
                    if (auto it = model.metadata.find("m"); it != model.metadata.end()) m = std::stoi(it->second);
                    for (double xi : sweep_xi) rows.push_back(sweep_model(model, xi, m, sweep_tol));
                }
            } else {
                throw ValidationError("sweep: unknown method '" + sweep_method + "' (sdp|model)");
            }
            write_text(sweep_out, render([&](std::ostream& os) { write_sweep_csv(os, rows); }));
        } else if (*predict) {
            const SvmModel model = load_model(pred_model);
            std::string text = pred_values;
            if (!pred_state_file.empty()) {
                std::ifstream is(pred_state_file);
                if (!is) throw ValidationError("cannot open " + pred_state_file);
                std::stringstream buf;
                buf << is.rdbuf();
                text = buf.str();
            } else if (pred_values.empty()) {
                throw ValidationError("predict: give --state or --values");
            }
            const std::vector<double> v = parse_reals(text);
            if (v.size() != 32) throw ValidationError("predict: expected 32 reals, got " + std::to_string(v.size()));
            std::array<double, 32> raw{};
            std::copy(v.begin(), v.end(), raw.begin());
            const TwoQubitState rho = TwoQubitState::deserialize(raw);
            const double dv = model.decision_value(model_features(model, rho));
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", dv);
            write_text(pred_out, std::string("label,decision\n") + (dv < 0.0 ? "-1" : "1") + "," + buf + "\n");
        } else if (*benchcmd) {
            const SvmModel model = load_model(bench_model);
            const BenchReport rep = bench(model, be.m, bench_n, be.trials, parse_direction_strategy(be.strategy), be.seed);
            write_text(be.out, render([&](std::ostream& os) { write_bench_csv(os, rep); }));
        } else if (*audit) {
            const Dataset ds = load_dataset(audit_data);
            std::size_t bad = 0;
            for (const auto& row : ds.rows)
                if (!audit_row(row, ds.header)) {
                    ++bad;
                    std::cerr << "row " << row.index << " does not re-derive\n";
                }
            std::cout << "rows " << ds.rows.size() << ", mismatches " << bad << "\n";
            if (bad > 0) return 3;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
