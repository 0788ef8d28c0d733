#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "steerml/errors.hpp"
#include "steerml/pipeline.hpp"

using namespace steerml;

namespace {

Dataset small_dataset(int n_pos, int n_neg, int trials, std::uint64_t seed, int workers) {
    GenerateOptions opts;
    opts.header.m = 2;
    opts.header.trials = trials;
    opts.header.master_seed = seed;
    opts.header.n_pos = n_pos;
    opts.header.n_neg = n_neg;
    opts.workers = workers;
    opts.batch = 16;
    return generate_dataset(opts);
}

std::string dump(const Dataset& ds) {
    std::ostringstream os;
    write_dataset(os, ds);
    return os.str();
}

} // namespace

TEST_CASE("generation is deterministic and worker independent") {
    const std::string a = dump(small_dataset(10, 10, 5, 42, 1));
    const std::string b = dump(small_dataset(10, 10, 5, 42, 1));
    const std::string c = dump(small_dataset(10, 10, 5, 42, 4));
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a != dump(small_dataset(10, 10, 5, 43, 1)));
}

TEST_CASE("quotas are met exactly, rows in draw order") {
    const Dataset ds = small_dataset(7, 5, 5, 1, 2);
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        (ds.rows[i].label == 1 ? pos : neg)++;
        if (i > 0) CHECK(ds.rows[i].index > ds.rows[i - 1].index);
        CHECK(ds.rows[i].trace.size() == 5);
    }
    CHECK(pos == 7);
    CHECK(neg == 5);
}

TEST_CASE("dataset text round trip") {
    const Dataset ds = small_dataset(3, 3, 4, 8, 1);
    const std::string text = dump(ds);
    std::istringstream is(text);
    const Dataset back = read_dataset(is);
    CHECK(dump(back) == text);
    CHECK(back.header.master_seed == 8);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.rows[i].state == ds.rows[i].state);
        CHECK(back.rows[i].digest == ds.rows[i].digest);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(read_dataset(empty), ValidationError);
    std::string wrong = text;
    wrong.replace(wrong.find("steerml-dataset"), 15, "other-dataset!!");
    std::istringstream bad(wrong);
    CHECK_THROWS_AS(read_dataset(bad), ValidationError);
}

TEST_CASE("audit re-derives rows and catches tampering") {
    Dataset ds = small_dataset(4, 4, 5, 21, 1);
    for (const auto& row : ds.rows) CHECK(audit_row(row, ds.header));
    DatasetRow t = ds.rows[0];
    t.label = -t.label;
    CHECK_FALSE(audit_row(t, ds.header));
    t = ds.rows[1];
    t.trace[0].objective += 1e-3;
    CHECK_FALSE(audit_row(t, ds.header));
    t = ds.rows[2];
    t.state[0] += 1e-12;
    CHECK_FALSE(audit_row(t, ds.header));
}

TEST_CASE("relabeling oracle: raw steerable fraction") {
    GenerateOptions opts;
    opts.header.m = 2;
    opts.header.trials = 20;
    opts.header.master_seed = 77;
    opts.header.n_pos = 100;
    opts.header.n_neg = 100;
    GenerateStats stats;
    const Dataset ds = generate_dataset(opts, &stats);
    std::uint64_t steerable = 0;
    for (std::uint64_t i = 0; i < stats.draws; ++i) {
        RandomStream rng(mix_seed(77, i));
        const TwoQubitState rho = random_two_qubit_state(rng);
        if (label_state(rho, 2, 20, DirectionStrategy::uniform_random, rng.substream(0)).label == -1) ++steerable;
    }
    CHECK(stats.discarded == 0);
    CHECK(steerable == stats.negatives);
    CHECK(stats.positives + stats.negatives == stats.draws);
}

TEST_CASE("unreachable quota reports progress") {
    GenerateOptions opts;
    opts.header.m = 2;
    opts.header.trials = 1;
    opts.header.n_pos = 1;
    opts.header.n_neg = 50;
    opts.max_samples = 30;
    try {
        generate_dataset(opts);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("after 30 draws") != std::string::npos);
    }
    opts.header.n_neg = 0;
    CHECK_THROWS_AS(generate_dataset(opts), ValidationError);
    opts.header.n_neg = 1;
    opts.header.strategy = DirectionStrategy::mub_xyz;
    CHECK_THROWS_AS(generate_dataset(opts), ValidationError);
}

TEST_CASE("confusion arithmetic") {
    Confusion c;
    c.add(-1, -1);
    c.add(1, 1);
    c.add(1, -1);
    c.add(-1, 1);
    c.add(1, 1);
    CHECK(c.total() == 5);
    CHECK(c.true_steerable == 1);
    CHECK(c.true_unsteerable == 2);
    CHECK(c.false_steerable == 1);
    CHECK(c.missed_steerable == 1);
    CHECK(c.accuracy() == doctest::Approx(0.6));
}

TEST_CASE("split keeps the last fifth of each class for testing") {
    const Dataset ds = small_dataset(10, 10, 5, 3, 1);
    const DataSplit s = split_dataset(ds, FeatureKind::F2, 0.2);
    CHECK(s.test.size() == 4);
    CHECK(s.train.size() == 16);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) (ds.rows[i].label == 1 ? pos : neg).push_back(i);
    for (std::size_t r : s.test_rows) {
        const auto& cls = ds.rows[r].label == 1 ? pos : neg;
        CHECK(std::find(cls.end() - 2, cls.end(), r) != cls.end());
    }
}

TEST_CASE("training, reports and evaluation") {
    const Dataset ds = small_dataset(30, 30, 10, 5, 1);
    TrainOptions opts;
    opts.kind = FeatureKind::F1;
    opts.grid = parse_grid("C=-1:5:2,gamma=-5:-1:2");
    const TrainResult a = train_model(ds, opts);
    const TrainResult b = train_model(ds, opts);
    std::ostringstream ma, mb, ra, rb;
    write_model(ma, a.model);
    write_model(mb, b.model);
    write_train_report_json(ra, a.report);
    write_train_report_json(rb, b.report);
    CHECK(ma.str() == mb.str());
    CHECK(ra.str() == rb.str());
    CHECK(a.report.test_size == 12);
    CHECK(a.report.test.total() == 12);
    CHECK(a.report.train_size == 48);
    CHECK(a.model.metadata.at("m") == "2");
    CHECK(a.model.metadata.at("canonical") == "inverse-sqrt");

    const EvaluationReport train_eval = evaluate_on_dataset(a.model, ds, DatasetSplitChoice::train);
    CHECK(train_eval.confusion.total() == 48);
    CHECK(train_eval.accuracy() >= a.report.cv.cv_accuracy - 0.05);
    const EvaluationReport test_eval = evaluate_on_dataset(a.model, ds, DatasetSplitChoice::test);
    CHECK(test_eval.accuracy() == a.report.test.accuracy());
    CHECK(evaluate_on_dataset(a.model, ds, DatasetSplitChoice::all).confusion.total() == 60);

    std::ostringstream cv;
    write_cv_csv(cv, a.report.cv);
    const std::string cv_text = cv.str();
    CHECK(std::count(cv_text.begin(), cv_text.end(), '\n') == 1 + static_cast<long>(opts.grid.size()));
}

TEST_CASE("Werner grid and evaluation") {
    WernerGridSpec spec;
    spec.count = 50;
    spec.truth = WernerTruth::bound;
    const auto samples = werner_grid(spec);
    REQUIRE(samples.size() == 50);
    for (const auto& s : samples) {
        CHECK(s.p >= 0.0);
        CHECK(s.p <= 1.0);
        CHECK(s.truth == (unsteerable_bound_holds(s.p, spec.xi) ? 1 : -1));
    }
    spec.truth = WernerTruth::sdp;
    spec.count = 20;
    const auto a = werner_grid(spec);
    spec.workers = 3;
    const auto b = werner_grid(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].p == b[i].p);
        CHECK(a[i].truth == b[i].truth);
        if (a[i].p < 0.5) CHECK(a[i].truth == 1);
    }

    SvmModel m;
    m.kind = FeatureKind::F2;
    m.scaler = Scaler::identity(9);
    m.bias = 0.0;
    const EvaluationReport r = evaluate_on_samples(m, spec.xi, a);
    CHECK(r.confusion.total() == a.size());
    std::ostringstream csv;
    write_evaluation_csv(csv, r);
    CHECK(csv.str().rfind("index,p,truth,predicted,decision\n", 0) == 0);
}

TEST_CASE("analytic threshold") {
    CHECK(std::abs(*analytic_threshold(std::numbers::pi / 4.0) - 0.5) < 1e-9);
    const auto t = analytic_threshold(0.3);
    REQUIRE(t.has_value());
    CHECK(unsteerable_bound_holds(*t - 1e-6, 0.3));
    CHECK_FALSE(unsteerable_bound_holds(std::min(1.0, *t + 1e-6), 0.3));
}

TEST_CASE("SDP sweep thresholds are non-increasing in m") {
    const auto rows = sweep_sdp({std::numbers::pi / 4.0, 0.5}, {2, 3, 4}, 1e-3);
    REQUIRE(rows.size() == 6);
    CHECK(std::abs(*rows[0].threshold - 1.0 / std::sqrt(2.0)) < 0.01);
    CHECK(std::abs(*rows[1].threshold - 1.0 / std::sqrt(3.0)) < 0.01);
    for (std::size_t i = 0; i < rows.size(); i += 3) {
        CHECK(*rows[i + 1].threshold <= *rows[i].threshold + 1e-3);
        CHECK(*rows[i + 2].threshold <= *rows[i + 1].threshold + 1e-3);
    }
}

TEST_CASE("model sweep flags non-monotone predictions") {
    // f = 1 - 2 exp(-gamma |x - x0|^2) with x0 the F2 vector of p = 0.5:
    // predicted -1 only on a window around p = 0.5.
    const double xi = 0.7;
    SvmModel m;
    m.kind = FeatureKind::F2;
    m.scaler = Scaler::identity(9);
    m.hp = {1.0, 50.0};
    m.support_vectors = {extract_F2(generalized_werner(0.5, xi)).values};
    m.coef = {-2.0};
    m.bias = 1.0;
    const SweepRow r = sweep_model(m, xi, 2, 0.01);
    REQUIRE(r.threshold.has_value());
    CHECK(*r.threshold < 0.5);
    CHECK(*r.threshold > 0.4);
    CHECK_FALSE(r.monotone);
    m.bias = 3.0;
    const SweepRow none = sweep_model(m, xi, 2, 0.01);
    CHECK_FALSE(none.threshold.has_value());
    CHECK(none.monotone);
    m.bias = -3.0;
    const SweepRow all = sweep_model(m, xi, 2, 0.01);
    CHECK(*all.threshold == doctest::Approx(0.01));
    CHECK(all.monotone);
}

TEST_CASE("bench report arithmetic") {
    SvmModel m;
    m.kind = FeatureKind::F3;
    m.scaler = Scaler::identity(9);
    m.support_vectors = {std::vector<double>(9, 0.1)};
    m.coef = {1.0};
    const BenchReport r = bench(m, 2, 10, 2, DirectionStrategy::uniform_random, 1);
    CHECK(r.predict_mean > 0.0);
    CHECK(r.sdp_mean > 0.0);
    CHECK(r.predict_stddev >= 0.0);
    CHECK(r.ratio == doctest::Approx(r.sdp_mean / r.predict_mean));
    CHECK_THROWS_AS(bench(m, 2, 9, 2, DirectionStrategy::uniform_random, 1), ValidationError);
}
