#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qp_oracle.hpp"
#include "steerml/errors.hpp"
#include "steerml/svm.hpp"

using namespace steerml;

namespace {

TrainingSet random_set(RandomStream& rng, int n, int dim) {
    TrainingSet s;
    s.kind = FeatureKind::F4;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(static_cast<std::size_t>(dim));
        for (double& v : x) v = rng.normal();
        const int label = i < n / 2 ? 1 : -1;
        if (label == 1) x[0] += 1.0;
        s.x.push_back(x);
        s.y.push_back(label);
    }
    return s;
}

Eigen::MatrixXd kernel_matrix(const TrainingSet& s, double gamma) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = rbf_kernel(s.x[static_cast<std::size_t>(i)], s.x[static_cast<std::size_t>(j)], gamma);
    return k;
}

} // namespace

TEST_CASE("rbf kernel") {
    const std::vector<double> a{1.0, 2.0};
    const std::vector<double> b{0.0, 0.0};
    CHECK(std::abs(rbf_kernel(a, b, 0.5) - std::exp(-2.5)) < 1e-15);
    CHECK(rbf_kernel(a, a, 3.0) == 1.0);
    CHECK_THROWS_AS(rbf_kernel(a, std::vector<double>{1.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(rbf_kernel(a, b, 0.0), ValidationError);
}

TEST_CASE("scaler standardizes and handles constant columns") {
    TrainingSet s;
    s.x = {{1.0, 5.0, 2.0}, {3.0, 5.0, 4.0}, {5.0, 5.0, 9.0}};
    s.y = {1, -1, 1};
    const Scaler sc = fit_scaler(s);
    const TrainingSet z = sc.apply(s);
    for (std::size_t k = 0; k < 3; ++k) {
        double mean = 0.0, var = 0.0;
        for (const auto& r : z.x) mean += r[k];
        mean /= 3.0;
        for (const auto& r : z.x) var += (r[k] - mean) * (r[k] - mean);
        var /= 3.0;
        CHECK(std::abs(mean) < 1e-15);
        if (k == 1) {
            CHECK(sc.scale[k] == 1.0);
            CHECK(var == 0.0);
        } else {
            CHECK(std::abs(var - 1.0) < 1e-14);
        }
    }
    TrainingSet one;
    one.x = {{2.0, -1.0}};
    one.y = {1};
    const Scaler s1 = fit_scaler(one);
    CHECK(s1.apply(one.x[0]) == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(sc.apply(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("training set validation") {
    TrainingSet s;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.x = {{1.0}, {2.0, 3.0}};
    s.y = {1, -1};
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.x = {{1.0}, {2.0}};
    s.y = {1, 0};
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.y = {1, 1};
    CHECK_THROWS_AS(s.validate(true), ValidationError);
    CHECK_NOTHROW(s.validate(false));
}

TEST_CASE("SMO matches the dense QP oracle") {
    RandomStream rng(2718);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 8 + trial % 13;
        const TrainingSet s = random_set(rng, n, 3);
        const double gamma = 0.25 + 0.1 * trial;
        const double c = 0.5 + trial % 4;
        const Eigen::MatrixXd k = kernel_matrix(s, gamma);
        const auto oracle = testing::solve_dense_qp(k, s.y, c);
        REQUIRE(oracle.has_value());
        for (auto sel : {WorkingSetSelection::second_order, WorkingSetSelection::max_violating_pair}) {
            SmoOptions opts;
            opts.tol = 1e-11;
            opts.selection = sel;
            const SvmModel model = train_smo(s, {c, gamma}, opts);
            REQUIRE(model.converged);
            for (int i = 0; i < 10; ++i) {
                std::vector<double> x(3);
                for (double& v : x) v = 2.0 * rng.normal();
                double f = oracle->bias;
                for (std::size_t j = 0; j < s.size(); ++j) f += oracle->alpha(static_cast<Eigen::Index>(j)) * s.y[j] * rbf_kernel(s.x[j], x, gamma);
                CHECK(std::abs(model.decision_value(x) - f) < 1e-6);
            }
            const DualSolution sol = solve_dual_smo(k, s.y, c, opts);
            double balance = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                CHECK(sol.alpha[i] >= -1e-8);
                CHECK(sol.alpha[i] <= c + 1e-8);
                balance += sol.alpha[i] * s.y[i];
            }
            CHECK(std::abs(balance) < 1e-8);
        }
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("warm start reaches the same optimum") {
    RandomStream rng(99);
    const TrainingSet s = random_set(rng, 40, 4);
    const Eigen::MatrixXd k = kernel_matrix(s, 0.5);
    SmoOptions opts;
    opts.tol = 1e-10;
    const DualSolution cold1 = solve_dual_smo(k, s.y, 1.0, opts);
    std::vector<double> seed = cold1.alpha;
    for (double& a : seed) a *= 4.0;
    const DualSolution warm = solve_dual_smo(k, s.y, 4.0, opts, seed);
    const DualSolution cold = solve_dual_smo(k, s.y, 4.0, opts);
    REQUIRE(warm.converged);
    CHECK(std::abs(warm.bias - cold.bias) < 1e-6);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(warm.alpha[i] - cold.alpha[i]) < 1e-6);
    std::vector<double> bad(s.size(), 0.0);
    bad[0] = 1.0;
    CHECK_THROWS_AS(solve_dual_smo(k, s.y, 4.0, opts, bad), ValidationError);
}

TEST_CASE("XOR is learned by the RBF kernel") {
    TrainingSet s;
    s.x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    s.y = {1, 1, -1, -1};
    const SvmModel m = train_smo(s, {100.0, 2.0});
    for (std::size_t i = 0; i < 4; ++i) CHECK(m.predict(s.x[i]) == s.y[i]);
    CHECK(m.support_vectors.size() == 4);
}

TEST_CASE("iteration cap leaves a non-converged model") {
    RandomStream rng(5);
    const TrainingSet s = random_set(rng, 30, 3);
    SmoOptions opts;
    opts.max_updates = 2;
    CHECK_FALSE(train_smo(s, {10.0, 1.0}, opts).converged);
}

TEST_CASE("exact zero decision predicts +1") {
    SvmModel m;
    m.kind = FeatureKind::F4;
    m.scaler = Scaler::identity(2);
    m.bias = 0.0;
    CHECK(m.predict(std::vector<double>{1.0, 2.0}) == 1);
    m.bias = -1e-300;
    CHECK(m.predict(std::vector<double>{1.0, 2.0}) == -1);
}

TEST_CASE("model text round trip is exact") {
    RandomStream rng(6);
    const TrainingSet raw = random_set(rng, 24, 6);
    const Scaler sc = fit_scaler(raw);
    SvmModel m = train_smo(sc.apply(raw), {2.0, 0.3}, {}, &sc);
    m.metadata["m"] = "3";
    std::stringstream ss;
    write_model(ss, m);
    const std::string text = ss.str();
    CHECK(text.rfind("steerml-svm-model 1\n", 0) == 0);
    const SvmModel back = read_model(ss);
    std::stringstream again;
    write_model(again, back);
    CHECK(again.str() == text);
    for (const auto& x : raw.x) CHECK(back.decision_value(x) == m.decision_value(x));
    CHECK(back.training_checksum == m.training_checksum);
    CHECK(back.metadata.at("m") == "3");

    std::stringstream bad("steerml-svm-model 2\n");
    CHECK_THROWS_AS(read_model(bad), ValidationError);
    std::stringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(read_model(truncated), ValidationError);
}

TEST_CASE("stratified folds are balanced") {
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) y.push_back(i % 3 == 0 ? -1 : 1);
    RandomStream rng(1);
    const auto folds = stratified_folds(y, 4, rng);
    std::array<int, 4> pos{}, neg{};
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg)[static_cast<std::size_t>(folds[i])]++;
    for (int f = 0; f < 4; ++f) {
        CHECK(pos[static_cast<std::size_t>(f)] >= 5);
        CHECK(pos[static_cast<std::size_t>(f)] <= 5 + 1);
        CHECK(neg[static_cast<std::size_t>(f)] >= 2);
        CHECK(neg[static_cast<std::size_t>(f)] <= 3);
    }
    std::vector<int> few{1, 1, 1, -1};
    CHECK_THROWS_AS(stratified_folds(few, 2, rng), ValidationError);
}

TEST_CASE("grid parsing") {
    const auto g = parse_grid("C=0:2:1,gamma=-1:1:2");
    REQUIRE(g.size() == 6);
    CHECK(g[0].c == 1.0);
    CHECK(g[0].gamma == 0.5);
    CHECK(default_grid().size() == 110);
    CHECK(parse_grid("default").size() == 110);
    CHECK_THROWS_AS(parse_grid("C=1:0:1,gamma=0:0:1"), ValidationError);
    CHECK_THROWS_AS(parse_grid("C=0:1:1"), ValidationError);
    CHECK_THROWS_AS(parse_grid("bogus"), ValidationError);
}

TEST_CASE("cross validation is deterministic and worker independent") {
    RandomStream rng(13);
    const TrainingSet s = random_set(rng, 60, 3);
    const auto grid = parse_grid("C=-1:3:2,gamma=-3:1:2");
    const CvResult a = cross_validate(s, 4, grid, RandomStream(3), {}, 1);
    const CvResult b = cross_validate(s, 4, grid, RandomStream(3), {}, 3);
    REQUIRE(a.cells.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.cells[i].accuracy == b.cells[i].accuracy);
    CHECK(a.best.c == b.best.c);
    CHECK(a.best.gamma == b.best.gamma);
    double top = 0.0;
    for (const auto& c : a.cells) top = std::max(top, c.accuracy);
    CHECK(a.cv_accuracy == top);
    for (const auto& c : a.cells)
        if (c.accuracy == top) {
            CHECK(a.best.c <= c.hp.c);
            if (a.best.c == c.hp.c) CHECK(a.best.gamma <= c.hp.gamma);
        }
    CHECK(a.cv_accuracy > 0.6);
}
