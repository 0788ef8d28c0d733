#include "steerml/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "steerml/errors.hpp"
#include "steerml/parallel.hpp"

namespace steerml {

namespace {

constexpr double kSupportThreshold = 1e-12;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Eigen::MatrixXd squared_distances(const TrainingSet& data) {
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        const auto& xi = data.x[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto& xj = data.x[static_cast<std::size_t>(j)];
            double acc = 0.0;
            for (std::size_t k = 0; k < xi.size(); ++k) {
                const double diff = xi[k] - xj[k];
                acc += diff * diff;
            }
            d(i, j) = d(j, i) = acc;
        }
    }
    return d;
}

// libsvm-style bias: mean of y_i G_i over free variables, else the midpoint
// of the feasible interval.
double compute_bias(std::span<const double> alpha, std::span<const int> y, std::span<const double> grad, double c) {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int nfree = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double yg = y[i] * grad[i];
        const bool at_upper = alpha[i] >= c;
        const bool at_lower = alpha[i] <= 0.0;
        if (at_upper) {
            if (y[i] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (at_lower) {
            if (y[i] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++nfree;
            sum_free += yg;
        }
    }
    const double rho = nfree > 0 ? sum_free / nfree : 0.5 * (ub + lb);
    return -rho;
}

} // namespace

void TrainingSet::validate(bool require_both_classes) const {
    if (x.size() != y.size()) throw ValidationError("training set: feature and label counts differ");
    if (x.empty()) throw ValidationError("training set is empty");
    const std::size_t d = x.front().size();
    if (d == 0) throw ValidationError("training set has zero-length features");
    bool pos = false;
    bool neg = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != d) throw ValidationError("training set rows have different lengths");
        if (y[i] == 1) pos = true;
        else if (y[i] == -1) neg = true;
        else throw ValidationError("labels must be -1 or +1");
    }
    if (require_both_classes && !(pos && neg)) throw ValidationError("training set needs both classes");
}

std::uint64_t TrainingSet::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (char ch : s) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        feed(std::to_string(y[i]));
        for (double v : x[i]) feed("," + format_double(v));
        feed(";");
    }
    return h;
}

Scaler Scaler::identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

std::vector<double> Scaler::apply(std::span<const double> x) const {
    if (x.size() != offset.size()) throw ValidationError("feature length does not match the scaler");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] + offset[i]) * scale[i];
    return out;
}

TrainingSet Scaler::apply(const TrainingSet& data) const {
    TrainingSet out{data.kind, {}, data.y};
    out.x.reserve(data.size());
    for (const auto& row : data.x) out.x.push_back(apply(row));
    return out;
}

Scaler fit_scaler(const TrainingSet& data) {
    data.validate(false);
    const std::size_t d = data.dim();
    const double n = static_cast<double>(data.size());
    Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (const auto& row : data.x) mean += row[k];
        mean /= n;
        double var = 0.0;
        for (const auto& row : data.x) var += (row[k] - mean) * (row[k] - mean);
        var /= n;
        s.offset[k] = -mean;
        s.scale[k] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    }
    return s;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) throw ValidationError("rbf_kernel: length mismatch");
    if (!(gamma > 0.0)) throw ValidationError("rbf_kernel: gamma must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        acc += diff * diff;
    }
    return std::exp(-gamma * acc);
}

DualSolution solve_dual_smo(const Eigen::MatrixXd& k, std::span<const int> y, double c, const SmoOptions& opts,
                            std::span<const double> warm_start) {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (k.rows() != n || k.cols() != n) throw ValidationError("solve_dual_smo: kernel size mismatch");
    if (!(c > 0.0)) throw ValidationError("solve_dual_smo: C must be positive");
    constexpr double kTau = 1e-12;

    DualSolution sol;
    sol.alpha.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> grad(static_cast<std::size_t>(n), -1.0);
    auto& alpha = sol.alpha;
    if (!warm_start.empty()) {
        if (static_cast<Eigen::Index>(warm_start.size()) != n) throw ValidationError("solve_dual_smo: warm start size mismatch");
        double balance = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double a = warm_start[static_cast<std::size_t>(t)];
            if (!(a >= 0.0 && a <= c)) throw ValidationError("solve_dual_smo: warm start outside [0, C]");
            balance += a * y[static_cast<std::size_t>(t)];
        }
        if (std::abs(balance) > 1e-9 * c * static_cast<double>(n)) {
            throw ValidationError("solve_dual_smo: warm start violates y^T a = 0");
        }
        alpha.assign(warm_start.begin(), warm_start.end());
        for (Eigen::Index s = 0; s < n; ++s) {
            const double as = alpha[static_cast<std::size_t>(s)] * y[static_cast<std::size_t>(s)];
            if (as == 0.0) continue;
            const double* ks = k.col(s).data();
            for (Eigen::Index t = 0; t < n; ++t) grad[static_cast<std::size_t>(t)] += y[static_cast<std::size_t>(t)] * ks[t] * as;
        }
    }
    auto in_up = [&](Eigen::Index t) {
        const auto tt = static_cast<std::size_t>(t);
        return (y[tt] == 1 && alpha[tt] < c) || (y[tt] == -1 && alpha[tt] > 0.0);
    };
    auto in_low = [&](Eigen::Index t) {
        const auto tt = static_cast<std::size_t>(t);
        return (y[tt] == 1 && alpha[tt] > 0.0) || (y[tt] == -1 && alpha[tt] < c);
    };

    for (;;) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y[static_cast<std::size_t>(t)] * grad[static_cast<std::size_t>(t)];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (opts.selection == WorkingSetSelection::second_order && i >= 0) {
            // Partner maximizing the second-order decrease b^2 / a.
            const double* ki = k.col(i).data();
            const double kii = ki[i];
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index t = 0; t < n; ++t) {
                if (!in_low(t)) continue;
                const double b = gmax + y[static_cast<std::size_t>(t)] * grad[static_cast<std::size_t>(t)];
                if (b <= 0.0) continue;
                double a = kii + k(t, t) - 2.0 * ki[t];
                if (a <= 0.0) a = kTau;
                const double gain = b * b / a;
                if (gain > best) {
                    best = gain;
                    j = t;
                }
            }
        }
        sol.kkt_gap = gmax - gmin;
        if (i < 0 || j < 0 || sol.kkt_gap < opts.tol) {
            sol.converged = true;
            break;
        }
        if (sol.updates >= opts.max_updates) break;
        ++sol.updates;

        const auto ii = static_cast<std::size_t>(i);
        const auto jj = static_cast<std::size_t>(j);
        const double yi = y[ii];
        const double yj = y[jj];
        const double old_ai = alpha[ii];
        const double old_aj = alpha[jj];
        double ai = old_ai;
        double aj = old_aj;
        if (yi != yj) {
            double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[ii] - grad[jj]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > c) {
                    ai = c;
                    aj = c - diff;
                }
            } else if (aj > c) {
                aj = c;
                ai = c + diff;
            }
        } else {
            double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[ii] - grad[jj]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c) {
                if (ai > c) {
                    ai = c;
                    aj = sum - c;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > c) {
                if (aj > c) {
                    aj = c;
                    ai = sum - c;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[ii] = ai;
        alpha[jj] = aj;
        const double di = (ai - old_ai) * yi;
        const double dj = (aj - old_aj) * yj;
        const double* ki = k.col(i).data();
        const double* kj = k.col(j).data();
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto tt = static_cast<std::size_t>(t);
            grad[tt] += y[tt] * (ki[t] * di + kj[t] * dj);
        }
    }
    sol.bias = compute_bias(alpha, y, grad, c);
    return sol;
}

double SvmModel::decision_value(std::span<const double> raw) const {
    const std::vector<double> z = scaler.apply(raw);
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) f += coef[i] * rbf_kernel(support_vectors[i], z, hp.gamma);
    return f;
}

int SvmModel::predict(std::span<const double> raw) const { return decision_value(raw) < 0.0 ? -1 : 1; }

SvmModel train_smo(const TrainingSet& scaled, const Hyperparams& hp, const SmoOptions& opts, const Scaler* scaler) {
    scaled.validate(true);
    if (scaled.size() < 2) throw ValidationError("train_smo: need at least two samples");
    if (!(hp.c > 0.0) || !(hp.gamma > 0.0)) throw ValidationError("train_smo: C and gamma must be positive");
    const auto n = static_cast<Eigen::Index>(scaled.size());
    Eigen::MatrixXd k = squared_distances(scaled);
    k = (-hp.gamma * k.array()).exp().matrix();
    const DualSolution sol = solve_dual_smo(k, scaled.y, hp.c, opts);

    SvmModel model;
    model.kind = scaled.kind;
    model.scaler = scaler != nullptr ? *scaler : Scaler::identity(scaled.dim());
    if (model.scaler.offset.size() != scaled.dim()) throw ValidationError("train_smo: scaler length mismatch");
    model.hp = hp;
    model.bias = sol.bias;
    model.converged = sol.converged;
    model.training_checksum = scaled.checksum();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (sol.alpha[ii] > kSupportThreshold) {
            model.support_vectors.push_back(scaled.x[ii]);
            model.coef.push_back(sol.alpha[ii] * scaled.y[ii]);
        }
    }
    return model;
}

std::vector<int> stratified_folds(std::span<const int> y, int k, RandomStream& rng) {
    if (k < 2) throw ValidationError("cross-validation needs at least two folds");
    std::vector<int> fold(y.size(), -1);
    for (int label : {-1, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == label) idx.push_back(i);
        if (static_cast<int>(idx.size()) < k) {
            throw ValidationError("cannot stratify: a class has fewer samples than folds");
        }
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
            std::swap(idx[i], idx[std::min(j, i)]);
        }
        for (std::size_t p = 0; p < idx.size(); ++p) fold[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
    }
    return fold;
}

CvResult cross_validate(const TrainingSet& scaled, int k, const std::vector<Hyperparams>& grid, RandomStream rng,
                        const SmoOptions& opts, int workers) {
    scaled.validate(true);
    if (grid.empty()) throw ValidationError("cross_validate: empty grid");
    for (const auto& hp : grid)
        if (!(hp.c > 0.0) || !(hp.gamma > 0.0)) throw ValidationError("cross_validate: C and gamma must be positive");
    const std::vector<int> fold = stratified_folds(scaled.y, k, rng);
    const Eigen::MatrixXd dist = squared_distances(scaled);

    std::vector<std::vector<Eigen::Index>> train_idx(static_cast<std::size_t>(k)), val_idx(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < fold.size(); ++i)
        for (int f = 0; f < k; ++f)
            (fold[i] == f ? val_idx : train_idx)[static_cast<std::size_t>(f)].push_back(static_cast<Eigen::Index>(i));

    // correct[cell][fold]
    std::vector<std::vector<double>> fold_acc(grid.size(), std::vector<double>(static_cast<std::size_t>(k), 0.0));

    std::vector<double> gammas;
    for (const auto& hp : grid)
        if (std::find(gammas.begin(), gammas.end(), hp.gamma) == gammas.end()) gammas.push_back(hp.gamma);

    for (double gamma : gammas) {
        const Eigen::MatrixXd kfull = (-gamma * dist.array()).exp().matrix();
        parallel_for(static_cast<std::size_t>(k), workers, [&](std::size_t f) {
            const auto& tr = train_idx[f];
            const auto& va = val_idx[f];
            const auto ntr = static_cast<Eigen::Index>(tr.size());
            Eigen::MatrixXd ktr(ntr, ntr);
            for (Eigen::Index b = 0; b < ntr; ++b)
                for (Eigen::Index a = 0; a < ntr; ++a) ktr(a, b) = kfull(tr[static_cast<std::size_t>(a)], tr[static_cast<std::size_t>(b)]);
            std::vector<int> ytr;
            for (auto i : tr) ytr.push_back(scaled.y[static_cast<std::size_t>(i)]);
            // Cells for this gamma in increasing C; each solve starts from the
            // previous solution scaled by the ratio of C values.
            std::vector<std::size_t> cells;
            for (std::size_t cell = 0; cell < grid.size(); ++cell)
                if (grid[cell].gamma == gamma) cells.push_back(cell);
            std::stable_sort(cells.begin(), cells.end(),
                             [&](std::size_t a, std::size_t b) { return grid[a].c < grid[b].c; });
            std::vector<double> seed;
            double seed_c = 0.0;
            for (std::size_t cell : cells) {
                if (!seed.empty()) {
                    for (double& a : seed) a = std::min(a * (grid[cell].c / seed_c), grid[cell].c);
                }
                const DualSolution sol = solve_dual_smo(ktr, ytr, grid[cell].c, opts, seed);
                seed = sol.alpha;
                seed_c = grid[cell].c;
                int correct = 0;
                for (auto v : va) {
                    double dv = sol.bias;
                    for (Eigen::Index a = 0; a < ntr; ++a) {
                        const double al = sol.alpha[static_cast<std::size_t>(a)];
                        if (al > kSupportThreshold) dv += al * ytr[static_cast<std::size_t>(a)] * kfull(v, tr[static_cast<std::size_t>(a)]);
                    }
                    const int pred = dv < 0.0 ? -1 : 1;
                    if (pred == scaled.y[static_cast<std::size_t>(v)]) ++correct;
                }
                fold_acc[cell][f] = static_cast<double>(correct) / static_cast<double>(va.size());
            }
        });
    }

    CvResult res;
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        double mean = 0.0;
        for (double a : fold_acc[cell]) mean += a;
        res.cells.push_back({grid[cell], mean / k});
    }
    const CvCell* best = &res.cells.front();
    for (const auto& cell : res.cells) {
        const bool better = cell.accuracy > best->accuracy ||
                            (cell.accuracy == best->accuracy &&
                             (cell.hp.c < best->hp.c || (cell.hp.c == best->hp.c && cell.hp.gamma < best->hp.gamma)));
        if (better) best = &cell;
    }
    res.best = best->hp;
    res.cv_accuracy = best->accuracy;
    return res;
}

std::vector<Hyperparams> default_grid() { return parse_grid("C=-5:15:2,gamma=-15:3:2"); }

std::vector<Hyperparams> parse_grid(const std::string& spec) {
    if (spec == "default") return default_grid();
    std::vector<double> cs;
    std::vector<double> gs;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ValidationError("grid: expected name=lo:hi:step in '" + part + "'");
        const std::string name = part.substr(0, eq);
        double lo = 0.0;
        double hi = 0.0;
        double step = 0.0;
        if (std::sscanf(part.c_str() + eq + 1, "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0.0) || hi < lo) {
            throw ValidationError("grid: malformed range in '" + part + "'");
        }
        std::vector<double>& dst = (name == "C" || name == "c") ? cs : gs;
        if (name != "C" && name != "c" && name != "gamma" && name != "g") throw ValidationError("grid: unknown axis " + name);
        for (double e = lo; e <= hi + 1e-9; e += step) dst.push_back(std::exp2(e));
    }
    if (cs.empty() || gs.empty()) throw ValidationError("grid: both C and gamma ranges are required");
    std::vector<Hyperparams> out;
    for (double c : cs)
        for (double g : gs) out.push_back({c, g});
    return out;
}

void write_model(std::ostream& os, const SvmModel& m) {
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.training_checksum));
    os << "steerml-svm-model 1\n";
    os << "kind " << to_string(m.kind) << "\n";
    os << "dim " << m.dim() << "\n";
    os << "C " << format_double(m.hp.c) << "\n";
    os << "gamma " << format_double(m.hp.gamma) << "\n";
    os << "bias " << format_double(m.bias) << "\n";
    os << "converged " << (m.converged ? 1 : 0) << "\n";
    os << "training_checksum " << hex << "\n";
    os << "metadata " << m.metadata.size() << "\n";
    for (const auto& [key, value] : m.metadata) os << key << " " << value << "\n";
    os << "offset";
    for (double v : m.scaler.offset) os << " " << format_double(v);
    os << "\nscale";
    for (double v : m.scaler.scale) os << " " << format_double(v);
    os << "\nsupport_vectors " << m.support_vectors.size() << "\n";
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
        os << format_double(m.coef[i]);
        for (double v : m.support_vectors[i]) os << " " << format_double(v);
        os << "\n";
    }
    os << "end\n";
}

SvmModel read_model(std::istream& is) {
    auto expect = [&is](const std::string& key) {
        std::string got;
        if (!(is >> got) || got != key) throw ValidationError("model file: expected '" + key + "', got '" + got + "'");
    };
    auto read_double = [&is]() {
        std::string tok;
        if (!(is >> tok)) throw ValidationError("model file: truncated");
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw ValidationError("model file: bad number '" + tok + "'");
            return v;
        } catch (const std::logic_error&) {
            throw ValidationError("model file: bad number '" + tok + "'");
        }
    };
    SvmModel m;
    expect("steerml-svm-model");
    int version = 0;
    if (!(is >> version) || version != 1) throw ValidationError("model file: unsupported version");
    expect("kind");
    std::string kind;
    is >> kind;
    m.kind = parse_feature_kind(kind);
    expect("dim");
    std::size_t dim = 0;
    if (!(is >> dim) || static_cast<int>(dim) != feature_length(m.kind)) throw ValidationError("model file: bad dim");
    expect("C");
    m.hp.c = read_double();
    expect("gamma");
    m.hp.gamma = read_double();
    expect("bias");
    m.bias = read_double();
    expect("converged");
    int conv = 0;
    is >> conv;
    m.converged = conv != 0;
    expect("training_checksum");
    std::string hex;
    is >> hex;
    m.training_checksum = std::stoull(hex, nullptr, 16);
    expect("metadata");
    std::size_t nmeta = 0;
    is >> nmeta;
    for (std::size_t i = 0; i < nmeta; ++i) {
        std::string key;
        std::string value;
        if (!(is >> key >> value)) throw ValidationError("model file: truncated metadata");
        m.metadata[key] = value;
    }
    expect("offset");
    for (std::size_t i = 0; i < dim; ++i) m.scaler.offset.push_back(read_double());
    expect("scale");
    for (std::size_t i = 0; i < dim; ++i) m.scaler.scale.push_back(read_double());
    expect("support_vectors");
    std::size_t nsv = 0;
    if (!(is >> nsv)) throw ValidationError("model file: missing support vector count");
    for (std::size_t i = 0; i < nsv; ++i) {
        m.coef.push_back(read_double());
        std::vector<double> sv;
        for (std::size_t d = 0; d < dim; ++d) sv.push_back(read_double());
        m.support_vectors.push_back(std::move(sv));
    }
    expect("end");
    return m;
}

void save_model(const std::string& path, const SvmModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write model file " + path);
    write_model(os, model);
}

SvmModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open model file " + path);
    return read_model(is);
}

} // namespace steerml
