#include "intreg/sim.hpp"

#include "intreg/parallel.hpp"
#include "intreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>
#include <tuple>

namespace intreg::sim {

namespace {

constexpr Index kInformative = 10;

enum Purpose : std::uint64_t {
    kTrainX = 1,
    kTrainZ = 2,
    kTrainNoise = 3,
    kTestX = 4,
    kTestZ = 5,
    kTestNoise = 6,
    kCv = 7,
};

// Two digits "01" -> 0.1; a lone "0" -> 0.
double parse_corr(const std::string& digits) {
    if (digits.size() == 1) return std::stod(digits);
    return std::stod(digits.substr(0, 1) + "." + digits.substr(1));
}

std::string format_corr(double rho) {
    // 0.1 -> "01", 0.25 -> "025"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", rho);
    std::string s(buf);
    if (s == "0") return "0";
    const auto dot = s.find('.');
    if (dot == std::string::npos) return s;
    return s.substr(0, dot) + s.substr(dot + 1);
}

Matrix iid_normal(Index n, Index dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix A(n, dim);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < dim; ++j) A(i, j) = normal(rng);
    return A;
}

// [AR(1) informative block | iid noise block]
Matrix design(Index n, int s, double rho, std::mt19937_64& rng) {
    Matrix X(n, kInformative + s);
    X.leftCols(kInformative) = gen_ar1_rows(n, kInformative, rho, rng);
    X.rightCols(s) = iid_normal(n, s, rng);
    return X;
}

Matrix pattern(std::initializer_list<double> r1, std::initializer_list<double> r2) {
    Matrix A(static_cast<Index>(r1.size()), 2);
    Index i = 0;
    for (double v : r1) A(i++, 0) = v;
    i = 0;
    for (double v : r2) A(i++, 1) = v;
    return A;
}

Matrix pad(const Matrix& top, int s) {
    Matrix A = Matrix::Zero(top.rows() + s, top.cols());
    A.topRows(top.rows()) = top;
    return A;
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) { return make_stream(keys)(); }

struct Counts {
    long fp = 0, fn = 0, true_nonzero = 0, true_zero = 0;

    void add(const Matrix& est, const Matrix& truth) {
        for (Index i = 0; i < est.size(); ++i) {
            const bool t = truth.data()[i] != 0.0, e = est.data()[i] != 0.0;
            true_nonzero += t;
            true_zero += !t;
            fp += e && !t;
            fn += !e && t;
        }
    }

    Rates rates(MetricMode mode) const {
        const long fpr_den = mode == MetricMode::paper ? true_nonzero : true_zero;
        const long fnr_den = mode == MetricMode::paper ? true_zero : true_nonzero;
        if (fpr_den == 0 || fnr_den == 0)
            throw UndefinedMetricError(std::string("FPR/FNR undefined in ") + to_string(mode) +
                                       " mode: truth has no " + (true_zero == 0 ? "zero" : "nonzero") +
                                       " entries");
        return {static_cast<double>(fp) / fpr_den, static_cast<double>(fn) / fnr_den};
    }
};

void check_truth_shape(const ModelFit& fit, const TruthSet& truth) {
    if (fit.size() != truth.C_star.size()) throw ValidationError("fit and truth differ in number of datasets");
    for (std::size_t m = 0; m < fit.size(); ++m) {
        if (fit.B[m].rows() != truth.B_star.rows() || fit.B[m].cols() != truth.B_star.cols() ||
            fit.C[m].rows() != truth.C_star[m].rows() || fit.C[m].cols() != truth.C_star[m].cols())
            throw ValidationError("fit and truth coefficient shapes differ in dataset " + std::to_string(m + 1));
    }
}

selection::CvResult select_with(const IntegratedDataset& data, std::uint64_t seed, const MethodOptions& opts) {
    return selection::select(data, opts.grid.resolve(data), opts.K, seed, opts.select);
}

}  // namespace

void SimConfig::validate() const {
    if (M < 1 || n < 1 || s < 0 || n_test < 1 || replicates < 1)
        throw ValidationError("simulation sizes must be positive");
    if (!(rho_x >= 0.0 && rho_x < 1.0) || !(rho_y >= 0.0 && rho_y < 1.0))
        throw ValidationError("rho_x and rho_y must lie in [0, 1)");
    if (M != 2 && M != 3) throw UnsupportedScenarioError("only M = 2 and M = 3 have published truths");
}

std::string SimConfig::name() const {
    return "M" + std::to_string(M) + "_n" + std::to_string(n) + "_s" + std::to_string(s) + "_rx" +
           format_corr(rho_x) + "_ry" + format_corr(rho_y);
}

SimConfig SimConfig::from_name(const std::string& name) {
    static const std::regex re(R"(M(\d+)_n(\d+)_s(\d+)_rx(\d+)_ry(\d+))");
    std::smatch match;
    if (!std::regex_match(name, match, re))
        throw ValidationError("scenario name '" + name + "' does not match M<k>_n<k>_s<k>_rx<dd>_ry<dd>");
    SimConfig c;
    c.M = std::stoi(match[1]);
    c.n = std::stoi(match[2]);
    c.s = std::stoi(match[3]);
    c.rho_x = parse_corr(match[4]);
    c.rho_y = parse_corr(match[5]);
    c.validate();
    return c;
}

std::vector<SimConfig> paper_scenarios() {
    std::vector<SimConfig> out;
    for (int M : {2, 3})
        for (int n : {15, 25, 50, 75})
            for (int s : {5, 50})
                for (double rx : {0.1, 0.9})
                    for (double ry : {0.1, 0.9}) {
                        SimConfig c;
                        c.M = M;
                        c.n = n;
                        c.s = s;
                        c.rho_x = rx;
                        c.rho_y = ry;
                        out.push_back(c);
                    }
    return out;
}

TruthSet truth(int M, int s) {
    if (M != 2 && M != 3) throw UnsupportedScenarioError("no published truth for M = " + std::to_string(M));
    if (s < 0) throw ValidationError("s must be >= 0");
    const Matrix first = pattern({1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5, 0.5});
    const Matrix second = pattern({0, 0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5, 0.5}, {1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
    const Matrix third = pattern({0, 0, 0, 1, 1, 1, 1, 0.5, 0.5, 0.5}, {1, 1, 1, 0.5, 0.5, 0.5, 0.5, 0, 0, 0});
    TruthSet t;
    t.B_star = pad(first, s);
    t.C_star = {pad(first, s), pad(second, s)};
    if (M == 3) t.C_star.push_back(pad(third, s));
    return t;
}

Matrix gen_ar1_rows(Index n, Index dim, double rho, std::mt19937_64& rng) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("AR(1) correlation must lie in [0, 1)");
    Matrix sigma(dim, dim);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < dim; ++j) sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    const Matrix L = sigma.llt().matrixL();
    return iid_normal(n, dim, rng) * L.transpose();
}

SimData generate(const SimConfig& config, int replicate) {
    config.validate();
    const std::uint64_t key = stable_hash(config.name());
    const auto rep = static_cast<std::uint64_t>(replicate);
    const std::uint64_t design_rep = config.fixed_design ? 0 : rep;
    TruthSet t = truth(config.M, config.s);

    std::vector<DatasetBlock> train, test;
    for (int m = 0; m < config.M; ++m) {
        const auto mm = static_cast<std::uint64_t>(m);
        const Matrix& C = t.C_star[static_cast<std::size_t>(m)];
        auto draw = [&](Index n, std::uint64_t r, std::uint64_t px, std::uint64_t pz, std::uint64_t pe) {
            auto gx = make_stream({config.seed, key, r, mm, px});
            auto gz = make_stream({config.seed, key, r, mm, pz});
            auto ge = make_stream({config.seed, key, rep, mm, pe});
            DatasetBlock b;
            b.X = design(n, config.s, config.rho_x, gx);
            b.Z = design(n, config.s, config.rho_x, gz);
            b.Y = b.X * t.B_star + b.Z * C + gen_ar1_rows(n, 2, config.rho_y, ge);
            return b;
        };
        train.push_back(draw(config.n, design_rep, kTrainX, kTrainZ, kTrainNoise));
        test.push_back(draw(config.n_test, rep, kTestX, kTestZ, kTestNoise));
    }
    return {IntegratedDataset(std::move(train)), std::move(t), std::move(test)};
}

ModelFit oracle_fit(const TruthSet& truth) {
    VectorList alpha;
    MatrixList B, C;
    for (const auto& Cm : truth.C_star) {
        alpha.push_back(Vector::Zero(truth.B_star.cols()));
        B.push_back(truth.B_star);
        C.push_back(Cm);
    }
    return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
}

Matrix mse(const ModelFit& fit, const std::vector<DatasetBlock>& test) {
    if (fit.size() != test.size()) throw ValidationError("fit and test sets differ in number of datasets");
    const Index q = test.empty() ? 0 : test.front().Y.cols();
    Matrix out(static_cast<Index>(test.size()), q);
    for (std::size_t m = 0; m < test.size(); ++m) {
        const Matrix R = residual_matrix(test[m], fit.alpha[m], fit.B[m], fit.C[m]);
        out.row(static_cast<Index>(m)) = R.cwiseAbs2().colwise().mean();
    }
    return out;
}

MetricMode parse_metric_mode(const std::string& s) {
    if (s == "paper") return MetricMode::paper;
    if (s == "conventional") return MetricMode::conventional;
    throw ValidationError("metric mode must be 'paper' or 'conventional', got '" + s + "'");
}

const char* to_string(MetricMode mode) { return mode == MetricMode::paper ? "paper" : "conventional"; }

Rates fpr_fnr(const ModelFit& fit, const TruthSet& truth, MetricMode mode) {
    check_truth_shape(fit, truth);
    Counts c;
    for (std::size_t m = 0; m < fit.size(); ++m) c.add(fit.B[m], truth.B_star);
    for (std::size_t m = 0; m < fit.size(); ++m) c.add(fit.C[m], truth.C_star[m]);
    return c.rates(mode);
}

Rates fpr_fnr_dataset(const ModelFit& fit, const TruthSet& truth, std::size_t m, MetricMode mode) {
    check_truth_shape(fit, truth);
    Counts c;
    c.add(fit.B.at(m), truth.B_star);
    c.add(fit.C.at(m), truth.C_star.at(m));
    return c.rates(mode);
}

ModelFit fit_mr(const IntegratedDataset& data, std::uint64_t seed, const MethodOptions& opts) {
    return select_with(data, seed, opts).refit.fit;
}

std::vector<selection::CvResult> fit_ur(const IntegratedDataset& data, std::uint64_t seed,
                                        const MethodOptions& opts) {
    std::vector<selection::CvResult> out;
    for (Index k = 0; k < data.q(); ++k) out.push_back(select_with(data.response_slice(k), seed, opts));
    return out;
}

ModelFit combine_responses(const std::vector<ModelFit>& parts) {
    if (parts.empty()) throw ValidationError("no per-response fits to combine");
    const std::size_t M = parts.front().size();
    const auto q = static_cast<Index>(parts.size());
    VectorList alpha(M);
    MatrixList B(M), C(M);
    for (std::size_t m = 0; m < M; ++m) {
        alpha[m].resize(q);
        B[m].resize(parts.front().B[m].rows(), q);
        C[m].resize(parts.front().C[m].rows(), q);
        for (Index k = 0; k < q; ++k) {
            const auto& part = parts[static_cast<std::size_t>(k)];
            if (part.size() != M || part.B[m].cols() != 1 || part.C[m].cols() != 1)
                throw ValidationError("per-response fits must be single-column and share M");
            alpha[m][k] = part.alpha[m][0];
            B[m].col(k) = part.B[m].col(0);
            C[m].col(k) = part.C[m].col(0);
        }
    }
    return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
}

DatasetBlock reroute_to_specific(const DatasetBlock& block) {
    DatasetBlock out;
    out.Y = block.Y;
    out.X = Matrix(block.n(), 0);
    out.Z.resize(block.n(), block.X.cols() + block.Z.cols());
    out.Z << block.X, block.Z;
    return out;
}

selection::CvResult fit_mlasso(const DatasetBlock& block, std::uint64_t seed, const MethodOptions& opts) {
    const IntegratedDataset single({reroute_to_specific(block)});
    MethodOptions local = opts;
    // Without shared covariates lambda has no effect; keep a single column.
    if (local.grid.grid) local.grid.grid = selection::CvGrid::make({1.0}, local.grid.grid->gammas);
    return select_with(single, seed, local);
}

ModelFit split_mlasso(const ModelFit& fit, Index p) {
    if (fit.size() != 1 || fit.B.front().rows() != 0)
        throw ValidationError("expected a single-dataset fit with all covariates in C");
    const Matrix& all = fit.C.front();
    if (p > all.rows()) throw ValidationError("p exceeds the number of fitted covariates");
    return ModelFit::from_coefficients(fit.alpha, {all.topRows(p)}, {all.bottomRows(all.rows() - p)});
}

const char* to_string(Method m) {
    switch (m) {
        case Method::MR: return "MR";
        case Method::UR: return "UR";
        case Method::lasso: return "lasso";
        case Method::mlasso: return "mlasso";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    for (Method m : {Method::MR, Method::UR, Method::lasso, Method::mlasso})
        if (s == to_string(m)) return m;
    if (s == "mglasso") throw ValidationError("mglasso is not implemented (external glmnet baseline)");
    throw ValidationError("unknown method '" + s + "' (expected MR, UR, lasso or mlasso)");
}

ModelFit fit_method(Method method, const IntegratedDataset& data, std::uint64_t seed, const MethodOptions& opts) {
    switch (method) {
        case Method::MR: return fit_mr(data, seed, opts);
        case Method::UR: {
            std::vector<ModelFit> parts;
            for (auto& r : fit_ur(data, seed, opts)) parts.push_back(std::move(r.refit.fit));
            return combine_responses(parts);
        }
        case Method::lasso:
        case Method::mlasso: {
            VectorList alpha;
            MatrixList B, C;
            for (std::size_t m = 0; m < data.size(); ++m) {
                const auto& block = data.block(m);
                ModelFit fit;
                if (method == Method::mlasso) {
                    fit = split_mlasso(fit_mlasso(block, derive_seed({seed, static_cast<std::uint64_t>(m)}), opts).refit.fit, data.p());
                } else {
                    std::vector<ModelFit> cols;
                    for (Index k = 0; k < data.q(); ++k) {
                        const DatasetBlock slice{block.Y.col(k), block.X, block.Z};
                        const auto m64 = static_cast<std::uint64_t>(m), k64 = static_cast<std::uint64_t>(k);
                        cols.push_back(split_mlasso(fit_mlasso(slice, derive_seed({seed, m64, k64}), opts).refit.fit,
                                                    data.p()));
                    }
                    fit = combine_responses(cols);
                }
                alpha.push_back(fit.alpha.front());
                B.push_back(fit.B.front());
                C.push_back(fit.C.front());
            }
            return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
        }
    }
    throw ValidationError("unknown method");
}

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) throw ValidationError("quartiles of an empty sample");
    std::sort(v.begin(), v.end());
    auto at = [&](double prob) {
        const double pos = prob * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {at(0.25), at(0.5), at(0.75)};
}

StudyResult run_study(const std::vector<SimConfig>& scenarios, const StudyOptions& opts) {
    struct Job {
        std::size_t scenario;
        int replicate;  // 0-based
    };
    struct JobResult {
        std::vector<ReplicateRecord> records;
        std::vector<OverallRecord> overall;
        std::vector<Failure> failures;
    };

    std::vector<Job> jobs;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        scenarios[i].validate();
        for (int r = 0; r < scenarios[i].replicates; ++r) jobs.push_back({i, r});
    }

    std::vector<JobResult> results(jobs.size());
    // Workers parallelize across replicates; each fit's CV stays sequential.
    MethodOptions method_opts = opts.method;
    method_opts.select.threads = 1;

    parallel_for(jobs.size(), opts.threads, [&](std::size_t j) {
        const auto& cfg = scenarios[jobs[j].scenario];
        const int rep = jobs[j].replicate;
        const std::string name = cfg.name();
        JobResult& out = results[j];
        const SimData sim = generate(cfg, rep);
        const std::uint64_t cv_seed =
            derive_seed({cfg.seed, stable_hash(name), static_cast<std::uint64_t>(rep), kCv});
        for (Method method : opts.methods) {
            try {
                const ModelFit fit = fit_method(method, sim.train, cv_seed, method_opts);
                const Matrix err = mse(fit, sim.test);
                const Rates overall = fpr_fnr(fit, sim.truth, opts.mode);
                for (std::size_t m = 0; m < fit.size(); ++m) {
                    const Rates r = fpr_fnr_dataset(fit, sim.truth, m, opts.mode);
                    for (Index k = 0; k < err.cols(); ++k)
                        out.records.push_back({name, method, static_cast<int>(m) + 1, static_cast<int>(k) + 1,
                                               rep + 1, err(static_cast<Index>(m), k), r.fpr, r.fnr});
                }
                out.overall.push_back({name, method, rep + 1, overall.fpr, overall.fnr,
                                       static_cast<long>(fit.active_groups()), fit.homogeneous()});
            } catch (const std::exception& e) {
                out.failures.push_back({name, method, rep + 1, e.what()});
            }
        }
    });

    StudyResult study;
    study.scenarios = scenarios;
    study.mode = opts.mode;
    for (auto& r : results) {
        study.records.insert(study.records.end(), r.records.begin(), r.records.end());
        study.overall.insert(study.overall.end(), r.overall.begin(), r.overall.end());
        study.failures.insert(study.failures.end(), r.failures.begin(), r.failures.end());
    }

    // Cells keyed by (scenario index, method position, dataset, response).
    std::map<std::tuple<std::size_t, std::size_t, int, int>, std::vector<const ReplicateRecord*>> cells;
    std::map<std::string, std::size_t> scenario_pos;
    for (std::size_t i = 0; i < scenarios.size(); ++i) scenario_pos.emplace(scenarios[i].name(), i);
    auto method_pos = [&](Method m) {
        return static_cast<std::size_t>(std::find(opts.methods.begin(), opts.methods.end(), m) - opts.methods.begin());
    };
    for (const auto& rec : study.records)
        cells[{scenario_pos.at(rec.scenario), method_pos(rec.method), rec.dataset, rec.response}].push_back(&rec);
    for (const auto& [key, recs] : cells) {
        CellSummary cell;
        cell.scenario = recs.front()->scenario;
        cell.method = recs.front()->method;
        cell.dataset = recs.front()->dataset;
        cell.response = recs.front()->response;
        std::vector<double> errors;
        for (const auto* r : recs) {
            errors.push_back(r->mse);
            cell.mean_fpr += r->fpr;
            cell.mean_fnr += r->fnr;
        }
        cell.count = static_cast<int>(recs.size());
        cell.mean_fpr /= cell.count;
        cell.mean_fnr /= cell.count;
        cell.mse = quartiles(std::move(errors));
        study.summary.push_back(cell);
    }
    return study;
}

}  // namespace intreg::sim
