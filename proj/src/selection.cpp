#include "intreg/selection.hpp"

#include "intreg/parallel.hpp"
#include "intreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace intreg::selection {

namespace {

struct FoldData {
    IntegratedDataset train;
    IntegratedDataset test;
};

std::vector<FoldData> split_folds(const IntegratedDataset& data, const FoldAssignment& folds) {
    if (folds.labels.size() != data.size())
        throw ValidationError("fold assignment does not match the number of datasets");
    std::vector<FoldData> out;
    out.reserve(static_cast<std::size_t>(folds.K));
    for (int k = 1; k <= folds.K; ++k) {
        std::vector<std::vector<Index>> in(data.size()), rest(data.size());
        for (std::size_t m = 0; m < data.size(); ++m) {
            if (static_cast<Index>(folds.labels[m].size()) != data.block(m).n())
                throw ValidationError("fold labels do not cover block " + std::to_string(m + 1));
            in[m] = folds.rows_in(m, k);
            rest[m] = folds.rows_out(m, k);
            if (in[m].empty())
                throw ValidationError("fold " + std::to_string(k) + " is empty in block " +
                                      std::to_string(m + 1));
            if (rest[m].empty())
                throw ValidationError("fold " + std::to_string(k) + " leaves no training rows in block " +
                                      std::to_string(m + 1));
        }
        out.push_back({data.subset_rows(rest), data.subset_rows(in)});
    }
    return out;
}

std::vector<double> sorted_unique_desc(std::vector<double> v, const char* what) {
    if (v.empty()) throw ValidationError(std::string(what) + " grid is empty");
    for (double x : v)
        if (!(std::isfinite(x) && x > 0.0))
            throw ValidationError(std::string(what) + " grid values must be finite and > 0");
    std::sort(v.begin(), v.end(), std::greater<>());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<double> log_path(double top, int count, double ratio) {
    if (!(top > 0.0)) return {1.0};
    if (count == 1) return {top};
    std::vector<double> out(static_cast<std::size_t>(count));
    const double lo = std::log(top * ratio), hi = std::log(top);
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(hi + (lo - hi) * i / (count - 1));
    return out;
}

}  // namespace

std::vector<Index> FoldAssignment::rows_in(std::size_t m, int fold) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < labels.at(m).size(); ++i)
        if (labels[m][i] == fold) rows.push_back(static_cast<Index>(i));
    return rows;
}

std::vector<Index> FoldAssignment::rows_out(std::size_t m, int fold) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < labels.at(m).size(); ++i)
        if (labels[m][i] != fold) rows.push_back(static_cast<Index>(i));
    return rows;
}

FoldAssignment make_folds(const IntegratedDataset& data, int K, std::uint64_t seed) {
    Index min_n = std::numeric_limits<Index>::max();
    for (const auto& b : data.blocks()) min_n = std::min(min_n, b.n());
    if (K < 2 || K > min_n)
        throw ValidationError("K must satisfy 2 <= K <= min n_m = " + std::to_string(min_n) + ", got " +
                              std::to_string(K));
    FoldAssignment folds{{}, K, seed};
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto n = static_cast<std::size_t>(data.block(m).n());
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto rng = make_stream({seed, 0x666f6c6473ull, m});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[order[i]] = static_cast<int>(i % static_cast<std::size_t>(K)) + 1;
        folds.labels.push_back(std::move(labels));
    }
    return folds;
}

CvGrid CvGrid::make(std::vector<double> lambdas, std::vector<double> gammas) {
    return {sorted_unique_desc(std::move(lambdas), "lambda"), sorted_unique_desc(std::move(gammas), "gamma")};
}

PenaltyScale penalty_scale(const IntegratedDataset& data) {
    PenaltyScale scale;
    Matrix group_sq = Matrix::Zero(data.p(), data.q());
    for (const auto& b : data.blocks()) {
        Matrix centred = b.Y;
        centred.rowwise() -= b.Y.colwise().mean();
        const double n = static_cast<double>(b.n());
        if (data.p() > 0) group_sq += ((b.X.transpose() * centred) / n).cwiseAbs2();
        if (b.r() > 0)
            scale.gamma = std::max(scale.gamma, ((b.Z.transpose() * centred) / n).cwiseAbs().maxCoeff());
    }
    if (group_sq.size() > 0) scale.lambda = std::sqrt(group_sq.maxCoeff());
    return scale;
}

CvGrid default_grid(const IntegratedDataset& data, int count, double ratio) {
    if (count < 1) throw ValidationError("grid size must be >= 1");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("grid ratio must lie in (0, 1]");
    const PenaltyScale scale = penalty_scale(data);
    return CvGrid::make(log_path(scale.lambda, count, ratio), log_path(scale.gamma, count, ratio));
}

CvGrid GridSpec::resolve(const IntegratedDataset& data) const {
    if (grid) return CvGrid::make(grid->lambdas, grid->gammas);
    return default_grid(data, count, ratio);
}

double cv_score(const IntegratedDataset& data, const FoldAssignment& folds, const HyperParams& hp,
                const admm::SolverOptions& opts) {
    const auto parts = split_folds(data, folds);
    double total = 0.0;
    for (const auto& part : parts) total += loss(part.test, admm::fit(part.train, hp, opts).fit);
    return total / static_cast<double>(folds.K);
}

CvResult select(const IntegratedDataset& data, const CvGrid& grid_in, int K, std::uint64_t seed,
                const SelectOptions& opts) {
    const CvGrid grid = CvGrid::make(grid_in.lambdas, grid_in.gammas);
    const FoldAssignment folds = make_folds(data, K, seed);
    const auto parts = split_folds(data, folds);
    const auto nl = static_cast<Index>(grid.lambdas.size());
    const auto ng = static_cast<Index>(grid.gammas.size());

    Matrix cv(nl, ng);
    parallel_for(static_cast<std::size_t>(ng), opts.threads, [&](std::size_t g) {
        std::vector<std::optional<admm::AdmmState>> warm(parts.size());
        for (Index i = 0; i < nl; ++i) {
            const HyperParams hp{grid.lambdas[static_cast<std::size_t>(i)], grid.gammas[g], opts.rho};
            double total = 0.0;
            for (std::size_t k = 0; k < parts.size(); ++k) {
                auto report = admm::fit(parts[k].train, hp, opts.solver, warm[k]);
                total += loss(parts[k].test, report.fit);
                if (opts.warm_start) warm[k] = std::move(report.state);
            }
            cv(i, static_cast<Index>(g)) = total / static_cast<double>(K);
        }
    });

    const double best = cv.minCoeff();
    Index bi = 0, bg = 0;
    [&] {
        for (Index i = 0; i < nl; ++i)
            for (Index g = 0; g < ng; ++g)
                if (cv(i, g) <= best + 1e-12) {
                    bi = i;
                    bg = g;
                    return;
                }
    }();

    CvResult result;
    result.grid = grid;
    result.cv_matrix = std::move(cv);
    result.best_lambda = grid.lambdas[static_cast<std::size_t>(bi)];
    result.best_gamma = grid.gammas[static_cast<std::size_t>(bg)];
    result.refit = admm::fit(data, HyperParams{result.best_lambda, result.best_gamma, opts.rho}, opts.solver);
    return result;
}

}  // namespace intreg::selection
