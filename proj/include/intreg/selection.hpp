#pragma once

#include "intreg/admm.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace intreg::selection {

/// Per-dataset fold labels in 1..K.
struct FoldAssignment {
    std::vector<std::vector<int>> labels;
    int K = 0;
    std::uint64_t seed = 0;

    std::vector<Index> rows_in(std::size_t m, int fold) const;
    std::vector<Index> rows_out(std::size_t m, int fold) const;
};

/// Shuffles each dataset independently and deals rows round-robin into K
/// folds, so fold sizes differ by at most one. Requires 2 <= K <= min n_m.
FoldAssignment make_folds(const IntegratedDataset& data, int K, std::uint64_t seed);

/// (lambda, gamma) grid, both axes strictly positive, descending, no duplicates.
struct CvGrid {
    std::vector<double> lambdas;
    std::vector<double> gammas;

    /// Sorts, deduplicates and validates.
    static CvGrid make(std::vector<double> lambdas, std::vector<double> gammas);
};

/// Smallest penalties that zero every shared group / every specific
/// coefficient when starting from the intercept-only fit.
struct PenaltyScale {
    double lambda = 0.0;
    double gamma = 0.0;
};
PenaltyScale penalty_scale(const IntegratedDataset& data);

/// `count` log-spaced values from the data-driven scale down to scale * ratio.
/// An axis whose scale is zero (no covariates of that kind) collapses to {1}.
CvGrid default_grid(const IntegratedDataset& data, int count = 15, double ratio = 1e-3);

/// Either an explicit grid or the parameters of the data-driven default.
struct GridSpec {
    std::optional<CvGrid> grid;
    int count = 15;
    double ratio = 1e-3;

    CvGrid resolve(const IntegratedDataset& data) const;
};

struct SelectOptions {
    admm::SolverOptions solver;
    double rho = 1.0;
    int threads = 1;
    bool warm_start = true;
};

/// (1/K) sum_k sum_m ||held-out residual||_F^2 / (2 n_m^(k)) with each fold's
/// model fitted on the remaining rows.
double cv_score(const IntegratedDataset& data, const FoldAssignment& folds, const HyperParams& hp,
                const admm::SolverOptions& opts = {});

struct CvResult {
    CvGrid grid;
    Matrix cv_matrix;  // |lambdas| x |gammas|
    double best_lambda = 0.0;
    double best_gamma = 0.0;
    admm::FitReport refit;
};

/// Grid search over (lambda, gamma). Within each gamma column the lambda path
/// is swept in descending order, warm-starting every fold from its previous
/// solution; columns are independent and may run concurrently. Among cells
/// within 1e-12 of the minimum the largest lambda, then largest gamma, wins.
CvResult select(const IntegratedDataset& data, const CvGrid& grid, int K, std::uint64_t seed,
                const SelectOptions& opts = {});

}  // namespace intreg::selection
