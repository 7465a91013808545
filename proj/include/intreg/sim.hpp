#pragma once

#include "intreg/selection.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace intreg::sim {

/// One simulation cell. Scenario names look like M2_n15_s5_rx01_ry09, where
/// the correlation digits are read as decimals (01 -> 0.1, 09 -> 0.9).
struct SimConfig {
    int M = 2;
    int n = 75;
    int s = 5;
    double rho_x = 0.1;
    double rho_y = 0.1;
    std::uint64_t seed = 1;
    int n_test = 1000;
    int replicates = 100;
    /// Draw training designs once (replicate 0) and vary only the noise.
    bool fixed_design = false;

    void validate() const;
    std::string name() const;
    static SimConfig from_name(const std::string& name);
};

/// Every cell of the published design: M x n x s x rho_x x rho_y.
std::vector<SimConfig> paper_scenarios();

/// True coefficients. B_star and each C_star[m] are (10 + s) x 2 with the
/// last s rows zero.
struct TruthSet {
    Matrix B_star;
    MatrixList C_star;
};

TruthSet truth(int M, int s);

/// n rows from N(0, Sigma) with Sigma(i, j) = rho^|i - j|.
Matrix gen_ar1_rows(Index n, Index dim, double rho, std::mt19937_64& rng);

struct SimData {
    IntegratedDataset train;
    TruthSet truth;
    std::vector<DatasetBlock> test;
};

/// Training data and n_test held-out rows per dataset for one replicate.
/// Pure function of (config, replicate).
SimData generate(const SimConfig& config, int replicate = 0);

/// Zero intercepts and the true coefficients.
ModelFit oracle_fit(const TruthSet& truth);

/// Mean squared prediction error per (dataset, response), as an M x q matrix.
Matrix mse(const ModelFit& fit, const std::vector<DatasetBlock>& test);

enum class MetricMode { paper, conventional };

MetricMode parse_metric_mode(const std::string& s);
const char* to_string(MetricMode mode);

struct Rates {
    double fpr = 0.0;
    double fnr = 0.0;
};

/// Support-recovery rates over the stacked vector (vec B^1..B^M, vec C^1..C^M).
/// Paper mode divides false positives by the number of true nonzeros and
/// false negatives by the number of true zeros; conventional mode swaps the
/// denominators so both rates lie in [0, 1].
Rates fpr_fnr(const ModelFit& fit, const TruthSet& truth, MetricMode mode = MetricMode::paper);

/// Same rates restricted to dataset m's coefficients (vec B^m, vec C^m).
Rates fpr_fnr_dataset(const ModelFit& fit, const TruthSet& truth, std::size_t m,
                      MetricMode mode = MetricMode::paper);

/// Cross-validation settings shared by every estimator.
struct MethodOptions {
    selection::GridSpec grid;
    int K = 5;
    selection::SelectOptions select;
};

/// Main estimator: joint fit of all datasets with CV-selected (lambda, gamma).
ModelFit fit_mr(const IntegratedDataset& data, std::uint64_t seed, const MethodOptions& opts);

/// One joint fit per response column (q = 1 slices), each with its own CV.
std::vector<selection::CvResult> fit_ur(const IntegratedDataset& data, std::uint64_t seed,
                                        const MethodOptions& opts);
/// Stitches per-response fits back into a q-column ModelFit.
ModelFit combine_responses(const std::vector<ModelFit>& per_response);

/// Single-dataset multivariate lasso: X and Z columns concatenated and
/// penalized entrywise through the gamma path (the fitted block has no
/// shared covariates).
selection::CvResult fit_mlasso(const DatasetBlock& block, std::uint64_t seed, const MethodOptions& opts);
/// Splits an mlasso fit (all covariates in C) back into B and C for a block with p shared covariates.
ModelFit split_mlasso(const ModelFit& fit, Index p);
/// Rewrites a block so that all covariates sit in Z.
DatasetBlock reroute_to_specific(const DatasetBlock& block);

enum class Method { MR, UR, lasso, mlasso };
const char* to_string(Method m);
Method parse_method(const std::string& s);

/// Fits one estimator on a simulated replicate and returns coefficients in
/// the original (B, C) layout of `data`.
ModelFit fit_method(Method method, const IntegratedDataset& data, std::uint64_t seed,
                    const MethodOptions& opts);

struct ReplicateRecord {
    std::string scenario;
    Method method;
    int dataset = 0;   // 1-based
    int response = 0;  // 1-based
    int replicate = 0; // 1-based
    double mse = 0.0;
    double fpr = 0.0;  // dataset-level rates, repeated for each response
    double fnr = 0.0;
};

/// Stacked (all datasets) rates for one replicate of one method.
struct OverallRecord {
    std::string scenario;
    Method method;
    int replicate = 0;
    double fpr = 0.0;
    double fnr = 0.0;
    long active_groups = 0;
    bool homogeneous = false;
};

struct Failure {
    std::string scenario;
    Method method;
    int replicate = 0;
    std::string message;
};

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Linear-interpolation quartiles. Throws on empty input.
Quartiles quartiles(std::vector<double> values);

struct CellSummary {
    std::string scenario;
    Method method;
    int dataset = 0;
    int response = 0;
    Quartiles mse;
    double mean_fpr = 0.0;
    double mean_fnr = 0.0;
    int count = 0;
};

struct StudyOptions {
    std::vector<Method> methods{Method::MR, Method::UR, Method::lasso, Method::mlasso};
    MethodOptions method;
    MetricMode mode = MetricMode::paper;
    int threads = 1;
};

struct StudyResult {
    std::vector<SimConfig> scenarios;
    std::vector<ReplicateRecord> records;
    std::vector<OverallRecord> overall;
    std::vector<Failure> failures;
    std::vector<CellSummary> summary;
    MetricMode mode = MetricMode::paper;
};

/// Runs every (scenario, replicate) job, each fitting all requested methods.
/// Jobs run concurrently; results are ordered by (scenario, replicate,
/// method) regardless of completion order. A failing method is recorded and
/// the remaining work continues.
StudyResult run_study(const std::vector<SimConfig>& scenarios, const StudyOptions& opts);

}  // namespace intreg::sim
