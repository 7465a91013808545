#pragma once

#include "intreg/model.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <vector>

namespace intreg::admm {

/// Cholesky factorization of A'A + shift * I, cached for repeated solves.
///
/// When A has more columns than rows the n x n system A A' + shift * I is
/// factored instead and solves go through the Woodbury identity, so the cost
/// per solve is O(n * cols) rather than O(cols^2).
class CachedFactorization {
public:
    CachedFactorization() = default;
    CachedFactorization(const Matrix& A, double shift);

    /// Returns (A'A + shift * I)^{-1} rhs.
    Matrix solve(const Matrix& rhs) const;
    Index dim() const { return A_.cols(); }

private:
    Matrix A_;
    double shift_ = 1.0;
    bool dual_ = false;
    Eigen::LLT<Matrix> llt_;
};

/// Factorizations of X'X + n rho I and Z'Z + n rho I for every block.
struct BlockFactors {
    std::vector<CachedFactorization> x;
    std::vector<CachedFactorization> z;
};

BlockFactors factorize(const IntegratedDataset& data, double rho);

/// Primal, consensus and scaled dual variables of the splitting
///   eta_jk = beta_jk,  C^m = D^m.
/// H^m(j, k) and U^m(j, k) hold the m-th entries of eta_jk and u_jk.
struct AdmmState {
    VectorList alpha;
    MatrixList B;
    MatrixList C;
    MatrixList H;
    MatrixList U;
    MatrixList D;
    MatrixList V;
    long iter = 0;

    static AdmmState zeros(const IntegratedDataset& data);
    void check_bound(const IntegratedDataset& data) const;
    bool all_finite() const;
    /// Coefficients read from the consensus side: B from H, C from D.
    ModelFit consensus_fit() const;
};

/// Stops once |L_{l+1} - L_l| < tol on `patience` consecutive checks, where
/// L is the augmented Lagrangian. L is not monotone along ADMM iterates, so a
/// single small difference can be a sign change rather than convergence.
struct SolverOptions {
    double tol = 1e-7;
    long max_iter = 10000;
    long check_every = 1;
    long patience = 3;

    void validate() const;
};

struct FitReport {
    ModelFit fit;
    AdmmState state;
    long iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
    std::vector<double> lagrangian_trace;
    double kkt_residual = 0.0;
    double consensus_gap = 0.0;
};

/// Scaled augmented Lagrangian
///   loss(alpha, B, C) + lambda sum ||eta_jk|| + gamma sum ||D^m||_1
///   + rho/2 sum ||eta_jk - beta_jk + u_jk||^2 + rho/2 sum ||C^m - D^m + V^m||_F^2.
double augmented_lagrangian(const IntegratedDataset& data, const AdmmState& state,
                            const HyperParams& hp);

// Single block updates, in the order one iteration applies them.

Vector update_alpha(const DatasetBlock& block, const Matrix& B, const Matrix& C);

Matrix update_B(const DatasetBlock& block, const Vector& alpha, const Matrix& C, const Matrix& H,
                const Matrix& U, const HyperParams& hp, const CachedFactorization& factor_X);

/// Requires r >= 1; blocks without specific covariates skip this step.
Matrix update_C(const DatasetBlock& block, const Vector& alpha, const Matrix& B, const Matrix& D,
                const Matrix& V, const HyperParams& hp, const CachedFactorization& factor_Z);

Matrix update_D(const Matrix& C_next, const Matrix& V_prev, const HyperParams& hp);

/// Group soft-thresholding of every length-M vector (B^m - U^m)(j, k); the
/// result shares one zero pattern across all M matrices.
MatrixList update_eta(const MatrixList& B_next, const MatrixList& U_prev, const HyperParams& hp);

/// u <- u + eta - beta and V <- V + C - D.
void update_duals(AdmmState& state);

/// One full sweep of the alpha, B, C, D, eta, dual updates.
void iterate(const IntegratedDataset& data, AdmmState& state, const HyperParams& hp,
             const BlockFactors& factors);

FitReport fit(const IntegratedDataset& data, const HyperParams& hp, const SolverOptions& opts = {},
              const std::optional<AdmmState>& init = std::nullopt);

/// Largest violation of the first-order optimality conditions of the
/// penalized objective at the given fit (subgradient distance for B and C,
/// plain gradient for the intercepts).
double kkt_residual(const IntegratedDataset& data, const ModelFit& fit, const HyperParams& hp);

/// max over groups of ||eta_jk - beta_jk||_2 and over m of ||C^m - D^m||_F.
double consensus_gap(const AdmmState& state);

}  // namespace intreg::admm
