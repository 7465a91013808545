#include "intreg/admm.hpp"

#include "intreg/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace intreg::admm {

namespace {

double n_of(const DatasetBlock& b) { return static_cast<double>(b.n()); }

}  // namespace

CachedFactorization::CachedFactorization(const Matrix& A, double shift)
    : A_(A), shift_(shift), dual_(A.cols() > A.rows()) {
    if (!(shift > 0.0)) throw ValidationError("factorization shift must be > 0");
    if (A_.cols() == 0) return;
    Matrix G;
    if (dual_) {
        G = A_ * A_.transpose();
    } else {
        G = A_.transpose() * A_;
    }
    G.diagonal().array() += shift_;
    llt_.compute(G);
    if (llt_.info() != Eigen::Success)
        throw Error("internal error: Cholesky factorization failed on a shifted Gram matrix");
}

Matrix CachedFactorization::solve(const Matrix& rhs) const {
    if (A_.cols() == 0) return Matrix(0, rhs.cols());
    if (!dual_) return llt_.solve(rhs);
    // (A'A + cI)^{-1} v = (v - A' (AA' + cI)^{-1} A v) / c
    Matrix t = llt_.solve(A_ * rhs);
    return (rhs - A_.transpose() * t) / shift_;
}

BlockFactors factorize(const IntegratedDataset& data, double rho) {
    BlockFactors f;
    f.x.reserve(data.size());
    f.z.reserve(data.size());
    for (const auto& b : data.blocks()) {
        const double shift = n_of(b) * rho;
        f.x.emplace_back(b.X, shift);
        f.z.emplace_back(b.Z, shift);
    }
    return f;
}

AdmmState AdmmState::zeros(const IntegratedDataset& data) {
    AdmmState s;
    for (const auto& b : data.blocks()) {
        s.alpha.push_back(Vector::Zero(data.q()));
        const Matrix zb = Matrix::Zero(data.p(), data.q());
        const Matrix zc = Matrix::Zero(b.r(), data.q());
        s.B.push_back(zb);
        s.H.push_back(zb);
        s.U.push_back(zb);
        s.C.push_back(zc);
        s.D.push_back(zc);
        s.V.push_back(zc);
    }
    return s;
}

void AdmmState::check_bound(const IntegratedDataset& data) const {
    const std::size_t M = data.size();
    if (alpha.size() != M || B.size() != M || C.size() != M || H.size() != M || U.size() != M ||
        D.size() != M || V.size() != M)
        throw ValidationError("ADMM state has the wrong number of blocks");
    for (std::size_t m = 0; m < M; ++m) {
        const Index p = data.p(), q = data.q(), r = data.block(m).r();
        auto ok = [](const Matrix& A, Index rows, Index cols) {
            return A.rows() == rows && A.cols() == cols;
        };
        if (alpha[m].size() != q || !ok(B[m], p, q) || !ok(H[m], p, q) || !ok(U[m], p, q) ||
            !ok(C[m], r, q) || !ok(D[m], r, q) || !ok(V[m], r, q))
            throw ValidationError("ADMM state shape mismatch in block " + std::to_string(m + 1));
    }
}

bool AdmmState::all_finite() const {
    auto fin = [](const auto& list) {
        return std::all_of(list.begin(), list.end(), [](const auto& A) { return A.allFinite(); });
    };
    return fin(alpha) && fin(B) && fin(C) && fin(H) && fin(U) && fin(D) && fin(V);
}

ModelFit AdmmState::consensus_fit() const { return ModelFit::from_coefficients(alpha, H, D); }

void SolverOptions::validate() const {
    if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
    if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
    if (check_every < 1) throw ValidationError("check_every must be >= 1");
    if (patience < 1) throw ValidationError("patience must be >= 1");
}

double augmented_lagrangian(const IntegratedDataset& data, const AdmmState& state,
                            const HyperParams& hp) {
    state.check_bound(data);
    double value = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& b = data.block(m);
        value += residual_matrix(b, state.alpha[m], state.B[m], state.C[m]).squaredNorm() /
                 (2.0 * n_of(b));
        value += 0.5 * hp.rho * (state.H[m] - state.B[m] + state.U[m]).squaredNorm();
        value += 0.5 * hp.rho * (state.C[m] - state.D[m] + state.V[m]).squaredNorm();
    }
    value += hp.lambda * group_penalty(state.H) + hp.gamma * l1_penalty(state.D);
    return value;
}

Vector update_alpha(const DatasetBlock& block, const Matrix& B, const Matrix& C) {
    const Vector zero = Vector::Zero(block.Y.cols());
    return residual_matrix(block, zero, B, C).colwise().mean().transpose();
}

Matrix update_B(const DatasetBlock& block, const Vector& alpha, const Matrix& C, const Matrix& H,
                const Matrix& U, const HyperParams& hp, const CachedFactorization& factor_X) {
    const Matrix zeroB = Matrix::Zero(block.X.cols(), block.Y.cols());
    const Matrix partial = residual_matrix(block, alpha, zeroB, C);
    Matrix rhs = block.X.transpose() * partial;
    rhs += (n_of(block) * hp.rho) * (H + U);
    return factor_X.solve(rhs);
}

Matrix update_C(const DatasetBlock& block, const Vector& alpha, const Matrix& B, const Matrix& D,
                const Matrix& V, const HyperParams& hp, const CachedFactorization& factor_Z) {
    if (block.r() == 0) throw ValidationError("update_C called on a block without specific covariates");
    const Matrix zeroC = Matrix::Zero(block.Z.cols(), block.Y.cols());
    const Matrix partial = residual_matrix(block, alpha, B, zeroC);
    Matrix rhs = block.Z.transpose() * partial;
    rhs += (n_of(block) * hp.rho) * (D - V);
    return factor_Z.solve(rhs);
}

Matrix update_D(const Matrix& C_next, const Matrix& V_prev, const HyperParams& hp) {
    return prox::soft_threshold_entrywise(C_next + V_prev, hp.gamma / hp.rho);
}

MatrixList update_eta(const MatrixList& B_next, const MatrixList& U_prev, const HyperParams& hp) {
    const std::size_t M = B_next.size();
    if (M == 0 || U_prev.size() != M) throw ValidationError("update_eta needs all M blocks");
    const Index p = B_next.front().rows(), q = B_next.front().cols();
    const double threshold = hp.lambda / hp.rho;
    MatrixList H(M, Matrix(p, q));
    Vector group(static_cast<Index>(M));
    for (Index k = 0; k < q; ++k) {
        for (Index j = 0; j < p; ++j) {
            for (std::size_t m = 0; m < M; ++m)
                group[static_cast<Index>(m)] = B_next[m](j, k) - U_prev[m](j, k);
            const Vector eta = prox::soft_threshold(group, threshold);
            for (std::size_t m = 0; m < M; ++m) H[m](j, k) = eta[static_cast<Index>(m)];
        }
    }
    return H;
}

void update_duals(AdmmState& state) {
    for (std::size_t m = 0; m < state.B.size(); ++m) {
        state.U[m] += state.H[m] - state.B[m];
        state.V[m] += state.C[m] - state.D[m];
    }
}

void iterate(const IntegratedDataset& data, AdmmState& s, const HyperParams& hp,
             const BlockFactors& factors) {
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& b = data.block(m);
        s.alpha[m] = update_alpha(b, s.B[m], s.C[m]);
        s.B[m] = update_B(b, s.alpha[m], s.C[m], s.H[m], s.U[m], hp, factors.x[m]);
        if (b.r() > 0) {
            s.C[m] = update_C(b, s.alpha[m], s.B[m], s.D[m], s.V[m], hp, factors.z[m]);
            s.D[m] = update_D(s.C[m], s.V[m], hp);
        }
    }
    s.H = update_eta(s.B, s.U, hp);
    update_duals(s);
    ++s.iter;
}

FitReport fit(const IntegratedDataset& data, const HyperParams& hp, const SolverOptions& opts,
              const std::optional<AdmmState>& init) {
    hp.validate();
    opts.validate();
    FitReport report;
    AdmmState& state = report.state;
    state = init ? *init : AdmmState::zeros(data);
    state.check_bound(data);
    state.iter = 0;

    const BlockFactors factors = factorize(data, hp.rho);

    double L_prev = augmented_lagrangian(data, state, hp);
    report.lagrangian_trace.push_back(L_prev);
    ModelFit best = state.consensus_fit();
    double best_obj = objective(data, best, hp);
    report.objective_trace.push_back(best_obj);

    long hits = 0;
    for (long it = 1; it <= opts.max_iter; ++it) {
        iterate(data, state, hp, factors);
        if (!state.all_finite())
            throw DivergedError("non-finite iterate at ADMM iteration " + std::to_string(it));
        if (it % opts.check_every != 0 && it != opts.max_iter) continue;

        const double L = augmented_lagrangian(data, state, hp);
        ModelFit current = state.consensus_fit();
        const double obj = objective(data, current, hp);
        report.lagrangian_trace.push_back(L);
        report.objective_trace.push_back(obj);
        if (obj <= best_obj) {
            best_obj = obj;
            best = std::move(current);
        }
        hits = std::abs(L - L_prev) < opts.tol ? hits + 1 : 0;
        if (hits >= opts.patience) {
            report.converged = true;
            break;
        }
        L_prev = L;
    }

    report.iterations = state.iter;
    // A converged run reports its final iterate; otherwise the iterate with
    // the lowest objective seen.
    report.fit = report.converged ? state.consensus_fit() : std::move(best);
    // Intercepts are unpenalized, so refresh them against the reported
    // coefficients rather than the primal iterates they were computed from.
    for (std::size_t m = 0; m < data.size(); ++m)
        report.fit.alpha[m] = update_alpha(data.block(m), report.fit.B[m], report.fit.C[m]);
    report.kkt_residual = kkt_residual(data, report.fit, hp);
    report.consensus_gap = consensus_gap(state);
    return report;
}

double kkt_residual(const IntegratedDataset& data, const ModelFit& fit, const HyperParams& hp) {
    check_fit_dimensions(data, fit);
    const std::size_t M = data.size();
    const Index p = data.p(), q = data.q();
    double worst = 0.0;

    MatrixList gradB;
    gradB.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        const auto& b = data.block(m);
        const Matrix R = residual_matrix(b, fit.alpha[m], fit.B[m], fit.C[m]);
        const double n = n_of(b);
        worst = std::max(worst, (R.colwise().sum() / n).cwiseAbs().maxCoeff());
        gradB.push_back(-(b.X.transpose() * R) / n);

        const Matrix gradC = -(b.Z.transpose() * R) / n;
        for (Index k = 0; k < q; ++k) {
            for (Index i = 0; i < b.r(); ++i) {
                const double c = fit.C[m](i, k), g = gradC(i, k);
                const double v = c != 0.0 ? std::abs(g + hp.gamma * (c > 0 ? 1.0 : -1.0))
                                          : std::max(0.0, std::abs(g) - hp.gamma);
                worst = std::max(worst, v);
            }
        }
    }

    Vector beta(static_cast<Index>(M)), g(static_cast<Index>(M));
    for (Index k = 0; k < q; ++k) {
        for (Index j = 0; j < p; ++j) {
            for (std::size_t m = 0; m < M; ++m) {
                beta[static_cast<Index>(m)] = fit.B[m](j, k);
                g[static_cast<Index>(m)] = gradB[m](j, k);
            }
            const double norm = beta.norm();
            const double v = norm > 0.0 ? (g + hp.lambda * beta / norm).norm()
                                        : std::max(0.0, g.norm() - hp.lambda);
            worst = std::max(worst, v);
        }
    }
    return worst;
}

double consensus_gap(const AdmmState& state) {
    double gap = 0.0;
    if (!state.B.empty()) {
        Matrix sq = Matrix::Zero(state.B.front().rows(), state.B.front().cols());
        for (std::size_t m = 0; m < state.B.size(); ++m) sq += (state.H[m] - state.B[m]).cwiseAbs2();
        if (sq.size() > 0) gap = std::sqrt(sq.maxCoeff());
    }
    for (std::size_t m = 0; m < state.C.size(); ++m) gap = std::max(gap, (state.C[m] - state.D[m]).norm());
    return gap;
}

}  // namespace intreg::admm
