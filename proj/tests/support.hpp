#pragma once

// Test-only helpers: random instances and oracles written directly from the
// model definition, sharing no code with the solver.

#include "intreg/admm.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

namespace testing {

using namespace intreg;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Matrix A(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) A(i, j) = z(rng);
    return A;
}

struct Shape {
    int M = 2;
    Index n = 30;
    Index p = 4;
    Index q = 2;
    Index r = 2;
};

/// Y = 1 alpha' + X B + Z C + noise with half of the true coefficients zero.
inline IntegratedDataset random_dataset(const Shape& s, std::uint64_t seed, double noise = 0.5) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(0.5);
    Matrix Btrue = gaussian(s.p, s.q, rng);
    for (Index i = 0; i < Btrue.size(); ++i)
        if (!keep(rng)) Btrue(i) = 0.0;
    std::vector<DatasetBlock> blocks;
    for (int m = 0; m < s.M; ++m) {
        DatasetBlock b;
        b.X = gaussian(s.n, s.p, rng);
        b.Z = gaussian(s.n, s.r, rng);
        Matrix C = gaussian(s.r, s.q, rng);
        for (Index i = 0; i < C.size(); ++i)
            if (!keep(rng)) C(i) = 0.0;
        const Matrix alpha = gaussian(1, s.q, rng);
        b.Y = Matrix::Ones(s.n, 1) * alpha + b.X * (Btrue * (1.0 + 0.2 * m)) + b.Z * C +
              noise * gaussian(s.n, s.q, rng);
        blocks.push_back(std::move(b));
    }
    return IntegratedDataset(std::move(blocks));
}

/// Per-dataset ordinary least squares on [1 X Z] through a QR solve.
inline ModelFit least_squares(const IntegratedDataset& data) {
    VectorList alpha;
    MatrixList B, C;
    for (const auto& b : data.blocks()) {
        const Index p = b.X.cols(), r = b.Z.cols();
        Matrix design(b.n(), 1 + p + r);
        design << Matrix::Ones(b.n(), 1), b.X, b.Z;
        const Matrix coef = design.colPivHouseholderQr().solve(b.Y);
        alpha.push_back(coef.row(0).transpose());
        B.push_back(coef.middleRows(1, p));
        C.push_back(coef.bottomRows(r));
    }
    return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
}

/// Penalized objective evaluated with explicit loops.
inline double objective_loops(const IntegratedDataset& data, const ModelFit& f, double lambda,
                              double gamma) {
    double total = 0.0;
    const std::size_t M = data.size();
    for (std::size_t m = 0; m < M; ++m) {
        const auto& b = data.block(m);
        double sq = 0.0;
        for (Index i = 0; i < b.n(); ++i)
            for (Index k = 0; k < data.q(); ++k) {
                double pred = f.alpha[m](k);
                for (Index j = 0; j < data.p(); ++j) pred += b.X(i, j) * f.B[m](j, k);
                for (Index j = 0; j < b.r(); ++j) pred += b.Z(i, j) * f.C[m](j, k);
                sq += (b.Y(i, k) - pred) * (b.Y(i, k) - pred);
            }
        total += sq / (2.0 * static_cast<double>(b.n()));
        for (Index j = 0; j < b.r(); ++j)
            for (Index k = 0; k < data.q(); ++k) total += gamma * std::abs(f.C[m](j, k));
    }
    for (Index j = 0; j < data.p(); ++j)
        for (Index k = 0; k < data.q(); ++k) {
            double ss = 0.0;
            for (std::size_t m = 0; m < M; ++m) ss += f.B[m](j, k) * f.B[m](j, k);
            total += lambda * std::sqrt(ss);
        }
    return total;
}

/// Accelerated proximal gradient (FISTA with adaptive restart) on the
/// penalized objective. Slow but independent of the ADMM splitting.
inline ModelFit proximal_gradient(const IntegratedDataset& data, double lambda, double gamma,
                                  int iterations = 200000, double tol = 1e-15) {
    const std::size_t M = data.size();
    const Index p = data.p(), q = data.q();
    double L = 0.0;
    for (const auto& b : data.blocks()) {
        Matrix design(b.n(), 1 + p + b.r());
        design << Matrix::Ones(b.n(), 1), b.X, b.Z;
        const Eigen::SelfAdjointEigenSolver<Matrix> es(design.transpose() * design);
        L = std::max(L, es.eigenvalues().maxCoeff() / static_cast<double>(b.n()));
    }
    const double step = 1.0 / L;

    ModelFit x = ModelFit::zeros(data), y = x;
    double t = 1.0;
    double fprev = objective_loops(data, x, lambda, gamma);
    for (int it = 0; it < iterations; ++it) {
        ModelFit next = y;
        for (std::size_t m = 0; m < M; ++m) {
            const auto& b = data.block(m);
            const double n = static_cast<double>(b.n());
            const Matrix R = b.Y - Matrix::Ones(b.n(), 1) * y.alpha[m].transpose() - b.X * y.B[m] - b.Z * y.C[m];
            next.alpha[m] = y.alpha[m] + step * R.colwise().sum().transpose() / n;
            next.B[m] = y.B[m] + step * b.X.transpose() * R / n;
            const Matrix Cg = y.C[m] + step * b.Z.transpose() * R / n;
            next.C[m] = Cg.unaryExpr([&](double v) {
                const double a = std::abs(v) - step * gamma;
                return a > 0.0 ? std::copysign(a, v) : 0.0;
            });
        }
        for (Index j = 0; j < p; ++j)
            for (Index k = 0; k < q; ++k) {
                double norm = 0.0;
                for (std::size_t m = 0; m < M; ++m) norm += next.B[m](j, k) * next.B[m](j, k);
                norm = std::sqrt(norm);
                const double scale = norm > step * lambda ? 1.0 - step * lambda / norm : 0.0;
                for (std::size_t m = 0; m < M; ++m) next.B[m](j, k) *= scale;
            }
        const double fnext = objective_loops(data, next, lambda, gamma);
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (fnext > fprev) tn = 1.0;  // restart momentum
        const double w = (t - 1.0) / tn;
        y = next;
        for (std::size_t m = 0; m < M; ++m) {
            y.alpha[m] += w * (next.alpha[m] - x.alpha[m]);
            y.B[m] += w * (next.B[m] - x.B[m]);
            y.C[m] += w * (next.C[m] - x.C[m]);
        }
        x = next;
        t = tn;
        if (it > 1000 && std::abs(fprev - fnext) < tol * (1.0 + std::abs(fnext))) break;
        fprev = fnext;
    }
    x.refresh_support();
    return x;
}

/// Zero of a nondecreasing function on [lo, hi] by bisection: the point where
/// the right derivative of a convex function changes sign.
template <class G>
double bisect_derivative(G g, double lo, double hi, int rounds = 200) {
    for (int i = 0; i < rounds && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Minimizer of (1/2)(x - a)^2 + b|x| found by searching its subgradient.
inline double scalar_prox_search(double a, double b) {
    const double bound = std::abs(a) + 1.0;
    return bisect_derivative([&](double x) { return x - a + (x >= 0.0 ? b : -b); }, -bound, bound);
}

/// Minimizer of (1/2)||eta - c||^2 + d ||eta|| searched over eta = t c, t in [0, 1]
/// (the minimizer lies on that segment).
inline Vector group_prox_search(const Vector& c, double d) {
    const double nc = c.norm();
    if (nc == 0.0) return Vector::Zero(c.size());
    const double t = bisect_derivative([&](double s) { return -(1.0 - s) * nc * nc + d * nc; }, 0.0, 1.0);
    return t * c;
}

/// Random AdmmState with every variable drawn independently.
inline admm::AdmmState random_state(const IntegratedDataset& data, std::mt19937_64& rng) {
    admm::AdmmState s = admm::AdmmState::zeros(data);
    for (std::size_t m = 0; m < data.size(); ++m) {
        const Index p = data.p(), q = data.q(), r = data.block(m).r();
        s.alpha[m] = gaussian(q, 1, rng);
        s.B[m] = gaussian(p, q, rng);
        s.H[m] = gaussian(p, q, rng);
        s.U[m] = 0.5 * gaussian(p, q, rng);
        s.C[m] = gaussian(r, q, rng);
        s.D[m] = gaussian(r, q, rng);
        s.V[m] = 0.5 * gaussian(r, q, rng);
    }
    return s;
}

}  // namespace testing
