#include "intreg/model.hpp"

#include <cmath>
#include <string>

namespace intreg {

namespace {

std::string shape(const Matrix& A) {
    return std::to_string(A.rows()) + "x" + std::to_string(A.cols());
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

Matrix take_rows(const Matrix& A, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = A.row(rows[i]);
    return out;
}

}  // namespace

IntegratedDataset::IntegratedDataset(std::vector<DatasetBlock> blocks) : blocks_(std::move(blocks)) {
    require(!blocks_.empty(), "integrated dataset needs at least one block");
    p_ = blocks_.front().X.cols();
    q_ = blocks_.front().Y.cols();
    require(q_ >= 1, "responses must have at least one column");
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
        auto& b = blocks_[m];
        const std::string tag = "block " + std::to_string(m + 1) + ": ";
        // An r = 0 block may arrive as a default-constructed 0x0 matrix.
        if (b.Z.size() == 0) b.Z.resize(b.Y.rows(), 0);
        require(b.n() >= 1, tag + "needs at least one row");
        require(b.X.rows() == b.n(), tag + "X has " + shape(b.X) + ", Y has " + shape(b.Y));
        require(b.Z.rows() == b.n(), tag + "Z has " + shape(b.Z) + ", Y has " + shape(b.Y));
        require(b.X.cols() == p_, tag + "X has " + std::to_string(b.X.cols()) +
                                      " columns, expected p = " + std::to_string(p_));
        require(b.Y.cols() == q_, tag + "Y has " + std::to_string(b.Y.cols()) +
                                      " columns, expected q = " + std::to_string(q_));
        require(b.Y.allFinite() && b.X.allFinite() && b.Z.allFinite(),
                tag + "contains non-finite entries");
    }
}

IntegratedDataset IntegratedDataset::subset_rows(const std::vector<std::vector<Index>>& rows) const {
    require(rows.size() == blocks_.size(), "row selection must cover every block");
    std::vector<DatasetBlock> out;
    out.reserve(blocks_.size());
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
        const auto& b = blocks_[m];
        out.push_back({take_rows(b.Y, rows[m]), take_rows(b.X, rows[m]), take_rows(b.Z, rows[m])});
    }
    return IntegratedDataset(std::move(out));
}

IntegratedDataset IntegratedDataset::response_slice(Index k) const {
    require(k >= 0 && k < q_, "response index out of range");
    std::vector<DatasetBlock> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back({b.Y.col(k), b.X, b.Z});
    return IntegratedDataset(std::move(out));
}

void HyperParams::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
    require(std::isfinite(rho) && rho > 0.0, "rho must be finite and > 0");
}

ModelFit ModelFit::from_coefficients(VectorList alpha, MatrixList B, MatrixList C) {
    require(alpha.size() == B.size() && B.size() == C.size(),
            "alpha, B and C must have one entry per dataset");
    ModelFit fit{std::move(alpha), std::move(B), std::move(C), {}, {}};
    fit.refresh_support();
    return fit;
}

ModelFit ModelFit::zeros(const IntegratedDataset& data) {
    VectorList alpha;
    MatrixList B, C;
    for (const auto& b : data.blocks()) {
        alpha.push_back(Vector::Zero(data.q()));
        B.push_back(Matrix::Zero(data.p(), data.q()));
        C.push_back(Matrix::Zero(b.r(), data.q()));
    }
    return from_coefficients(std::move(alpha), std::move(B), std::move(C));
}

void ModelFit::refresh_support() {
    support_C.clear();
    if (B.empty()) {
        support_B.resize(0, 0);
        return;
    }
    support_B = BoolMatrix::Constant(B.front().rows(), B.front().cols(), false);
    for (const auto& Bm : B) {
        require(Bm.rows() == support_B.rows() && Bm.cols() == support_B.cols(),
                "all B^m must share one shape");
        support_B = support_B || (Bm.array() != 0.0);
    }
    for (const auto& Cm : C) support_C.push_back(Cm.array() != 0.0);
}

bool ModelFit::homogeneous() const {
    for (const auto& Bm : B)
        if (((Bm.array() != 0.0) != support_B).any()) return false;
    return true;
}

Index ModelFit::active_groups() const { return support_B.count(); }

Matrix residual_matrix(const DatasetBlock& block, const Vector& alpha, const Matrix& B,
                       const Matrix& C) {
    require(alpha.size() == block.Y.cols(), "alpha length does not match q");
    require(B.rows() == block.X.cols() && B.cols() == block.Y.cols(),
            "B has shape " + shape(B) + ", expected " + std::to_string(block.X.cols()) + "x" +
                std::to_string(block.Y.cols()));
    require(C.rows() == block.Z.cols() && C.cols() == block.Y.cols(),
            "C has shape " + shape(C) + ", expected " + std::to_string(block.Z.cols()) + "x" +
                std::to_string(block.Y.cols()));
    Matrix R = block.Y;
    R.rowwise() -= alpha.transpose();
    if (B.size() > 0) R.noalias() -= block.X * B;
    if (C.size() > 0) R.noalias() -= block.Z * C;
    return R;
}

Matrix predict(const DatasetBlock& block, const Vector& alpha, const Matrix& B, const Matrix& C) {
    return block.Y - residual_matrix(block, alpha, B, C);
}

void check_fit_dimensions(const IntegratedDataset& data, const ModelFit& fit) {
    require(fit.alpha.size() == data.size() && fit.B.size() == data.size() &&
                fit.C.size() == data.size(),
            "fit has " + std::to_string(fit.B.size()) + " blocks, data has " +
                std::to_string(data.size()));
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& b = data.block(m);
        require(fit.alpha[m].size() == data.q(), "alpha length mismatch in block " + std::to_string(m + 1));
        require(fit.B[m].rows() == data.p() && fit.B[m].cols() == data.q(),
                "B shape mismatch in block " + std::to_string(m + 1));
        require(fit.C[m].rows() == b.r() && fit.C[m].cols() == data.q(),
                "C shape mismatch in block " + std::to_string(m + 1));
    }
}

double loss(const IntegratedDataset& data, const ModelFit& fit) {
    check_fit_dimensions(data, fit);
    double total = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& b = data.block(m);
        total += residual_matrix(b, fit.alpha[m], fit.B[m], fit.C[m]).squaredNorm() /
                 (2.0 * static_cast<double>(b.n()));
    }
    return total;
}

double group_penalty(const MatrixList& B) {
    if (B.empty()) return 0.0;
    Matrix sq = Matrix::Zero(B.front().rows(), B.front().cols());
    for (const auto& Bm : B) sq += Bm.cwiseAbs2();
    return sq.cwiseSqrt().sum();
}

double l1_penalty(const MatrixList& C) {
    double total = 0.0;
    for (const auto& Cm : C) total += Cm.cwiseAbs().sum();
    return total;
}

double objective(const IntegratedDataset& data, const ModelFit& fit, const HyperParams& hp) {
    return loss(data, fit) + hp.lambda * group_penalty(fit.B) + hp.gamma * l1_penalty(fit.C);
}

}  // namespace intreg
