#pragma once

#include "intreg/types.hpp"

#include <cstddef>
#include <vector>

namespace intreg {

/// One study: responses Y (n x q), shared covariates X (n x p) and
/// dataset-specific covariates Z (n x r). r may be zero.
struct DatasetBlock {
    Matrix Y;
    Matrix X;
    Matrix Z;

    Index n() const { return Y.rows(); }
    Index r() const { return Z.cols(); }
};

/// M aligned studies sharing the same p shared covariates and q responses.
/// Validated on construction and immutable afterwards.
class IntegratedDataset {
public:
    explicit IntegratedDataset(std::vector<DatasetBlock> blocks);

    const std::vector<DatasetBlock>& blocks() const { return blocks_; }
    const DatasetBlock& block(std::size_t m) const { return blocks_.at(m); }
    std::size_t size() const { return blocks_.size(); }
    Index p() const { return p_; }
    Index q() const { return q_; }

    /// Keeps only the listed rows of each block (rows[m] indexes block m).
    IntegratedDataset subset_rows(const std::vector<std::vector<Index>>& rows) const;
    /// Keeps only response column k of every block.
    IntegratedDataset response_slice(Index k) const;

private:
    std::vector<DatasetBlock> blocks_;
    Index p_ = 0;
    Index q_ = 0;
};

struct HyperParams {
    double lambda = 0.0;
    double gamma = 0.0;
    double rho = 1.0;

    void validate() const;
};

/// Estimated intercepts and coefficients for all M datasets.
///
/// support_B(j, k) is true when any B^m(j, k) is nonzero; for fits taken from
/// the group-lasso consensus variables the zero pattern is identical across m.
struct ModelFit {
    VectorList alpha;
    MatrixList B;
    MatrixList C;
    BoolMatrix support_B;
    std::vector<BoolMatrix> support_C;

    static ModelFit from_coefficients(VectorList alpha, MatrixList B, MatrixList C);
    static ModelFit zeros(const IntegratedDataset& data);

    std::size_t size() const { return B.size(); }
    /// True when every B^m has exactly the zero pattern of support_B.
    bool homogeneous() const;
    /// Number of (j, k) groups with a nonzero coefficient.
    Index active_groups() const;
    void refresh_support();
};

/// Y - 1 alpha' - X B - Z C for a single block.
Matrix residual_matrix(const DatasetBlock& block, const Vector& alpha, const Matrix& B,
                       const Matrix& C);

/// Predicted responses 1 alpha' + X B + Z C.
Matrix predict(const DatasetBlock& block, const Vector& alpha, const Matrix& B, const Matrix& C);

/// Sum over datasets of ||residual||_F^2 / (2 n_m).
double loss(const IntegratedDataset& data, const ModelFit& fit);

/// Group-lasso term sum_{j,k} ||(B^1(j,k), ..., B^M(j,k))||_2 (no sqrt(M) factor).
double group_penalty(const MatrixList& B);
double l1_penalty(const MatrixList& C);

/// Penalized objective: loss + lambda * group_penalty(B) + gamma * l1_penalty(C).
double objective(const IntegratedDataset& data, const ModelFit& fit, const HyperParams& hp);

/// Throws ValidationError unless the fit's shapes match the dataset.
void check_fit_dimensions(const IntegratedDataset& data, const ModelFit& fit);

}  // namespace intreg
