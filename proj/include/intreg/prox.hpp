#pragma once

#include "intreg/types.hpp"

namespace intreg::prox {

/// Scalar soft-thresholding sign(a) * max(|a| - b, 0). Throws on b < 0.
double soft_threshold(double a, double b);

/// Block soft-thresholding (1 - d / ||c||_2)_+ c, the proximal map of d * ||.||_2.
/// Returns the zero vector whenever ||c||_2 <= d, including c = 0.
Vector soft_threshold(const Vector& c, double d);

/// Entrywise scalar soft-thresholding of a matrix.
Matrix soft_threshold_entrywise(const Matrix& A, double b);

}  // namespace intreg::prox
