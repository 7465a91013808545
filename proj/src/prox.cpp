#include "intreg/prox.hpp"

#include <cmath>
#include <string>

namespace intreg::prox {

namespace {

void check_threshold(double t) {
    if (!(t >= 0.0)) throw ValidationError("threshold must be >= 0, got " + std::to_string(t));
}

}  // namespace

double soft_threshold(double a, double b) {
    check_threshold(b);
    const double mag = std::abs(a) - b;
    if (mag <= 0.0) return 0.0;
    return std::copysign(mag, a);
}

Vector soft_threshold(const Vector& c, double d) {
    check_threshold(d);
    const double norm = c.norm();
    if (norm <= d) return Vector::Zero(c.size());
    return (1.0 - d / norm) * c;
}

Matrix soft_threshold_entrywise(const Matrix& A, double b) {
    check_threshold(b);
    return A.unaryExpr([b](double a) {
        const double mag = std::abs(a) - b;
        return mag <= 0.0 ? 0.0 : std::copysign(mag, a);
    });
}

}  // namespace intreg::prox
