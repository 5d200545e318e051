#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace repel {

struct CgResult {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Preconditioned conjugate gradient for a symmetric positive-definite operator.
/// `apply(x, out)` computes out = A x. `inverse_diagonal` (may be empty) holds
/// the Jacobi preconditioner 1 / A_ii. `x` holds the initial guess on entry.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> b, std::span<double> x,
                            std::span<const double> inverse_diagonal, double relative_tolerance,
                            std::size_t max_iterations) {
    const std::size_t n = b.size();
    const bool precondition = !inverse_diagonal.empty();
    std::vector<double> r(n), z(n), p(n), q(n);

    const auto dot = [n](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
        return s;
    };

    double b_norm = 0.0;
    for (double v : b) b_norm += v * v;
    b_norm = std::sqrt(b_norm);
    if (b_norm == 0.0) {
        for (double& v : x) v = 0.0;
        return {0, 0.0, true};
    }

    apply(std::span<const double>(x.data(), n), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = precondition ? inverse_diagonal[i] * r[i] : r[i];
    p = z;
    double rz = dot(r, z);

    CgResult result;
    result.relative_residual = std::sqrt(dot(r, r)) / b_norm;
    if (result.relative_residual <= relative_tolerance) {
        result.converged = true;
        return result;
    }
    while (result.iterations < max_iterations) {
        ++result.iterations;
        apply(std::span<const double>(p), std::span<double>(q));
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;  // operator not positive definite along p
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        result.relative_residual = std::sqrt(dot(r, r)) / b_norm;
        if (result.relative_residual <= relative_tolerance) {
            result.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = precondition ? inverse_diagonal[i] * r[i] : r[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return result;
}

}  // namespace repel
