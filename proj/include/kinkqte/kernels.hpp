#pragma once

#include <optional>
#include <string_view>

#include "kinkqte/linalg.hpp"

namespace kinkqte {

enum class KernelKind { uniform, triangular, epanechnikov };

/// Kernel on the fixed support [-1, 1], nonnegative, integrating to one.
struct KernelSpec {
    KernelKind kind = KernelKind::triangular;
};

double eval_kernel(const KernelSpec& spec, double u);

const char* kernel_name(KernelKind kind);
std::optional<KernelKind> kernel_from_name(std::string_view name);

/// Side-specific moment objects consumed by the estimators and the
/// bandwidth rules, for the basis r(u) = (1, u, u^2)' and r1(u) = (1, u)':
///   gamma:   integral of r r' K       over each half-support (3x3)
///   gamma1:  integral of r1 r1' K     (2x2)
///   psi1:    integral of r1 r1' K^2   (2x2)
///   lambda:  integral of u^2 r1 K     (2-vector)
struct KernelMoments {
    Mat3 gamma_plus, gamma_minus;
    Mat2 gamma1_plus, gamma1_minus;
    Mat2 psi1_plus, psi1_minus;
    Vec2 lambda_plus, lambda_minus;
};

/// Closed-form moment matrices.
KernelMoments moment_matrices(const KernelSpec& spec);

/// Same objects by composite Gauss-Legendre quadrature (64 nodes per
/// half-support). Cross-checks the closed forms in the test suite.
KernelMoments moment_matrices_quadrature(const KernelSpec& spec);

/// Integral of f over [0, 1] with the 64-node Gauss-Legendre rule.
double gauss_legendre_01(double (*f)(double, const void*), const void* ctx);

}  // namespace kinkqte
