#include <cmath>
#include <cstring>

#include <doctest.h>

#include "kinkqte/kernels.hpp"
#include "kinkqte/linalg.hpp"

using namespace kinkqte;

namespace {
const KernelSpec kUniform{KernelKind::uniform};
const KernelSpec kTriangular{KernelKind::triangular};
const KernelSpec kEpanechnikov{KernelKind::epanechnikov};
}  // namespace

TEST_CASE("kernel point values") {
    CHECK(eval_kernel(kUniform, 0.0) == doctest::Approx(0.5));
    CHECK(eval_kernel(kTriangular, 1.0) == doctest::Approx(0.0));
    CHECK(eval_kernel(kEpanechnikov, 0.0) == doctest::Approx(0.75));
    CHECK(eval_kernel(kUniform, 1.5) == 0.0);
    CHECK(eval_kernel(kTriangular, -2.0) == 0.0);
    CHECK(eval_kernel(kEpanechnikov, -0.5) == doctest::Approx(0.75 * 0.75));
}

TEST_CASE("kernels integrate to one") {
    for (KernelSpec spec : {kUniform, kTriangular, kEpanechnikov}) {
        struct Ctx {
            KernelSpec spec;
        } ctx{spec};
        double half = gauss_legendre_01(
            [](double u, const void* c) {
                return eval_kernel(static_cast<const Ctx*>(c)->spec, u);
            },
            &ctx);
        CHECK(std::fabs(2.0 * half - 1.0) < 1e-10);
    }
}

TEST_CASE("uniform gamma_plus closed form") {
    KernelMoments km = moment_matrices(kUniform);
    const double expect[3][3] = {{1.0 / 2, 1.0 / 4, 1.0 / 6},
                                 {1.0 / 4, 1.0 / 6, 1.0 / 8},
                                 {1.0 / 6, 1.0 / 8, 1.0 / 10}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(km.gamma_plus[i][j] == doctest::Approx(expect[i][j]));
}

TEST_CASE("triangular gamma1 and uniform lambda closed forms") {
    CHECK(moment_matrices(kTriangular).gamma1_plus[0][0] == doctest::Approx(0.5));
    KernelMoments km = moment_matrices(kUniform);
    CHECK(km.lambda_plus[0] == doctest::Approx(1.0 / 6));
    CHECK(km.lambda_plus[1] == doctest::Approx(1.0 / 8));
}

TEST_CASE("quadrature matches closed forms entrywise") {
    for (KernelSpec spec : {kUniform, kTriangular, kEpanechnikov}) {
        KernelMoments a = moment_matrices(spec);
        KernelMoments b = moment_matrices_quadrature(spec);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(std::fabs(a.gamma_plus[i][j] - b.gamma_plus[i][j]) < 1e-10);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                CHECK(std::fabs(a.gamma1_plus[i][j] - b.gamma1_plus[i][j]) < 1e-10);
                CHECK(std::fabs(a.psi1_plus[i][j] - b.psi1_plus[i][j]) < 1e-10);
                CHECK(std::fabs(a.gamma1_minus[i][j] - b.gamma1_minus[i][j]) < 1e-10);
            }
            CHECK(std::fabs(a.lambda_plus[i] - b.lambda_plus[i]) < 1e-10);
            CHECK(std::fabs(a.lambda_minus[i] - b.lambda_minus[i]) < 1e-10);
        }
    }
}

TEST_CASE("gamma matrices positive definite, minus side sign-flipped") {
    for (KernelSpec spec : {kUniform, kTriangular, kEpanechnikov}) {
        KernelMoments km = moment_matrices(spec);
        CHECK(min_eigenvalue_sym3(km.gamma_plus) > 0.0);
        CHECK(min_eigenvalue_sym3(km.gamma_minus) > 0.0);
        CHECK(min_eigenvalue_sym2(km.gamma1_plus) > 0.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                CHECK(km.gamma_minus[i][j] == doctest::Approx(sign * km.gamma_plus[i][j]));
            }
        }
    }
}

TEST_CASE("moment_matrices deterministic bitwise") {
    for (KernelSpec spec : {kUniform, kTriangular, kEpanechnikov}) {
        KernelMoments a = moment_matrices(spec);
        KernelMoments b = moment_matrices(spec);
        CHECK(std::memcmp(&a, &b, sizeof(KernelMoments)) == 0);
    }
}

TEST_CASE("kernel name round trip") {
    for (KernelKind kind :
         {KernelKind::uniform, KernelKind::triangular, KernelKind::epanechnikov}) {
        auto parsed = kernel_from_name(kernel_name(kind));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == kind);
    }
    CHECK_FALSE(kernel_from_name("gaussian").has_value());
}
