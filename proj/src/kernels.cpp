#include "kinkqte/kernels.hpp"

#include <array>
#include <cmath>

#include "kinkqte/types.hpp"

namespace kinkqte {

double eval_kernel(const KernelSpec& spec, double u) {
    double a = std::fabs(u);
    if (a > 1.0) return 0.0;
    switch (spec.kind) {
        case KernelKind::uniform: return 0.5;
        case KernelKind::triangular: return 1.0 - a;
        case KernelKind::epanechnikov: return 0.75 * (1.0 - u * u);
    }
    return 0.0;
}

const char* kernel_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::uniform: return "uniform";
        case KernelKind::triangular: return "triangular";
        case KernelKind::epanechnikov: return "epanechnikov";
    }
    return "unknown";
}

std::optional<KernelKind> kernel_from_name(std::string_view name) {
    if (name == "uniform") return KernelKind::uniform;
    if (name == "triangular") return KernelKind::triangular;
    if (name == "epanechnikov") return KernelKind::epanechnikov;
    return std::nullopt;
}

namespace {

// Half-support polynomial moments: m[k] = integral over [0,1] of u^k K(u),
// q[k] = integral over [0,1] of u^k K(u)^2, k = 0..4. All shipped kernels
// are symmetric, so minus-side moments follow by the sign flip (-1)^k.
struct HalfMoments {
    std::array<double, 5> m;
    std::array<double, 5> q;
};

HalfMoments closed_form_moments(KernelKind kind) {
    HalfMoments hm{};
    for (int k = 0; k <= 4; ++k) {
        double dk = static_cast<double>(k);
        switch (kind) {
            case KernelKind::uniform:
                hm.m[k] = 0.5 / (dk + 1.0);
                hm.q[k] = 0.25 / (dk + 1.0);
                break;
            case KernelKind::triangular:
                hm.m[k] = 1.0 / ((dk + 1.0) * (dk + 2.0));
                hm.q[k] = 2.0 / ((dk + 1.0) * (dk + 2.0) * (dk + 3.0));
                break;
            case KernelKind::epanechnikov:
                hm.m[k] = 0.75 * (1.0 / (dk + 1.0) - 1.0 / (dk + 3.0));
                hm.q[k] = 0.5625 * (1.0 / (dk + 1.0) - 2.0 / (dk + 3.0) + 1.0 / (dk + 5.0));
                break;
        }
    }
    return hm;
}

KernelMoments assemble(const HalfMoments& hm) {
    KernelMoments km{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            km.gamma_plus[i][j] = hm.m[i + j];
            km.gamma_minus[i][j] = sign * hm.m[i + j];
        }
    }
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            km.gamma1_plus[i][j] = hm.m[i + j];
            km.gamma1_minus[i][j] = sign * hm.m[i + j];
            km.psi1_plus[i][j] = hm.q[i + j];
            km.psi1_minus[i][j] = sign * hm.q[i + j];
        }
    }
    km.lambda_plus = Vec2{hm.m[2], hm.m[3]};
    km.lambda_minus = Vec2{hm.m[2], -hm.m[3]};
    return km;
}

// 64-node Gauss-Legendre abscissae/weights on [-1,1], computed once by
// Newton iteration on the Legendre recurrence.
struct GaussLegendre64 {
    std::array<double, 64> node;
    std::array<double, 64> weight;

    GaussLegendre64() {
        constexpr int n = 64;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (x * p0 - p1) / (x * x - 1.0);
                double dx = p0 / pp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            node[i] = -x;
            node[n - 1 - i] = x;
            double w = 2.0 / ((1.0 - x * x) * pp * pp);
            weight[i] = w;
            weight[n - 1 - i] = w;
        }
    }
};

const GaussLegendre64& gl64() {
    static const GaussLegendre64 rule;
    return rule;
}

}  // namespace

double gauss_legendre_01(double (*f)(double, const void*), const void* ctx) {
    const GaussLegendre64& rule = gl64();
    double acc = 0.0;
    for (int i = 0; i < 64; ++i) {
        double u = 0.5 * (rule.node[i] + 1.0);
        acc += 0.5 * rule.weight[i] * f(u, ctx);
    }
    return acc;
}

KernelMoments moment_matrices(const KernelSpec& spec) {
    return assemble(closed_form_moments(spec.kind));
}

KernelMoments moment_matrices_quadrature(const KernelSpec& spec) {
    struct Ctx {
        KernelSpec spec;
        int k;
        bool squared;
    };
    HalfMoments hm{};
    for (int k = 0; k <= 4; ++k) {
        Ctx c{spec, k, false};
        hm.m[k] = gauss_legendre_01(
            [](double u, const void* ctx) {
                const Ctx& cc = *static_cast<const Ctx*>(ctx);
                double kv = eval_kernel(cc.spec, u);
                return std::pow(u, cc.k) * (cc.squared ? kv * kv : kv);
            },
            &c);
        c.squared = true;
        hm.q[k] = gauss_legendre_01(
            [](double u, const void* ctx) {
                const Ctx& cc = *static_cast<const Ctx*>(ctx);
                double kv = eval_kernel(cc.spec, u);
                return std::pow(u, cc.k) * (cc.squared ? kv * kv : kv);
            },
            &c);
    }
    return assemble(hm);
}

}  // namespace kinkqte
