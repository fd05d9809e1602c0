#include "kinkqte/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinkqte/types.hpp"

namespace kinkqte {

namespace {

template <std::size_t N>
std::array<double, N> solve_pivoted(std::array<std::array<double, N>, N> a, std::array<double, N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(a[col][col]);
        for (std::size_t r = col + 1; r < N; ++r) {
            double v = std::fabs(a[r][col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) {
            throw SingularDesign("singular linear system (pivot breakdown)");
        }
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < N; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace

Vec2 solve2(Mat2 a, Vec2 b) { return solve_pivoted<2>(a, b); }
Vec3 solve3(Mat3 a, Vec3 b) { return solve_pivoted<3>(a, b); }
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> b) {
    return solve_pivoted<4>(a, b);
}

Mat2 inverse2(const Mat2& a) {
    double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det == 0.0 || !std::isfinite(det)) {
        throw SingularDesign("singular 2x2 matrix");
    }
    return Mat2{{{a[1][1] / det, -a[0][1] / det}, {-a[1][0] / det, a[0][0] / det}}};
}

Mat3 inverse3(const Mat3& a) {
    Mat3 inv;
    Vec3 e{};
    for (int c = 0; c < 3; ++c) {
        e.fill(0.0);
        e[static_cast<std::size_t>(c)] = 1.0;
        Vec3 col = solve3(a, e);
        for (int r = 0; r < 3; ++r) inv[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = col[static_cast<std::size_t>(r)];
    }
    return inv;
}

Mat2 mul2(const Mat2& a, const Mat2& b) {
    Mat2 out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return out;
}

Vec2 mul2v(const Mat2& a, const Vec2& v) {
    return Vec2{a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

Vec2 sym_eigenvalues2(const Mat2& a) {
    double tr = a[0][0] + a[1][1];
    double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return Vec2{tr / 2.0 - disc, tr / 2.0 + disc};
}

Vec3 sym_eigenvalues3(const Mat3& m) {
    // Analytic eigenvalues of a symmetric 3x3 (trigonometric form).
    double p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    double q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if (p1 == 0.0) {
        Vec3 diag{m[0][0], m[1][1], m[2][2]};
        std::sort(diag.begin(), diag.end());
        return diag;
    }
    double p2 = (m[0][0] - q) * (m[0][0] - q) + (m[1][1] - q) * (m[1][1] - q) +
                (m[2][2] - q) * (m[2][2] - q) + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    Mat3 b{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b[i][j] = (m[i][j] - (i == j ? q : 0.0)) / p;
    double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                  b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                  b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    double r = std::clamp(detb / 2.0, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    double e1 = q + 2.0 * p * std::cos(phi);
    double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    double e2 = 3.0 * q - e1 - e3;
    Vec3 out{e3, e2, e1};
    std::sort(out.begin(), out.end());
    return out;
}

double min_eigenvalue_sym2(const Mat2& a) { return sym_eigenvalues2(a)[0]; }
double min_eigenvalue_sym3(const Mat3& a) { return sym_eigenvalues3(a)[0]; }

double condition_sym2(const Mat2& a) {
    Vec2 ev = sym_eigenvalues2(a);
    if (ev[0] <= 0.0) return std::numeric_limits<double>::infinity();
    return ev[1] / ev[0];
}

double condition_sym3(const Mat3& a) {
    Vec3 ev = sym_eigenvalues3(a);
    if (ev[0] <= 0.0) return std::numeric_limits<double>::infinity();
    return ev[2] / ev[0];
}

}  // namespace kinkqte
