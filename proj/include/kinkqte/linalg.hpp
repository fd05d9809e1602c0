#pragma once

#include <array>
#include <cstddef>

namespace kinkqte {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Dense solves with partial pivoting for the tiny systems used throughout
// (normal equations of degree <= 3 fits). Throw SingularDesign on exact
// pivot breakdown.
Vec2 solve2(Mat2 a, Vec2 b);
Vec3 solve3(Mat3 a, Vec3 b);
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> b);

Mat2 inverse2(const Mat2& a);
Mat3 inverse3(const Mat3& a);

Mat2 mul2(const Mat2& a, const Mat2& b);
Vec2 mul2v(const Mat2& a, const Vec2& v);

// Eigenvalues of symmetric matrices, ascending. Used for positive
// definiteness checks and condition monitoring.
Vec2 sym_eigenvalues2(const Mat2& a);
Vec3 sym_eigenvalues3(const Mat3& a);

double min_eigenvalue_sym2(const Mat2& a);
double min_eigenvalue_sym3(const Mat3& a);

// lambda_max / lambda_min; +inf when lambda_min <= 0.
double condition_sym2(const Mat2& a);
double condition_sym3(const Mat3& a);

}  // namespace kinkqte
