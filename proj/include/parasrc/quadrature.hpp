#pragma once

#include "parasrc/geometry.hpp"

#include <vector>

namespace parasrc {

/// Quadrature on a reference cell: [0,1] in 1D, the unit right triangle
/// {(0,0),(1,0),(0,1)} in 2D. Weights sum to the reference measure.
struct QuadratureRule {
    int dim = 1;
    int exactness_degree = 0;
    std::vector<Point> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

inline constexpr int kMaxGaussDegree = 20;
inline constexpr int kMaxTriangleDegree = 12;

/// Gauss-Legendre rule on [0,1] exact for polynomials of degree `degree`.
QuadratureRule gauss_rule_1d(int degree);

/// Collapsed (conical product) Gauss rule on the reference triangle.
QuadratureRule triangle_rule(int degree);

/// Rule mapped onto the physical interval [a,b]; weights carry the Jacobian.
QuadratureRule map_to_interval(const QuadratureRule& ref, double a, double b);

/// Rule mapped affinely onto the physical triangle (a,b,c).
QuadratureRule map_to_triangle(const QuadratureRule& ref, Point a, Point b, Point c);

} // namespace parasrc
