#include "parasrc/quadrature.hpp"

#include "parasrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace parasrc {

namespace {

// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1] by Newton
// iteration on P_n, started from the Chebyshev-like guess.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0;
        double p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

} // namespace

QuadratureRule gauss_rule_1d(int degree) {
    if (degree < 1 || degree > kMaxGaussDegree)
        throw InvalidArgument("gauss_rule_1d: unsupported degree " + std::to_string(degree));
    const int n = degree / 2 + 1;
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    QuadratureRule rule;
    rule.dim = 1;
    rule.exactness_degree = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
        rule.weights.push_back(0.5 * w[i]);
    }
    return rule;
}

QuadratureRule triangle_rule(int degree) {
    if (degree < 1 || degree > kMaxTriangleDegree)
        throw InvalidArgument("triangle_rule: unsupported degree " + std::to_string(degree));
    // (u,v) in [0,1]^2 -> (x,y) = (u, (1-u) v), dx dy = (1-u) du dv.
    const int nu = (degree + 2 + 1) / 2;
    const int nv = (degree + 1 + 1) / 2;
    std::vector<double> xu, wu, xv, wv;
    gauss_legendre(nu, xu, wu);
    gauss_legendre(nv, xv, wv);
    QuadratureRule rule;
    rule.dim = 2;
    rule.exactness_degree = std::min(2 * nu - 2, 2 * nv - 1);
    for (int i = 0; i < nu; ++i) {
        const double u = 0.5 * (xu[i] + 1.0);
        for (int j = 0; j < nv; ++j) {
            const double v = 0.5 * (xv[j] + 1.0);
            rule.points.push_back({u, (1.0 - u) * v});
            rule.weights.push_back(0.25 * wu[i] * wv[j] * (1.0 - u));
        }
    }
    return rule;
}

QuadratureRule map_to_interval(const QuadratureRule& ref, double a, double b) {
    QuadratureRule out = ref;
    const double len = b - a;
    for (std::size_t q = 0; q < ref.size(); ++q) {
        out.points[q] = {a + len * ref.points[q].x, 0.0};
        out.weights[q] = len * ref.weights[q];
    }
    return out;
}

QuadratureRule map_to_triangle(const QuadratureRule& ref, Point a, Point b, Point c) {
    QuadratureRule out = ref;
    const Point e1 = b - a;
    const Point e2 = c - a;
    const double jac = std::abs(cross(e1, e2));
    for (std::size_t q = 0; q < ref.size(); ++q) {
        const Point r = ref.points[q];
        out.points[q] = a + r.x * e1 + r.y * e2;
        out.weights[q] = jac * ref.weights[q];
    }
    return out;
}

} // namespace parasrc
