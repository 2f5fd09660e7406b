#include "oracles.hpp"

#include "parasrc/error.hpp"
#include "parasrc/quadrature.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace parasrc;

TEST(Quadrature, GaussExactOnMonomials) {
    for (int k = 1; k <= kMaxGaussDegree; ++k) EXPECT_LT(oracle::gauss_monomial_error(k), 1e-13) << "degree " << k;
}

TEST(Quadrature, TriangleExactOnMonomials) {
    for (int k = 1; k <= kMaxTriangleDegree; ++k)
        EXPECT_LT(oracle::triangle_monomial_error(k), 1e-12) << "degree " << k;
}

TEST(Quadrature, MappedWeightsCarryJacobian) {
    const auto r = map_to_interval(gauss_rule_1d(5), 0.25, 1.0);
    EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 0.75, 1e-15);
    const auto t = map_to_triangle(triangle_rule(4), {0, 0}, {2, 0}, {0, 1});
    EXPECT_NEAR(std::accumulate(t.weights.begin(), t.weights.end(), 0.0), 1.0, 1e-14);
    for (const auto& p : t.points) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LE(p.x / 2 + p.y, 1.0 + 1e-14);
    }
}

TEST(Quadrature, RejectsUnsupportedDegree) {
    EXPECT_THROW(gauss_rule_1d(0), InvalidArgument);
    EXPECT_THROW(gauss_rule_1d(kMaxGaussDegree + 1), InvalidArgument);
    EXPECT_THROW(triangle_rule(kMaxTriangleDegree + 1), InvalidArgument);
}
