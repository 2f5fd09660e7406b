#include "oracles.hpp"

#include "parasrc/basis.hpp"
#include "parasrc/error.hpp"

#include <gtest/gtest.h>

using namespace parasrc;

namespace {

std::vector<double> grid(int n) {
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i) x[i] = static_cast<double>(i) / n;
    return x;
}

} // namespace

TEST(Basis, HermiteDualToNodalFunctionals) {
    const Hermite1DSpace s(grid(5));
    EXPECT_LT(oracle::kronecker_identity_error(s), 1e-10);
}

TEST(Basis, P1DualToNodalFunctionals) {
    const P1Space1D s(grid(4));
    EXPECT_LT(oracle::kronecker_identity_error(s), 1e-12);
    const P1TriSpace t(std::make_shared<TriMesh>(build_trimesh_congruent(3, 3, {0.2, 0.8, 0.2, 0.8})));
    EXPECT_LT(oracle::kronecker_identity_error(t), 1e-12);
}

TEST(Basis, ArgyrisDualToGlobalFunctionals) {
    for (int n : {2, 3, 5}) {
        const ArgyrisSpace s(std::make_shared<TriMesh>(build_trimesh_congruent(n, n, {0.2, 0.8, 0.2, 0.8})));
        EXPECT_LT(oracle::kronecker_identity_error(s), 1e-10) << "n = " << n;
    }
}

TEST(Basis, ArgyrisReproducesQuintics) {
    const ArgyrisBasis b({Point{0.1, 0.2}, Point{0.4, 0.25}, Point{0.15, 0.6}});
    // v = x^5 - 3 x^2 y^3 + y: interpolate via its 21 functionals, then compare.
    auto jet = [](Point p) {
        const double x = p.x, y = p.y;
        return std::array<double, 6>{std::pow(x, 5) - 3 * x * x * std::pow(y, 3) + y,
                                     5 * std::pow(x, 4) - 6 * x * std::pow(y, 3),
                                     -9 * x * x * y * y + 1,
                                     20 * std::pow(x, 3) - 6 * std::pow(y, 3),
                                     -18 * x * y * y,
                                     -18 * x * x * y};
    };
    Eigen::Matrix<double, 21, 1> c;
    for (int k = 0; k < 3; ++k) {
        const auto j = jet(b.vertices()[k]);
        for (int m = 0; m < 6; ++m) c[6 * k + m] = j[m];
    }
    for (int e = 0; e < 3; ++e) {
        const auto j = jet(b.edge_midpoint(e));
        const Point n = b.outward_normals()[e];
        c[18 + e] = n.x * j[1] + n.y * j[2];
    }
    for (Point p : {Point{0.2, 0.3}, Point{0.3, 0.3}, Point{0.18, 0.5}}) {
        const auto e = b.eval(p);
        const auto j = jet(p);
        for (int m = 0; m < 6; ++m) EXPECT_NEAR(c.dot(e.col(m)), j[m], 1e-9) << "component " << m;
    }
}

TEST(Basis, C1AcrossInterfaces) {
    EXPECT_LT(oracle::interface_jump(Hermite1DSpace(grid(7))), 1e-12);
    const ArgyrisSpace s(std::make_shared<TriMesh>(build_trimesh_congruent(4, 4, {0.25, 0.75, 0.25, 0.75})));
    EXPECT_LT(oracle::interface_jump(s), 1e-10);
}

TEST(Basis, HermiteShapePartitionOfUnity) {
    for (double x : {0.3, 0.35, 0.5}) {
        const auto v = hermite_shape(0.3, 0.2, x, 0);
        EXPECT_NEAR(v[0] + v[2], 1.0, 1e-15);
        const auto d = hermite_shape(0.3, 0.2, x, 1);
        EXPECT_NEAR(d[0] + d[2], 0.0, 1e-12);
    }
}

TEST(Basis, ReferenceEvaluationRejectsOutsidePoints) {
    const auto e = make_element_basis(ElementFamily::Argyris);
    EXPECT_EQ(e.n_dofs(), 21);
    EXPECT_THROW(eval_basis(e, {0.8, 0.8}, 0), DomainError);
    EXPECT_THROW(eval_basis(e, {0.2, 0.2}, 3), InvalidArgument);
}

TEST(Basis, DegenerateTriangleThrows) {
    EXPECT_THROW(ArgyrisBasis({Point{0, 0}, Point{1, 1}, Point{2, 2}}), SingularGeometryError);
}
