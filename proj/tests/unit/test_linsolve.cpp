#include "parasrc/error.hpp"
#include "parasrc/linsolve.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace parasrc;

namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& A) { return A.sparseView(); }

Eigen::MatrixXd random_spd(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = g(gen);
    return X * X.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

TEST(Linsolve, IdentityIsExact) {
    const SymmetricSolver s(sparse(Eigen::MatrixXd::Identity(5, 5)));
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1, 5);
    const SolveReport r = s.solve(b);
    EXPECT_EQ((r.solution - b).norm(), 0.0);
    EXPECT_NEAR(r.condition, 1.0, 1e-12);
}

TEST(Linsolve, RandomSpdAgainstDenseSolve) {
    const Eigen::MatrixXd A = random_spd(40, 3);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(40);
    const SolveReport r = SymmetricSolver(sparse(A)).solve(b);
    const Eigen::VectorXd ref = A.ldlt().solve(b);
    EXPECT_LT((r.solution - ref).norm(), 1e-12 * ref.norm());
    EXPECT_LT(r.relative_residual, 1e-14);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double exact = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    EXPECT_NEAR(r.condition / exact, 1.0, 1e-2);
}

TEST(Linsolve, HilbertMatrixReachesTolerance) {
    const int n = 9;
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) H(i, j) = 1.0 / (i + j + 1);
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd b = H * x;
    const SolveReport r = SymmetricSolver(sparse(H)).solve(b);
    EXPECT_LE(r.relative_residual, 1e-8);
    EXPECT_GT(r.condition, 1e11);
    EXPECT_LT((r.solution - x).norm(), 1e-3);
}

TEST(Linsolve, PermutationInvariance) {
    const int n = 30;
    const Eigen::MatrixXd A = random_spd(n, 9);
    Eigen::VectorXi idx = Eigen::VectorXi::LinSpaced(n, 0, n - 1);
    std::mt19937 gen(1);
    std::shuffle(idx.data(), idx.data() + n, gen);
    const Eigen::PermutationMatrix<Eigen::Dynamic> P(idx);
    const Eigen::MatrixXd PA = P * A * P.transpose();
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1, 1);
    const Eigen::VectorXd x = SymmetricSolver(sparse(A)).solve(b).solution;
    const Eigen::VectorXd y = SymmetricSolver(sparse(PA)).solve(P * b).solution;
    EXPECT_LT((P.transpose() * y - x).norm(), 1e-12 * x.norm());
}

TEST(Linsolve, DiagonalConditionNumber) {
    Eigen::SparseMatrix<double> D(2, 2);
    D.insert(0, 0) = 1.0;
    D.insert(1, 1) = 10.0;
    const ConditionEstimate ce = condition_estimate(D);
    EXPECT_NEAR(ce.value, 10.0, 1e-4);
    EXPECT_FALSE(ce.approximate);
}

TEST(Linsolve, SingularSystemsThrow) {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(3, 3);
    Z(1, 1) = 0.0;
    try {
        SymmetricSolver s(sparse(Z));
        FAIL() << "expected SingularSystemError";
    } catch (const SingularSystemError& e) {
        EXPECT_EQ(e.pivot(), 1);
    }
    Eigen::MatrixXd I(2, 2);
    I << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(SymmetricSolver(sparse(I)).solve(Eigen::Vector2d(1.0, 0.0)), Error);
}

TEST(Linsolve, ZeroRightHandSideGivesZero) {
    const SolveReport r = SymmetricSolver(sparse(random_spd(6, 2))).solve(Eigen::VectorXd::Zero(6));
    EXPECT_EQ(r.solution.norm(), 0.0);
}

TEST(Linsolve, SizeMismatchThrows) {
    const SymmetricSolver s(sparse(Eigen::MatrixXd::Identity(3, 3)));
    EXPECT_THROW(s.solve(Eigen::VectorXd::Ones(4)), InvalidArgument);
}
