#include "parasrc/error.hpp"
#include "parasrc/forward.hpp"
#include "parasrc/quadrature.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace parasrc;

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier series of u_t - u_xx = g, u(0) = 0, with g = sum_k b_k sin(k pi x).
double fourier(const std::vector<double>& b, double x, double t) {
    double u = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        const double l = k * k * kPi * kPi;
        u += b[i] * -std::expm1(-l * t) / l * std::sin(k * kPi * x);
    }
    return u;
}

double l2q_error(const ForwardSolution& s, const std::vector<double>& b, double T) {
    const QuadratureRule gx = gauss_rule_1d(9), gt = gauss_rule_1d(9);
    double e = 0.0;
    const int nx = 40, nt = 20;
    for (int i = 0; i < nx; ++i) {
        const QuadratureRule rx = map_to_interval(gx, static_cast<double>(i) / nx, static_cast<double>(i + 1) / nx);
        for (int j = 0; j < nt; ++j) {
            const QuadratureRule rt = map_to_interval(gt, T * j / nt, T * (j + 1) / nt);
            for (std::size_t p = 0; p < rx.size(); ++p)
                for (std::size_t q = 0; q < rt.size(); ++q) {
                    const double x = rx.points[p].x, t = rt.points[q].x;
                    const double d = s.value({x, 0}, t, {}) - fourier(b, x, t);
                    e += rx.weights[p] * rt.weights[q] * d * d;
                }
        }
    }
    return std::sqrt(e);
}

} // namespace

TEST(Forward, SingleModeMatchesFourierSolution) {
    ForwardProblem p;
    p.op = EllipticOperator::negative_laplacian();
    p.f = [](Point x) { return std::sin(kPi * x.x); };
    const auto s = solve_forward(p);
    EXPECT_LT(l2q_error(*s, {1.0}, 1.0), 1e-6);
}

TEST(Forward, ParabolaMatchesFourierSeries) {
    ForwardProblem p;
    p.op = EllipticOperator::negative_laplacian();
    p.f = [](Point x) { return x.x * (1.0 - x.x); };
    std::vector<double> b(200, 0.0);
    for (int k = 1; k <= 200; k += 2) b[k - 1] = 8.0 / std::pow(k * kPi, 3);
    const auto s = solve_forward(p);
    EXPECT_LT(l2q_error(*s, b, 1.0), 1e-6);
}

TEST(Forward, TimeDerivativeSatisfiesEquation) {
    ForwardProblem p;
    p.op = EllipticOperator::negative_laplacian();
    p.f = [](Point x) { return std::sin(kPi * x.x); };
    p.R = 2.0;
    p.t_start = 0.5;
    const auto s = solve_forward(p);
    for (double x : {0.3, 0.5}) {
        for (double t : {0.6, 1.0}) {
            const double res = s->value({x, 0}, t, {0, 0, 1}) - s->value({x, 0}, t, {2, 0, 0}) -
                               2.0 * std::sin(kPi * x);
            EXPECT_NEAR(res, 0.0, 1e-4);
        }
    }
    EXPECT_EQ(s->value({0.5, 0}, 0.5, {}), 0.0);
    EXPECT_THROW(s->value({0.5, 0}, 0.2, {}), DomainError);
}

TEST(Forward, ZeroSourceGivesZeroState) {
    ForwardProblem p;
    p.op = EllipticOperator::negative_laplacian();
    p.f = [](Point) { return 0.0; };
    const auto s = solve_forward(p);
    EXPECT_EQ(s->coefficients(0.7, 0).norm(), 0.0);
}

TEST(Forward, RejectsUnstableAndUnsupportedOperators) {
    ForwardProblem p;
    p.op = EllipticOperator::negative_laplacian();
    p.op.c = [](Point) { return -20.0; };
    p.f = [](Point) { return 1.0; };
    EXPECT_THROW(solve_forward(p), ForwardSolveError);

    ForwardProblem q;
    q.f = [](Point) { return 1.0; };
    q.op.b = [](Point) { return std::array<double, 2>{1.0, 0.0}; };
    EXPECT_THROW(solve_forward(q), InvalidArgument);
    q.op.b = nullptr;
    q.f = nullptr;
    EXPECT_THROW(solve_forward(q), InvalidArgument);
}
