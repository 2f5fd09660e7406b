#include "parasrc/forward.hpp"

#include "parasrc/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace parasrc {

ForwardSolution::ForwardSolution(std::shared_ptr<const Hermite1DSpace> space, Eigen::VectorXd lambda,
                                 Eigen::MatrixXd modes, Eigen::VectorXd load, double R, double t_start,
                                 std::vector<int> free_to_global)
    : space_(std::move(space)), lambda_(std::move(lambda)), modes_(std::move(modes)), R_(R), t_start_(t_start),
      free_to_global_(std::move(free_to_global)) {
    proj_ = modes_.transpose() * load;
}

Eigen::VectorXd ForwardSolution::coefficients(double t, int dt) const {
    if (dt < 0 || dt > 2) throw InvalidArgument("forward solution: time derivative order must be 0, 1 or 2");
    const double s = t - t_start_;
    if (s < -1e-14) throw DomainError("forward solution: time before the initial time");
    Eigen::VectorXd amp(lambda_.size());
    for (Eigen::Index k = 0; k < lambda_.size(); ++k) {
        const double l = lambda_[k];
        const double e = std::exp(-l * std::max(s, 0.0));
        // d^j/ds^j of (1 - e^{-l s}) / l
        const double a = dt == 0 ? -std::expm1(-l * std::max(s, 0.0)) / l : (dt == 1 ? e : -l * e);
        amp[k] = R_ * a * proj_[k];
    }
    const Eigen::VectorXd free = modes_ * amp;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(space_->n_dofs());
    for (std::size_t i = 0; i < free_to_global_.size(); ++i) full[free_to_global_[i]] = free[static_cast<Eigen::Index>(i)];
    return full;
}

std::shared_ptr<const Eigen::VectorXd> ForwardSolution::cached(double t, int dt) const {
    {
        const std::lock_guard lock(cache_mutex_);
        const auto it = cache_.find({t, dt});
        if (it != cache_.end()) return it->second;
    }
    auto c = std::make_shared<const Eigen::VectorXd>(coefficients(t, dt));
    const std::lock_guard lock(cache_mutex_);
    return cache_.emplace(std::make_pair(t, dt), std::move(c)).first->second;
}

double ForwardSolution::value(Point x, double t, Derivative d) const {
    if (d.dy != 0 || d.dx < 0 || d.dx > 2) throw InvalidArgument("forward solution: unsupported derivative");
    const Eigen::VectorXd& c = *cached(t, d.dt);
    const int cell = space_->locate(x);
    const auto& nodes = space_->nodes();
    const auto sh = hermite_shape(nodes[cell], nodes[cell + 1] - nodes[cell], x.x, d.dx);
    const auto dofs = space_->cell_dofs(cell);
    double v = 0.0;
    for (int i = 0; i < 4; ++i) v += sh[i] * c[dofs[i]];
    return v;
}

std::shared_ptr<const ForwardSolution> solve_forward(const ForwardProblem& p) {
    if (!(p.b > p.a) || p.n_cells < 2) throw InvalidArgument("forward problem: invalid interval or mesh");
    if (!p.f) throw InvalidArgument("forward problem: missing source");
    if (p.op.div_a || p.op.b) throw InvalidArgument("forward problem: operator must be self-adjoint");

    std::vector<double> nodes(p.n_cells + 1);
    for (int i = 0; i <= p.n_cells; ++i) nodes[i] = p.a + (p.b - p.a) * i / p.n_cells;
    nodes.back() = p.b;
    auto space = std::make_shared<Hermite1DSpace>(nodes);
    const DofSpace dofs = apply_dirichlet_constraints(DofSpace(space));
    const int n = dofs.n_free();

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n), K = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
    for (int cell = 0; cell < space->n_cells(); ++cell) {
        const QuadratureRule rule = space->cell_quadrature(cell, std::nullopt, 9);
        const BasisTable t = space->tabulate(cell, rule.points);
        const auto cd = space->cell_dofs(cell);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto k = p.op.at(rule.points[q]);
            const double w = rule.weights[q];
            const double fq = p.f(rule.points[q]);
            for (int i = 0; i < 4; ++i) {
                const int fi = dofs.free_index(cd[i]);
                if (fi < 0) continue;
                F[fi] += w * fq * t.val(i, q);
                for (int j = 0; j < 4; ++j) {
                    const int fj = dofs.free_index(cd[j]);
                    if (fj < 0) continue;
                    M(fi, fj) += w * t.val(i, q) * t.val(j, q);
                    K(fi, fj) += w * (k.a[0] * t.grad[0](i, q) * t.grad[0](j, q) + k.c * t.val(i, q) * t.val(j, q));
                }
            }
        }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, M);
    if (eig.info() != Eigen::Success) throw ForwardSolveError("forward solve: eigen decomposition failed");
    const Eigen::VectorXd lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 0.0))
        throw ForwardSolveError("forward solve: discrete operator not positive definite (smallest eigenvalue " +
                                std::to_string(lambda.minCoeff()) + ")");
    return std::make_shared<const ForwardSolution>(space, lambda, eig.eigenvectors(), F, p.R, p.t_start, dofs.free_to_global());
}

} // namespace parasrc
