#pragma once

#include "parasrc/assembly.hpp"
#include "parasrc/fields.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace parasrc {

/// Forward problem u_t + Au = R f on (a, b) x (t_start, ...), u(t_start) = 0,
/// homogeneous Dirichlet data, with constant R and time-independent,
/// self-adjoint A = -(a u')' + c u.
struct ForwardProblem {
    double a = 0.0;
    double b = 1.0;
    EllipticOperator op;
    PointFunction f;
    double R = 1.0;
    double t_start = 0.0;
    int n_cells = 160;
};

/// Semi-discrete cubic Hermite solution integrated exactly in time through
/// the generalized eigenpairs K v = lambda M v:
///   U(t) = sum_k R (1 - exp(-lambda_k s)) / lambda_k (v_k . F) v_k,  s = t - t_start.
class ForwardSolution {
public:
    ForwardSolution(std::shared_ptr<const Hermite1DSpace> space, Eigen::VectorXd lambda, Eigen::MatrixXd modes,
                    Eigen::VectorXd load, double R, double t_start, std::vector<int> free_to_global);

    /// Nodal coefficients (all global DOFs) of d^dt/dt^dt u at time t, dt <= 2.
    Eigen::VectorXd coefficients(double t, int dt) const;
    /// d^dx d^dt u at (x, t), dx <= 2, dt <= 2. Coefficient vectors are
    /// cached per (t, dt); safe for concurrent calls.
    double value(Point x, double t, Derivative d) const;

    const Hermite1DSpace& space() const { return *space_; }
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }

private:
    std::shared_ptr<const Hermite1DSpace> space_;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXd modes_; // M-orthonormal, free DOFs
    Eigen::VectorXd proj_;  // modes^T F
    double R_;
    double t_start_;
    std::vector<int> free_to_global_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<double, int>, std::shared_ptr<const Eigen::VectorXd>> cache_;

    std::shared_ptr<const Eigen::VectorXd> cached(double t, int dt) const;
};

/// Throws ForwardSolveError when the discrete operator is not positive
/// definite (the exponential integrator would then grow without bound).
std::shared_ptr<const ForwardSolution> solve_forward(const ForwardProblem& problem);

} // namespace parasrc
