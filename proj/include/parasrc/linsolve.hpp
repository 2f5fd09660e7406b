#pragma once

#include "parasrc/assembly.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <string>

namespace parasrc {

struct SolveOptions {
    int max_refinement = 5;
    double residual_tolerance = 1e-8;
    bool estimate_condition = true;
    int condition_iterations = 100;
};

struct ConditionEstimate {
    double value = 0.0;
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    /// Set when an eigenvalue iteration hit its cap before settling.
    bool approximate = false;
};

using ExtendedVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct SolveReport {
    /// Refined solution rounded to double.
    Eigen::VectorXd solution;
    /// The refined iterate itself; `relative_residual` refers to it. Near the
    /// conditioning limit, rounding to double alone can raise the residual
    /// by orders of magnitude.
    ExtendedVector solution_extended;
    double relative_residual = 0.0;
    double condition = 0.0;
    bool condition_approximate = false;
    int refinement_iterations = 0;
};

/// ||Bx - b|| / ||b|| with the residual accumulated in long double.
double relative_residual(const Eigen::SparseMatrix<double>& B, const Eigen::VectorXd& x, const Eigen::VectorXd& b);
double relative_residual(const Eigen::SparseMatrix<double>& B, const ExtendedVector& x, const Eigen::VectorXd& b);

/// Sparse symmetric factorization of a Jacobi-equilibrated matrix. Tries a
/// supernodal Cholesky first and falls back to a simplicial LDL^T, which
/// tolerates the slightly negative pivots that rounding produces in nearly
/// singular systems. One factorization serves any number of right-hand sides.
/// Not safe for concurrent use of a single instance.
class SymmetricSolver {
public:
    /// `B` holds both triangles. Throws SingularSystemError (with the
    /// offending pivot in the original numbering) when both factorizations
    /// break down.
    explicit SymmetricSolver(const Eigen::SparseMatrix<double>& B);
    ~SymmetricSolver();
    SymmetricSolver(SymmetricSolver&&) noexcept;
    SymmetricSolver& operator=(SymmetricSolver&&) noexcept;
    SymmetricSolver(const SymmetricSolver&) = delete;
    SymmetricSolver& operator=(const SymmetricSolver&) = delete;

    int size() const;
    const std::string& method() const;
    const Eigen::SparseMatrix<double>& matrix() const;

    /// One pass through the factorization, no refinement.
    Eigen::VectorXd apply_inverse(const Eigen::VectorXd& b) const;

    /// Solution with up to `max_refinement` refinement sweeps against the
    /// double factorization; if the residual is still above tolerance, a
    /// second stage refines in long double against a long double LDL^T.
    /// Throws IllConditionedError when the residual stays above tolerance.
    SolveReport solve(const Eigen::VectorXd& b, const SolveOptions& options = {}) const;

    /// 2-norm condition of B: power iteration for the largest eigenvalue,
    /// inverse iteration through the factorization for the smallest.
    ConditionEstimate condition(int max_iterations = 100, double rtol = 1e-3) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SolveReport solve_spd(const SystemBlocks& blocks, const SolveOptions& options = {});

ConditionEstimate condition_estimate(const Eigen::SparseMatrix<double>& B, int max_iterations = 100);
ConditionEstimate condition_estimate(const SystemBlocks& blocks, int max_iterations = 100);

} // namespace parasrc
