#include "parasrc/linsolve.hpp"

#include "parasrc/error.hpp"

#include <Eigen/SparseCholesky>
#include <cholmod.h>

#include <cmath>
#include <limits>

namespace parasrc {

namespace {

ExtendedVector residual(const Eigen::SparseMatrix<double>& B, const ExtendedVector& x, const Eigen::VectorXd& b) {
    if (B.rows() != b.size() || B.cols() != x.size()) throw InvalidArgument("relative_residual: size mismatch");
    ExtendedVector r = b.cast<long double>();
    for (int j = 0; j < B.outerSize(); ++j) {
        const long double xj = x[j];
        for (Eigen::SparseMatrix<double>::InnerIterator it(B, j); it; ++it)
            r[it.row()] -= static_cast<long double>(it.value()) * xj;
    }
    return r;
}

double relative_norm(const ExtendedVector& r, const Eigen::VectorXd& b) {
    long double bn = 0.0L;
    for (Eigen::Index i = 0; i < b.size(); ++i) bn += static_cast<long double>(b[i]) * b[i];
    const long double rn = r.squaredNorm();
    if (bn == 0.0L) return rn == 0.0L ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(std::sqrt(rn / bn));
}

// Deterministic, non-degenerate start vector.
Eigen::VectorXd start_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * i);
    return v.normalized();
}

} // namespace

double relative_residual(const Eigen::SparseMatrix<double>& B, const ExtendedVector& x, const Eigen::VectorXd& b) {
    return relative_norm(residual(B, x, b), b);
}

double relative_residual(const Eigen::SparseMatrix<double>& B, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return relative_residual(B, ExtendedVector(x.cast<long double>()), b);
}

struct SymmetricSolver::Impl {
    Eigen::SparseMatrix<double> B;  // original
    Eigen::SparseMatrix<double> Be; // D B D
    Eigen::VectorXd D;
    std::string method;
    mutable cholmod_common common{};
    cholmod_factor* factor = nullptr;

    // Extended-precision factorization, built on demand.
    using LongMatrix = Eigen::SparseMatrix<long double>;
    using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    mutable std::unique_ptr<Eigen::SimplicialLDLT<LongMatrix>> extended;

    const Eigen::SimplicialLDLT<LongMatrix>& extended_factor() const {
        if (!extended) {
            const int n = static_cast<int>(B.rows());
            LongVector d(n);
            for (int i = 0; i < n; ++i) d[i] = 1.0L / std::sqrt(static_cast<long double>(B.coeff(i, i)));
            LongMatrix Bl = B.cast<long double>();
            LongMatrix Bs = d.asDiagonal() * Bl * d.asDiagonal();
            auto f = std::make_unique<Eigen::SimplicialLDLT<LongMatrix>>(Bs);
            if (f->info() != Eigen::Success) throw SingularSystemError("extended-precision factorization broke down", -1);
            extended = std::move(f);
            extended_scale = d;
        }
        return *extended;
    }
    mutable LongVector extended_scale;

    LongVector solve_extended(const LongVector& rhs) const {
        const auto& f = extended_factor();
        LongVector y = extended_scale.cwiseProduct(rhs);
        LongVector z = f.solve(y);
        return extended_scale.cwiseProduct(z);
    }

    Impl() { cholmod_start(&common); common.print = 0; common.error_handler = nullptr; }
    ~Impl() {
        if (factor) cholmod_free_factor(&factor, &common);
        cholmod_finish(&common);
    }

    cholmod_sparse view() {
        cholmod_sparse A{};
        A.nrow = static_cast<size_t>(Be.rows());
        A.ncol = static_cast<size_t>(Be.cols());
        A.nzmax = static_cast<size_t>(Be.nonZeros());
        A.p = Be.outerIndexPtr();
        A.i = Be.innerIndexPtr();
        A.x = Be.valuePtr();
        A.stype = 1; // upper triangle referenced
        A.itype = CHOLMOD_INT;
        A.xtype = CHOLMOD_REAL;
        A.dtype = CHOLMOD_DOUBLE;
        A.sorted = 1;
        A.packed = 1;
        return A;
    }

    // Returns -1 on success, otherwise the failing column in the permuted order.
    long try_factor(int supernodal, bool ll) {
        if (factor) cholmod_free_factor(&factor, &common);
        common.supernodal = supernodal;
        common.final_ll = ll ? 1 : 0;
        common.quick_return_if_not_posdef = 1;
        cholmod_sparse A = view();
        factor = cholmod_analyze(&A, &common);
        if (!factor) throw InternalError("cholmod_analyze failed");
        cholmod_factorize(&A, factor, &common);
        if (factor->minor < factor->n) return static_cast<long>(factor->minor);
        return -1;
    }

    Eigen::VectorXd solve_scaled(const Eigen::VectorXd& rhs) const {
        const int n = static_cast<int>(rhs.size());
        Eigen::VectorXd y = D.cwiseProduct(rhs);
        cholmod_dense b{};
        b.nrow = n;
        b.ncol = 1;
        b.nzmax = n;
        b.d = n;
        b.x = y.data();
        b.xtype = CHOLMOD_REAL;
        b.dtype = CHOLMOD_DOUBLE;
        cholmod_dense* x = cholmod_solve(CHOLMOD_A, factor, &b, &common);
        if (!x) throw InternalError("cholmod_solve failed");
        Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(static_cast<const double*>(x->x), n);
        cholmod_free_dense(&x, &common);
        return D.cwiseProduct(out);
    }
};

SymmetricSolver::SymmetricSolver(const Eigen::SparseMatrix<double>& B) : impl_(std::make_unique<Impl>()) {
    if (B.rows() != B.cols()) throw InvalidArgument("SymmetricSolver: matrix must be square");
    Impl& m = *impl_;
    m.B = B;
    m.B.makeCompressed();
    const int n = static_cast<int>(B.rows());
    m.D.resize(n);
    const Eigen::VectorXd diag = m.B.diagonal();
    for (int i = 0; i < n; ++i) {
        if (!(diag[i] > 0.0)) throw SingularSystemError("nonpositive diagonal entry", i);
        m.D[i] = 1.0 / std::sqrt(diag[i]);
    }
    m.Be = m.D.asDiagonal() * m.B * m.D.asDiagonal();
    m.Be.makeCompressed();

    if (m.try_factor(CHOLMOD_SUPERNODAL, true) < 0) {
        m.method = "supernodal-llt";
        return;
    }
    const long bad = m.try_factor(CHOLMOD_SIMPLICIAL, false);
    if (bad < 0) {
        m.method = "simplicial-ldlt";
        return;
    }
    const int* perm = static_cast<const int*>(m.factor->Perm);
    const int pivot = perm ? perm[bad] : static_cast<int>(bad);
    throw SingularSystemError("symmetric factorization broke down", pivot);
}

SymmetricSolver::~SymmetricSolver() = default;
SymmetricSolver::SymmetricSolver(SymmetricSolver&&) noexcept = default;
SymmetricSolver& SymmetricSolver::operator=(SymmetricSolver&&) noexcept = default;

int SymmetricSolver::size() const { return static_cast<int>(impl_->B.rows()); }
const std::string& SymmetricSolver::method() const { return impl_->method; }
const Eigen::SparseMatrix<double>& SymmetricSolver::matrix() const { return impl_->B; }

Eigen::VectorXd SymmetricSolver::apply_inverse(const Eigen::VectorXd& b) const {
    if (b.size() != size()) throw InvalidArgument("SymmetricSolver: right-hand side length mismatch");
    return impl_->solve_scaled(b);
}

SolveReport SymmetricSolver::solve(const Eigen::VectorXd& b, const SolveOptions& options) const {
    SolveReport rep;
    if (b.size() != size()) throw InvalidArgument("SymmetricSolver: right-hand side length mismatch");
    if (b.squaredNorm() == 0.0) {
        rep.solution = Eigen::VectorXd::Zero(size());
        rep.solution_extended = ExtendedVector::Zero(size());
        return rep;
    }
    const auto& B = impl_->B;

    // Stage 1: double factorization, residuals accumulated in long double.
    Eigen::VectorXd x = impl_->solve_scaled(b);
    double rel = relative_residual(B, x, b);
    for (int sweep = 0; sweep < options.max_refinement && rel > 1e-15; ++sweep) {
        const ExtendedVector r = residual(B, ExtendedVector(x.cast<long double>()), b);
        const Eigen::VectorXd trial = x + impl_->solve_scaled(r.cast<double>());
        const double trial_rel = relative_residual(B, trial, b);
        if (!(trial_rel < rel)) break;
        x = trial;
        rel = trial_rel;
        ++rep.refinement_iterations;
    }
    ExtendedVector xl = x.cast<long double>();

    // Stage 2: long double factorization and iterate.
    if (rel > options.residual_tolerance) {
        rep.refinement_iterations = 0;
        for (int sweep = 0; sweep < options.max_refinement; ++sweep) {
            const ExtendedVector r = residual(B, xl, b);
            const ExtendedVector trial = xl + impl_->solve_extended(r);
            const double trial_rel = relative_residual(B, trial, b);
            if (!(trial_rel < rel)) break;
            xl = trial;
            rel = trial_rel;
            ++rep.refinement_iterations;
            if (rel <= 1e-3 * options.residual_tolerance) break;
        }
    }
    rep.solution = xl.cast<double>();
    rep.solution_extended = std::move(xl);
    rep.relative_residual = rel;
    if (options.estimate_condition || rel > options.residual_tolerance) {
        const ConditionEstimate ce = condition(options.condition_iterations);
        rep.condition = ce.value;
        rep.condition_approximate = ce.approximate;
    }
    if (!(rel <= options.residual_tolerance))
        throw IllConditionedError("relative residual above tolerance after refinement", rep.condition, rel);
    return rep;
}

ConditionEstimate SymmetricSolver::condition(int max_iterations, double rtol) const {
    const auto& B = impl_->B;
    const int n = size();
    ConditionEstimate ce;
    if (n == 0) return ce;

    auto iterate = [&](auto&& op, int cap, double tol, bool& converged) {
        Eigen::VectorXd v = start_vector(n);
        double lambda = 0.0;
        converged = false;
        for (int k = 0; k < cap; ++k) {
            Eigen::VectorXd w = op(v);
            const double next = v.dot(w);
            const double wn = w.norm();
            if (!(wn > 0.0) || !std::isfinite(wn)) break;
            v = w / wn;
            if (k > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
                lambda = next;
                converged = true;
                break;
            }
            lambda = next;
        }
        return lambda;
    };

    bool c1 = false, c2 = false;
    // Products with B are cheap; the top of the spectrum is often clustered.
    ce.lambda_max = iterate([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(B * v); }, 20 * max_iterations,
                            1e-3 * rtol, c1);
    const double inv = iterate(
        [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            if (impl_->extended) return impl_->solve_extended(v.cast<long double>()).cast<double>();
            return impl_->solve_scaled(v);
        },
        max_iterations, rtol, c2);
    ce.lambda_min = inv > 0.0 ? 1.0 / inv : 0.0;
    ce.value = ce.lambda_min > 0.0 ? ce.lambda_max / ce.lambda_min : std::numeric_limits<double>::infinity();
    ce.approximate = !(c1 && c2);
    return ce;
}

SolveReport solve_spd(const SystemBlocks& blocks, const SolveOptions& options) {
    const SymmetricSolver solver(blocks.matrix);
    return solver.solve(blocks.rhs, options);
}

ConditionEstimate condition_estimate(const Eigen::SparseMatrix<double>& B, int max_iterations) {
    return SymmetricSolver(B).condition(max_iterations);
}

ConditionEstimate condition_estimate(const SystemBlocks& blocks, int max_iterations) {
    return condition_estimate(blocks.matrix, max_iterations);
}

} // namespace parasrc
