#pragma once

#include "parasrc/mesh.hpp"
#include "parasrc/observation.hpp"
#include "parasrc/spaces.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace parasrc {

/// Av = -div(a grad v) + b . grad v + c v, expanded as
/// -a:hess(v) - (div a) . grad v + b . grad v + c v with (div a)_j = sum_i d_i a_ij.
/// Empty callbacks mean zero, except `a`, which defaults to the identity.
struct EllipticOperator {
    std::function<std::array<double, 3>(Point)> a; // (a11, a12, a22)
    std::function<std::array<double, 2>(Point)> div_a;
    std::function<std::array<double, 2>(Point)> b;
    std::function<double(Point)> c;
    double mu = 1.0; // declared ellipticity constant

    static EllipticOperator negative_laplacian();

    struct Coefficients {
        std::array<double, 3> a{1.0, 0.0, 1.0};
        std::array<double, 2> drift{0.0, 0.0}; // b - div a
        double c = 0.0;
    };
    Coefficients at(Point x) const;
};

/// Values of v and its first and second space derivatives at a point.
struct Jet {
    double v = 0.0;
    double gx = 0.0;
    double gy = 0.0;
    double hxx = 0.0;
    double hxy = 0.0;
    double hyy = 0.0;
};

/// Av from a jet; `dim` selects whether y-derivatives take part.
double apply_operator(const EllipticOperator::Coefficients& k, const Jet& j, int dim);

/// Samples mu|xi|^2 <= a xi.xi <= |xi|^2/mu at the quadrature points of the
/// mesh; throws InvalidArgument on a violation.
void check_ellipticity(const EllipticOperator& op, const SpaceMesh& mesh);

/// Source modulation R(x,t) with its time derivative.
struct SourceModulation {
    std::function<double(Point, double)> R;
    std::function<double(Point, double)> dtR;
    bool time_only = false;

    static SourceModulation constant(double value);
    static SourceModulation of_time(std::function<double(double)> R, std::function<double(double)> dtR);
};

/// Smallest sampled R(x, t0) over the mesh quadrature points. Throws
/// InvalidArgument when it is not positive.
double check_source_positivity(const SourceModulation& R, const SpaceMesh& mesh, double t0);

enum class FormKind { Lipschitz, Holder };

/// Discrete spaces and quadrature layout of one reconstruction.
///
/// Unknowns are ordered [u; f]: u over the free DOFs of V_h (x) V_tau in
/// TensorSpace order, then f over W_h. Observation quadrature points are
/// numbered densely: a point of cell K inside ω has id
/// (omega_offset[K] + q) * n_time_points + (n * time_points + r) for the
/// r-th time point of interval n; points of the t0 trace use
/// full_offset[K] + q. These ids key the noise realization.
struct Discretization {
    std::shared_ptr<const SpaceMesh> mesh;
    TimeGrid time;
    FormKind kind = FormKind::Lipschitz;
    TensorSpace u;
    DofSpace f;
    int t0_node = 0;
    int space_degree = 7;
    int time_degree = 7;
    int time_points = 4;
    std::vector<std::int64_t> omega_offset;
    std::vector<std::int64_t> full_offset;

    int n_u() const { return u.n_free(); }
    int n_f() const { return f.n_free(); }
    int size() const { return n_u() + n_f(); }
    std::int64_t n_time_points() const {
        return static_cast<std::int64_t>(time.n_intervals) * time_points;
    }
    const Box& omega() const { return mesh->omega(); }
};

/// Builds V_h (Hermite in 1D, Argyris on a TriMesh), V_tau (Hermite),
/// W_h (P1). Lipschitz forms constrain u to the homogeneous Dirichlet trace.
/// Throws InvalidArgument when t0 is not a time node.
Discretization make_discretization(std::shared_ptr<const SpaceMesh> mesh, const TimeGrid& time,
                                   FormKind kind);

enum class Execution { Serial, Parallel };

struct FormParameters {
    FormKind kind = FormKind::Lipschitz;
    double gamma_f = 0.0;
    double gamma_u = 0.0;
};

/// Euler-Lagrange system over [u; f]. `matrix` stores both triangles.
struct SystemBlocks {
    int n_u = 0;
    int n_f = 0;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    /// Set when a Hölder form has both penalties zero.
    bool uniqueness_warning = false;

    Eigen::SparseMatrix<double> block_uu() const;
    Eigen::SparseMatrix<double> block_uf() const;
    Eigen::SparseMatrix<double> block_ff() const;
    Eigen::VectorXd rhs_u() const { return rhs.head(n_u); }
    Eigen::VectorXd rhs_f() const { return rhs.tail(n_f); }
};

/// Bilinear form b (Lipschitz) or its Hölder variant.
Eigen::SparseMatrix<double> assemble_matrix(const Discretization& disc, const EllipticOperator& op,
                                            const SourceModulation& R, const FormParameters& form,
                                            Execution exec = Execution::Parallel);

/// Right-hand side (q, v)_{H1(I;L2(ω))} + (p, Av(t0)), plus
/// (r, grad v)_{H1(I;L2(ω))} for Hölder forms. Callbacks in `data` are
/// invoked concurrently under Execution::Parallel.
Eigen::VectorXd assemble_rhs(const Discretization& disc, const EllipticOperator& op,
                             const ObservationData& data, FormKind kind,
                             Execution exec = Execution::Parallel);

SystemBlocks assemble_lipschitz_system(const Discretization& disc, const EllipticOperator& op,
                                       const SourceModulation& R, const ObservationData& data,
                                       Execution exec = Execution::Parallel);

SystemBlocks assemble_holder_system(const Discretization& disc, const EllipticOperator& op,
                                    const SourceModulation& R, const ObservationData& data,
                                    double gamma_f, double gamma_u,
                                    Execution exec = Execution::Parallel);

struct LValues {
    double Lu = 0.0;
    double dtLu = 0.0;
};

/// Lu = u_t + Au and d/dt(Lu) = u_tt + A u_t at (x, t).
LValues apply_L(const TensorFunction& u, const EllipticOperator& op, Point x, double t);

struct ResidualNorms {
    double h1 = 0.0; // ||G||_{H1(I;L2(Ω))}
    double l2 = 0.0; // ||G||_{L2(I;L2(Ω))}
};

/// Norms of G = Lu - Rf by quadrature over all of Q.
ResidualNorms residual_norms(const TensorFunction& u, const FeFunction& f, const EllipticOperator& op,
                             const SourceModulation& R);

/// Value of the discrete functional J (or its Hölder variant) at (u, f),
/// evaluated pointwise from the data at the same observation points the
/// right-hand side uses.
double evaluate_functional(const Discretization& disc, const TensorFunction& u, const FeFunction& f,
                           const EllipticOperator& op, const SourceModulation& R,
                           const ObservationData& data, const FormParameters& form);

/// Coordinate text: a header line `% rows cols nnz`, then `row col value`
/// per stored entry (0-based, column-major order).
void export_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& m);

} // namespace parasrc
