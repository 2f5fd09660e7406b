#pragma once

#include "parasrc/basis.hpp"
#include "parasrc/fields.hpp"
#include "parasrc/mesh.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace parasrc {

/// A global DOF functional: its kind, where it acts and, for normal
/// derivatives, the fixed global normal.
struct GlobalDof {
    DofDescriptor::Kind kind;
    Point location;
    Point normal{};
};

/// Conforming finite element space on a mesh: cell-to-global DOF maps and
/// tabulation of the global basis restricted to a cell.
class FiniteElementSpace {
public:
    virtual ~FiniteElementSpace() = default;

    virtual ElementFamily family() const = 0;
    virtual int dim() const = 0;
    virtual int degree() const = 0;
    virtual int n_dofs() const = 0;
    virtual int n_cells() const = 0;
    virtual int n_local() const = 0;
    virtual std::span<const int> cell_dofs(int cell) const = 0;
    /// Restriction of the global basis functions of `cell` (in cell_dofs
    /// order) at points inside the cell, derivatives up to second order.
    virtual BasisTable tabulate(int cell, std::span<const Point> points) const = 0;
    virtual int locate(Point p) const = 0;
    virtual const std::vector<GlobalDof>& global_dofs() const = 0;
    /// DOFs removed to enforce a homogeneous Dirichlet trace.
    virtual std::vector<int> dirichlet_dofs() const = 0;
    /// Quadrature over the cell (or cell ∩ region).
    virtual QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                           int degree) const = 0;
};

/// C1 cubic Hermite space on a uniform 1D grid; DOFs (v, v') per node,
/// global index 2*node + {0,1}. Used in space and in time.
class Hermite1DSpace final : public FiniteElementSpace {
public:
    explicit Hermite1DSpace(std::vector<double> nodes);

    ElementFamily family() const override { return ElementFamily::Hermite1D; }
    int dim() const override { return 1; }
    int degree() const override { return 3; }
    int n_dofs() const override { return 2 * static_cast<int>(nodes_.size()); }
    int n_cells() const override { return static_cast<int>(nodes_.size()) - 1; }
    int n_local() const override { return 4; }
    std::span<const int> cell_dofs(int cell) const override;
    BasisTable tabulate(int cell, std::span<const Point> points) const override;
    int locate(Point p) const override;
    const std::vector<GlobalDof>& global_dofs() const override { return dofs_; }
    std::vector<int> dirichlet_dofs() const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override;

    const std::vector<double>& nodes() const { return nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<int> cell_dofs_;
    std::vector<GlobalDof> dofs_;
};

/// Continuous piecewise linears on a 1D grid.
class P1Space1D final : public FiniteElementSpace {
public:
    explicit P1Space1D(std::vector<double> nodes);

    ElementFamily family() const override { return ElementFamily::P1_1D; }
    int dim() const override { return 1; }
    int degree() const override { return 1; }
    int n_dofs() const override { return static_cast<int>(nodes_.size()); }
    int n_cells() const override { return static_cast<int>(nodes_.size()) - 1; }
    int n_local() const override { return 2; }
    std::span<const int> cell_dofs(int cell) const override;
    BasisTable tabulate(int cell, std::span<const Point> points) const override;
    int locate(Point p) const override;
    const std::vector<GlobalDof>& global_dofs() const override { return dofs_; }
    std::vector<int> dirichlet_dofs() const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override;

private:
    std::vector<double> nodes_;
    std::vector<int> cell_dofs_;
    std::vector<GlobalDof> dofs_;
};

/// Argyris space on a congruent TriMesh. Global DOFs: 6 per vertex
/// (v, v_x, v_y, v_xx, v_xy, v_yy) at 6*vertex + c, then one normal
/// derivative per edge at 6*n_vertices + edge along TriMesh::Edge::normal.
class ArgyrisSpace final : public FiniteElementSpace {
public:
    explicit ArgyrisSpace(std::shared_ptr<const TriMesh> mesh);

    ElementFamily family() const override { return ElementFamily::Argyris; }
    int dim() const override { return 2; }
    int degree() const override { return 5; }
    int n_dofs() const override { return n_dofs_; }
    int n_cells() const override { return mesh_->n_cells(); }
    int n_local() const override { return ArgyrisBasis::kDofs; }
    std::span<const int> cell_dofs(int cell) const override;
    BasisTable tabulate(int cell, std::span<const Point> points) const override;
    int locate(Point p) const override { return mesh_->locate(p); }
    const std::vector<GlobalDof>& global_dofs() const override { return dofs_; }
    /// Vertex values plus tangential first and second derivatives on ∂Ω.
    std::vector<int> dirichlet_dofs() const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override {
        return mesh_->cell_quadrature(cell, region, degree);
    }

    const TriMesh& mesh() const { return *mesh_; }
    /// Orientation template basis (vertex 0 at the origin).
    const ArgyrisBasis& orientation_basis(TriMesh::Orientation o) const {
        return templates_[static_cast<int>(o)];
    }
    /// +1/-1 per local edge DOF relating the element's outward normal to the
    /// global edge normal.
    std::array<double, 3> edge_signs(int cell) const;

private:
    std::shared_ptr<const TriMesh> mesh_;
    int n_dofs_;
    std::vector<int> cell_dofs_;
    std::vector<double> edge_signs_;
    std::vector<GlobalDof> dofs_;
    std::vector<ArgyrisBasis> templates_;
};

/// Continuous piecewise linears on a TriMesh; DOF = vertex index.
class P1TriSpace final : public FiniteElementSpace {
public:
    explicit P1TriSpace(std::shared_ptr<const TriMesh> mesh);

    ElementFamily family() const override { return ElementFamily::P1_Tri; }
    int dim() const override { return 2; }
    int degree() const override { return 1; }
    int n_dofs() const override { return mesh_->n_vertices(); }
    int n_cells() const override { return mesh_->n_cells(); }
    int n_local() const override { return 3; }
    std::span<const int> cell_dofs(int cell) const override { return mesh_->cell_vertices(cell); }
    BasisTable tabulate(int cell, std::span<const Point> points) const override;
    int locate(Point p) const override { return mesh_->locate(p); }
    const std::vector<GlobalDof>& global_dofs() const override { return dofs_; }
    std::vector<int> dirichlet_dofs() const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override {
        return mesh_->cell_quadrature(cell, region, degree);
    }

private:
    std::shared_ptr<const TriMesh> mesh_;
    std::vector<GlobalDof> dofs_;
};

/// DOF bookkeeping over a finite element space with an optional set of
/// constrained (homogeneous) DOFs. Free DOFs are numbered in global order.
class DofSpace {
public:
    DofSpace() = default;
    explicit DofSpace(std::shared_ptr<const FiniteElementSpace> fe);
    DofSpace(std::shared_ptr<const FiniteElementSpace> fe, std::vector<int> constrained);

    const FiniteElementSpace& fe() const { return *fe_; }
    const std::shared_ptr<const FiniteElementSpace>& fe_ptr() const { return fe_; }
    int n_dofs() const { return fe_->n_dofs(); }
    int n_free() const { return n_free_; }
    /// Free index of a global DOF, -1 when constrained.
    int free_index(int global) const { return free_[global]; }
    bool is_constrained(int global) const { return free_[global] < 0; }
    const std::vector<int>& constrained() const { return constrained_; }
    /// Global DOF of each free index.
    const std::vector<int>& free_to_global() const { return free_to_global_; }

private:
    std::shared_ptr<const FiniteElementSpace> fe_;
    std::vector<int> constrained_;
    std::vector<int> free_;
    std::vector<int> free_to_global_;
    int n_free_ = 0;
};

/// V̊_h from V_h: removes the space's Dirichlet DOFs.
DofSpace apply_dirichlet_constraints(const DofSpace& space);

/// Discrete function over a DofSpace; one coefficient per global DOF,
/// constrained DOFs hold zero.
struct FeFunction {
    DofSpace space;
    Eigen::VectorXd coefficients;

    double evaluate(Point p, Derivative d = {}) const;
};

/// V_h ⊗ V_τ with space-major indexing of the free DOFs:
/// index = free_space_index * n_time + time_dof.
struct TensorSpace {
    DofSpace space;
    DofSpace time;

    int n_time() const { return time.n_dofs(); }
    int n_free() const { return space.n_free() * time.n_dofs(); }
    int index(int space_global, int time_dof) const {
        const int s = space.free_index(space_global);
        return s < 0 ? -1 : s * n_time() + time_dof;
    }
};

/// Function on a TensorSpace; coefficients(i, k) multiplies φ_i(x) ψ_k(t)
/// over all global space DOFs i (constrained rows are zero).
struct TensorFunction {
    TensorSpace space;
    Eigen::MatrixXd coefficients;

    Eigen::VectorXd to_free_vector() const;
    static TensorFunction from_free_vector(const TensorSpace& space, const Eigen::VectorXd& z);
};

/// Interpolation by the global DOF functionals; constrained DOFs set to 0.
FeFunction interpolate(const DofSpace& space, const SpaceField& fn);
TensorFunction interpolate_tensor(const TensorSpace& space, const SpaceTimeField& fn);

/// L2 projection onto the free part of `space`.
FeFunction project_l2(const DofSpace& space, const PointFunction& target);

/// d^{space} d^{time} u at (x, t); `d.dt` selects the time derivative.
/// Throws DomainError outside Ω̄ x Ī.
double tensor_eval(const TensorFunction& u, Point x, double t, Derivative d);

/// `index,coefficient` CSV, one line per global DOF.
void write_csv(std::ostream& os, const FeFunction& f);
FeFunction read_csv(std::istream& is, const DofSpace& space);

} // namespace parasrc
