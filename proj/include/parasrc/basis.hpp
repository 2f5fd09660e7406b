#pragma once

#include "parasrc/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace parasrc {

/// Shape-function values and physical derivatives at a set of points.
/// Rows are local shape functions, columns are points. In 1D only `grad[0]`
/// and `hess[0]` are populated; in 2D `hess` holds (xx, xy, yy).
struct BasisTable {
    int dim = 1;
    Eigen::MatrixXd val;
    std::array<Eigen::MatrixXd, 2> grad;
    std::array<Eigen::MatrixXd, 3> hess;

    int n_local() const { return static_cast<int>(val.rows()); }
    int n_points() const { return static_cast<int>(val.cols()); }
    void resize(int dim_, int n_local, int n_points);
};

// --------------------------------------------------------------- 1D kernels

/// Cubic Hermite shape functions on [x0, x0 + h] with DOF order
/// (v(x0), v'(x0), v(x0+h), v'(x0+h)). Returns d^order/dx^order at x.
std::array<double, 4> hermite_shape(double x0, double h, double x, int order);

/// Linear Lagrange shape functions on [x0, x0 + h].
std::array<double, 2> p1_shape(double x0, double h, double x, int order);

// ----------------------------------------------------------------- Argyris

/// Quintic Argyris element on a physical triangle.
///
/// Local DOF order: for each vertex k = 0,1,2 the six functionals
/// (v, v_x, v_y, v_xx, v_xy, v_yy), then for each edge i (opposite vertex i)
/// the derivative at the edge midpoint along the outward unit normal.
/// The basis is obtained by inverting the 21x21 DOF matrix on monomials in
/// coordinates centred at vertex 0 and scaled by the longest edge.
class ArgyrisBasis {
public:
    static constexpr int kDofs = 21;

    explicit ArgyrisBasis(const std::array<Point, 3>& vertices);

    /// Rows: shape functions; columns: (v, v_x, v_y, v_xx, v_xy, v_yy).
    Eigen::Matrix<double, kDofs, 6> eval(Point p) const;

    const std::array<Point, 3>& vertices() const { return vertices_; }
    const std::array<Point, 3>& outward_normals() const { return normals_; }
    Point edge_midpoint(int i) const;

private:
    std::array<Point, 3> vertices_;
    std::array<Point, 3> normals_;
    double scale_;
    Eigen::Matrix<double, kDofs, kDofs> coeffs_; // monomial j -> shape k
};

/// Monomial exponents (a, b) of P5 in the order used by ArgyrisBasis.
const std::array<std::array<int, 2>, 21>& quintic_exponents();

/// Linear Lagrange functions on a triangle: value and constant gradient.
struct P1Triangle {
    explicit P1Triangle(const std::array<Point, 3>& vertices);
    std::array<double, 3> values(Point p) const;
    std::array<Point, 3> gradients() const { return grads_; }

private:
    Point origin_;
    std::array<Point, 3> grads_;
};

// ------------------------------------------------------ reference elements

enum class ElementFamily { Hermite1D, Argyris, P1_1D, P1_Tri };

/// One degree-of-freedom functional of a reference element.
struct DofDescriptor {
    enum class Kind { Value, Dx, Dy, Dxx, Dxy, Dyy, Normal };
    Kind kind;
    Point location;
    Point normal{}; // only for Kind::Normal
};

/// Reference element: [0,1] in 1D, the unit right triangle in 2D.
struct ElementBasis {
    ElementFamily family;
    int dim;
    int degree;
    std::vector<DofDescriptor> dofs;

    int n_dofs() const { return static_cast<int>(dofs.size()); }
};

ElementBasis make_element_basis(ElementFamily family);

/// Shape functions of the reference element at `point`. Rows are shape
/// functions; columns are the derivative components up to `order`:
/// 1D (v, v', v''), 2D (v, v_x, v_y, v_xx, v_xy, v_yy), truncated to `order`.
/// Throws DomainError outside the reference cell.
Eigen::MatrixXd eval_basis(const ElementBasis& basis, Point point, int order);

/// Argyris basis for one of the two congruent mesh orientations, with
/// vertex 0 at the origin. Elements of that orientation evaluate it at
/// `p - v0`.
ArgyrisBasis build_argyris_basis(const std::array<Point, 3>& triangle);

} // namespace parasrc
