#include "parasrc/basis.hpp"

#include "parasrc/error.hpp"

#include <algorithm>
#include <cmath>

namespace parasrc {

void BasisTable::resize(int dim_, int n_local, int n_points) {
    dim = dim_;
    val.setZero(n_local, n_points);
    for (int d = 0; d < dim_; ++d) grad[d].setZero(n_local, n_points);
    const int nh = dim_ == 1 ? 1 : 3;
    for (int d = 0; d < nh; ++d) hess[d].setZero(n_local, n_points);
}

std::array<double, 4> hermite_shape(double x0, double h, double x, int order) {
    const double s = (x - x0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    switch (order) {
    case 0:
        return {1.0 - 3.0 * s2 + 2.0 * s3, h * (s - 2.0 * s2 + s3), 3.0 * s2 - 2.0 * s3,
                h * (-s2 + s3)};
    case 1:
        return {(-6.0 * s + 6.0 * s2) / h, 1.0 - 4.0 * s + 3.0 * s2, (6.0 * s - 6.0 * s2) / h,
                -2.0 * s + 3.0 * s2};
    case 2:
        return {(-6.0 + 12.0 * s) / (h * h), (-4.0 + 6.0 * s) / h, (6.0 - 12.0 * s) / (h * h),
                (-2.0 + 6.0 * s) / h};
    case 3:
        return {12.0 / (h * h * h), 6.0 / (h * h), -12.0 / (h * h * h), 6.0 / (h * h)};
    default:
        return {0.0, 0.0, 0.0, 0.0};
    }
}

std::array<double, 2> p1_shape(double x0, double h, double x, int order) {
    const double s = (x - x0) / h;
    if (order == 0) return {1.0 - s, s};
    if (order == 1) return {-1.0 / h, 1.0 / h};
    return {0.0, 0.0};
}

// ----------------------------------------------------------------- Argyris

const std::array<std::array<int, 2>, 21>& quintic_exponents() {
    static const auto table = [] {
        std::array<std::array<int, 2>, 21> e{};
        int k = 0;
        for (int d = 0; d <= 5; ++d)
            for (int b = 0; b <= d; ++b) e[k++] = {d - b, b};
        return e;
    }();
    return table;
}

namespace {

// Monomial s^a t^b and its derivatives (m, m_s, m_t, m_ss, m_st, m_tt).
std::array<double, 6> monomial_jet(int a, int b, double s, double t) {
    auto pw = [](double x, int n) { return n < 0 ? 0.0 : std::pow(x, n); };
    const double fa = a, fb = b;
    return {pw(s, a) * pw(t, b),
            fa * pw(s, a - 1) * pw(t, b),
            fb * pw(s, a) * pw(t, b - 1),
            fa * (fa - 1.0) * pw(s, a - 2) * pw(t, b),
            fa * fb * pw(s, a - 1) * pw(t, b - 1),
            fb * (fb - 1.0) * pw(s, a) * pw(t, b - 2)};
}

// Derivative order of each local Argyris DOF.
constexpr std::array<int, 21> kArgyrisOrder = {0, 1, 1, 2, 2, 2, 0, 1, 1, 2, 2, 2,
                                               0, 1, 1, 2, 2, 2, 1, 1, 1};

} // namespace

ArgyrisBasis::ArgyrisBasis(const std::array<Point, 3>& vertices) : vertices_(vertices) {
    const Point e1 = vertices[1] - vertices[0];
    const Point e2 = vertices[2] - vertices[0];
    const double area2 = cross(e1, e2);
    scale_ = std::max({norm(e1), norm(e2), norm(vertices[2] - vertices[1])});
    if (!(scale_ > 0.0) || std::abs(area2) <= 1e-12 * scale_ * scale_)
        throw SingularGeometryError("Argyris basis: degenerate triangle");

    const double orient = area2 > 0.0 ? 1.0 : -1.0;
    for (int i = 0; i < 3; ++i) {
        const Point a = vertices[(i + 1) % 3];
        const Point b = vertices[(i + 2) % 3];
        const Point t = (1.0 / norm(b - a)) * (b - a);
        // Outward for counter-clockwise ordering: tangent rotated clockwise.
        normals_[i] = orient * Point{t.y, -t.x};
    }

    const auto& exps = quintic_exponents();
    Eigen::Matrix<double, kDofs, kDofs> V;
    auto local = [&](Point p) { return (1.0 / scale_) * (p - vertices_[0]); };
    for (int j = 0; j < kDofs; ++j) {
        const auto [a, b] = exps[j];
        for (int k = 0; k < 3; ++k) {
            const Point s = local(vertices_[k]);
            const auto m = monomial_jet(a, b, s.x, s.y);
            for (int c = 0; c < 6; ++c) V(6 * k + c, j) = m[c];
        }
        for (int i = 0; i < 3; ++i) {
            const Point s = local(edge_midpoint(i));
            const auto m = monomial_jet(a, b, s.x, s.y);
            V(18 + i, j) = normals_[i].x * m[1] + normals_[i].y * m[2];
        }
    }
    Eigen::FullPivLU<Eigen::Matrix<double, kDofs, kDofs>> lu(V);
    if (!lu.isInvertible()) throw SingularGeometryError("Argyris basis: singular DOF matrix");
    coeffs_ = lu.inverse();
    // Scaled-coordinate functionals of order r equal scale^r times the
    // physical ones, so the physical basis picks up scale^r per column.
    for (int k = 0; k < kDofs; ++k) coeffs_.col(k) *= std::pow(scale_, kArgyrisOrder[k]);
}

Point ArgyrisBasis::edge_midpoint(int i) const {
    return 0.5 * (vertices_[(i + 1) % 3] + vertices_[(i + 2) % 3]);
}

Eigen::Matrix<double, ArgyrisBasis::kDofs, 6> ArgyrisBasis::eval(Point p) const {
    const auto& exps = quintic_exponents();
    const Point s = (1.0 / scale_) * (p - vertices_[0]);
    Eigen::Matrix<double, kDofs, 6> M; // monomial jets
    for (int j = 0; j < kDofs; ++j) {
        const auto m = monomial_jet(exps[j][0], exps[j][1], s.x, s.y);
        for (int c = 0; c < 6; ++c) M(j, c) = m[c];
    }
    const double inv = 1.0 / scale_;
    M.col(1) *= inv;
    M.col(2) *= inv;
    M.rightCols<3>() *= inv * inv;
    return coeffs_.transpose() * M;
}

ArgyrisBasis build_argyris_basis(const std::array<Point, 3>& triangle) {
    return ArgyrisBasis({Point{0.0, 0.0}, triangle[1] - triangle[0], triangle[2] - triangle[0]});
}

P1Triangle::P1Triangle(const std::array<Point, 3>& v) : origin_(v[0]) {
    const Point e1 = v[1] - v[0];
    const Point e2 = v[2] - v[0];
    const double det = cross(e1, e2);
    if (std::abs(det) <= 0.0) throw SingularGeometryError("P1 triangle: degenerate");
    // Gradients of barycentric coordinates.
    grads_[1] = (1.0 / det) * Point{e2.y, -e2.x};
    grads_[2] = (1.0 / det) * Point{-e1.y, e1.x};
    grads_[0] = -1.0 * (grads_[1] + grads_[2]);
}

std::array<double, 3> P1Triangle::values(Point p) const {
    const Point d = p - origin_;
    const double l1 = dot(grads_[1], d);
    const double l2 = dot(grads_[2], d);
    return {1.0 - l1 - l2, l1, l2};
}

// ------------------------------------------------------ reference elements

ElementBasis make_element_basis(ElementFamily family) {
    using K = DofDescriptor::Kind;
    ElementBasis b{family, 1, 1, {}};
    switch (family) {
    case ElementFamily::Hermite1D:
        b.degree = 3;
        b.dofs = {{K::Value, {0, 0}}, {K::Dx, {0, 0}}, {K::Value, {1, 0}}, {K::Dx, {1, 0}}};
        break;
    case ElementFamily::P1_1D:
        b.dofs = {{K::Value, {0, 0}}, {K::Value, {1, 0}}};
        break;
    case ElementFamily::P1_Tri:
        b.dim = 2;
        b.dofs = {{K::Value, {0, 0}}, {K::Value, {1, 0}}, {K::Value, {0, 1}}};
        break;
    case ElementFamily::Argyris: {
        b.dim = 2;
        b.degree = 5;
        const ArgyrisBasis ref({Point{0, 0}, Point{1, 0}, Point{0, 1}});
        for (const Point v : ref.vertices())
            for (K k : {K::Value, K::Dx, K::Dy, K::Dxx, K::Dxy, K::Dyy}) b.dofs.push_back({k, v});
        for (int i = 0; i < 3; ++i)
            b.dofs.push_back({K::Normal, ref.edge_midpoint(i), ref.outward_normals()[i]});
        break;
    }
    }
    return b;
}

Eigen::MatrixXd eval_basis(const ElementBasis& basis, Point p, int order) {
    if (order < 0 || order > 2) throw InvalidArgument("eval_basis: order must be 0, 1 or 2");
    constexpr double tol = 1e-12;
    const bool inside = basis.dim == 1 ? (p.x >= -tol && p.x <= 1.0 + tol)
                                       : (p.x >= -tol && p.y >= -tol && p.x + p.y <= 1.0 + tol);
    if (!inside) throw DomainError("eval_basis: point outside the reference element");

    const int ncols = basis.dim == 1 ? order + 1 : (order == 0 ? 1 : order == 1 ? 3 : 6);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(basis.n_dofs(), ncols);
    switch (basis.family) {
    case ElementFamily::Hermite1D:
        for (int d = 0; d <= order; ++d) {
            const auto v = hermite_shape(0.0, 1.0, p.x, d);
            for (int i = 0; i < 4; ++i) out(i, d) = v[i];
        }
        break;
    case ElementFamily::P1_1D:
        for (int d = 0; d <= order; ++d) {
            const auto v = p1_shape(0.0, 1.0, p.x, d);
            for (int i = 0; i < 2; ++i) out(i, d) = v[i];
        }
        break;
    case ElementFamily::P1_Tri: {
        const P1Triangle tri({Point{0, 0}, Point{1, 0}, Point{0, 1}});
        const auto v = tri.values(p);
        const auto g = tri.gradients();
        for (int i = 0; i < 3; ++i) {
            out(i, 0) = v[i];
            if (order >= 1) {
                out(i, 1) = g[i].x;
                out(i, 2) = g[i].y;
            }
        }
        break;
    }
    case ElementFamily::Argyris: {
        static const ArgyrisBasis ref({Point{0, 0}, Point{1, 0}, Point{0, 1}});
        out = ref.eval(p).leftCols(ncols);
        break;
    }
    }
    return out;
}

} // namespace parasrc
