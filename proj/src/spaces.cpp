#include "parasrc/spaces.hpp"

#include "parasrc/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace parasrc {

namespace {

int locate_in_nodes(const std::vector<double>& nodes, double x) {
    const double tol = 1e-12 * std::max(1.0, std::abs(nodes.back()));
    if (x < nodes.front() - tol || x > nodes.back() + tol)
        throw DomainError("coordinate " + std::to_string(x) + " outside [" +
                          std::to_string(nodes.front()) + ", " + std::to_string(nodes.back()) + "]");
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const int c = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(c, 0, static_cast<int>(nodes.size()) - 2);
}

const Eigen::MatrixXd& component(const BasisTable& t, Derivative d) {
    const int order = d.dx + d.dy;
    if (order == 0) return t.val;
    if (t.dim == 1) {
        if (d.dy != 0) throw InvalidArgument("y-derivative requested from a 1D space");
        if (d.dx == 1) return t.grad[0];
        if (d.dx == 2) return t.hess[0];
    } else {
        if (order == 1) return d.dx == 1 ? t.grad[0] : t.grad[1];
        if (order == 2) return d.dx == 2 ? t.hess[0] : (d.dx == 1 ? t.hess[1] : t.hess[2]);
    }
    throw InvalidArgument("space derivatives above second order are not available");
}

double apply_functional(const GlobalDof& dof, const std::function<double(Point, Derivative)>& fn) {
    using K = DofDescriptor::Kind;
    switch (dof.kind) {
    case K::Value: return fn(dof.location, {0, 0, 0});
    case K::Dx: return fn(dof.location, {1, 0, 0});
    case K::Dy: return fn(dof.location, {0, 1, 0});
    case K::Dxx: return fn(dof.location, {2, 0, 0});
    case K::Dxy: return fn(dof.location, {1, 1, 0});
    case K::Dyy: return fn(dof.location, {0, 2, 0});
    case K::Normal:
        return dof.normal.x * fn(dof.location, {1, 0, 0}) + dof.normal.y * fn(dof.location, {0, 1, 0});
    }
    return 0.0;
}

} // namespace

// ----------------------------------------------------------- Hermite1DSpace

Hermite1DSpace::Hermite1DSpace(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw InvalidArgument("Hermite1DSpace: need at least one cell");
    const int nc = n_cells();
    cell_dofs_.resize(4 * nc);
    for (int c = 0; c < nc; ++c)
        for (int k = 0; k < 4; ++k) cell_dofs_[4 * c + k] = 2 * c + k;
    for (double x : nodes_) {
        dofs_.push_back({DofDescriptor::Kind::Value, {x, 0.0}});
        dofs_.push_back({DofDescriptor::Kind::Dx, {x, 0.0}});
    }
}

std::span<const int> Hermite1DSpace::cell_dofs(int cell) const {
    return {cell_dofs_.data() + 4 * cell, 4};
}

BasisTable Hermite1DSpace::tabulate(int cell, std::span<const Point> points) const {
    BasisTable t;
    t.resize(1, 4, static_cast<int>(points.size()));
    const double x0 = nodes_[cell];
    const double h = nodes_[cell + 1] - x0;
    for (std::size_t q = 0; q < points.size(); ++q) {
        const auto v = hermite_shape(x0, h, points[q].x, 0);
        const auto d1 = hermite_shape(x0, h, points[q].x, 1);
        const auto d2 = hermite_shape(x0, h, points[q].x, 2);
        for (int i = 0; i < 4; ++i) {
            t.val(i, q) = v[i];
            t.grad[0](i, q) = d1[i];
            t.hess[0](i, q) = d2[i];
        }
    }
    return t;
}

int Hermite1DSpace::locate(Point p) const { return locate_in_nodes(nodes_, p.x); }

std::vector<int> Hermite1DSpace::dirichlet_dofs() const { return {0, n_dofs() - 2}; }

QuadratureRule Hermite1DSpace::cell_quadrature(int cell, const std::optional<Box>& region,
                                               int degree) const {
    double lo = nodes_[cell], hi = nodes_[cell + 1];
    if (region) {
        lo = std::max(lo, region->x0);
        hi = std::min(hi, region->x1);
        if (hi - lo <= 1e-12 * (nodes_[cell + 1] - nodes_[cell])) return QuadratureRule{1, degree, {}, {}};
    }
    return map_to_interval(gauss_rule_1d(degree), lo, hi);
}

// ---------------------------------------------------------------- P1Space1D

P1Space1D::P1Space1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw InvalidArgument("P1Space1D: need at least one cell");
    for (int c = 0; c < n_cells(); ++c) {
        cell_dofs_.push_back(c);
        cell_dofs_.push_back(c + 1);
    }
    for (double x : nodes_) dofs_.push_back({DofDescriptor::Kind::Value, {x, 0.0}});
}

std::span<const int> P1Space1D::cell_dofs(int cell) const { return {cell_dofs_.data() + 2 * cell, 2}; }

BasisTable P1Space1D::tabulate(int cell, std::span<const Point> points) const {
    BasisTable t;
    t.resize(1, 2, static_cast<int>(points.size()));
    const double x0 = nodes_[cell];
    const double h = nodes_[cell + 1] - x0;
    for (std::size_t q = 0; q < points.size(); ++q) {
        const auto v = p1_shape(x0, h, points[q].x, 0);
        const auto d = p1_shape(x0, h, points[q].x, 1);
        for (int i = 0; i < 2; ++i) {
            t.val(i, q) = v[i];
            t.grad[0](i, q) = d[i];
        }
    }
    return t;
}

int P1Space1D::locate(Point p) const { return locate_in_nodes(nodes_, p.x); }

std::vector<int> P1Space1D::dirichlet_dofs() const { return {0, n_dofs() - 1}; }

QuadratureRule P1Space1D::cell_quadrature(int cell, const std::optional<Box>& region,
                                          int degree) const {
    double lo = nodes_[cell], hi = nodes_[cell + 1];
    if (region) {
        lo = std::max(lo, region->x0);
        hi = std::min(hi, region->x1);
        if (hi - lo <= 1e-12 * (nodes_[cell + 1] - nodes_[cell])) return QuadratureRule{1, degree, {}, {}};
    }
    return map_to_interval(gauss_rule_1d(degree), lo, hi);
}

// ------------------------------------------------------------- ArgyrisSpace

ArgyrisSpace::ArgyrisSpace(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
    const TriMesh& m = *mesh_;
    const int nv = m.n_vertices();
    n_dofs_ = 6 * nv + m.n_edges();

    const double hx = m.hx(), hy = m.hy();
    templates_.emplace_back(std::array<Point, 3>{Point{0, 0}, Point{hx, 0}, Point{hx, hy}});
    templates_.emplace_back(std::array<Point, 3>{Point{0, 0}, Point{hx, hy}, Point{0, hy}});

    cell_dofs_.resize(21 * m.n_cells());
    edge_signs_.resize(3 * m.n_cells());
    for (int c = 0; c < m.n_cells(); ++c) {
        const auto& tri = m.triangle(c);
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 6; ++j) cell_dofs_[21 * c + 6 * k + j] = 6 * tri.v[k] + j;
        const ArgyrisBasis& tmpl = orientation_basis(tri.orientation);
        for (int i = 0; i < 3; ++i) {
            const int e = tri.edges[i];
            cell_dofs_[21 * c + 18 + i] = 6 * nv + e;
            edge_signs_[3 * c + i] = dot(tmpl.outward_normals()[i], m.edges()[e].normal) > 0.0 ? 1.0 : -1.0;
        }
    }

    using K = DofDescriptor::Kind;
    dofs_.reserve(n_dofs_);
    for (int v = 0; v < nv; ++v)
        for (K k : {K::Value, K::Dx, K::Dy, K::Dxx, K::Dxy, K::Dyy}) dofs_.push_back({k, m.vertex(v)});
    for (const auto& e : m.edges()) dofs_.push_back({K::Normal, e.midpoint, e.normal});
}

std::span<const int> ArgyrisSpace::cell_dofs(int cell) const {
    return {cell_dofs_.data() + 21 * cell, 21};
}

std::array<double, 3> ArgyrisSpace::edge_signs(int cell) const {
    return {edge_signs_[3 * cell], edge_signs_[3 * cell + 1], edge_signs_[3 * cell + 2]};
}

BasisTable ArgyrisSpace::tabulate(int cell, std::span<const Point> points) const {
    BasisTable t;
    t.resize(2, 21, static_cast<int>(points.size()));
    const auto& tri = mesh_->triangle(cell);
    const ArgyrisBasis& tmpl = orientation_basis(tri.orientation);
    const Point v0 = mesh_->vertex(tri.v[0]);
    const auto signs = edge_signs(cell);
    for (std::size_t q = 0; q < points.size(); ++q) {
        Eigen::Matrix<double, 21, 6> M = tmpl.eval(points[q] - v0);
        for (int i = 0; i < 3; ++i) M.row(18 + i) *= signs[i];
        t.val.col(q) = M.col(0);
        t.grad[0].col(q) = M.col(1);
        t.grad[1].col(q) = M.col(2);
        t.hess[0].col(q) = M.col(3);
        t.hess[1].col(q) = M.col(4);
        t.hess[2].col(q) = M.col(5);
    }
    return t;
}

std::vector<int> ArgyrisSpace::dirichlet_dofs() const {
    const Box d = mesh_->domain();
    const double tol = 1e-12 * std::max(d.width(), d.height());
    std::vector<int> out;
    for (int v = 0; v < mesh_->n_vertices(); ++v) {
        if (!mesh_->is_boundary_vertex(v)) continue;
        const Point p = mesh_->vertex(v);
        const bool vertical_side = std::abs(p.x - d.x0) <= tol || std::abs(p.x - d.x1) <= tol;
        const bool horizontal_side = std::abs(p.y - d.y0) <= tol || std::abs(p.y - d.y1) <= tol;
        out.push_back(6 * v);
        if (horizontal_side) {
            out.push_back(6 * v + 1); // v_x
            out.push_back(6 * v + 3); // v_xx
        }
        if (vertical_side) {
            out.push_back(6 * v + 2); // v_y
            out.push_back(6 * v + 5); // v_yy
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --------------------------------------------------------------- P1TriSpace

P1TriSpace::P1TriSpace(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
    for (int v = 0; v < mesh_->n_vertices(); ++v)
        dofs_.push_back({DofDescriptor::Kind::Value, mesh_->vertex(v)});
}

BasisTable P1TriSpace::tabulate(int cell, std::span<const Point> points) const {
    BasisTable t;
    t.resize(2, 3, static_cast<int>(points.size()));
    const auto v = mesh_->cell_vertices(cell);
    const P1Triangle tri({mesh_->vertex(v[0]), mesh_->vertex(v[1]), mesh_->vertex(v[2])});
    const auto g = tri.gradients();
    for (std::size_t q = 0; q < points.size(); ++q) {
        const auto val = tri.values(points[q]);
        for (int i = 0; i < 3; ++i) {
            t.val(i, q) = val[i];
            t.grad[0](i, q) = g[i].x;
            t.grad[1](i, q) = g[i].y;
        }
    }
    return t;
}

std::vector<int> P1TriSpace::dirichlet_dofs() const {
    std::vector<int> out;
    for (int v = 0; v < mesh_->n_vertices(); ++v)
        if (mesh_->is_boundary_vertex(v)) out.push_back(v);
    return out;
}

// ----------------------------------------------------------------- DofSpace

DofSpace::DofSpace(std::shared_ptr<const FiniteElementSpace> fe) : DofSpace(std::move(fe), {}) {}

DofSpace::DofSpace(std::shared_ptr<const FiniteElementSpace> fe, std::vector<int> constrained)
    : fe_(std::move(fe)), constrained_(std::move(constrained)) {
    std::sort(constrained_.begin(), constrained_.end());
    constrained_.erase(std::unique(constrained_.begin(), constrained_.end()), constrained_.end());
    free_.assign(fe_->n_dofs(), 0);
    for (int c : constrained_) {
        if (c < 0 || c >= fe_->n_dofs()) throw InvalidArgument("DofSpace: constrained DOF out of range");
        free_[c] = -1;
    }
    n_free_ = 0;
    for (int g = 0; g < fe_->n_dofs(); ++g) {
        if (free_[g] < 0) continue;
        free_[g] = n_free_++;
        free_to_global_.push_back(g);
    }
}

DofSpace apply_dirichlet_constraints(const DofSpace& space) {
    std::vector<int> c = space.constrained();
    const auto extra = space.fe().dirichlet_dofs();
    c.insert(c.end(), extra.begin(), extra.end());
    return DofSpace(space.fe_ptr(), std::move(c));
}

// ---------------------------------------------------------------- functions

double FeFunction::evaluate(Point p, Derivative d) const {
    const auto& fe = space.fe();
    const int cell = fe.locate(p);
    const Point pts[1] = {p};
    const BasisTable t = fe.tabulate(cell, pts);
    const Eigen::MatrixXd& c = component(t, d);
    const auto dofs = fe.cell_dofs(cell);
    double s = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i) s += coefficients[dofs[i]] * c(i, 0);
    return s;
}

Eigen::VectorXd TensorFunction::to_free_vector() const {
    Eigen::VectorXd z(space.n_free());
    const int nt = space.n_time();
    for (int s = 0; s < space.space.n_free(); ++s) {
        const int g = space.space.free_to_global()[s];
        for (int k = 0; k < nt; ++k) z[s * nt + k] = coefficients(g, k);
    }
    return z;
}

TensorFunction TensorFunction::from_free_vector(const TensorSpace& space, const Eigen::VectorXd& z) {
    if (z.size() != space.n_free()) throw InvalidArgument("TensorFunction: vector length mismatch");
    TensorFunction u{space, Eigen::MatrixXd::Zero(space.space.n_dofs(), space.n_time())};
    const int nt = space.n_time();
    for (int s = 0; s < space.space.n_free(); ++s) {
        const int g = space.space.free_to_global()[s];
        for (int k = 0; k < nt; ++k) u.coefficients(g, k) = z[s * nt + k];
    }
    return u;
}

FeFunction interpolate(const DofSpace& space, const SpaceField& fn) {
    const auto& dofs = space.fe().global_dofs();
    FeFunction f{space, Eigen::VectorXd::Zero(space.n_dofs())};
    for (int g = 0; g < space.n_dofs(); ++g)
        if (!space.is_constrained(g)) f.coefficients[g] = apply_functional(dofs[g], fn);
    return f;
}

TensorFunction interpolate_tensor(const TensorSpace& space, const SpaceTimeField& fn) {
    const auto& sdofs = space.space.fe().global_dofs();
    const auto& tdofs = space.time.fe().global_dofs();
    TensorFunction u{space, Eigen::MatrixXd::Zero(space.space.n_dofs(), space.n_time())};
    for (int k = 0; k < space.n_time(); ++k) {
        const double t = tdofs[k].location.x;
        const int dt = tdofs[k].kind == DofDescriptor::Kind::Dx ? 1 : 0;
        const SpaceField slice = [&](Point x, Derivative d) { return fn(x, t, {d.dx, d.dy, dt}); };
        for (int g = 0; g < space.space.n_dofs(); ++g)
            if (!space.space.is_constrained(g)) u.coefficients(g, k) = apply_functional(sdofs[g], slice);
    }
    return u;
}

double tensor_eval(const TensorFunction& u, Point x, double t, Derivative d) {
    const auto& sfe = u.space.space.fe();
    const auto& tfe = u.space.time.fe();
    const int sc = sfe.locate(x);
    const int tc = tfe.locate({t, 0.0});
    const Point xs[1] = {x};
    const Point ts[1] = {{t, 0.0}};
    const BasisTable st = sfe.tabulate(sc, xs);
    const BasisTable tt = tfe.tabulate(tc, ts);
    const Eigen::MatrixXd& sv = component(st, {d.dx, d.dy, 0});
    const Eigen::MatrixXd& tv = component(tt, {d.dt, 0, 0});
    const auto sd = sfe.cell_dofs(sc);
    const auto td = tfe.cell_dofs(tc);
    double s = 0.0;
    for (std::size_t i = 0; i < sd.size(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < td.size(); ++k) acc += u.coefficients(sd[i], td[k]) * tv(k, 0);
        s += acc * sv(i, 0);
    }
    return s;
}

FeFunction project_l2(const DofSpace& space, const PointFunction& target) {
    const auto& fe = space.fe();
    const int degree = std::min(2 * fe.degree() + 2, fe.dim() == 1 ? kMaxGaussDegree : kMaxTriangleDegree);
    const int n = space.n_free();
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < fe.n_cells(); ++c) {
        const QuadratureRule q = fe.cell_quadrature(c, std::nullopt, degree);
        const BasisTable t = fe.tabulate(c, q.points);
        const auto dofs = fe.cell_dofs(c);
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const int fi = space.free_index(dofs[i]);
            if (fi < 0) continue;
            for (std::size_t p = 0; p < q.size(); ++p)
                rhs[fi] += q.weights[p] * target(q.points[p]) * t.val(i, p);
            for (std::size_t j = 0; j < dofs.size(); ++j) {
                const int fj = space.free_index(dofs[j]);
                if (fj < 0) continue;
                double m = 0.0;
                for (std::size_t p = 0; p < q.size(); ++p) m += q.weights[p] * t.val(i, p) * t.val(j, p);
                trip.emplace_back(fi, fj, m);
            }
        }
    }
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw InternalError("project_l2: singular mass matrix");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    FeFunction f{space, Eigen::VectorXd::Zero(space.n_dofs())};
    for (int i = 0; i < n; ++i) f.coefficients[space.free_to_global()[i]] = x[i];
    return f;
}

void write_csv(std::ostream& os, const FeFunction& f) {
    os << "index,coefficient\n";
    char buf[64];
    for (int i = 0; i < f.coefficients.size(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, f.coefficients[i]);
        os << i << ',' << std::string_view(buf, res.ptr - buf) << '\n';
    }
}

FeFunction read_csv(std::istream& is, const DofSpace& space) {
    FeFunction f{space, Eigen::VectorXd::Zero(space.n_dofs())};
    std::string line;
    if (!std::getline(is, line) || line.rfind("index,coefficient", 0) != 0)
        throw InvalidArgument("read_csv: missing 'index,coefficient' header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InvalidArgument("read_csv: malformed line '" + line + "'");
        const int idx = std::stoi(line.substr(0, comma));
        if (idx < 0 || idx >= space.n_dofs()) throw InvalidArgument("read_csv: index out of range");
        f.coefficients[idx] = std::stod(line.substr(comma + 1));
    }
    return f;
}

} // namespace parasrc
