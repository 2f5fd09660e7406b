#include "parasrc/mesh.hpp"

#include "parasrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace parasrc {

namespace {

constexpr double kGeomTol = 1e-12;

// Sutherland-Hodgman clip of a convex polygon against {p : s * (p[axis] - c) >= 0}.
std::vector<Point> clip_halfplane(const std::vector<Point>& poly, int axis, double c, double s) {
    std::vector<Point> out;
    if (poly.empty()) return out;
    auto dist = [&](Point p) { return s * ((axis == 0 ? p.x : p.y) - c); };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point p = poly[i];
        const Point q = poly[(i + 1) % poly.size()];
        const double dp = dist(p);
        const double dq = dist(q);
        if (dp >= 0.0) out.push_back(p);
        if ((dp >= 0.0) != (dq >= 0.0)) {
            const double lambda = dp / (dp - dq);
            out.push_back(p + lambda * (q - p));
        }
    }
    return out;
}

std::vector<Point> clip_to_box(std::vector<Point> poly, const Box& box) {
    poly = clip_halfplane(poly, 0, box.x0, 1.0);
    poly = clip_halfplane(poly, 0, box.x1, -1.0);
    poly = clip_halfplane(poly, 1, box.y0, 1.0);
    poly = clip_halfplane(poly, 1, box.y1, -1.0);
    // Drop repeated vertices produced when an edge lies on a clip line.
    std::vector<Point> clean;
    for (const Point& p : poly) {
        if (clean.empty() || norm(p - clean.back()) > kGeomTol) clean.push_back(p);
    }
    while (clean.size() > 1 && norm(clean.front() - clean.back()) <= kGeomTol) clean.pop_back();
    return clean;
}

double polygon_area(const std::vector<Point>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

} // namespace

// ---------------------------------------------------------------- TimeGrid

int TimeGrid::node_index(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(end()));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (std::abs(nodes[i] - t) <= tol) return static_cast<int>(i);
    return -1;
}

int TimeGrid::locate(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(end()));
    if (t < start() - tol || t > end() + tol)
        throw DomainError("time " + std::to_string(t) + " outside the grid");
    const int n = static_cast<int>(std::floor((t - start()) / tau));
    return std::clamp(n, 0, n_intervals - 1);
}

TimeGrid build_time_grid(double t0, double zeta, int n) {
    if (!(zeta > 0.0)) throw InvalidArgument("build_time_grid: zeta must be positive");
    if (n < 2) throw InvalidArgument("build_time_grid: need at least two intervals");
    TimeGrid g;
    g.t0 = t0;
    g.zeta = zeta;
    g.n_intervals = n;
    g.tau = 2.0 * zeta / n;
    g.nodes.resize(n + 1);
    const double start = t0 - zeta;
    for (int i = 0; i <= n; ++i) g.nodes[i] = start + i * g.tau;
    g.nodes.back() = t0 + zeta;
    return g;
}

// ------------------------------------------------------------- SpaceMesh1D

SpaceMesh1D::SpaceMesh1D(double a, double b, int n_cells, Box omega)
    : a_(a), b_(b), n_cells_(n_cells), h_((b - a) / n_cells) {
    if (!(a < b)) throw InvalidArgument("build_mesh_1d: need a < b");
    if (n_cells < 2) throw InvalidArgument("build_mesh_1d: need at least two cells");
    if (!(omega.x0 > a && omega.x1 < b && omega.x0 < omega.x1))
        throw InvalidArgument("build_mesh_1d: omega must lie strictly inside (a,b)");
    omega_ = interval(omega.x0, omega.x1);
    nodes_.resize(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i) nodes_[i] = a + i * h_;
    nodes_.back() = b;
    connectivity_.resize(2 * n_cells);
    for (int c = 0; c < n_cells; ++c) {
        connectivity_[2 * c] = c;
        connectivity_[2 * c + 1] = c + 1;
    }
}

std::span<const int> SpaceMesh1D::cell_vertices(int cell) const {
    return {connectivity_.data() + 2 * cell, 2};
}

int SpaceMesh1D::locate(Point p) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(b_));
    if (p.x < a_ - tol || p.x > b_ + tol)
        throw DomainError("point " + std::to_string(p.x) + " outside the 1D mesh");
    const int c = static_cast<int>(std::floor((p.x - a_) / h_));
    return std::clamp(c, 0, n_cells_ - 1);
}

QuadratureRule SpaceMesh1D::cell_quadrature(int cell, const std::optional<Box>& region,
                                            int degree) const {
    double lo = nodes_[cell];
    double hi = nodes_[cell + 1];
    if (region) {
        lo = std::max(lo, region->x0);
        hi = std::min(hi, region->x1);
        if (hi - lo <= kGeomTol * h_) return QuadratureRule{1, degree, {}, {}};
    }
    return map_to_interval(gauss_rule_1d(degree), lo, hi);
}

SpaceMesh1D build_mesh_1d(double a, double b, int n, Box omega) {
    return SpaceMesh1D(a, b, n, omega);
}

// ----------------------------------------------------------------- TriMesh

TriMesh::TriMesh(int nx, int ny, Box domain, Box omega)
    : nx_(nx), ny_(ny), domain_(domain) {
    if (nx < 1 || ny < 1) throw InvalidArgument("build_trimesh_congruent: nx, ny must be >= 1");
    if (!(domain.width() > 0.0 && domain.height() > 0.0))
        throw InvalidArgument("build_trimesh_congruent: empty domain");
    omega_ = omega;
    hx_ = domain.width() / nx;
    hy_ = domain.height() / ny;

    vertices_.reserve((nx + 1) * (ny + 1));
    boundary_vertex_.reserve((nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const double x = (i == nx) ? domain.x1 : domain.x0 + i * hx_;
            const double y = (j == ny) ? domain.y1 : domain.y0 + j * hy_;
            vertices_.push_back({x, y});
            boundary_vertex_.push_back(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

    triangles_.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            triangles_.push_back({{v00, v10, v11}, Orientation::A, {-1, -1, -1}});
            triangles_.push_back({{v00, v11, v01}, Orientation::B, {-1, -1, -1}});
        }
    }

    std::map<std::pair<int, int>, int> edge_id;
    for (int t = 0; t < n_cells(); ++t) {
        auto& tri = triangles_[t];
        for (int k = 0; k < 3; ++k) {
            int a = tri.v[(k + 1) % 3];
            int b = tri.v[(k + 2) % 3];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = edge_id.try_emplace({a, b}, static_cast<int>(edges_.size()));
            if (inserted) {
                Edge e;
                e.v = {a, b};
                const Point pa = vertices_[a], pb = vertices_[b];
                e.midpoint = 0.5 * (pa + pb);
                const Point tangent = (1.0 / norm(pb - pa)) * (pb - pa);
                e.normal = {tangent.y, -tangent.x};
                e.triangles[0] = t;
                edges_.push_back(e);
            } else {
                edges_[it->second].triangles[1] = t;
            }
            tri.edges[k] = it->second;
        }
    }
    for (auto& e : edges_) e.boundary = e.triangles[1] < 0;
}

double TriMesh::signed_area(int t) const {
    const auto& v = triangles_[t].v;
    return 0.5 * cross(vertices_[v[1]] - vertices_[v[0]], vertices_[v[2]] - vertices_[v[0]]);
}

int TriMesh::locate(Point p) const {
    if (!domain_.contains(p, 1e-12 * std::max(1.0, std::max(std::abs(domain_.x1), std::abs(domain_.y1)))))
        throw DomainError("point outside the triangle mesh");
    const double sx = (p.x - domain_.x0) / hx_;
    const double sy = (p.y - domain_.y0) / hy_;
    const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, ny_ - 1);
    const bool upper = (sy - j) > (sx - i);
    return 2 * (j * nx_ + i) + (upper ? 1 : 0);
}

QuadratureRule TriMesh::cell_quadrature(int cell, const std::optional<Box>& region,
                                        int degree) const {
    const auto& v = triangles_[cell].v;
    const Point a = vertices_[v[0]], b = vertices_[v[1]], c = vertices_[v[2]];
    const QuadratureRule ref = triangle_rule(degree);
    if (!region) return map_to_triangle(ref, a, b, c);

    const double tol = kGeomTol * std::max(hx_, hy_);
    if (region->contains(a, tol) && region->contains(b, tol) && region->contains(c, tol))
        return map_to_triangle(ref, a, b, c);

    const std::vector<Point> poly = clip_to_box({a, b, c}, *region);
    QuadratureRule out{2, ref.exactness_degree, {}, {}};
    if (poly.size() < 3 || std::abs(polygon_area(poly)) <= tol * tol) return out;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        if (std::abs(cross(poly[k] - poly[0], poly[k + 1] - poly[0])) <= tol * tol) continue;
        const QuadratureRule sub = map_to_triangle(ref, poly[0], poly[k], poly[k + 1]);
        out.points.insert(out.points.end(), sub.points.begin(), sub.points.end());
        out.weights.insert(out.weights.end(), sub.weights.begin(), sub.weights.end());
    }
    return out;
}

TriMesh build_trimesh_congruent(int nx, int ny, Box omega_box, Box domain) {
    return TriMesh(nx, ny, domain, omega_box);
}

// ---------------------------------------------------------- classification

double overlap_measure(const SpaceMesh& mesh, int cell, const Box& region) {
    if (mesh.dim() == 1) {
        const auto v = mesh.cell_vertices(cell);
        const double lo = std::max(mesh.vertex(v[0]).x, region.x0);
        const double hi = std::min(mesh.vertex(v[1]).x, region.x1);
        return std::max(0.0, hi - lo);
    }
    const auto v = mesh.cell_vertices(cell);
    const auto poly = clip_to_box({mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2])}, region);
    return poly.size() < 3 ? 0.0 : std::abs(polygon_area(poly));
}

std::vector<bool> classify_omega_cells(const SpaceMesh& mesh, const Box& omega) {
    std::vector<bool> inside(mesh.n_cells(), false);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const double full = mesh.cell_measure(c);
        const double part = overlap_measure(mesh, c, omega);
        const double tol = 1e-9 * full;
        if (part > tol && part < full - tol)
            throw MisalignmentError("observation region is not aligned with cell " + std::to_string(c));
        inside[c] = part >= full - tol;
    }
    return inside;
}

} // namespace parasrc
