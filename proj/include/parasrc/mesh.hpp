#pragma once

#include "parasrc/geometry.hpp"
#include "parasrc/quadrature.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace parasrc {

/// Uniform grid of the observation window I = (t0 - zeta, t0 + zeta).
struct TimeGrid {
    double t0 = 0.0;
    double zeta = 0.0;
    int n_intervals = 0;
    double tau = 0.0;
    std::vector<double> nodes;

    double start() const { return nodes.front(); }
    double end() const { return nodes.back(); }
    /// Index of the node equal to `t` (to 1e-12 relative), or -1.
    int node_index(double t) const;
    /// Interval containing `t`; throws DomainError outside [start, end].
    int locate(double t) const;
};

TimeGrid build_time_grid(double t0, double zeta, int n);

/// Common interface of the spatial meshes. Immutable after construction.
class SpaceMesh {
public:
    virtual ~SpaceMesh() = default;

    virtual int dim() const = 0;
    virtual int n_cells() const = 0;
    virtual int n_vertices() const = 0;
    virtual Point vertex(int v) const = 0;
    virtual std::span<const int> cell_vertices(int cell) const = 0;
    virtual double cell_measure(int cell) const = 0;
    virtual bool is_boundary_vertex(int v) const = 0;
    virtual Box domain() const = 0;
    /// Grid spacing (uniform meshes only).
    virtual double h() const = 0;
    /// A cell whose closure contains `p`. Points on shared faces go to the
    /// cell on the upper side; the upper boundary of Ω to the last cell.
    virtual int locate(Point p) const = 0;

    /// Quadrature over `cell`, or over cell ∩ region when a region is given.
    /// Partial overlaps are integrated exactly by clipping; a cell that does
    /// not meet the region yields an empty rule.
    virtual QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                           int degree) const = 0;

    /// Observation subdomain ω.
    const Box& omega() const { return omega_; }

protected:
    Box omega_;
};

class SpaceMesh1D final : public SpaceMesh {
public:
    SpaceMesh1D(double a, double b, int n_cells, Box omega);

    int dim() const override { return 1; }
    int n_cells() const override { return n_cells_; }
    int n_vertices() const override { return n_cells_ + 1; }
    Point vertex(int v) const override { return {nodes_[v], 0.0}; }
    std::span<const int> cell_vertices(int cell) const override;
    double cell_measure(int cell) const override { return nodes_[cell + 1] - nodes_[cell]; }
    bool is_boundary_vertex(int v) const override { return v == 0 || v == n_cells_; }
    Box domain() const override { return interval(a_, b_); }
    double h() const override { return h_; }
    int locate(Point p) const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override;

    double a() const { return a_; }
    double b() const { return b_; }
    const std::vector<double>& nodes() const { return nodes_; }

private:
    double a_;
    double b_;
    int n_cells_;
    double h_;
    std::vector<double> nodes_;
    std::vector<int> connectivity_;
};

SpaceMesh1D build_mesh_1d(double a, double b, int n, Box omega);

/// Uniform nx-by-ny rectangle grid, each cell split along its lower-left to
/// upper-right diagonal. Orientation A is (v00, v10, v11), orientation B is
/// (v00, v11, v01); both counter-clockwise.
class TriMesh final : public SpaceMesh {
public:
    enum class Orientation { A = 0, B = 1 };

    struct Triangle {
        std::array<int, 3> v;
        Orientation orientation;
        /// Edge i is opposite local vertex i.
        std::array<int, 3> edges;
    };

    struct Edge {
        std::array<int, 2> v; // v[0] < v[1]
        Point midpoint;
        /// Unit normal fixed per edge: the tangent v[0]->v[1] rotated clockwise.
        Point normal;
        std::array<int, 2> triangles{-1, -1};
        bool boundary = false;
    };

    TriMesh(int nx, int ny, Box domain, Box omega);

    int dim() const override { return 2; }
    int n_cells() const override { return static_cast<int>(triangles_.size()); }
    int n_vertices() const override { return static_cast<int>(vertices_.size()); }
    Point vertex(int v) const override { return vertices_[v]; }
    std::span<const int> cell_vertices(int cell) const override { return triangles_[cell].v; }
    double cell_measure(int) const override { return 0.5 * hx_ * hy_; }
    bool is_boundary_vertex(int v) const override { return boundary_vertex_[v]; }
    Box domain() const override { return domain_; }
    double h() const override { return hx_; }
    int locate(Point p) const override;
    QuadratureRule cell_quadrature(int cell, const std::optional<Box>& region,
                                   int degree) const override;

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    const Triangle& triangle(int t) const { return triangles_[t]; }
    const std::vector<Edge>& edges() const { return edges_; }
    int n_edges() const { return static_cast<int>(edges_.size()); }
    double signed_area(int t) const;

private:
    int nx_;
    int ny_;
    Box domain_;
    double hx_;
    double hy_;
    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
    std::vector<bool> boundary_vertex_;
};

TriMesh build_trimesh_congruent(int nx, int ny, Box omega_box, Box domain = {0.0, 1.0, 0.0, 1.0});

/// Flags cells lying inside `omega`. Throws MisalignmentError when some cell
/// straddles the boundary of `omega`.
std::vector<bool> classify_omega_cells(const SpaceMesh& mesh, const Box& omega);

/// Measure of cell ∩ region, computed from the clipped geometry.
double overlap_measure(const SpaceMesh& mesh, int cell, const Box& region);

} // namespace parasrc
