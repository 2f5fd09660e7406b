#include "parasrc/assembly.hpp"

#include "parasrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <utility>

namespace parasrc {

// ---------------------------------------------------------------- operators

EllipticOperator EllipticOperator::negative_laplacian() { return EllipticOperator{}; }

EllipticOperator::Coefficients EllipticOperator::at(Point x) const {
    Coefficients k;
    if (a) k.a = a(x);
    if (div_a) {
        const auto d = div_a(x);
        k.drift = {-d[0], -d[1]};
    }
    if (b) {
        const auto v = b(x);
        k.drift[0] += v[0];
        k.drift[1] += v[1];
    }
    if (c) k.c = c(x);
    return k;
}

double apply_operator(const EllipticOperator::Coefficients& k, const Jet& j, int dim) {
    if (dim == 1) return -k.a[0] * j.hxx + k.drift[0] * j.gx + k.c * j.v;
    return -(k.a[0] * j.hxx + 2.0 * k.a[1] * j.hxy + k.a[2] * j.hyy) + k.drift[0] * j.gx +
           k.drift[1] * j.gy + k.c * j.v;
}

void check_ellipticity(const EllipticOperator& op, const SpaceMesh& mesh) {
    if (!(op.mu > 0.0 && op.mu <= 1.0)) throw InvalidArgument("ellipticity constant must lie in (0, 1]");
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const QuadratureRule rule = mesh.cell_quadrature(cell, std::nullopt, mesh.dim() == 1 ? 3 : 2);
        for (const Point x : rule.points) {
            const auto a = op.at(x).a;
            double lo, hi;
            if (mesh.dim() == 1) {
                lo = hi = a[0];
            } else {
                const double m = 0.5 * (a[0] + a[2]);
                const double r = std::hypot(0.5 * (a[0] - a[2]), a[1]);
                lo = m - r;
                hi = m + r;
            }
            if (lo < op.mu * (1.0 - 1e-12) || hi > (1.0 + 1e-12) / op.mu)
                throw InvalidArgument("operator coefficients violate the declared ellipticity bound");
        }
    }
}

SourceModulation SourceModulation::constant(double value) {
    return {[value](Point, double) { return value; }, [](Point, double) { return 0.0; }, true};
}

SourceModulation SourceModulation::of_time(std::function<double(double)> R,
                                           std::function<double(double)> dtR) {
    return {[R](Point, double t) { return R(t); }, [dtR](Point, double t) { return dtR(t); }, true};
}

double check_source_positivity(const SourceModulation& R, const SpaceMesh& mesh, double t0) {
    double r0 = std::numeric_limits<double>::infinity();
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const QuadratureRule rule = mesh.cell_quadrature(cell, std::nullopt, 3);
        for (const Point x : rule.points) r0 = std::min(r0, R.R(x, t0));
        for (int v : mesh.cell_vertices(cell)) r0 = std::min(r0, R.R(mesh.vertex(v), t0));
    }
    if (!(r0 > 0.0)) throw InvalidArgument("R(x, t0) must be bounded below by a positive constant");
    return r0;
}

// ----------------------------------------------------------- discretization

Discretization make_discretization(std::shared_ptr<const SpaceMesh> mesh, const TimeGrid& time,
                                   FormKind kind) {
    if (!mesh) throw InvalidArgument("make_discretization: null mesh");
    Discretization d;
    d.time = time;
    d.kind = kind;
    d.t0_node = time.node_index(time.t0);
    if (d.t0_node < 0) throw InvalidArgument("t0 is not a node of the time grid");

    std::shared_ptr<const FiniteElementSpace> v, w;
    if (mesh->dim() == 1) {
        const auto* m1 = dynamic_cast<const SpaceMesh1D*>(mesh.get());
        if (!m1) throw InvalidArgument("make_discretization: unsupported 1D mesh type");
        v = std::make_shared<Hermite1DSpace>(m1->nodes());
        w = std::make_shared<P1Space1D>(m1->nodes());
        d.space_degree = 7;
    } else {
        auto tri = std::dynamic_pointer_cast<const TriMesh>(mesh);
        if (!tri) throw InvalidArgument("make_discretization: unsupported 2D mesh type");
        v = std::make_shared<ArgyrisSpace>(tri);
        w = std::make_shared<P1TriSpace>(tri);
        d.space_degree = 10;
    }
    DofSpace vs(v);
    if (kind == FormKind::Lipschitz) vs = apply_dirichlet_constraints(vs);
    d.u = TensorSpace{vs, DofSpace(std::make_shared<Hermite1DSpace>(time.nodes))};
    d.f = DofSpace(w);
    d.time_points = static_cast<int>(gauss_rule_1d(d.time_degree).size());

    const int nc = mesh->n_cells();
    d.omega_offset.assign(nc + 1, 0);
    d.full_offset.assign(nc + 1, 0);
    for (int c = 0; c < nc; ++c) {
        d.omega_offset[c + 1] =
            d.omega_offset[c] + static_cast<std::int64_t>(v->cell_quadrature(c, mesh->omega(), d.space_degree).size());
        d.full_offset[c + 1] =
            d.full_offset[c] + static_cast<std::int64_t>(v->cell_quadrature(c, std::nullopt, d.space_degree).size());
    }
    d.mesh = std::move(mesh);
    return d;
}

// ------------------------------------------------------------------ kernels

namespace {

// Runs fn(i) for i in [begin, end); the first exception is rethrown.
template <class Fn>
void for_each_index(Execution exec, int begin, int end, Fn&& fn) {
    if (exec == Execution::Serial) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = begin; i < end; ++i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

Jet jet_of(const BasisTable& t, int i, int q) {
    Jet j;
    j.v = t.val(i, q);
    j.gx = t.grad[0](i, q);
    j.hxx = t.hess[0](i, q);
    if (t.dim == 2) {
        j.gy = t.grad[1](i, q);
        j.hxy = t.hess[1](i, q);
        j.hyy = t.hess[2](i, q);
    }
    return j;
}

// Space tables of one cell over one quadrature rule.
struct CellData {
    std::vector<double> w;
    std::vector<Point> x;
    BasisTable phi;
    Eigen::MatrixXd Aphi; // n_s x n_q
    BasisTable chi;       // f-space values
};

CellData make_cell_data(const FiniteElementSpace& us, const FiniteElementSpace& fs, const EllipticOperator& op,
                        int cell, const QuadratureRule& rule, bool with_A) {
    CellData c;
    c.w = rule.weights;
    c.x = rule.points;
    c.phi = us.tabulate(cell, rule.points);
    c.chi = fs.tabulate(cell, rule.points);
    if (with_A) {
        const int ns = c.phi.n_local();
        const int nq = static_cast<int>(rule.size());
        c.Aphi.resize(ns, nq);
        for (int q = 0; q < nq; ++q) {
            const auto k = op.at(rule.points[q]);
            for (int i = 0; i < ns; ++i) c.Aphi(i, q) = apply_operator(k, jet_of(c.phi, i, q), us.dim());
        }
    }
    return c;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<double>& w) {
    Eigen::MatrixXd aw = a;
    for (int q = 0; q < aw.cols(); ++q) aw.col(q) *= w[q];
    return aw * b.transpose();
}

// Time tables of one interval.
struct TimeData {
    std::array<int, 4> dofs{};
    std::vector<double> w;
    std::vector<double> t;
    Eigen::MatrixXd psi, dpsi, ddpsi; // 4 x n_r
    Eigen::Matrix4d T0, T1, T2;       // mass, first and second derivative Gram
};

std::vector<TimeData> make_time_data(const FiniteElementSpace& tfe, int degree) {
    std::vector<TimeData> out(tfe.n_cells());
    for (int n = 0; n < tfe.n_cells(); ++n) {
        TimeData& d = out[n];
        const auto dofs = tfe.cell_dofs(n);
        std::copy(dofs.begin(), dofs.end(), d.dofs.begin());
        const QuadratureRule rule = tfe.cell_quadrature(n, std::nullopt, degree);
        d.w = rule.weights;
        for (const Point p : rule.points) d.t.push_back(p.x);
        const BasisTable tab = tfe.tabulate(n, rule.points);
        d.psi = tab.val;
        d.dpsi = tab.grad[0];
        d.ddpsi = tab.hess[0];
        d.T0 = weighted_gram(d.psi, d.psi, d.w);
        d.T1 = weighted_gram(d.dpsi, d.dpsi, d.w);
        d.T2 = weighted_gram(d.ddpsi, d.ddpsi, d.w);
    }
    return out;
}

// Space factors reused across the time intervals of a cell.
struct SpaceFactors {
    bool has_obs = false;
    Eigen::MatrixXd obs_mass;
    Eigen::MatrixXd obs_stiff;
    Eigen::MatrixXd S01;  // L2 + H1 seminorm
    Eigen::MatrixXd S012; // S01 + H2 seminorm
};

Eigen::MatrixXd stiffness(const BasisTable& t, const std::vector<double>& w) {
    Eigen::MatrixXd s = weighted_gram(t.grad[0], t.grad[0], w);
    if (t.dim == 2) s += weighted_gram(t.grad[1], t.grad[1], w);
    return s;
}

// |v|_{H2}^2 = sum_{i,j} ||d_i d_j v||^2, so the mixed term counts twice.
Eigen::MatrixXd hessian_gram(const BasisTable& t, const std::vector<double>& w) {
    Eigen::MatrixXd s = weighted_gram(t.hess[0], t.hess[0], w);
    if (t.dim == 2) s += 2.0 * weighted_gram(t.hess[1], t.hess[1], w) + weighted_gram(t.hess[2], t.hess[2], w);
    return s;
}

// E(ls*nt + lt, ms*nt + mt) += S(ls, ms) T(lt, mt), lower triangle only.
void add_kron_lower(Eigen::MatrixXd& E, const Eigen::MatrixXd& S, const Eigen::Matrix4d& T, double scale) {
    const int ns = static_cast<int>(S.rows());
    for (int ls = 0; ls < ns; ++ls)
        for (int ms = 0; ms <= ls; ++ms) {
            const double s = scale * S(ls, ms);
            if (s == 0.0) continue;
            for (int lt = 0; lt < 4; ++lt)
                for (int mt = 0; mt < 4; ++mt) {
                    const int i = ls * 4 + lt, j = ms * 4 + mt;
                    if (j <= i) E(i, j) += s * T(lt, mt);
                }
        }
}

// Local-to-global map of a space-time element (cell, interval): u DOFs in
// (ls, lt) order, then f DOFs. Constrained entries are -1.
std::vector<int> element_indices(const Discretization& d, int cell, const TimeData& td) {
    const auto sd = d.u.space.fe().cell_dofs(cell);
    const auto fd = d.f.fe().cell_dofs(cell);
    std::vector<int> idx;
    idx.reserve(sd.size() * 4 + fd.size());
    for (int s : sd)
        for (int t : td.dofs) idx.push_back(d.u.index(s, t));
    for (int g : fd) {
        const int fi = d.f.free_index(g);
        idx.push_back(fi < 0 ? -1 : d.n_u() + fi);
    }
    return idx;
}

// Map of the space-only block: u DOFs at the t0 value DOF, then f DOFs.
std::vector<int> trace_indices(const Discretization& d, int cell) {
    const auto sd = d.u.space.fe().cell_dofs(cell);
    const auto fd = d.f.fe().cell_dofs(cell);
    const int k0 = 2 * d.t0_node;
    std::vector<int> idx;
    for (int s : sd) idx.push_back(d.u.index(s, k0));
    for (int g : fd) {
        const int fi = d.f.free_index(g);
        idx.push_back(fi < 0 ? -1 : d.n_u() + fi);
    }
    return idx;
}

struct ElementBlock {
    std::vector<int> idx;
    Eigen::MatrixXd m;
};

struct CellBlocks {
    std::vector<ElementBlock> blocks; // one per interval, then the trace block
};

CellBlocks cell_matrix_blocks(const Discretization& d, const EllipticOperator& op, const SourceModulation& R,
                              const FormParameters& form, const std::vector<TimeData>& times, int cell) {
    const auto& us = d.u.space.fe();
    const auto& fs = d.f.fe();
    const bool holder = form.kind == FormKind::Holder;

    const CellData full =
        make_cell_data(us, fs, op, cell, us.cell_quadrature(cell, std::nullopt, d.space_degree), true);
    const QuadratureRule obs_rule = us.cell_quadrature(cell, d.omega(), d.space_degree);

    SpaceFactors sf;
    sf.has_obs = obs_rule.size() > 0;
    if (sf.has_obs) {
        const BasisTable ot = us.tabulate(cell, obs_rule.points);
        sf.obs_mass = weighted_gram(ot.val, ot.val, obs_rule.weights);
        if (holder) sf.obs_stiff = stiffness(ot, obs_rule.weights);
    }
    if (holder && form.gamma_u > 0.0) {
        sf.S01 = weighted_gram(full.phi.val, full.phi.val, full.w) + stiffness(full.phi, full.w);
        sf.S012 = sf.S01 + hessian_gram(full.phi, full.w);
    }

    const int ns = full.phi.n_local();
    const int nf = full.chi.n_local();
    const int nq = static_cast<int>(full.w.size());
    const int nl = 4 * ns + nf;

    CellBlocks out;
    out.blocks.reserve(times.size() + 1);
    for (const TimeData& td : times) {
        const int nr = static_cast<int>(td.w.size());
        // Columns of Gv / Gt are sqrt-weighted samples of the residual
        // G = Lu - Rf and of its time derivative, one per (q, r).
        Eigen::MatrixXd Gv(nl, nq * nr), Gt(nl, nq * nr);
        for (int q = 0; q < nq; ++q) {
            for (int r = 0; r < nr; ++r) {
                const int col = q * nr + r;
                const double sw = std::sqrt(full.w[q] * td.w[r]);
                const double Rv = R.R(full.x[q], td.t[r]);
                const double Rt = R.dtR(full.x[q], td.t[r]);
                for (int ls = 0; ls < ns; ++ls) {
                    const double a = sw * full.phi.val(ls, q);
                    const double b = sw * full.Aphi(ls, q);
                    for (int lt = 0; lt < 4; ++lt) {
                        Gv(ls * 4 + lt, col) = a * td.dpsi(lt, r) + b * td.psi(lt, r);
                        Gt(ls * 4 + lt, col) = a * td.ddpsi(lt, r) + b * td.dpsi(lt, r);
                    }
                }
                for (int c = 0; c < nf; ++c) {
                    Gv(4 * ns + c, col) = -sw * Rv * full.chi.val(c, q);
                    Gt(4 * ns + c, col) = -sw * Rt * full.chi.val(c, q);
                }
            }
        }
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(nl, nl);
        E.selfadjointView<Eigen::Lower>().rankUpdate(Gv);
        E.selfadjointView<Eigen::Lower>().rankUpdate(Gt);

        const Eigen::Matrix4d T01 = td.T0 + td.T1;
        if (sf.has_obs) {
            add_kron_lower(E, sf.obs_mass, T01, 1.0);
            if (holder) add_kron_lower(E, sf.obs_stiff, T01, 1.0);
        }
        if (holder && form.gamma_u > 0.0) {
            // H1(I;H2) + H2(I;H1): (T0+T1) x (S0+S1+S2) + (T0+T1+T2) x (S0+S1).
            add_kron_lower(E, sf.S012, T01, form.gamma_u);
            add_kron_lower(E, sf.S01, T01 + td.T2, form.gamma_u);
        }
        E.triangularView<Eigen::StrictlyUpper>() = E.transpose();
        out.blocks.push_back({element_indices(d, cell, td), std::move(E)});
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ns + nf, ns + nf);
    T.topLeftCorner(ns, ns) = weighted_gram(full.Aphi, full.Aphi, full.w);
    if (holder && form.gamma_f > 0.0)
        T.bottomRightCorner(nf, nf) = form.gamma_f * weighted_gram(full.chi.val, full.chi.val, full.w);
    T = 0.5 * (T + T.transpose()).eval();
    out.blocks.push_back({trace_indices(d, cell), std::move(T)});
    return out;
}

// Sparsity pattern from the union of element index sets.
Eigen::SparseMatrix<double> build_pattern(const Discretization& d, const std::vector<TimeData>& times) {
    const int n = d.size();
    std::vector<std::vector<int>> cols(n);
    auto add = [&](std::vector<int> idx) {
        idx.erase(std::remove(idx.begin(), idx.end(), -1), idx.end());
        for (int j : idx) cols[j].insert(cols[j].end(), idx.begin(), idx.end());
    };
    for (int cell = 0; cell < d.mesh->n_cells(); ++cell) {
        for (const TimeData& td : times) add(element_indices(d, cell, td));
        add(trace_indices(d, cell));
        // Keep the per-column lists short while accumulating.
        if ((cell + 1) % 16 == 0 || cell + 1 == d.mesh->n_cells()) {
            for (auto& c : cols) {
                std::sort(c.begin(), c.end());
                c.erase(std::unique(c.begin(), c.end()), c.end());
            }
        }
    }
    std::int64_t nnz = 0;
    for (const auto& c : cols) nnz += static_cast<std::int64_t>(c.size());
    Eigen::SparseMatrix<double> A(n, n);
    A.resizeNonZeros(static_cast<Eigen::Index>(nnz));
    int* outer = A.outerIndexPtr();
    int* inner = A.innerIndexPtr();
    double* val = A.valuePtr();
    std::int64_t k = 0;
    for (int j = 0; j < n; ++j) {
        outer[j] = static_cast<int>(k);
        for (int i : cols[j]) {
            inner[k] = i;
            val[k] = 0.0;
            ++k;
        }
    }
    outer[n] = static_cast<int>(k);
    return A;
}

void scatter(Eigen::SparseMatrix<double>& A, const ElementBlock& blk) {
    const int* outer = A.outerIndexPtr();
    const int* inner = A.innerIndexPtr();
    double* val = A.valuePtr();
    const int nl = static_cast<int>(blk.idx.size());
    for (int j = 0; j < nl; ++j) {
        const int col = blk.idx[j];
        if (col < 0) continue;
        const int* lo = inner + outer[col];
        const int* hi = inner + outer[col + 1];
        for (int i = 0; i < nl; ++i) {
            const int row = blk.idx[i];
            if (row < 0) continue;
            const int* p = std::lower_bound(lo, hi, row);
            if (p == hi || *p != row) throw InternalError("scatter: entry missing from the sparsity pattern");
            val[p - inner] += blk.m(i, j);
        }
    }
}

constexpr int kBatch = 64;

} // namespace

Eigen::SparseMatrix<double> assemble_matrix(const Discretization& d, const EllipticOperator& op,
                                            const SourceModulation& R, const FormParameters& form,
                                            Execution exec) {
    if (form.kind != d.kind) throw InvalidArgument("form kind does not match the discretization");
    if (form.gamma_f < 0.0 || form.gamma_u < 0.0) throw InvalidArgument("penalty weights must be nonnegative");
    if (!R.R || !R.dtR) throw InvalidArgument("source modulation callbacks missing");
    const auto times = make_time_data(d.u.time.fe(), d.time_degree);
    Eigen::SparseMatrix<double> A = build_pattern(d, times);
    const int nc = d.mesh->n_cells();

    if (exec == Execution::Serial) {
        for (int cell = 0; cell < nc; ++cell)
            for (const auto& blk : cell_matrix_blocks(d, op, R, form, times, cell).blocks) scatter(A, blk);
        return A;
    }
    // Element matrices are computed concurrently per batch and reduced in
    // cell order, which reproduces the serial sums bit for bit.
    std::vector<CellBlocks> batch;
    for (int start = 0; start < nc; start += kBatch) {
        const int stop = std::min(nc, start + kBatch);
        batch.assign(stop - start, {});
        for_each_index(exec, start, stop,
                       [&](int cell) { batch[cell - start] = cell_matrix_blocks(d, op, R, form, times, cell); });
        for (const auto& cb : batch)
            for (const auto& blk : cb.blocks) scatter(A, blk);
    }
    return A;
}

namespace {

struct CellRhs {
    std::vector<int> idx;
    Eigen::VectorXd v;
};

double require_value(const ObservationData::TimeField& fn, Point x, double t, const char* name) {
    if (!fn) throw InvalidArgument(std::string("observation data: missing ") + name);
    return fn(x, t);
}

std::vector<CellRhs> cell_rhs(const Discretization& d, const EllipticOperator& op, const ObservationData& data,
                              FormKind kind, const std::vector<TimeData>& times, int cell) {
    const auto& us = d.u.space.fe();
    const auto& noise = data.noise;
    const bool holder = kind == FormKind::Holder;
    const std::int64_t ntp = d.n_time_points();
    std::vector<CellRhs> out;

    const QuadratureRule obs_rule = us.cell_quadrature(cell, d.omega(), d.space_degree);
    if (obs_rule.size() > 0) {
        const BasisTable ot = us.tabulate(cell, obs_rule.points);
        const int ns = ot.n_local();
        const int nq = static_cast<int>(obs_rule.size());
        for (std::size_t n = 0; n < times.size(); ++n) {
            const TimeData& td = times[n];
            const int nr = static_cast<int>(td.w.size());
            Eigen::VectorXd v = Eigen::VectorXd::Zero(4 * ns);
            for (int q = 0; q < nq; ++q) {
                const Point x = obs_rule.points[q];
                for (int r = 0; r < nr; ++r) {
                    const double t = td.t[r];
                    const double w = obs_rule.weights[q] * td.w[r];
                    const auto key = static_cast<std::uint64_t>((d.omega_offset[cell] + q) * ntp +
                                                                static_cast<std::int64_t>(n) * nr + r);
                    const double qv = noise.apply(ObservedField::Q, key, require_value(data.q, x, t, "q"));
                    const double dq = noise.apply(ObservedField::DtQ, key, require_value(data.dtq, x, t, "dtq"));
                    double rx = 0, ry = 0, drx = 0, dry = 0;
                    if (holder) {
                        if (!data.has_gradient()) throw InvalidArgument("observation data: Hölder form needs r");
                        const auto g = data.r(x, t);
                        const auto dg = data.dtr(x, t);
                        rx = noise.apply(ObservedField::Rx, key, g[0]);
                        drx = noise.apply(ObservedField::DtRx, key, dg[0]);
                        if (ot.dim == 2) {
                            ry = noise.apply(ObservedField::Ry, key, g[1]);
                            dry = noise.apply(ObservedField::DtRy, key, dg[1]);
                        }
                    }
                    for (int ls = 0; ls < ns; ++ls) {
                        const double phi = ot.val(ls, q);
                        double c0 = qv * phi, c1 = dq * phi;
                        if (holder) {
                            c0 += rx * ot.grad[0](ls, q);
                            c1 += drx * ot.grad[0](ls, q);
                            if (ot.dim == 2) {
                                c0 += ry * ot.grad[1](ls, q);
                                c1 += dry * ot.grad[1](ls, q);
                            }
                        }
                        for (int lt = 0; lt < 4; ++lt)
                            v[ls * 4 + lt] += w * (c0 * td.psi(lt, r) + c1 * td.dpsi(lt, r));
                    }
                }
            }
            std::vector<int> idx = element_indices(d, cell, td);
            idx.resize(4 * ns);
            out.push_back({std::move(idx), std::move(v)});
        }
    }

    if (!data.p) throw InvalidArgument("observation data: missing p");
    const CellData full =
        make_cell_data(us, d.f.fe(), op, cell, us.cell_quadrature(cell, std::nullopt, d.space_degree), true);
    const int ns = full.phi.n_local();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ns);
    for (std::size_t q = 0; q < full.w.size(); ++q) {
        const auto key = static_cast<std::uint64_t>(d.full_offset[cell] + static_cast<std::int64_t>(q));
        const double pv = noise.apply(ObservedField::P, key, data.p(full.x[q]));
        v += (full.w[q] * pv) * full.Aphi.col(static_cast<Eigen::Index>(q));
    }
    std::vector<int> idx = trace_indices(d, cell);
    idx.resize(ns);
    out.push_back({std::move(idx), std::move(v)});
    return out;
}

} // namespace

Eigen::VectorXd assemble_rhs(const Discretization& d, const EllipticOperator& op, const ObservationData& data,
                             FormKind kind, Execution exec) {
    const auto times = make_time_data(d.u.time.fe(), d.time_degree);
    const int nc = d.mesh->n_cells();
    std::vector<std::vector<CellRhs>> parts(nc);
    for_each_index(exec, 0, nc, [&](int cell) { parts[cell] = cell_rhs(d, op, data, kind, times, cell); });
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d.size());
    for (const auto& cell_parts : parts)
        for (const auto& p : cell_parts)
            for (std::size_t i = 0; i < p.idx.size(); ++i)
                if (p.idx[i] >= 0) b[p.idx[i]] += p.v[static_cast<Eigen::Index>(i)];
    return b;
}

SystemBlocks assemble_lipschitz_system(const Discretization& d, const EllipticOperator& op,
                                       const SourceModulation& R, const ObservationData& data, Execution exec) {
    if (d.kind != FormKind::Lipschitz) throw InvalidArgument("Lipschitz form needs a constrained state space");
    SystemBlocks s;
    s.n_u = d.n_u();
    s.n_f = d.n_f();
    s.matrix = assemble_matrix(d, op, R, {FormKind::Lipschitz, 0.0, 0.0}, exec);
    s.rhs = assemble_rhs(d, op, data, FormKind::Lipschitz, exec);
    return s;
}

SystemBlocks assemble_holder_system(const Discretization& d, const EllipticOperator& op, const SourceModulation& R,
                                    const ObservationData& data, double gamma_f, double gamma_u, Execution exec) {
    if (d.kind != FormKind::Holder) throw InvalidArgument("Hölder form needs an unconstrained state space");
    SystemBlocks s;
    s.n_u = d.n_u();
    s.n_f = d.n_f();
    s.matrix = assemble_matrix(d, op, R, {FormKind::Holder, gamma_f, gamma_u}, exec);
    s.rhs = assemble_rhs(d, op, data, FormKind::Holder, exec);
    s.uniqueness_warning = gamma_f == 0.0 && gamma_u == 0.0;
    return s;
}

Eigen::SparseMatrix<double> SystemBlocks::block_uu() const { return matrix.block(0, 0, n_u, n_u); }
Eigen::SparseMatrix<double> SystemBlocks::block_uf() const { return matrix.block(0, n_u, n_u, n_f); }
Eigen::SparseMatrix<double> SystemBlocks::block_ff() const { return matrix.block(n_u, n_u, n_f, n_f); }

// -------------------------------------------------------------- evaluation

LValues apply_L(const TensorFunction& u, const EllipticOperator& op, Point x, double t) {
    const int dim = u.space.space.fe().dim();
    auto jet = [&](int dt) {
        Jet j;
        j.v = tensor_eval(u, x, t, {0, 0, dt});
        j.gx = tensor_eval(u, x, t, {1, 0, dt});
        j.hxx = tensor_eval(u, x, t, {2, 0, dt});
        if (dim == 2) {
            j.gy = tensor_eval(u, x, t, {0, 1, dt});
            j.hxy = tensor_eval(u, x, t, {1, 1, dt});
            j.hyy = tensor_eval(u, x, t, {0, 2, dt});
        }
        return j;
    };
    const auto k = op.at(x);
    LValues out;
    out.Lu = tensor_eval(u, x, t, {0, 0, 1}) + apply_operator(k, jet(0), dim);
    out.dtLu = tensor_eval(u, x, t, {0, 0, 2}) + apply_operator(k, jet(1), dim);
    return out;
}

namespace {

Eigen::MatrixXd local_coefficients(const TensorFunction& u, int cell, const TimeData& td) {
    const auto sd = u.space.space.fe().cell_dofs(cell);
    Eigen::MatrixXd C(sd.size(), 4);
    for (std::size_t i = 0; i < sd.size(); ++i)
        for (int k = 0; k < 4; ++k) C(static_cast<Eigen::Index>(i), k) = u.coefficients(sd[i], td.dofs[k]);
    return C;
}

Eigen::VectorXd local_values(const FeFunction& f, int cell) {
    const auto fd = f.space.fe().cell_dofs(cell);
    Eigen::VectorXd c(fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i) c[static_cast<Eigen::Index>(i)] = f.coefficients[fd[i]];
    return c;
}

} // namespace

ResidualNorms residual_norms(const TensorFunction& u, const FeFunction& f, const EllipticOperator& op,
                             const SourceModulation& R) {
    const auto& us = u.space.space.fe();
    const auto& fs = f.space.fe();
    if (us.n_cells() != fs.n_cells()) throw InvalidArgument("residual_norms: state and source meshes differ");
    const int sdeg = us.dim() == 1 ? 12 : kMaxTriangleDegree;
    const auto times = make_time_data(u.space.time.fe(), 9);
    double h1 = 0.0, l2 = 0.0;
    for (int cell = 0; cell < us.n_cells(); ++cell) {
        const CellData cd = make_cell_data(us, fs, op, cell, us.cell_quadrature(cell, std::nullopt, sdeg), true);
        const Eigen::VectorXd fv = cd.chi.val.transpose() * local_values(f, cell);
        for (const TimeData& td : times) {
            const Eigen::MatrixXd C = local_coefficients(u, cell, td);
            const Eigen::MatrixXd Lu = cd.phi.val.transpose() * C * td.dpsi + cd.Aphi.transpose() * C * td.psi;
            const Eigen::MatrixXd dLu = cd.phi.val.transpose() * C * td.ddpsi + cd.Aphi.transpose() * C * td.dpsi;
            for (std::size_t q = 0; q < cd.w.size(); ++q)
                for (std::size_t r = 0; r < td.w.size(); ++r) {
                    const double w = cd.w[q] * td.w[r];
                    const double g = Lu(q, r) - R.R(cd.x[q], td.t[r]) * fv[q];
                    const double gt = dLu(q, r) - R.dtR(cd.x[q], td.t[r]) * fv[q];
                    l2 += w * g * g;
                    h1 += w * (g * g + gt * gt);
                }
        }
    }
    return {std::sqrt(h1), std::sqrt(l2)};
}

double evaluate_functional(const Discretization& d, const TensorFunction& u, const FeFunction& f,
                           const EllipticOperator& op, const SourceModulation& R, const ObservationData& data,
                           const FormParameters& form) {
    const auto& us = d.u.space.fe();
    const auto& fs = d.f.fe();
    const auto& tfe = d.u.time.fe();
    const bool holder = form.kind == FormKind::Holder;
    const auto times = make_time_data(tfe, d.time_degree);
    const std::int64_t ntp = d.n_time_points();
    const auto& noise = data.noise;
    const int dim = us.dim();

    // Time basis at t0, tabulated on the interval ending at t0 when possible.
    const int t0_cell = std::max(0, d.t0_node - 1);
    const Point t0pt[1] = {{d.time.t0, 0.0}};
    const BasisTable t0tab = tfe.tabulate(t0_cell, t0pt);

    double fit = 0.0, grad_fit = 0.0, trace = 0.0, resid = 0.0, pen_f = 0.0, pen_u = 0.0;
    for (int cell = 0; cell < us.n_cells(); ++cell) {
        const CellData full =
            make_cell_data(us, fs, op, cell, us.cell_quadrature(cell, std::nullopt, d.space_degree), true);
        const Eigen::VectorXd fv = full.chi.val.transpose() * local_values(f, cell);
        const int nq = static_cast<int>(full.w.size());

        // Trace term at t0.
        {
            const auto sd = us.cell_dofs(cell);
            const auto td = tfe.cell_dofs(t0_cell);
            Eigen::VectorXd c0 = Eigen::VectorXd::Zero(sd.size());
            for (std::size_t i = 0; i < sd.size(); ++i)
                for (int k = 0; k < 4; ++k)
                    c0[static_cast<Eigen::Index>(i)] += u.coefficients(sd[i], td[k]) * t0tab.val(k, 0);
            const Eigen::VectorXd Au0 = full.Aphi.transpose() * c0;
            for (int q = 0; q < nq; ++q) {
                const auto key = static_cast<std::uint64_t>(d.full_offset[cell] + q);
                const double pv = noise.apply(ObservedField::P, key, data.p(full.x[q]));
                trace += full.w[q] * (Au0[q] - pv) * (Au0[q] - pv);
            }
        }
        if (holder) pen_f += (fv.array().square() * Eigen::Map<const Eigen::ArrayXd>(full.w.data(), nq)).sum();

        const QuadratureRule obs_rule = us.cell_quadrature(cell, d.omega(), d.space_degree);
        const BasisTable ot = us.tabulate(cell, obs_rule.points);
        for (std::size_t n = 0; n < times.size(); ++n) {
            const TimeData& td = times[n];
            const int nr = static_cast<int>(td.w.size());
            const Eigen::MatrixXd C = local_coefficients(u, cell, td);

            const Eigen::MatrixXd Lu = full.phi.val.transpose() * C * td.dpsi + full.Aphi.transpose() * C * td.psi;
            const Eigen::MatrixXd dLu =
                full.phi.val.transpose() * C * td.ddpsi + full.Aphi.transpose() * C * td.dpsi;
            for (int q = 0; q < nq; ++q)
                for (int r = 0; r < nr; ++r) {
                    const double g = Lu(q, r) - R.R(full.x[q], td.t[r]) * fv[q];
                    const double gt = dLu(q, r) - R.dtR(full.x[q], td.t[r]) * fv[q];
                    resid += full.w[q] * td.w[r] * (g * g + gt * gt);
                }

            if (obs_rule.size() > 0) {
                const Eigen::MatrixXd uv = ot.val.transpose() * C * td.psi;
                const Eigen::MatrixXd ut = ot.val.transpose() * C * td.dpsi;
                const Eigen::MatrixXd gx = ot.grad[0].transpose() * C * td.psi;
                const Eigen::MatrixXd gxt = ot.grad[0].transpose() * C * td.dpsi;
                Eigen::MatrixXd gy, gyt;
                if (dim == 2) {
                    gy = ot.grad[1].transpose() * C * td.psi;
                    gyt = ot.grad[1].transpose() * C * td.dpsi;
                }
                for (int q = 0; q < static_cast<int>(obs_rule.size()); ++q) {
                    const Point x = obs_rule.points[q];
                    for (int r = 0; r < nr; ++r) {
                        const double t = td.t[r];
                        const double w = obs_rule.weights[q] * td.w[r];
                        const auto key = static_cast<std::uint64_t>((d.omega_offset[cell] + q) * ntp +
                                                                    static_cast<std::int64_t>(n) * nr + r);
                        const double qv = noise.apply(ObservedField::Q, key, data.q(x, t));
                        const double dq = noise.apply(ObservedField::DtQ, key, data.dtq(x, t));
                        fit += w * ((uv(q, r) - qv) * (uv(q, r) - qv) + (ut(q, r) - dq) * (ut(q, r) - dq));
                        if (holder) {
                            const auto g = data.r(x, t);
                            const auto dg = data.dtr(x, t);
                            const double ex = gx(q, r) - noise.apply(ObservedField::Rx, key, g[0]);
                            const double ext = gxt(q, r) - noise.apply(ObservedField::DtRx, key, dg[0]);
                            grad_fit += w * (ex * ex + ext * ext);
                            if (dim == 2) {
                                const double ey = gy(q, r) - noise.apply(ObservedField::Ry, key, g[1]);
                                const double eyt = gyt(q, r) - noise.apply(ObservedField::DtRy, key, dg[1]);
                                grad_fit += w * (ey * ey + eyt * eyt);
                            }
                        }
                    }
                }
            }

            if (holder && form.gamma_u > 0.0) {
                // Space components: value, gradient, Hessian (mixed term twice).
                std::vector<std::pair<const Eigen::MatrixXd*, double>> s01 = {{&full.phi.val, 1.0},
                                                                              {&full.phi.grad[0], 1.0}};
                std::vector<std::pair<const Eigen::MatrixXd*, double>> s2 = {{&full.phi.hess[0], 1.0}};
                if (dim == 2) {
                    s01.push_back({&full.phi.grad[1], 1.0});
                    s2.push_back({&full.phi.hess[1], 2.0});
                    s2.push_back({&full.phi.hess[2], 1.0});
                }
                auto sq = [&](const Eigen::MatrixXd& S, const Eigen::MatrixXd& T) {
                    const Eigen::MatrixXd v = S.transpose() * C * T;
                    double s = 0.0;
                    for (int q = 0; q < nq; ++q)
                        for (int r = 0; r < nr; ++r) s += full.w[q] * td.w[r] * v(q, r) * v(q, r);
                    return s;
                };
                // ||u||_{H1(I;H2)}^2 + ||u||_{H2(I;H1)}^2
                for (const auto* T : {&td.psi, &td.dpsi}) {
                    for (const auto& [S, c] : s01) pen_u += 2.0 * c * sq(*S, *T);
                    for (const auto& [S, c] : s2) pen_u += c * sq(*S, *T);
                }
                for (const auto& [S, c] : s01) pen_u += c * sq(*S, td.ddpsi);
            }
        }
    }
    double J = 0.5 * (fit + trace + resid);
    if (holder) J += 0.5 * (grad_fit + form.gamma_f * pen_f + form.gamma_u * pen_u);
    return J;
}

void export_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& m) {
    os << "% " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    os.precision(17);
    for (int j = 0; j < m.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace parasrc
