#include "oracles.hpp"

#include "parasrc/linsolve.hpp"
#include "parasrc/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace parasrc::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

double dof_functional(const BasisTable& t, int i, const GlobalDof& dof) {
    using K = DofDescriptor::Kind;
    switch (dof.kind) {
    case K::Value: return t.val(i, 0);
    case K::Dx: return t.grad[0](i, 0);
    case K::Dy: return t.grad[1](i, 0);
    case K::Dxx: return t.hess[0](i, 0);
    case K::Dxy: return t.hess[1](i, 0);
    case K::Dyy: return t.hess[2](i, 0);
    case K::Normal: return dof.normal.x * t.grad[0](i, 0) + dof.normal.y * t.grad[1](i, 0);
    }
    return 0.0;
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = u(gen);
    return v;
}

// Values and first derivatives of sum_i c_i phi_i at p, seen from `cell`.
std::array<double, 3> local_jet(const FiniteElementSpace& fe, const Eigen::VectorXd& c, int cell, Point p) {
    const Point pts[1] = {p};
    const BasisTable t = fe.tabulate(cell, pts);
    const auto dofs = fe.cell_dofs(cell);
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        out[0] += c[dofs[i]] * t.val(i, 0);
        out[1] += c[dofs[i]] * t.grad[0](i, 0);
        if (t.dim == 2) out[2] += c[dofs[i]] * t.grad[1](i, 0);
    }
    return out;
}

struct Grams1D {
    Eigen::MatrixXd M, Momega, K, S; // u-space, free DOFs
    Eigen::MatrixXd Mchi, Cphi, CA;  // f-space couplings
};

Grams1D space_grams(const Discretization& d) {
    const auto& fe = d.u.space.fe();
    const auto& fw = d.f.fe();
    const int n = fe.n_dofs(), m = fw.n_dofs();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n), Mo = M, K = M, S = M;
    Eigen::MatrixXd Mchi = Eigen::MatrixXd::Zero(m, m), Cphi = Eigen::MatrixXd::Zero(n, m), CA = Cphi;
    const QuadratureRule ref = gauss_rule_1d(11);
    const Box omega = d.omega();
    for (int cell = 0; cell < fe.n_cells(); ++cell) {
        const auto v = d.mesh->cell_vertices(cell);
        const double a = d.mesh->vertex(v[0]).x, b = d.mesh->vertex(v[1]).x;
        const QuadratureRule r = map_to_interval(ref, a, b);
        const BasisTable t = fe.tabulate(cell, r.points);
        const BasisTable w = fw.tabulate(cell, r.points);
        const auto sd = fe.cell_dofs(cell);
        const auto fd = fw.cell_dofs(cell);
        const bool inside = 0.5 * (a + b) > omega.x0 && 0.5 * (a + b) < omega.x1;
        for (std::size_t q = 0; q < r.size(); ++q) {
            const double wq = r.weights[q];
            for (std::size_t i = 0; i < sd.size(); ++i) {
                const double pi = t.val(i, q), Api = -t.hess[0](i, q);
                for (std::size_t j = 0; j < sd.size(); ++j) {
                    const double pj = t.val(j, q), Apj = -t.hess[0](j, q);
                    M(sd[i], sd[j]) += wq * pi * pj;
                    if (inside) Mo(sd[i], sd[j]) += wq * pi * pj;
                    K(sd[i], sd[j]) += wq * Api * pj;
                    S(sd[i], sd[j]) += wq * Api * Apj;
                }
                for (std::size_t c = 0; c < fd.size(); ++c) {
                    Cphi(sd[i], fd[c]) += wq * pi * w.val(c, q);
                    CA(sd[i], fd[c]) += wq * Api * w.val(c, q);
                }
            }
            for (std::size_t c = 0; c < fd.size(); ++c)
                for (std::size_t e = 0; e < fd.size(); ++e) Mchi(fd[c], fd[e]) += wq * w.val(c, q) * w.val(e, q);
        }
    }
    const auto& free = d.u.space.free_to_global();
    const int nf = static_cast<int>(free.size());
    auto restrict = [&](const Eigen::MatrixXd& A) {
        Eigen::MatrixXd B(nf, nf);
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j) B(i, j) = A(free[i], free[j]);
        return B;
    };
    Grams1D g;
    g.M = restrict(M);
    g.Momega = restrict(Mo);
    g.K = restrict(K);
    g.S = restrict(S);
    const auto& ffree = d.f.free_to_global();
    const int mf = static_cast<int>(ffree.size());
    g.Mchi.resize(mf, mf);
    g.Cphi.resize(nf, mf);
    g.CA.resize(nf, mf);
    for (int c = 0; c < mf; ++c) {
        for (int e = 0; e < mf; ++e) g.Mchi(c, e) = Mchi(ffree[c], ffree[e]);
        for (int i = 0; i < nf; ++i) {
            g.Cphi(i, c) = Cphi(free[i], ffree[c]);
            g.CA(i, c) = CA(free[i], ffree[c]);
        }
    }
    return g;
}

struct TimeGrams {
    Eigen::MatrixXd T0, T1, T2, X, Y;
    Eigen::VectorXd b0, b1;
};

TimeGrams time_grams(const Discretization& d) {
    const auto& fe = d.u.time.fe();
    const int n = fe.n_dofs();
    TimeGrams g;
    g.T0 = g.T1 = g.T2 = g.X = g.Y = Eigen::MatrixXd::Zero(n, n);
    g.b0 = g.b1 = Eigen::VectorXd::Zero(n);
    const QuadratureRule ref = gauss_rule_1d(11);
    for (int cell = 0; cell < fe.n_cells(); ++cell) {
        const double a = d.time.nodes[cell], b = d.time.nodes[cell + 1];
        const QuadratureRule r = map_to_interval(ref, a, b);
        const BasisTable t = fe.tabulate(cell, r.points);
        const auto dofs = fe.cell_dofs(cell);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const double w = r.weights[q];
            for (std::size_t k = 0; k < 4; ++k) {
                g.b0[dofs[k]] += w * t.val(k, q);
                g.b1[dofs[k]] += w * t.grad[0](k, q);
                for (std::size_t l = 0; l < 4; ++l) {
                    g.T0(dofs[k], dofs[l]) += w * t.val(k, q) * t.val(l, q);
                    g.T1(dofs[k], dofs[l]) += w * t.grad[0](k, q) * t.grad[0](l, q);
                    g.T2(dofs[k], dofs[l]) += w * t.hess[0](k, q) * t.hess[0](l, q);
                    g.X(dofs[k], dofs[l]) += w * t.grad[0](k, q) * t.val(l, q);
                    g.Y(dofs[k], dofs[l]) += w * t.hess[0](k, q) * t.grad[0](l, q);
                }
            }
        }
    }
    return g;
}

ProblemConfig small_config(int n_cells, int n_intervals, FormKind kind) {
    ProblemConfig c = example_config(1);
    c.h_den = n_cells;
    c.tau_den = static_cast<int>(std::lround(n_intervals / (2.0 * c.zeta)));
    c.mode = kind;
    return c;
}

} // namespace

double gauss_monomial_error(int degree) {
    const QuadratureRule r = gauss_rule_1d(degree);
    double worst = 0.0;
    for (int k = 0; k <= degree; ++k) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q].x, k);
        const double exact = 1.0 / (k + 1);
        worst = std::max(worst, std::abs(s - exact) / exact);
    }
    return worst;
}

double triangle_monomial_error(int degree) {
    const QuadratureRule r = triangle_rule(degree);
    double worst = 0.0;
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q)
                s += r.weights[q] * std::pow(r.points[q].x, a) * std::pow(r.points[q].y, b);
            // int_T x^a y^b = a! b! / (a + b + 2)!
            const double exact = std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
            worst = std::max(worst, std::abs(s - exact) / exact);
        }
    return worst;
}

double kronecker_identity_error(const FiniteElementSpace& fe) {
    const auto& dofs = fe.global_dofs();
    double worst = 0.0;
    for (std::size_t j = 0; j < dofs.size(); ++j) {
        const int cell = fe.locate(dofs[j].location);
        const Point pts[1] = {dofs[j].location};
        const BasisTable t = fe.tabulate(cell, pts);
        const auto local = fe.cell_dofs(cell);
        bool found = false;
        for (std::size_t i = 0; i < local.size(); ++i) {
            const double expected = static_cast<std::size_t>(local[i]) == j ? 1.0 : 0.0;
            found = found || expected == 1.0;
            worst = std::max(worst, std::abs(dof_functional(t, static_cast<int>(i), dofs[j]) - expected));
        }
        if (!found) worst = std::max(worst, 1.0);
    }
    return worst;
}

double interface_jump(const FiniteElementSpace& fe, unsigned seed) {
    const Eigen::VectorXd c = random_vector(fe.n_dofs(), seed);
    double worst = 0.0;
    auto compare = [&](int c0, int c1, Point p) {
        const auto a = local_jet(fe, c, c0, p), b = local_jet(fe, c, c1, p);
        for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    };
    if (const auto* tri = dynamic_cast<const ArgyrisSpace*>(&fe)) {
        for (const auto& e : tri->mesh().edges()) {
            if (e.boundary) continue;
            const Point a = tri->mesh().vertex(e.v[0]), b = tri->mesh().vertex(e.v[1]);
            for (double s : {0.13, 0.5, 0.77}) compare(e.triangles[0], e.triangles[1], a + s * (b - a));
        }
    } else if (fe.dim() == 1) {
        for (int cell = 0; cell + 1 < fe.n_cells(); ++cell) {
            const int shared = fe.cell_dofs(cell + 1)[0];
            compare(cell, cell + 1, fe.global_dofs()[shared].location);
        }
    }
    return worst;
}

double projection_idempotence_error(const DofSpace& space, unsigned seed) {
    FeFunction g{space, Eigen::VectorXd::Zero(space.n_dofs())};
    const Eigen::VectorXd r = random_vector(space.n_free(), seed);
    for (int i = 0; i < space.n_free(); ++i) g.coefficients[space.free_to_global()[i]] = r[i];
    const FeFunction p = project_l2(space, [&](Point x) { return g.evaluate(x); });
    return (p.coefficients - g.coefficients).cwiseAbs().maxCoeff() / g.coefficients.cwiseAbs().maxCoeff();
}

namespace {

std::vector<double> uniform_nodes(int n) {
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i) x[i] = static_cast<double>(i) / n;
    return x;
}

double sine(Point p) { return std::sin(kPi * p.x); }

} // namespace

double projection_order_1d(int n) {
    auto err = [](int m) {
        const DofSpace s(std::make_shared<P1Space1D>(uniform_nodes(m)));
        return source_error(project_l2(s, sine), sine, std::nullopt);
    };
    return std::log2(err(n) / err(2 * n));
}

double hermite_interpolation_order(int n) {
    auto err = [](int m) {
        const DofSpace s(std::make_shared<Hermite1DSpace>(uniform_nodes(m)));
        const SpaceField fn = [](Point p, Derivative d) {
            return d.dx == 0 ? std::sin(kPi * p.x) : kPi * std::cos(kPi * p.x);
        };
        return source_error(interpolate(s, fn), sine, std::nullopt);
    };
    return std::log2(err(n) / err(2 * n));
}

Discretization small_discretization(int n_cells, int n_intervals, FormKind kind) {
    return make_discretization(small_config(n_cells, n_intervals, kind));
}

double kronecker_assembly_error(int n_cells, int n_intervals) {
    const Discretization d = small_discretization(n_cells, n_intervals, FormKind::Lipschitz);
    const double r = 2.0;
    const Eigen::SparseMatrix<double> Bs =
        assemble_matrix(d, EllipticOperator::negative_laplacian(), SourceModulation::constant(r), FormParameters{});
    const Eigen::MatrixXd B(Bs);

    const Grams1D s = space_grams(d);
    const TimeGrams t = time_grams(d);
    const int nt = static_cast<int>(t.T0.rows());
    Eigen::MatrixXd E0 = Eigen::MatrixXd::Zero(nt, nt);
    E0(2 * d.t0_node, 2 * d.t0_node) = 1.0;
    const Eigen::MatrixXd XY = t.X + t.Y;
    Eigen::MatrixXd Buu = Eigen::kroneckerProduct(s.M, t.T1 + t.T2).eval();
    Buu += Eigen::kroneckerProduct(s.S, t.T0 + t.T1 + E0);
    Buu += Eigen::kroneckerProduct(Eigen::MatrixXd(s.K.transpose()), XY);
    Buu += Eigen::kroneckerProduct(s.K, Eigen::MatrixXd(XY.transpose()));
    Buu += Eigen::kroneckerProduct(s.Momega, t.T0 + t.T1);
    const Eigen::MatrixXd Buf = -r * (Eigen::kroneckerProduct(s.Cphi, Eigen::MatrixXd(t.b1)) +
                                      Eigen::kroneckerProduct(s.CA, Eigen::MatrixXd(t.b0)));
    const Eigen::MatrixXd Bff = r * r * (d.time.end() - d.time.start()) * s.Mchi;

    const int nu = d.n_u();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(B.rows(), B.cols());
    K.topLeftCorner(nu, nu) = Buu;
    K.topRightCorner(nu, d.n_f()) = Buf;
    K.bottomLeftCorner(d.n_f(), nu) = Buf.transpose();
    K.bottomRightCorner(d.n_f(), d.n_f()) = Bff;
    return (B - K).cwiseAbs().maxCoeff() / B.cwiseAbs().maxCoeff();
}

SymmetryReport symmetry_psd(const Eigen::SparseMatrix<double>& Bs) {
    const Eigen::MatrixXd B(Bs);
    SymmetryReport r;
    const double scale = B.cwiseAbs().maxCoeff();
    r.asymmetry = (B - B.transpose()).cwiseAbs().maxCoeff() / scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    r.min_eig_ratio = es.eigenvalues()[0] / es.eigenvalues()[B.rows() - 1];
    return r;
}

double stationarity_defect(int n_cells, int n_intervals, FormKind kind, double gamma_f, double gamma_u) {
    ProblemConfig c = small_config(n_cells, n_intervals, kind);
    c.gamma_f = gamma_f;
    c.gamma_u = gamma_u;
    const ProblemSetup setup = synthesize_data_analytic(c);
    const Discretization d = make_discretization(c);
    const FormParameters form{kind, gamma_f, gamma_u};
    const SystemBlocks sys = kind == FormKind::Lipschitz
                                 ? assemble_lipschitz_system(d, setup.op, setup.R, setup.data)
                                 : assemble_holder_system(d, setup.op, setup.R, setup.data, gamma_f, gamma_u);
    SolveOptions so;
    so.estimate_condition = false;
    const Eigen::VectorXd x = solve_spd(sys, so).solution;

    auto J = [&](const Eigen::VectorXd& z) {
        const TensorFunction u = TensorFunction::from_free_vector(d.u, z.head(d.n_u()));
        FeFunction f{d.f, Eigen::VectorXd::Zero(d.f.n_dofs())};
        for (int i = 0; i < d.n_f(); ++i) f.coefficients[d.f.free_to_global()[i]] = z[d.n_u() + i];
        return evaluate_functional(d, u, f, setup.op, setup.R, setup.data, form);
    };
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 3; ++seed) {
        Eigen::VectorXd z = random_vector(d.size(), seed);
        z *= x.norm() / z.norm();
        const double eps = 1e-3;
        const double slope = (J(x + eps * z) - J(x - eps * z)) / (2.0 * eps);
        const double scale = std::abs(z.dot(sys.rhs));
        worst = std::max(worst, std::abs(slope) / scale);
    }
    return worst;
}

double consistency_error(int h_den, int tau_den) {
    ProblemConfig c;
    c.h_den = h_den;
    c.tau_den = tau_den;
    ProblemSetup s;
    s.op = EllipticOperator::negative_laplacian();
    s.R = SourceModulation::constant(1.0);
    s.f_true = [](Point p) { return 6.0 * p.x; };
    s.data.q = [](Point p, double) { return p.x - p.x * p.x * p.x; };
    s.data.dtq = [](Point, double) { return 0.0; };
    s.data.p = [](Point p) { return 6.0 * p.x; };
    s.data.r = [](Point p, double) { return std::array<double, 2>{1.0 - 3.0 * p.x * p.x, 0.0}; };
    s.data.dtr = [](Point, double) { return std::array<double, 2>{0.0, 0.0}; };
    s.state = [](Point p, double, Derivative d) {
        if (d.dt > 0) return 0.0;
        switch (d.dx) {
        case 0: return p.x - p.x * p.x * p.x;
        case 1: return 1.0 - 3.0 * p.x * p.x;
        case 2: return -6.0 * p.x;
        default: return 0.0;
        }
    };
    RunOptions o;
    o.solve.estimate_condition = false;
    return run_reconstruction(c, s, o).error;
}

} // namespace parasrc::oracle
