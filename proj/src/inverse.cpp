#include "parasrc/inverse.hpp"

#include "parasrc/error.hpp"
#include "parasrc/forward.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace parasrc {

namespace {

constexpr double kPi = std::numbers::pi;

int checked_count(double length, int den, const char* what) {
    const double n = length * den;
    const long r = std::lround(n);
    if (r < 1 || std::abs(n - static_cast<double>(r)) > 1e-9 * std::max(1.0, n))
        throw InvalidArgument(std::string(what) + " does not divide the interval into whole cells");
    return static_cast<int>(r);
}

EllipticOperator constant_operator(double diffusion, double reaction) {
    EllipticOperator op;
    op.a = [diffusion](Point) { return std::array<double, 3>{diffusion, 0.0, diffusion}; };
    if (reaction != 0.0) op.c = [reaction](Point) { return reaction; };
    op.mu = std::min(diffusion, 1.0 / diffusion);
    return op;
}

// Spatial factor S(x) = prod_i sin(k pi (x_i - a_i) / L_i) and its derivatives.
struct SineProduct {
    int dim;
    Box box;
    int k;

    double kx() const { return k * kPi / box.width(); }
    double ky() const { return k * kPi / box.height(); }

    double value(Point p) const { return deriv(p, 0, 0); }
    double deriv(Point p, int dx, int dy) const {
        auto factor = [](double kk, double s, int d) {
            switch (d % 4) {
            case 0: return std::pow(kk, d) * std::sin(s);
            case 1: return std::pow(kk, d) * std::cos(s);
            case 2: return -std::pow(kk, d) * std::sin(s);
            default: return -std::pow(kk, d) * std::cos(s);
            }
        };
        double v = factor(kx(), kx() * (p.x - box.x0), dx);
        if (dim == 2) v *= factor(ky(), ky() * (p.y - box.y0), dy);
        return v;
    }
    /// -Laplacian(S) = eig * S.
    double eig() const { return kx() * kx() + (dim == 2 ? ky() * ky() : 0.0); }
};

std::optional<Box> error_region(const ProblemConfig& c) {
    if (c.mode == FormKind::Lipschitz) return std::nullopt;
    return c.omega0.value_or(c.omega);
}

FeFunction extract_source(const Discretization& d, const Eigen::VectorXd& x) {
    FeFunction f{d.f, Eigen::VectorXd::Zero(d.f.n_dofs())};
    for (int i = 0; i < d.n_f(); ++i) f.coefficients[d.f.free_to_global()[i]] = x[d.n_u() + i];
    return f;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

ProblemConfig example_config(int example) {
    ProblemConfig c;
    c.example = example;
    switch (example) {
    case 1:
        break;
    case 2:
        c.t0 = 1.0;
        c.zeta = 0.5;
        c.truth = TruthKind::Forward;
        c.forward_start = c.t0 - c.zeta;
        c.h_den = 20;
        c.tau_den = 12;
        break;
    case 3:
        c.dim = 2;
        c.h_den = 4;
        c.tau_den = 10;
        break;
    default:
        throw InvalidArgument("unknown example " + std::to_string(example) + " (expected 1, 2 or 3)");
    }
    return c;
}

void validate(const ProblemConfig& c) {
    if (c.dim != 1 && c.dim != 2) throw InvalidArgument("dim must be 1 or 2");
    if (!(c.domain.width() > 0.0) || (c.dim == 2 && !(c.domain.height() > 0.0)))
        throw InvalidArgument("empty domain");
    auto inside = [&](const Box& b) {
        const bool x = b.x0 >= c.domain.x0 && b.x1 <= c.domain.x1 && b.x1 > b.x0;
        return c.dim == 1 ? x : x && b.y0 >= c.domain.y0 && b.y1 <= c.domain.y1 && b.y1 > b.y0;
    };
    if (!inside(c.omega)) throw InvalidArgument("omega must be a nonempty box inside the domain");
    if (c.omega0 && !inside(*c.omega0)) throw InvalidArgument("omega0 must be a nonempty box inside the domain");
    if (!(c.zeta > 0.0)) throw InvalidArgument("zeta must be positive");
    if (!(c.diffusion > 0.0)) throw InvalidArgument("diffusion must be positive");
    if (c.h_den < 1 || c.tau_den < 1) throw InvalidArgument("mesh denominators must be positive");
    if (c.wave < 1) throw InvalidArgument("wave number must be positive");
    if (!(c.delta >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
    if (!(c.gamma_f >= 0.0) || !(c.gamma_u >= 0.0)) throw InvalidArgument("regularization parameters must be nonnegative");
    if (c.mode == FormKind::Lipschitz && (c.gamma_f != 0.0 || c.gamma_u != 0.0))
        throw InvalidArgument("regularization parameters apply to the Hölder mode only");
    if (c.truth == TruthKind::Forward && c.dim != 1) throw InvalidArgument("forward data synthesis is 1D only");
    if (c.truth == TruthKind::Forward && c.fine_factor < 4) throw InvalidArgument("fine_factor must be at least 4");
    checked_count(c.domain.width(), c.h_den, "h");
    if (c.dim == 2) checked_count(c.domain.height(), c.h_den, "h");
    checked_count(2.0 * c.zeta, c.tau_den, "tau");
}

ProblemSetup synthesize_data_analytic(const ProblemConfig& c) {
    const SineProduct s{c.dim, c.domain, c.wave};
    const double lambda = c.diffusion * s.eig() + c.reaction;
    const double t0 = c.t0;
    ProblemSetup p;
    p.op = constant_operator(c.diffusion, c.reaction);
    p.R = SourceModulation::of_time(
        [lambda](double t) { return kPi * std::cos(kPi * t) + lambda * std::sin(kPi * t); },
        [lambda](double t) { return -kPi * kPi * std::sin(kPi * t) + lambda * kPi * std::cos(kPi * t); });
    p.f_true = [s](Point x) { return s.value(x); };
    p.data.q = [s](Point x, double t) { return std::sin(kPi * t) * s.value(x); };
    p.data.dtq = [s](Point x, double t) { return kPi * std::cos(kPi * t) * s.value(x); };
    p.data.p = [s, lambda, t0](Point x) { return lambda * std::sin(kPi * t0) * s.value(x); };
    p.data.r = [s](Point x, double t) {
        const double a = std::sin(kPi * t);
        return std::array<double, 2>{a * s.deriv(x, 1, 0), a * s.deriv(x, 0, 1)};
    };
    p.data.dtr = [s](Point x, double t) {
        const double a = kPi * std::cos(kPi * t);
        return std::array<double, 2>{a * s.deriv(x, 1, 0), a * s.deriv(x, 0, 1)};
    };
    p.state = [s](Point x, double t, Derivative d) {
        const double a = d.dt == 0 ? std::sin(kPi * t) : kPi * std::cos(kPi * t);
        if (d.dt > 1) throw InvalidArgument("state: time derivative order above 1");
        return a * s.deriv(x, d.dx, d.dy);
    };
    p.dirichlet_truth = true;
    return p;
}

ProblemSetup synthesize_data_forward(const ProblemConfig& c, int fine_factor) {
    if (c.dim != 1) throw InvalidArgument("forward data synthesis is 1D only");
    if (fine_factor < 4) throw InvalidArgument("fine_factor must be at least 4");
    const int n = checked_count(c.domain.width(), c.h_den, "h");
    const SpaceMesh1D mesh(c.domain.x0, c.domain.x1, n, c.omega);
    const SineProduct s{1, c.domain, c.wave};
    const DofSpace w(std::make_shared<P1Space1D>(mesh.nodes()));
    auto pif = std::make_shared<FeFunction>(project_l2(w, [s](Point x) { return s.value(x); }));

    ForwardProblem fp;
    fp.a = c.domain.x0;
    fp.b = c.domain.x1;
    fp.op = constant_operator(c.diffusion, c.reaction);
    fp.f = [pif](Point x) { return pif->evaluate(x); };
    fp.R = 1.0;
    fp.t_start = c.forward_start;
    fp.n_cells = n * fine_factor;
    if (c.t0 - c.zeta < fp.t_start) throw InvalidArgument("observation window starts before the forward simulation");
    const auto sol = solve_forward(fp);

    ProblemSetup p;
    p.op = fp.op;
    p.R = SourceModulation::constant(1.0);
    p.f_true = fp.f;
    p.data.q = [sol](Point x, double t) { return sol->value(x, t, {}); };
    p.data.dtq = [sol](Point x, double t) { return sol->value(x, t, {0, 0, 1}); };
    const double t0 = c.t0;
    // Au(t0) = R f - u_t(t0).
    p.data.p = [sol, pif, t0](Point x) { return pif->evaluate(x) - sol->value(x, t0, {0, 0, 1}); };
    p.data.r = [sol](Point x, double t) { return std::array<double, 2>{sol->value(x, t, {1, 0, 0}), 0.0}; };
    p.data.dtr = [sol](Point x, double t) { return std::array<double, 2>{sol->value(x, t, {1, 0, 1}), 0.0}; };
    p.state = [sol](Point x, double t, Derivative d) { return d.dy == 0 ? sol->value(x, t, d) : 0.0; };
    p.dirichlet_truth = true;
    return p;
}

ProblemSetup make_problem(const ProblemConfig& c) {
    validate(c);
    return c.truth == TruthKind::Forward ? synthesize_data_forward(c, c.fine_factor) : synthesize_data_analytic(c);
}

ObservationData realize_noise(const ProblemConfig& c, const ProblemSetup& setup, const Discretization& d) {
    if (c.delta == 0.0) return setup.data;
    if (c.noise_placement == NoisePlacement::QuadraturePoint) return inject_noise(setup.data, c.delta, c.seed);
    if (!setup.state) throw InvalidArgument("nodal noise needs the exact state");

    const TensorSpace full{DofSpace(d.u.space.fe_ptr()), d.u.time};
    auto u = std::make_shared<TensorFunction>(interpolate_tensor(full, setup.state));
    const NoiseModel noise(c.delta, c.seed);
    const int nt = full.n_time();
    for (Eigen::Index i = 0; i < u->coefficients.rows(); ++i)
        for (int k = 0; k < nt; ++k)
            u->coefficients(i, k) =
                noise.apply(ObservedField::Q, static_cast<std::uint64_t>(i) * nt + k, u->coefficients(i, k));

    const int dim = d.mesh->dim();
    const double t0 = d.time.t0;
    const EllipticOperator op = setup.op;
    ObservationData data;
    data.q = [u](Point x, double t) { return tensor_eval(*u, x, t, {}); };
    data.dtq = [u](Point x, double t) { return tensor_eval(*u, x, t, {0, 0, 1}); };
    data.r = [u, dim](Point x, double t) {
        return std::array<double, 2>{tensor_eval(*u, x, t, {1, 0, 0}), dim == 2 ? tensor_eval(*u, x, t, {0, 1, 0}) : 0.0};
    };
    data.dtr = [u, dim](Point x, double t) {
        return std::array<double, 2>{tensor_eval(*u, x, t, {1, 0, 1}), dim == 2 ? tensor_eval(*u, x, t, {0, 1, 1}) : 0.0};
    };
    data.p = [u, op, dim, t0](Point x) {
        Jet j;
        j.v = tensor_eval(*u, x, t0, {});
        j.gx = tensor_eval(*u, x, t0, {1, 0, 0});
        j.hxx = tensor_eval(*u, x, t0, {2, 0, 0});
        if (dim == 2) {
            j.gy = tensor_eval(*u, x, t0, {0, 1, 0});
            j.hxy = tensor_eval(*u, x, t0, {1, 1, 0});
            j.hyy = tensor_eval(*u, x, t0, {0, 2, 0});
        }
        return apply_operator(op.at(x), j, dim);
    };
    return data;
}

Discretization make_discretization(const ProblemConfig& c) {
    validate(c);
    const TimeGrid time = build_time_grid(c.t0, c.zeta, checked_count(2.0 * c.zeta, c.tau_den, "tau"));
    std::shared_ptr<const SpaceMesh> mesh;
    if (c.dim == 1) {
        mesh = std::make_shared<SpaceMesh1D>(c.domain.x0, c.domain.x1, checked_count(c.domain.width(), c.h_den, "h"),
                                             c.omega);
    } else {
        mesh = std::make_shared<TriMesh>(build_trimesh_congruent(checked_count(c.domain.width(), c.h_den, "h"),
                                                                 checked_count(c.domain.height(), c.h_den, "h"),
                                                                 c.omega, c.domain));
    }
    return make_discretization(mesh, time, c.mode);
}

double source_error(const FeFunction& f, const PointFunction& f_true, const std::optional<Box>& region) {
    const auto& fe = f.space.fe();
    const int degree = fe.dim() == 1 ? 12 : kMaxTriangleDegree;
    double e = 0.0;
    for (int cell = 0; cell < fe.n_cells(); ++cell) {
        const QuadratureRule rule = fe.cell_quadrature(cell, region, degree);
        if (rule.size() == 0) continue;
        const BasisTable t = fe.tabulate(cell, rule.points);
        const auto dofs = fe.cell_dofs(cell);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double v = 0.0;
            for (std::size_t i = 0; i < dofs.size(); ++i) v += f.coefficients[dofs[i]] * t.val(i, q);
            const double d = f_true(rule.points[q]) - v;
            e += rule.weights[q] * d * d;
        }
    }
    return std::sqrt(e);
}

ExperimentReport run_reconstruction(const ProblemConfig& config, const RunOptions& options) {
    return run_reconstruction(config, make_problem(config), options);
}

ExperimentReport run_reconstruction(const ProblemConfig& c, const ProblemSetup& setup, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    validate(c);
    if (c.mode == FormKind::Lipschitz && !setup.dirichlet_truth)
        throw InvalidArgument("Lipschitz mode needs an exact state with homogeneous Dirichlet trace");
    const Discretization d = make_discretization(c);
    const ObservationData data = realize_noise(c, setup, d);
    const SystemBlocks blocks =
        c.mode == FormKind::Lipschitz
            ? assemble_lipschitz_system(d, setup.op, setup.R, data, options.execution)
            : assemble_holder_system(d, setup.op, setup.R, data, c.gamma_f, c.gamma_u, options.execution);
    const SymmetricSolver solver(blocks.matrix);
    const SolveReport sr = solver.solve(blocks.rhs, options.solve);

    ExperimentReport r;
    r.config = c;
    r.f = extract_source(d, sr.solution);
    r.error = source_error(r.f, setup.f_true, error_region(c));
    const TensorFunction u = TensorFunction::from_free_vector(d.u, sr.solution.head(d.n_u()));
    const ResidualNorms rn = residual_norms(u, r.f, setup.op, setup.R);
    r.resid_h1 = rn.h1;
    r.resid_l2 = rn.l2;
    r.condition = sr.condition;
    r.condition_approximate = sr.condition_approximate;
    r.relative_residual = sr.relative_residual;
    r.order = std::numeric_limits<double>::quiet_NaN();
    r.unknowns = d.size();
    r.solver = solver.method();
    r.uniqueness_warning = blocks.uniqueness_warning;
    if (options.timing) r.wall_ms = elapsed_ms(start);
    return r;
}

std::vector<LadderRung> standard_ladder(int example, LadderKind kind) {
    switch (example) {
    case 1:
        switch (kind) {
        case LadderKind::Joint: return {{10, 10}, {20, 20}, {40, 40}, {80, 80}, {120, 120}};
        case LadderKind::Space: return {{10, 100}, {20, 100}, {40, 100}, {50, 100}, {80, 100}};
        case LadderKind::Time: return {{200, 10}, {200, 20}, {200, 30}, {200, 40}, {200, 50}};
        }
        break;
    case 2: return {{20, 12}, {20, 18}, {20, 24}, {20, 36}, {20, 72}};
    case 3: return {{4, 10}, {8, 20}, {12, 30}, {16, 40}};
    default: break;
    }
    throw InvalidArgument("no reference ladder for example " + std::to_string(example));
}

std::vector<double> convergence_orders(const std::vector<double>& errors, const std::vector<LadderRung>& rungs) {
    if (errors.size() != rungs.size()) throw InvalidArgument("convergence_orders: size mismatch");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> orders(errors.size(), nan);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const auto& a = rungs[i - 1];
        const auto& b = rungs[i];
        const double ratio = a.h_den != b.h_den ? static_cast<double>(b.h_den) / a.h_den
                                                : static_cast<double>(b.tau_den) / a.tau_den;
        if (ratio == 1.0 || !(errors[i - 1] > 0.0) || !(errors[i] > 0.0)) continue;
        orders[i] = std::log(errors[i - 1] / errors[i]) / std::log(ratio);
    }
    return orders;
}

std::vector<ExperimentReport> convergence_study(const ProblemConfig& base, const std::vector<LadderRung>& rungs,
                                               const RunOptions& options) {
    if (rungs.size() < 2) throw InvalidArgument("a convergence study needs at least two rungs");
    std::vector<ExperimentReport> reports;
    std::vector<double> errors;
    for (const auto& rung : rungs) {
        ProblemConfig c = base;
        c.h_den = rung.h_den;
        c.tau_den = rung.tau_den;
        reports.push_back(run_reconstruction(c, options));
        errors.push_back(reports.back().error);
    }
    const auto orders = convergence_orders(errors, rungs);
    for (std::size_t i = 0; i < reports.size(); ++i) reports[i].order = orders[i];
    return reports;
}

double log_log_slope(const std::vector<double>& deltas, const std::vector<double>& errors) {
    if (deltas.size() != errors.size() || deltas.size() < 2) throw InvalidArgument("log_log_slope: need matching samples");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0) || !(errors[i] > 0.0)) throw InvalidArgument("log_log_slope: samples must be positive");
        const double x = std::log(deltas[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw InvalidArgument("log_log_slope: noise levels must differ");
    return (n * sxy - sx * sy) / den;
}

DeltaStudy delta_study(const ProblemConfig& config, const std::vector<double>& deltas,
                       const std::vector<std::uint64_t>& seeds, const RunOptions& options) {
    if (deltas.size() < 3) throw InvalidArgument("a noise study needs at least three noise levels");
    for (double dl : deltas)
        if (!(dl > 0.0)) throw InvalidArgument("noise levels must be positive");
    if (seeds.empty()) throw InvalidArgument("a noise study needs at least one seed");

    const ProblemSetup setup = make_problem(config);
    if (config.mode == FormKind::Lipschitz && !setup.dirichlet_truth)
        throw InvalidArgument("Lipschitz mode needs an exact state with homogeneous Dirichlet trace");
    const Discretization d = make_discretization(config);
    const FormParameters form{config.mode, config.gamma_f, config.gamma_u};
    const SymmetricSolver solver(assemble_matrix(d, setup.op, setup.R, form, options.execution));
    SolveOptions so = options.solve;
    so.estimate_condition = false;
    const ConditionEstimate ce = solver.condition(options.solve.condition_iterations);
    const auto region = error_region(config);

    DeltaStudy study;
    study.deltas = deltas;
    for (double dl : deltas) {
        double sum = 0.0;
        for (std::uint64_t seed : seeds) {
            const auto start = std::chrono::steady_clock::now();
            ExperimentReport r;
            r.config = config;
            r.config.delta = dl;
            r.config.seed = seed;
            const ObservationData data = realize_noise(r.config, setup, d);
            const Eigen::VectorXd rhs = assemble_rhs(d, setup.op, data, config.mode, options.execution);
            const SolveReport sr = solver.solve(rhs, so);
            r.f = extract_source(d, sr.solution);
            r.error = source_error(r.f, setup.f_true, region);
            const TensorFunction u = TensorFunction::from_free_vector(d.u, sr.solution.head(d.n_u()));
            const ResidualNorms rn = residual_norms(u, r.f, setup.op, setup.R);
            r.resid_h1 = rn.h1;
            r.resid_l2 = rn.l2;
            r.condition = ce.value;
            r.condition_approximate = ce.approximate;
            r.relative_residual = sr.relative_residual;
            r.order = std::numeric_limits<double>::quiet_NaN();
            r.unknowns = d.size();
            r.solver = solver.method();
            if (options.timing) r.wall_ms = elapsed_ms(start);
            sum += r.error;
            study.runs.push_back(std::move(r));
        }
        study.mean_error.push_back(sum / static_cast<double>(seeds.size()));
    }
    study.slope = log_log_slope(study.deltas, study.mean_error);
    return study;
}

std::string mode_name(FormKind kind) { return kind == FormKind::Lipschitz ? "lip" : "hol"; }

void write_report_csv(std::ostream& os, const std::vector<ExperimentReport>& reports) {
    os << "example,mode,h,tau,delta,seed,gamma_f,gamma_u,error,resid_h1,resid_l2,cond,order,wall_ms\n";
    char buf[512];
    for (const auto& r : reports) {
        const auto& c = r.config;
        char order[32] = "";
        if (std::isfinite(r.order)) std::snprintf(order, sizeof order, "%.4f", r.order);
        std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.10g,%llu,%.10g,%.10g,%.6e,%.6e,%.6e,%.4e,%s,%.3f\n",
                      c.example, mode_name(c.mode).c_str(), c.h(), c.tau(), c.delta,
                      static_cast<unsigned long long>(c.seed), c.gamma_f, c.gamma_u, r.error, r.resid_h1, r.resid_l2,
                      r.condition, order, r.wall_ms);
        os << buf;
    }
}

} // namespace parasrc
