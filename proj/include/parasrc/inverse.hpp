#pragma once

#include "parasrc/assembly.hpp"
#include "parasrc/linsolve.hpp"
#include "parasrc/observation.hpp"
#include "parasrc/spaces.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace parasrc {

/// How the exact state and source are produced.
///  - Manufactured: u = sin(pi t) prod_i sin(k pi (x_i - a_i) / L_i), f = the
///    spatial factor, R(t) derived so that u_t + Au = R f holds exactly.
///  - Forward: f = P1 L2 projection of the spatial factor onto the
///    reconstruction mesh, R = 1, u(0) = 0, data from a refined forward
///    solve (1D only).
enum class TruthKind { Manufactured, Forward };

/// Where the multiplicative noise (1 + delta xi) enters.
///  - Nodal: the state is interpolated into V_h (x) V_tau over the whole
///    domain (no boundary constraint), each interpolation coefficient is
///    perturbed, and q, dtq, r, dtr and p = A(.)(t0) are read off the
///    perturbed interpolant.
///  - QuadraturePoint: each data value at each observation quadrature point
///    is perturbed independently (see NoiseModel).
/// With delta = 0 both leave the data untouched.
enum class NoisePlacement { Nodal, QuadraturePoint };

struct ProblemConfig {
    int example = 0; // 1, 2, 3; 0 for a custom problem
    int dim = 1;
    Box domain{0.0, 1.0, 0.0, 1.0};
    Box omega{0.2, 0.8, 0.2, 0.8};
    double t0 = 0.5;
    double zeta = 0.1;
    /// A v = -diffusion * Laplacian(v) + reaction * v.
    double diffusion = 1.0;
    double reaction = 0.0;
    TruthKind truth = TruthKind::Manufactured;
    int wave = 1;
    int fine_factor = 8;
    /// Initial time of the forward simulation (zero state there).
    double forward_start = 0.0;

    /// Mesh parameters as denominators: h = 1/h_den, tau = 1/tau_den.
    int h_den = 10;
    int tau_den = 10;
    FormKind mode = FormKind::Lipschitz;
    double gamma_f = 0.0;
    double gamma_u = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 1;
    NoisePlacement noise_placement = NoisePlacement::Nodal;
    /// Error region in Hölder mode; defaults to omega.
    std::optional<Box> omega0;

    double h() const { return 1.0 / h_den; }
    double tau() const { return 1.0 / tau_den; }
};

/// Presets for the three reference experiments; grid, mode and noise keep
/// their defaults.
ProblemConfig example_config(int example);

/// Throws InvalidArgument on inconsistent parameters.
void validate(const ProblemConfig& config);

/// Resolved problem: operator, modulation, exact source and noise-free data.
struct ProblemSetup {
    EllipticOperator op;
    SourceModulation R;
    PointFunction f_true;
    ObservationData data;
    /// Exact state with derivatives (dx, dy <= 2, dt <= 1); needed for
    /// nodal noise.
    SpaceTimeField state;
    /// Whether the exact state vanishes on the boundary (required in
    /// Lipschitz mode).
    bool dirichlet_truth = true;
};

/// Analytic data q = u, dtq = u_t, p = Au(t0), r = grad u, dtr = grad u_t.
ProblemSetup synthesize_data_analytic(const ProblemConfig& config);

/// Data sampled from a forward solve on a mesh refined by `fine_factor` (>= 4).
ProblemSetup synthesize_data_forward(const ProblemConfig& config, int fine_factor);

/// Dispatches on config.truth.
ProblemSetup make_problem(const ProblemConfig& config);

struct RunOptions {
    Execution execution = Execution::Parallel;
    SolveOptions solve{};
    /// Record wall time. Off by default so reports are reproducible.
    bool timing = false;
};

struct ExperimentReport {
    ProblemConfig config;
    double error = 0.0;
    double resid_h1 = 0.0;
    double resid_l2 = 0.0;
    double condition = 0.0;
    bool condition_approximate = false;
    double relative_residual = 0.0;
    /// Convergence order against the previous rung; NaN when undefined.
    double order = 0.0;
    double wall_ms = 0.0;
    int unknowns = 0;
    std::string solver;
    bool uniqueness_warning = false;
    FeFunction f;
};

/// Observation data of one noise realization (config.delta, config.seed).
ObservationData realize_noise(const ProblemConfig& config, const ProblemSetup& setup, const Discretization& disc);

/// Builds the mesh and spaces of `config`.
Discretization make_discretization(const ProblemConfig& config);

/// ||f_true - f||_{L2(region)} by quadrature over the mesh of `f`.
double source_error(const FeFunction& f, const PointFunction& f_true, const std::optional<Box>& region);

/// Assembles, solves and measures one reconstruction. The error is taken on
/// Ω in Lipschitz mode and on Ω₀ in Hölder mode.
ExperimentReport run_reconstruction(const ProblemConfig& config, const RunOptions& options = {});
ExperimentReport run_reconstruction(const ProblemConfig& config, const ProblemSetup& setup,
                                    const RunOptions& options = {});

struct LadderRung {
    int h_den;
    int tau_den;
};

enum class LadderKind { Joint, Space, Time };

/// Reference ladders. Example 1 takes all three kinds; Examples 2 and 3
/// have one ladder each and ignore `kind`.
std::vector<LadderRung> standard_ladder(int example, LadderKind kind);

/// order_i = ln(e_{i-1}/e_i) / ln(p_{i-1}/p_i), p the parameter that changes
/// (h when both do). NaN for the first rung or when an error is zero.
std::vector<double> convergence_orders(const std::vector<double>& errors, const std::vector<LadderRung>& rungs);

/// Runs the rungs in order and fills ExperimentReport::order. Needs at least
/// two rungs.
std::vector<ExperimentReport> convergence_study(const ProblemConfig& base, const std::vector<LadderRung>& rungs,
                                               const RunOptions& options = {});

struct DeltaStudy {
    /// One report per (delta, seed), delta-major.
    std::vector<ExperimentReport> runs;
    std::vector<double> deltas;
    std::vector<double> mean_error;
    double slope = 0.0;
};

/// Least-squares slope of ln(mean e) against ln(delta).
double log_log_slope(const std::vector<double>& deltas, const std::vector<double>& errors);

/// Factors the system once and re-solves per noise realization. Needs at
/// least three positive noise levels.
DeltaStudy delta_study(const ProblemConfig& config, const std::vector<double>& deltas,
                       const std::vector<std::uint64_t>& seeds, const RunOptions& options = {});

/// Writes the report header and one row per report.
void write_report_csv(std::ostream& os, const std::vector<ExperimentReport>& reports);
std::string mode_name(FormKind kind);

} // namespace parasrc
