// Command-line front end: single reconstructions, convergence ladders, noise
// studies and matrix export. Writes CSV artifacts into --out.

#include "parasrc/config.hpp"
#include "parasrc/error.hpp"
#include "parasrc/inverse.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace parasrc;

namespace {

struct Overrides {
    int example = 0;
    std::string config;
    int h = 0;
    int tau = 0;
    double delta = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
    double gamma_f = -1.0;
    double gamma_u = -1.0;
    std::vector<double> omega0;
    std::string noise;
    std::string out = ".";
    bool timing = false;
    bool serial = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    auto* ex = cmd->add_option("--example", o.example, "Reference experiment")->check(CLI::Range(1, 3));
    cmd->add_option("--config", o.config, "JSON problem file")->excludes(ex);
    cmd->add_option("--h", o.h, "Mesh denominator, h = 1/N")->check(CLI::PositiveNumber);
    cmd->add_option("--tau", o.tau, "Time step denominator, tau = 1/N")->check(CLI::PositiveNumber);
    cmd->add_option("--delta", o.delta, "Relative noise level")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o.seed, "Noise seed");
    cmd->add_option("--mode", o.mode, "lip or hol")->check(CLI::IsMember({"lip", "hol"}));
    cmd->add_option("--gamma-f", o.gamma_f, "Source penalty (Hölder mode)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--gamma-u", o.gamma_u, "State penalty (Hölder mode)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--omega0", o.omega0, "Error region x0,x1[,y0,y1] (Hölder mode)")->delimiter(',')->expected(2, 4);
    cmd->add_option("--noise", o.noise, "nodal or quadrature")->check(CLI::IsMember({"nodal", "quadrature"}));
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--timing", o.timing, "Record wall time (reports are then not reproducible)");
    cmd->add_flag("--serial", o.serial, "Use the serial reference kernels");
}

ProblemConfig resolve(const Overrides& o) {
    ProblemConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    else if (o.example != 0) c = example_config(o.example);
    else throw InvalidArgument("one of --example or --config is required");
    if (o.h > 0) c.h_den = o.h;
    if (o.tau > 0) c.tau_den = o.tau;
    if (o.delta >= 0.0) c.delta = o.delta;
    if (o.seed_set) c.seed = o.seed;
    if (!o.mode.empty()) c.mode = parse_mode(o.mode);
    if (o.gamma_f >= 0.0) c.gamma_f = o.gamma_f;
    if (o.gamma_u >= 0.0) c.gamma_u = o.gamma_u;
    if (!o.omega0.empty()) {
        if (o.omega0.size() != 2 && o.omega0.size() != 4) throw InvalidArgument("--omega0 takes 2 or 4 numbers");
        Box b{o.omega0[0], o.omega0[1], 0.0, 0.0};
        if (o.omega0.size() == 4) {
            b.y0 = o.omega0[2];
            b.y1 = o.omega0[3];
        }
        c.omega0 = b;
    }
    if (!o.noise.empty()) c.noise_placement = parse_noise_placement(o.noise);
    validate(c);
    return c;
}

RunOptions run_options(const Overrides& o) {
    RunOptions r;
    r.timing = o.timing;
    r.execution = o.serial ? Execution::Serial : Execution::Parallel;
    return r;
}

fs::path prepare_out(const Overrides& o) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out << text;
}

std::string reports_csv(const std::vector<ExperimentReport>& reports) {
    std::ostringstream ss;
    write_report_csv(ss, reports);
    return ss.str();
}

std::string source_csv(const ExperimentReport& r, const PointFunction& f_true) {
    const auto& fe = r.f.space.fe();
    const bool two_d = fe.dim() == 2;
    std::ostringstream ss;
    ss << (two_d ? "x,y,f,f_true\n" : "x,f,f_true\n");
    char buf[160];
    const auto& dofs = fe.global_dofs();
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        const Point p = dofs[i].location;
        if (two_d)
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10e,%.10e\n", p.x, p.y, r.f.coefficients[i], f_true(p));
        else
            std::snprintf(buf, sizeof buf, "%.10g,%.10e,%.10e\n", p.x, r.f.coefficients[i], f_true(p));
        ss << buf;
    }
    return ss.str();
}

std::string gnuplot_script(int dim) {
    if (dim == 1)
        return "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'x'\n"
               "plot 'source.csv' using 1:3 with lines lw 2, '' using 1:2 with linespoints pt 7 ps 0.5\n";
    return "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set dgrid3d 41,41\n"
           "set pm3d\n"
           "splot 'source.csv' using 1:2:3 with pm3d\n";
}

int cmd_run(const Overrides& o) {
    const ProblemConfig c = resolve(o);
    const ProblemSetup setup = make_problem(c);
    const ExperimentReport r = run_reconstruction(c, setup, run_options(o));
    const fs::path dir = prepare_out(o);
    const std::string csv = reports_csv({r});
    write_file(dir / "report.csv", csv);
    write_file(dir / "source.csv", source_csv(r, setup.f_true));
    write_file(dir / "plot_source.gp", gnuplot_script(c.dim));
    write_file(dir / "config.json", to_json(c) + "\n");
    if (r.uniqueness_warning) std::cerr << "warning: both penalties are zero; the minimizer may not be unique\n";
    std::cout << csv;
    return 0;
}

std::vector<LadderRung> parse_grid(const std::string& text) {
    std::vector<LadderRung> rungs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InvalidArgument("--grid entries are h:tau");
        try {
            rungs.push_back({std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw InvalidArgument("--grid entries are integer pairs h:tau");
        }
    }
    return rungs;
}

int cmd_ladder(const Overrides& o, const std::string& kind, int rungs, const std::string& grid) {
    const ProblemConfig c = resolve(o);
    std::vector<LadderRung> ladder;
    if (!grid.empty()) {
        ladder = parse_grid(grid);
    } else {
        if (c.example == 0) throw InvalidArgument("custom problems need --grid");
        const LadderKind k = kind == "space" ? LadderKind::Space : kind == "time" ? LadderKind::Time : LadderKind::Joint;
        ladder = standard_ladder(c.example, k);
    }
    if (rungs > 0) {
        if (rungs > static_cast<int>(ladder.size())) throw InvalidArgument("--rungs exceeds the ladder length");
        ladder.resize(rungs);
    }
    const auto reports = convergence_study(c, ladder, run_options(o));
    const std::string csv = reports_csv(reports);
    write_file(prepare_out(o) / "ladder.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_noise(const Overrides& o, std::vector<double> deltas, int n_seeds) {
    const ProblemConfig c = resolve(o);
    std::vector<std::uint64_t> seeds;
    const std::uint64_t first = o.seed_set ? o.seed : 1;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    const DeltaStudy s = delta_study(c, deltas, seeds, run_options(o));
    const fs::path dir = prepare_out(o);
    write_file(dir / "noise.csv", reports_csv(s.runs));
    std::ostringstream sum;
    sum << "delta,mean_error,seeds\n";
    char buf[128];
    for (std::size_t i = 0; i < s.deltas.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.6e,%d\n", s.deltas[i], s.mean_error[i], n_seeds);
        sum << buf;
    }
    std::snprintf(buf, sizeof buf, "# slope %.4f\n", s.slope);
    sum << buf;
    write_file(dir / "noise_summary.csv", sum.str());
    std::cout << sum.str();
    return 0;
}

int cmd_export(const Overrides& o) {
    const ProblemConfig c = resolve(o);
    const ProblemSetup setup = make_problem(c);
    const Discretization d = make_discretization(c);
    const ObservationData data = realize_noise(c, setup, d);
    const Execution exec = o.serial ? Execution::Serial : Execution::Parallel;
    const SystemBlocks b = c.mode == FormKind::Lipschitz
                               ? assemble_lipschitz_system(d, setup.op, setup.R, data, exec)
                               : assemble_holder_system(d, setup.op, setup.R, data, c.gamma_f, c.gamma_u, exec);
    const fs::path dir = prepare_out(o);
    {
        std::ofstream out(dir / "matrix.txt");
        export_matrix(out, b.matrix);
    }
    std::ofstream rhs(dir / "rhs.txt");
    rhs.precision(17);
    for (Eigen::Index i = 0; i < b.rhs.size(); ++i) rhs << b.rhs[i] << '\n';
    std::cout << "unknowns " << d.size() << " (u " << b.n_u << ", f " << b.n_f << "), nonzeros "
              << b.matrix.nonZeros() << '\n';
    return 0;
}

void apply_thread_cap() {
    if (const char* env = std::getenv("PARASRC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Space-time finite element reconstruction of parabolic sources"};
    app.require_subcommand(1);
    // --h is the mesh option, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");

    Overrides run_o, ladder_o, noise_o, export_o;
    auto* run = app.add_subcommand("run", "Single reconstruction");
    add_common(run, run_o);

    auto* ladder = app.add_subcommand("ladder", "Convergence ladder with observed orders");
    add_common(ladder, ladder_o);
    std::string ladder_kind = "joint", grid;
    int rungs = 0;
    ladder->add_option("--ladder", ladder_kind, "Example 1 ladder: joint, space or time")
        ->check(CLI::IsMember({"joint", "space", "time"}));
    ladder->add_option("--rungs", rungs, "Use the first N rungs")->check(CLI::PositiveNumber);
    ladder->add_option("--grid", grid, "Explicit rungs h:tau,h:tau,...");

    auto* noise = app.add_subcommand("noise-study", "Seed-averaged error against the noise level");
    add_common(noise, noise_o);
    std::vector<double> deltas{0.005, 0.01, 0.02, 0.04};
    int n_seeds = 10;
    noise->add_option("--deltas", deltas, "Noise levels")->delimiter(',');
    noise->add_option("--seeds", n_seeds, "Number of seeds, counted from --seed")->check(CLI::PositiveNumber);

    auto* exp = app.add_subcommand("export-matrix", "Write the assembled system");
    add_common(exp, export_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    }
    for (auto* o : {&run_o, &ladder_o, &noise_o, &export_o}) o->seed_set = false;
    run_o.seed_set = run->count("--seed") > 0;
    ladder_o.seed_set = ladder->count("--seed") > 0;
    noise_o.seed_set = noise->count("--seed") > 0;
    export_o.seed_set = exp->count("--seed") > 0;

    apply_thread_cap();
    try {
        if (run->parsed()) return cmd_run(run_o);
        if (ladder->parsed()) return cmd_ladder(ladder_o, ladder_kind, rungs, grid);
        if (noise->parsed()) return cmd_noise(noise_o, deltas, n_seeds);
        return cmd_export(export_o);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IllConditionedError& e) {
        std::cerr << "numerical failure: " << e.what() << " (condition " << e.condition() << ", relative residual "
                  << e.residual() << ")\n";
        return 3;
    } catch (const SingularSystemError& e) {
        std::cerr << "numerical failure: " << e.what() << " (pivot " << e.pivot() << ")\n";
        return 3;
    } catch (const ForwardSolveError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
