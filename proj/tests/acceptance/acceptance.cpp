// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exits 0 regardless of the outcome unless --strict is given.
//
//   parasrc_acceptance [--strict] [--only 1,5,9]

#include "oracles.hpp"

#include "parasrc/config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace parasrc;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        lines.push_back(std::string(ok ? "ok   " : "MISS ") + what);
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string sci(double v) { return fmt("%.4e", v); }
std::string fix(double v) { return fmt("%.3f", v); }

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }
bool within_factor(double v, double ref, double factor) { return v <= factor * ref && v >= ref / factor; }

std::vector<std::uint64_t> seeds(int n) {
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= n; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return s;
}

std::vector<ExperimentReport> ladder(int example, LadderKind kind, std::size_t rungs = 0) {
    auto r = standard_ladder(example, kind);
    if (rungs) r.resize(rungs);
    return convergence_study(example_config(example), r);
}

void print_rows(Verdict& v, const std::vector<ExperimentReport>& rows) {
    for (const auto& r : rows) {
        std::string line = "h=1/" + std::to_string(r.config.h_den) + " tau=1/" + std::to_string(r.config.tau_den) +
                           "  e=" + sci(r.error) + "  order=" + (std::isnan(r.order) ? std::string("-") : fix(r.order)) +
                           "  cond=" + sci(r.condition) + (r.condition_approximate ? "~" : "");
        v.note(line);
    }
}

// ----------------------------------------------------------------- criteria

Verdict joint_refinement() {
    Verdict v;
    const auto rows = ladder(1, LadderKind::Joint, 4);
    print_rows(v, rows);
    for (std::size_t i = 1; i < rows.size(); ++i)
        v.check(in_range(rows[i].order, 1.85, 2.15), "order " + fix(rows[i].order) + " in [1.85, 2.15]");
    v.check(within_factor(rows[0].error, 2.666e-3, 3.0), "e(1/10, 1/10) = " + sci(rows[0].error) + " within 3x of 2.666e-3");
    return v;
}

Verdict space_refinement() {
    Verdict v;
    const auto rows = ladder(1, LadderKind::Space);
    print_rows(v, rows);
    for (std::size_t i = 1; i < rows.size(); ++i)
        v.check(in_range(rows[i].order, 1.9, 2.1), "order " + fix(rows[i].order) + " in [1.9, 2.1]");
    // Not checked: the rung h=1/120, where conditioning dominates.
    ProblemConfig c = example_config(1);
    c.h_den = 120;
    c.tau_den = 100;
    const ExperimentReport fine = run_reconstruction(c);
    v.note("unchecked h=1/120 tau=1/100  e=" + sci(fine.error) + "  order vs 1/80 = " +
           fix(std::log(rows.back().error / fine.error) / std::log(1.5)) + "  cond=" + sci(fine.condition));
    return v;
}

const std::vector<ExperimentReport>& time_ladder() {
    static const auto rows = ladder(1, LadderKind::Time);
    return rows;
}

Verdict time_refinement() {
    Verdict v;
    const auto& rows = time_ladder();
    print_rows(v, rows);
    v.check(in_range(rows[1].order, 3.5, 4.3), "order tau 1/10 -> 1/20 = " + fix(rows[1].order) + " in [3.5, 4.3]");
    for (std::size_t i = 3; i < rows.size(); ++i) {
        v.check(rows[i].error >= rows[2].error, "e(tau=1/" + std::to_string(rows[i].config.tau_den) + ") = " +
                                                    sci(rows[i].error) + " not below e(tau=1/30) = " + sci(rows[2].error));
        v.check(rows[i].condition >= 1e12, "condition at tau=1/" + std::to_string(rows[i].config.tau_den) + " = " +
                                               sci(rows[i].condition) + " >= 1e12");
    }
    return v;
}

Verdict residual_orders() {
    Verdict v;
    const auto& rows = time_ladder();
    for (std::size_t i = 0; i < 3; ++i)
        v.note("tau=1/" + std::to_string(rows[i].config.tau_den) + "  ||G||_H1 = " + sci(rows[i].resid_h1) +
               "  ||G||_L2 = " + sci(rows[i].resid_l2));
    const double o1 = std::log(rows[0].resid_h1 / rows[1].resid_h1) / std::log(2.0);
    const double o2 = std::log(rows[0].resid_l2 / rows[1].resid_l2) / std::log(2.0);
    v.check(in_range(o1, 1.8, 2.2), "||G||_H1 order " + fix(o1) + " in [1.8, 2.2]");
    v.check(in_range(o2, 3.4, 4.3), "||G||_L2 order " + fix(o2) + " in [3.4, 4.3]");
    return v;
}

Verdict forward_data() {
    Verdict v;
    const auto rows = ladder(2, LadderKind::Joint);
    print_rows(v, rows);
    for (std::size_t i = 1; i <= 3; ++i)
        v.check(in_range(rows[i].order, 3.2, 4.3), "order " + fix(rows[i].order) + " in [3.2, 4.3]");
    const double cond_ref[] = {7.113e12, 1.878e13, 3.999e13, 1.212e14, 7.743e14};
    for (std::size_t i = 0; i < rows.size(); ++i)
        v.check(within_factor(rows[i].condition, cond_ref[i], 100.0),
                "cond " + sci(rows[i].condition) + " within 100x of " + sci(cond_ref[i]));

    const double noisy_ref[3][5] = {{2.598e-1, 1.384e-1, 1.729e-1, 1.120e-1, 2.806e-1},
                                    {6.367e-1, 3.502e-1, 3.801e-1, 5.121e-1, 6.758e-1},
                                    {1.037e0, 8.476e-1, 8.371e-1, 1.131e0, 1.167e0}};
    const std::vector<double> deltas{0.002, 0.005, 0.01};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DeltaStudy st = delta_study(rows[i].config, deltas, seeds(10));
        for (std::size_t k = 0; k < deltas.size(); ++k)
            v.check(within_factor(st.mean_error[k], noisy_ref[k][i], 5.0),
                    "tau=1/" + std::to_string(rows[i].config.tau_den) + " delta=" + fmt("%.1f%%", 100 * deltas[k]) +
                        ": mean e over 10 seeds " + sci(st.mean_error[k]) + " within 5x of " + sci(noisy_ref[k][i]));
    }
    return v;
}

Verdict argyris_ladder() {
    Verdict v;
    const auto rows = ladder(3, LadderKind::Joint);
    print_rows(v, rows);
    for (std::size_t i = 1; i < rows.size(); ++i)
        v.check(in_range(rows[i].order, 1.9, 2.2), "order " + fix(rows[i].order) + " in [1.9, 2.2]");
    v.check(within_factor(rows[0].error, 2.768e-2, 3.0), "e(1/4, 1/10) = " + sci(rows[0].error) + " within 3x of 2.768e-2");
    return v;
}

Verdict noise_scaling() {
    Verdict v;
    const std::vector<double> deltas{0.005, 0.01, 0.02, 0.04};
    for (auto [example, h, tau] : {std::tuple{1, 100, 50}, std::tuple{3, 12, 20}}) {
        ProblemConfig c = example_config(example);
        c.h_den = h;
        c.tau_den = tau;
        const DeltaStudy st = delta_study(c, deltas, seeds(10));
        std::string means;
        for (double e : st.mean_error) means += " " + sci(e);
        v.note("example " + std::to_string(example) + " mean e:" + means);
        v.check(in_range(st.slope, 0.8, 1.2), "example " + std::to_string(example) + " slope " + fix(st.slope) +
                                                  " in [0.8, 1.2]");
    }
    return v;
}

Verdict regularization() {
    Verdict v;
    ProblemConfig c = example_config(1);
    c.h_den = 40;
    c.tau_den = 40;
    c.mode = FormKind::Holder;
    c.delta = 0.02;
    c.seed = 1;
    const double plain = run_reconstruction(c).error;
    c.gamma_f = 1e-3;
    c.gamma_u = 1e-4;
    const double regularized = run_reconstruction(c).error;
    v.check(regularized < plain, "delta=2%: regularized e=" + fmt("%.6e", regularized) + " < unregularized e=" +
                                     fmt("%.6e", plain));

    ProblemConfig clean = example_config(1);
    clean.h_den = 40;
    clean.tau_den = 40;
    const ExperimentReport lip = run_reconstruction(clean);
    const double lip_omega = source_error(lip.f, synthesize_data_analytic(clean).f_true, clean.omega);
    clean.mode = FormKind::Holder;
    const double hol = run_reconstruction(clean).error;
    v.check(hol <= 10.0 * lip_omega && lip_omega <= 10.0 * hol,
            "delta=0: Hölder e=" + sci(hol) + " within 10x of Lipschitz e=" + sci(lip_omega) + " on omega");
    return v;
}

Verdict property_suites() {
    Verdict v;
    double q = 0.0;
    for (int k = 1; k <= kMaxGaussDegree; ++k) q = std::max(q, oracle::gauss_monomial_error(k));
    for (int k = 1; k <= kMaxTriangleDegree; ++k) q = std::max(q, oracle::triangle_monomial_error(k));
    v.check(q < 1e-12, "quadrature monomial exactness, worst " + sci(q));

    std::vector<double> grid(7);
    for (int i = 0; i <= 6; ++i) grid[i] = i / 6.0;
    const auto herm = std::make_shared<Hermite1DSpace>(grid);
    const auto mesh = std::make_shared<TriMesh>(build_trimesh_congruent(3, 3, {0.2, 0.8, 0.2, 0.8}));
    const auto arg = std::make_shared<ArgyrisSpace>(mesh);
    const double kron = std::max(oracle::kronecker_identity_error(*herm), oracle::kronecker_identity_error(*arg));
    v.check(kron <= 1e-10, "basis Kronecker identity " + sci(kron) + " <= 1e-10");

    const double idem = std::max({oracle::projection_idempotence_error(DofSpace(std::make_shared<P1Space1D>(grid))),
                                  oracle::projection_idempotence_error(DofSpace(herm)),
                                  oracle::projection_idempotence_error(apply_dirichlet_constraints(DofSpace(arg)))});
    v.check(idem <= 1e-8, "projection idempotence " + sci(idem) + " <= 1e-8");
    const double p1 = oracle::projection_order_1d(16), h3 = oracle::hermite_interpolation_order(8);
    v.check(std::abs(p1 - 2.0) <= 0.2, "P1 projection order " + fix(p1) + " = 2 +- 0.2");
    v.check(std::abs(h3 - 4.0) <= 0.2, "Hermite interpolation order " + fix(h3) + " = 4 +- 0.2");

    const double jump = std::max(oracle::interface_jump(*herm), oracle::interface_jump(*arg));
    v.check(jump <= 1e-10, "C1 interface jump " + sci(jump) + " <= 1e-10");

    for (FormKind kind : {FormKind::Lipschitz, FormKind::Holder}) {
        const Discretization d = oracle::small_discretization(10, 4, kind);
        const FormParameters form{kind, kind == FormKind::Holder ? 1e-3 : 0.0, kind == FormKind::Holder ? 1e-4 : 0.0};
        const auto s = oracle::symmetry_psd(
            assemble_matrix(d, EllipticOperator::negative_laplacian(), SourceModulation::constant(2.0), form));
        v.check(s.asymmetry <= 1e-14 && s.min_eig_ratio >= -1e-12,
                mode_name(kind) + " system symmetric (" + sci(s.asymmetry) + ") and PSD (min/max eig " +
                    sci(s.min_eig_ratio) + ")");
    }
    const double kas = oracle::kronecker_assembly_error(10, 4);
    v.check(kas <= 1e-10, "Kronecker-structure assembly " + sci(kas) + " <= 1e-10");

    const double st = std::max(oracle::stationarity_defect(10, 4, FormKind::Lipschitz, 0.0, 0.0),
                               oracle::stationarity_defect(10, 4, FormKind::Holder, 1e-3, 1e-4));
    v.check(st <= 1e-6, "finite-difference stationarity " + sci(st) + " <= 1e-6");
    const double cons = oracle::consistency_error(10, 10);
    v.check(cons <= 1e-8, "exact-representability consistency e=" + sci(cons) + " <= 1e-8");

    ProblemConfig c = example_config(1);
    c.h_den = 20;
    c.tau_den = 20;
    c.delta = 0.01;
    std::ostringstream a, b;
    write_report_csv(a, {run_reconstruction(c)});
    write_report_csv(b, {run_reconstruction(c)});
    v.check(a.str() == b.str(), "determinism: identical report bytes");
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    bool strict = false;
    std::vector<int> only;
    app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
    app.add_option("--only", only, "Criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char* title;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {1, "Example 1 joint refinement", joint_refinement},
        {2, "Example 1 space refinement (tau=1/100)", space_refinement},
        {3, "Example 1 time refinement (h=1/200)", time_refinement},
        {4, "Example 1 residual orders in time (h=1/200)", residual_orders},
        {5, "Example 2 ladder, conditioning and noisy rows", forward_data},
        {6, "Example 3 Argyris ladder", argyris_ladder},
        {7, "Noise-level scaling (Lipschitz mode)", noise_scaling},
        {8, "Hölder-mode regularization", regularization},
        {9, "Property suites", property_suites},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << " (" << fix(secs) << " s)\n";
        for (const auto& l : v.lines) std::cout << "       " << l << '\n';
        std::cout.flush();
        failed += !v.pass;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
    return strict && failed ? 1 : 0;
}
