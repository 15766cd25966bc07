#pragma once

#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "biharm/analysis.hpp"
#include "biharm/config.hpp"
#include "biharm/forms.hpp"
#include "biharm/problems.hpp"
#include "biharm/projection.hpp"
#include "biharm/timestep.hpp"

namespace biharm {

// cell width of the structured grid, recovered from the mesh itself
inline double mesh_cell_width(const Mesh& mesh) {
    return mesh.vertices[1].x - mesh.vertices[0].x;
}

struct Discretization {
    Problem problem;
    Mesh mesh;
    Space space;
    FormParams params;
    SparseMatrix M;
    SparseMatrix A;
    double h = 0.0; // cell width, the paper-style mesh size 1/n
};

inline Discretization make_discretization(const Problem& problem, SpaceKind kind, int n,
                                          const RunConfig& cfg) {
    Discretization d;
    d.problem = problem;
    Rect dom = cfg.domain_overridden() ? cfg.domain : problem.domain;
    d.mesh = build_uniform(n, n, dom);
    d.space = build_space(d.mesh, kind);
    d.params.sigma_dg1 = cfg.sigma_dg1;
    d.params.sigma_dg2 = cfg.sigma_dg2;
    d.params.sigma_ip = cfg.sigma_ip;
    d.params.coefficient = problem.coefficient;
    d.M = assemble_mass(d.space);
    d.A = assemble_ah(d.space, d.params);
    d.h = mesh_cell_width(d.mesh);
    return d;
}

// Pick the factorization when the system is stiff and its envelope stays
// affordable; well-conditioned (mass-dominated) systems go to CG instead.
inline SolverConfig resolve_solver(const RunConfig& cfg, const SparseMatrix& S,
                                   bool well_conditioned = false) {
    SolverConfig sc;
    sc.tol = cfg.solver_tol;
    sc.max_iter = cfg.solver_max_iter;
    if (cfg.solver_method == "cg") {
        sc.method = SolverConfig::Method::conjugate_gradient;
    } else if (cfg.solver_method == "cholesky") {
        sc.method = SolverConfig::Method::sparse_cholesky;
    } else if (cfg.solver_method == "auto") {
        if (well_conditioned) {
            sc.method = SolverConfig::Method::conjugate_gradient;
            return sc;
        }
        std::size_t profile = 0;
        for (int i = 0; i < S.rows(); ++i) {
            int f = i;
            for (int k = S.row_offsets()[i]; k < S.row_offsets()[i + 1]; ++k)
                f = std::min(f, S.col_indices()[k]);
            profile += static_cast<std::size_t>(i - f + 1);
        }
        sc.method = profile * sizeof(double) <= (std::size_t{400} << 20)
                        ? SolverConfig::Method::sparse_cholesky
                        : SolverConfig::Method::conjugate_gradient;
    } else {
        throw std::invalid_argument("unknown solver_method: " + cfg.solver_method);
    }
    return sc;
}

struct StepDiagnostics {
    int n;
    double t;
    double l2_error;
    double energy_error;
    double e_kinetic;
    double e_potential;
};

struct SingleRun {
    ErrorRecord record;
    RunResult result;
    double k = 0.0;
    int num_steps = 0;
    std::vector<StepDiagnostics> steps; // kept only when requested
};

inline std::pair<double, int> resolve_time_step(const RunConfig& cfg, double T, double h) {
    StepRule rule = cfg.step_rule;
    if (rule == StepRule::automatic)
        rule = cfg.integrator == Integrator::explicit_scheme ? StepRule::ratio_h2
                                                             : StepRule::equal_h;
    double k = 0.0;
    switch (rule) {
        case StepRule::equal_h: k = h; break;
        case StepRule::ratio_h2: k = cfg.k_ratio * h * h; break;
        case StepRule::fixed: k = cfg.k; break;
        case StepRule::automatic: break;
    }
    if (cfg.n_steps > 0) return {T / cfg.n_steps, cfg.n_steps};
    if (k <= 0.0) throw std::invalid_argument("resolved time step is not positive");
    int N = std::max(1, static_cast<int>(std::llround(T / k)));
    return {T / N, N};
}

// Caching wrapper so the implicit three-level average re-assembles nothing.
class LoadCache {
public:
    LoadCache(const Discretization& d, double k) : k_(k) {
        if (d.problem.forcing_is_zero || !d.problem.forcing.time_factor) {
            zero_ = true;
            return;
        }
        spatial_ = assemble_load(d.space, d.problem.forcing.spatial.value);
        time_factor_ = d.problem.forcing.time_factor;
    }

    LoadProvider provider() const {
        if (zero_) return {};
        return [this](int level) {
            Vector f = spatial_;
            double tau = time_factor_(level * k_);
            for (double& v : f) v *= tau;
            return f;
        };
    }

private:
    bool zero_ = false;
    double k_ = 0.0;
    Vector spatial_;
    std::function<double(double)> time_factor_;
};

inline const char* norm_label(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::morley: return "pw";
        case SpaceKind::dg: return "dG";
        case SpaceKind::c0ip: return "IP";
    }
    return "?";
}

// One trajectory of one scheme/resolution; tracks max-over-time errors when
// the problem has a closed-form solution.
inline SingleRun run_single(const Discretization& d, const RunConfig& cfg,
                            const StepObserver& extra_observer = {},
                            bool keep_steps = false) {
    double T = cfg.T > 0.0 ? cfg.T : d.problem.T;
    auto [k, N] = resolve_time_step(cfg, T, d.h);

    RunOptions opt;
    opt.integrator = cfg.integrator;
    opt.k = k;
    opt.num_steps = N;
    // with k^2/4 lambda_max(M^{-1}A) small the implicit system is essentially
    // the (well conditioned) mass matrix; probe the scale through diagonals
    double diag_ratio = 0.0;
    {
        Vector dm = d.M.diagonal(), da = d.A.diagonal();
        double sm = 0.0, sa = 0.0;
        for (double v : dm) sm += v;
        for (double v : da) sa += std::abs(v);
        diag_ratio = 0.25 * k * k * sa / sm;
    }
    SparseMatrix S_probe = d.M.add_scaled(d.A, 0.25 * k * k);
    opt.solver = resolve_solver(cfg, S_probe, diag_ratio < 0.05);
    opt.mass_solver.tol = cfg.solver_tol;
    opt.mass_solver.max_iter = cfg.solver_max_iter;
    opt.cfl_override = cfg.cfl_override;

    Vector u0;
    {
        // scoped so the factorization is released before the time loop
        LinearSystem ritz_sys(d.A, resolve_solver(cfg, d.A), "stiffness matrix");
        u0 = ritz_sys.solve(ritz_rhs(d.space, d.problem.u0));
    }
    Vector v0_load(d.space.ndof, 0.0);
    if (d.problem.v0.value) v0_load = assemble_load(d.space, d.problem.v0.value);

    LoadCache loads(d, k);

    std::optional<SeparableErrorTracker> tracker;
    if (d.problem.has_exact)
        tracker.emplace(d.space, d.params, d.problem.exact);

    SingleRun out;
    out.k = k;
    out.num_steps = N;
    out.record.h = d.h;
    out.record.k = k;
    out.record.norm_label = norm_label(d.space.kind);

    StepObserver observer = [&](const StepInfo& info) {
        StepDiagnostics diag{info.n, info.t, 0.0, 0.0, info.energy.kinetic,
                             info.energy.potential};
        if (tracker) {
            diag.l2_error = tracker->l2(info.u, info.t);
            diag.energy_error = tracker->energy(info.u, info.t);
            out.record.l2 = std::max(out.record.l2, diag.l2_error);
            out.record.energy = std::max(out.record.energy, diag.energy_error);
        }
        if (keep_steps) out.steps.push_back(diag);
        if (extra_observer) extra_observer(info);
    };

    out.result = run(d.M, d.A, u0, v0_load, loads.provider(), opt, observer);
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission (17 significant digits throughout)

inline void write_rate_table_csv(const RateTable& table, std::ostream& os) {
    os << "h,k,l2_error,l2_rate,energy_error,energy_rate\n";
    for (const auto& row : table.rows) {
        os << format_double(row.record.h) << ',' << format_double(row.record.k) << ','
           << format_double(row.record.l2) << ','
           << (row.l2_rate ? format_double(*row.l2_rate) : "") << ','
           << format_double(row.record.energy) << ','
           << (row.energy_rate ? format_double(*row.energy_rate) : "") << '\n';
    }
}

inline void write_steps_csv(const std::vector<StepDiagnostics>& steps, std::ostream& os) {
    os << "n,t,l2_error,energy_error,E_kinetic,E_potential\n";
    for (const auto& s : steps)
        os << s.n << ',' << format_double(s.t) << ',' << format_double(s.l2_error) << ','
           << format_double(s.energy_error) << ',' << format_double(s.e_kinetic) << ','
           << format_double(s.e_potential) << '\n';
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    return f;
}

// ---------------------------------------------------------------------------
// Commands

struct ConvergeOutcome {
    RateTable table;
    std::vector<SingleRun> runs;
};

inline ConvergeOutcome cmd_converge(const RunConfig& cfg, std::ostream& log = std::cout) {
    if (cfg.ns.size() < 2) throw std::invalid_argument("converge: need at least two resolutions");
    Problem problem = make_problem(cfg.problem);
    if (!problem.has_exact)
        throw std::invalid_argument("converge: problem '" + cfg.problem +
                                    "' has no closed-form solution");
    ConvergeOutcome out;
    std::vector<ErrorRecord> records;
    for (int n : cfg.ns) {
        Discretization d = make_discretization(problem, cfg.scheme, n, cfg);
        SingleRun r = run_single(d, cfg, {}, cfg.write_steps);
        log << "n=" << n << " h=" << format_double(r.record.h) << " k=" << format_double(r.k)
            << " steps=" << r.num_steps << " l2=" << format_double(r.record.l2)
            << " energy=" << format_double(r.record.energy) << '\n';
        if (cfg.write_steps && !cfg.out.empty()) {
            auto f = open_output(cfg.out + "_steps_n" + std::to_string(n) + ".csv");
            write_steps_csv(r.steps, f);
        }
        records.push_back(r.record);
        out.runs.push_back(std::move(r));
    }
    out.table = convergence_rates(records);
    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + ".csv");
        write_rate_table_csv(out.table, f);
    }
    return out;
}

struct SensorTrace {
    int n = 0;
    std::vector<double> t;
    std::vector<double> u_c;
};

inline SensorTrace cmd_example2_single(const RunConfig& cfg, int n, std::ostream& log) {
    Problem problem = make_problem(cfg.problem);
    Discretization d = make_discretization(problem, cfg.scheme, n, cfg);

    RunConfig stepped = cfg;
    if (stepped.n_steps == 0) stepped.n_steps = 12 * n; // N = 600 at n = 50
    const double T = stepped.T > 0.0 ? stepped.T : problem.T;
    const double half_step = 0.5 * T / stepped.n_steps;
    Vector sensor = sensor_vector(d.space, sensor_region());

    SensorTrace trace;
    trace.n = n;

    std::vector<std::pair<double, Vector>> snapshots;
    StepObserver observer = [&](const StepInfo& info) {
        trace.t.push_back(info.t);
        trace.u_c.push_back(dot(sensor, info.u));
        for (double ts : cfg.snapshot_times)
            if (std::abs(info.t - ts) <= half_step &&
                (snapshots.empty() || snapshots.back().first != ts))
                snapshots.emplace_back(ts, info.u);
    };

    SingleRun r = run_single(d, stepped, observer, false);
    log << "n=" << n << " k=" << format_double(r.k) << " steps=" << r.num_steps
        << " u_c(0)=" << format_double(trace.u_c.front()) << '\n';

    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + "_sensor_n" + std::to_string(n) + ".csv");
        f << "t,u_c\n";
        for (std::size_t i = 0; i < trace.t.size(); ++i)
            f << format_double(trace.t[i]) << ',' << format_double(trace.u_c[i]) << '\n';
        for (const auto& [ts, u] : snapshots) {
            auto sf = open_output(cfg.out + "_snapshot_n" + std::to_string(n) + "_t" +
                                  format_double(ts) + ".csv");
            sf << "dof,value\n";
            for (std::size_t i = 0; i < u.size(); ++i)
                sf << i << ',' << format_double(u[i]) << '\n';
        }
    }
    return trace;
}

inline std::vector<SensorTrace> cmd_example2(const RunConfig& cfg, std::ostream& log = std::cout) {
    std::vector<SensorTrace> traces;
    for (int n : cfg.ns) traces.push_back(cmd_example2_single(cfg, n, log));
    return traces;
}

struct StabilityRow {
    std::string integrator;
    double k_ratio; // k / k_max (explicit) or 0 for the implicit row
    double k;
    int steps;
    double drift;
    bool blew_up;
};

// f = 0 sweep around the stability limit; blow-ups are outcomes, not errors.
inline std::vector<StabilityRow> cmd_stability(const RunConfig& cfg,
                                               std::ostream& log = std::cout) {
    Problem problem = make_problem(cfg.problem);
    problem.forcing_is_zero = true;
    problem.forcing = {};
    problem.has_exact = false;
    int n = cfg.ns.empty() ? 8 : cfg.ns.front();
    Discretization d = make_discretization(problem, cfg.scheme, n, cfg);
    double k_max = cfl_max_step(d.M, d.A, 1e-8);
    log << "n=" << n << " k_max=" << format_double(k_max) << '\n';

    Vector u0 = LinearSystem(d.A, resolve_solver(cfg, d.A), "stiffness matrix").solve(ritz_rhs(d.space, d.problem.u0));
    Vector v0_load(d.space.ndof, 0.0);

    std::vector<StabilityRow> rows;
    auto run_one = [&](Integrator integ, double k, double ratio, int steps) {
        RunOptions opt;
        opt.integrator = integ;
        opt.k = k;
        opt.num_steps = steps;
        opt.solver.tol = cfg.solver_tol;
        opt.mass_solver.tol = cfg.solver_tol;
        opt.cfl_override = true; // the sweep crosses the limit on purpose
        opt.stop_on_blowup = true;
        SparseMatrix S_probe = d.M.add_scaled(d.A, 0.25 * k * k);
        if (integ == Integrator::implicit_scheme) opt.solver = resolve_solver(cfg, S_probe);
        RunResult res = run(d.M, d.A, u0, v0_load, {}, opt);
        rows.push_back({to_string(integ), ratio, k, res.steps_completed, res.max_energy_drift,
                        res.blew_up});
        log << to_string(integ) << " k/k_max=" << format_double(ratio)
            << " drift=" << format_double(res.max_energy_drift)
            << (res.blew_up ? " BLOWUP" : "") << '\n';
    };

    for (double r : {0.5, 0.9, 0.99}) run_one(Integrator::explicit_scheme, r * k_max, r, 1000);
    run_one(Integrator::explicit_scheme, 1.05 * k_max, 1.05, 500);
    run_one(Integrator::implicit_scheme, d.h, 0.0, 1000);

    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + ".csv");
        f << "integrator,k_ratio,k,steps,energy_drift,blowup\n";
        for (const auto& r : rows)
            f << r.integrator << ',' << format_double(r.k_ratio) << ',' << format_double(r.k)
              << ',' << r.steps << ',' << format_double(r.drift) << ',' << (r.blew_up ? 1 : 0)
              << '\n';
    }
    return rows;
}

} // namespace biharm
