#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biharm/config.hpp"
#include "biharm/experiments.hpp"
#include "biharm/selfcheck.hpp"

namespace {

struct CliFlags {
    std::string config_path;
    std::string scheme;
    std::string integrator;
    std::vector<int> ns;
    double T = -1.0;
    double k = 0.0;
    double k_ratio = 0.0;
    double sigma_dg1 = 0.0;
    double sigma_dg2 = 0.0;
    double sigma_ip = 0.0;
    std::string out;
    double solver_tol = 0.0;
    bool cfl_override = false;
    std::string problem;
    int n_steps = 0;
    bool write_steps = false;
};

void add_common_flags(CLI::App* cmd, CliFlags& f) {
    cmd->add_option("--config", f.config_path, "key = value config file");
    cmd->add_option("--scheme", f.scheme, "morley | dg | c0ip");
    cmd->add_option("--integrator", f.integrator, "explicit | implicit");
    cmd->add_option("--n", f.ns, "cells per side (repeatable)");
    cmd->add_option("--T", f.T, "end time");
    cmd->add_option("--k", f.k, "fixed time step");
    cmd->add_option("--k-ratio", f.k_ratio, "use k = ratio * h^2");
    cmd->add_option("--sigma-dg1", f.sigma_dg1, "dG value-jump penalty");
    cmd->add_option("--sigma-dg2", f.sigma_dg2, "dG normal-jump penalty");
    cmd->add_option("--sigma-ip", f.sigma_ip, "C0IP penalty");
    cmd->add_option("--out", f.out, "output path stem");
    cmd->add_option("--solver-tol", f.solver_tol, "relative solver tolerance");
    cmd->add_flag("--cfl-override", f.cfl_override, "allow explicit runs beyond the CFL guard");
    cmd->add_option("--problem", f.problem, "example1 | example2 | trig");
    cmd->add_option("--steps", f.n_steps, "force the number of time steps");
    cmd->add_flag("--write-steps", f.write_steps, "emit a per-step CSV for each run");
}

biharm::RunConfig merge(const CLI::App* cmd, const CliFlags& f) {
    biharm::RunConfig cfg;
    if (!f.config_path.empty()) cfg = biharm::load_config_file(f.config_path);
    if (cmd->count("--scheme")) cfg.scheme = biharm::parse_scheme(f.scheme);
    if (cmd->count("--integrator")) cfg.integrator = biharm::parse_integrator(f.integrator);
    if (cmd->count("--n")) cfg.ns = f.ns;
    if (cmd->count("--T")) cfg.T = f.T;
    if (cmd->count("--k")) {
        cfg.k = f.k;
        cfg.step_rule = biharm::StepRule::fixed;
    }
    if (cmd->count("--k-ratio")) {
        cfg.k_ratio = f.k_ratio;
        cfg.step_rule = biharm::StepRule::ratio_h2;
    }
    if (cmd->count("--sigma-dg1")) cfg.sigma_dg1 = f.sigma_dg1;
    if (cmd->count("--sigma-dg2")) cfg.sigma_dg2 = f.sigma_dg2;
    if (cmd->count("--sigma-ip")) cfg.sigma_ip = f.sigma_ip;
    if (cmd->count("--out")) cfg.out = f.out;
    if (cmd->count("--solver-tol")) cfg.solver_tol = f.solver_tol;
    if (cmd->count("--cfl-override")) cfg.cfl_override = true;
    if (cmd->count("--problem")) cfg.problem = f.problem;
    if (cmd->count("--steps")) cfg.n_steps = f.n_steps;
    if (cmd->count("--write-steps")) cfg.write_steps = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Biharmonic wave equation solver (Morley / dG / C0IP, explicit / implicit)"};
    app.require_subcommand(1);

    CliFlags cf, ef, sf;
    CLI::App* converge = app.add_subcommand("converge", "mesh refinement study");
    add_common_flags(converge, cf);
    CLI::App* example2 = app.add_subcommand("example2", "heterogeneous-media sensor run");
    add_common_flags(example2, ef);
    CLI::App* stability = app.add_subcommand("stability", "CFL sweep and conservation report");
    add_common_flags(stability, sf);
    CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (converge->parsed()) {
            biharm::RunConfig cfg = merge(converge, cf);
            if (cfg.out.empty())
                cfg.out = "converge_" + biharm::to_string(cfg.scheme) + "_" +
                          biharm::to_string(cfg.integrator);
            auto outcome = biharm::cmd_converge(cfg);
            biharm::write_rate_table_csv(outcome.table, std::cout);
            std::cout << "wrote " << cfg.out << ".csv\n";
            return 0;
        }
        if (example2->parsed()) {
            biharm::RunConfig cfg = merge(example2, ef);
            cfg.problem = "example2";
            if (!example2->count("--n")) cfg.ns = {50, 100};
            // the published sensor study uses sigma1 = sigma2 = 20 for dG
            if (cfg.scheme == biharm::SpaceKind::dg && !example2->count("--sigma-dg1") &&
                !example2->count("--sigma-dg2")) {
                cfg.sigma_dg1 = 20.0;
                cfg.sigma_dg2 = 20.0;
            }
            if (cfg.out.empty()) cfg.out = "example2_" + biharm::to_string(cfg.scheme);
            biharm::cmd_example2(cfg);
            return 0;
        }
        if (stability->parsed()) {
            biharm::RunConfig cfg = merge(stability, sf);
            if (cfg.out.empty())
                cfg.out = "stability_" + biharm::to_string(cfg.scheme);
            auto rows = biharm::cmd_stability(cfg);
            bool found = std::any_of(rows.begin(), rows.end(),
                                     [](const auto& r) { return r.blew_up; });
            // exit 2 flags "instability report requested and found"
            return found ? 2 : 0;
        }
        if (check->parsed()) {
            auto results = biharm::run_self_checks();
            bool all = true;
            for (const auto& r : results) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
                if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
                std::cout << '\n';
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
