#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "biharm/sparse.hpp"

namespace biharm {

enum class Integrator { explicit_scheme, implicit_scheme };

inline std::string to_string(Integrator i) {
    return i == Integrator::explicit_scheme ? "explicit" : "implicit";
}

// The rolling pair (U^{n-1}, U^n) that drives either scheme.
struct TimeState {
    Vector u_prev;
    Vector u_curr;
    int n = 0;
    double k = 0.0;

    double t() const { return n * k; }

    void advance(Vector u_next) {
        u_prev = std::move(u_curr);
        u_curr = std::move(u_next);
        ++n;
    }
};

struct DiscreteEnergy {
    double kinetic = 0.0;    // || dbar_t U^{n+1/2} ||_M^2
    double potential = 0.0;  // a_h(U^{n+1/2}, U^{n+1/2})
    double correction = 0.0; // (k^2/4) a_h(dbar_t U^{n+1/2}, dbar_t U^{n+1/2})

    // conserved for f = 0: implicit always, explicit below the CFL limit
    double implicit_total() const { return kinetic + potential; }
    double explicit_total() const { return kinetic + potential - correction; }
};

inline DiscreteEnergy discrete_energy(const SparseMatrix& M, const SparseMatrix& A,
                                      const Vector& u_old, const Vector& u_new, double k) {
    const std::size_t n = u_old.size();
    Vector diff(n), mid(n);
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = (u_new[i] - u_old[i]) / k;
        mid[i] = 0.5 * (u_new[i] + u_old[i]);
    }
    DiscreteEnergy e;
    e.kinetic = M.quadratic_form(diff);
    e.potential = A.quadratic_form(mid);
    e.correction = 0.25 * k * k * A.quadratic_form(diff);
    return e;
}

class InstabilityError : public std::runtime_error {
public:
    InstabilityError(int step, const std::string& what)
        : std::runtime_error("instability at step " + std::to_string(step) + ": " + what),
          step(step) {}
    int step;
};

// A system solved many times: a cached Cholesky factor or repeated
// preconditioned CG with warm starts. Symmetric indefinite systems (the dG
// stiffness below its penalty threshold) latch onto a MINRES fallback.
class LinearSystem {
public:
    LinearSystem() = default;
    LinearSystem(const SparseMatrix& A, SolverConfig cfg, std::string label)
        : matrix_(&A), cfg_(cfg), label_(std::move(label)) {
        if (cfg_.method == SolverConfig::Method::sparse_cholesky) {
            try {
                chol_.emplace(A, label_);
            } catch (const SolverError&) {
                indefinite_ = true;
            }
        }
    }

    Vector solve(const Vector& b, const Vector* warm_start = nullptr) const {
        if (chol_) {
            Vector x;
            chol_->solve(b, x);
            return x;
        }
        if (indefinite_) return solve_minres(*matrix_, b, cfg_, label_, warm_start);
        try {
            return solve_cg(*matrix_, b, cfg_, label_, warm_start);
        } catch (const SolverError& e) {
            if (std::string(e.what()).find("not positive definite") == std::string::npos) throw;
            indefinite_ = true;
            return solve_minres(*matrix_, b, cfg_, label_, warm_start);
        }
    }

    bool indefinite() const { return indefinite_; }
    const SparseMatrix& matrix() const { return *matrix_; }

private:
    const SparseMatrix* matrix_ = nullptr;
    SolverConfig cfg_;
    std::string label_;
    std::optional<CholeskyFactor> chol_;
    mutable bool indefinite_ = false;
};

// Shared first step of both schemes:
//   (2/k^2 M + A/2) U^1 = F^{1/2} + (2/k) Lv0 + (2/k^2 M - A/2) U^0,
// solved through the scaled system S = M + k^2/4 A.
inline Vector first_step(const SparseMatrix& M, const SparseMatrix& A, const LinearSystem& S,
                         const Vector& u0, const Vector& f_half, const Vector& v0_load, double k) {
    Vector mu = M.multiply(u0);
    Vector au = A.multiply(u0);
    Vector rhs(u0.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        double b = f_half[i] + (2.0 / k) * v0_load[i] + (2.0 / (k * k)) * mu[i] - 0.5 * au[i];
        rhs[i] = 0.5 * k * k * b; // (2/k^2)(M + k^2/4 A) = 2/k^2 M + A/2
    }
    return S.solve(rhs, &u0);
}

// Central-difference step: M U^{n+1} = 2M U^n - M U^{n-1} + k^2 (F^n - A U^n).
inline Vector explicit_step(const SparseMatrix& M, const SparseMatrix& A,
                            const LinearSystem& mass_system, const TimeState& s,
                            const Vector* f_n) {
    const double k2 = s.k * s.k;
    Vector extrap(s.u_curr.size());
    for (std::size_t i = 0; i < extrap.size(); ++i)
        extrap[i] = 2.0 * s.u_curr[i] - s.u_prev[i];
    Vector rhs = M.multiply(extrap);
    Vector au = A.multiply(s.u_curr);
    for (std::size_t i = 0; i < rhs.size(); ++i)
        rhs[i] += k2 * ((f_n ? (*f_n)[i] : 0.0) - au[i]);
    Vector u_next = mass_system.solve(rhs, &extrap);
    for (double v : u_next)
        if (!std::isfinite(v)) throw InstabilityError(s.n + 1, "non-finite iterate");
    return u_next;
}

// Averaged implicit step:
//   (M + k^2/4 A) U^{n+1} = 2M U^n - M U^{n-1} - k^2/4 A (2U^n + U^{n-1}) + k^2 F^{n,1/4}.
inline Vector implicit_step(const SparseMatrix& M, const SparseMatrix& A, const LinearSystem& S,
                            const TimeState& s, const Vector* f_quarter) {
    const double k2 = s.k * s.k;
    const std::size_t n = s.u_curr.size();
    Vector extrap(n), avg(n);
    for (std::size_t i = 0; i < n; ++i) {
        extrap[i] = 2.0 * s.u_curr[i] - s.u_prev[i];
        avg[i] = 2.0 * s.u_curr[i] + s.u_prev[i];
    }
    Vector rhs = M.multiply(extrap);
    Vector aavg = A.multiply(avg);
    for (std::size_t i = 0; i < n; ++i)
        rhs[i] += -0.25 * k2 * aavg[i] + k2 * (f_quarter ? (*f_quarter)[i] : 0.0);
    return S.solve(rhs, &extrap);
}

// Sharp discrete stability limit of the central-difference recurrence.
inline double cfl_max_step(const SparseMatrix& M, const SparseMatrix& A, double tol = 1e-8) {
    double lam = lambda_max_generalized(A, M, tol);
    if (lam <= 0.0) throw std::invalid_argument("cfl_max_step: stiffness has no positive spectrum");
    return 2.0 / std::sqrt(lam);
}

struct RunOptions {
    Integrator integrator = Integrator::implicit_scheme;
    double k = 0.0;
    int num_steps = 0;
    SolverConfig solver;           // for the first-step / implicit system
    SolverConfig mass_solver;      // explicit scheme mass solves (CG, warm-started)
    bool cfl_override = false;
    double cfl_guard = 0.95;
    bool track_energy = true;
    bool stop_on_blowup = false;   // report blow-up instead of throwing
    double blowup_factor = 1e3;
};

struct StepInfo {
    int n;
    double t;
    const Vector& u;
    DiscreteEnergy energy; // of the latest completed interval (E^{n-1/2}; E^{1/2} on row 0)
};

using StepObserver = std::function<void(const StepInfo&)>;
// load vector at time level n; leave empty for f = 0
using LoadProvider = std::function<Vector(int)>;

struct RunResult {
    int steps_completed = 0;
    bool blew_up = false;
    int blow_up_step = -1;
    double initial_energy = 0.0;   // scheme-conserved total of the first interval
    double max_energy_drift = 0.0; // relative, over all completed intervals
    Vector u_final;
    Vector u_penultimate;
};

// Drive the selected scheme from U^0: shared first step, then N-1 steps.
// Deterministic given its inputs; per-step diagnostics stream to `observer`.
inline RunResult run(const SparseMatrix& M, const SparseMatrix& A, const Vector& u0,
                     const Vector& v0_load, const LoadProvider& load, const RunOptions& opt,
                     const StepObserver& observer = {}) {
    if (opt.k <= 0.0) throw std::invalid_argument("run: time step must be positive");
    if (opt.num_steps < 1) throw std::invalid_argument("run: need at least one step");

    if (opt.integrator == Integrator::explicit_scheme && !opt.cfl_override) {
        double k_max = cfl_max_step(M, A, 1e-6);
        if (opt.k > opt.cfl_guard * k_max)
            throw std::invalid_argument("run: explicit step " + std::to_string(opt.k) +
                                        " exceeds " + std::to_string(opt.cfl_guard) +
                                        " * k_max = " + std::to_string(opt.cfl_guard * k_max) +
                                        " (pass cfl_override to force)");
    }

    const double k = opt.k;
    SparseMatrix S_mat = M.add_scaled(A, 0.25 * k * k);
    // the first step always goes through S; for explicit runs a factorization
    // would be wasted on one solve, so fall back to CG there
    SolverConfig first_cfg = opt.solver;
    if (opt.integrator == Integrator::explicit_scheme)
        first_cfg.method = SolverConfig::Method::conjugate_gradient;
    LinearSystem S(S_mat, first_cfg, "time-step system");
    LinearSystem mass;
    if (opt.integrator == Integrator::explicit_scheme)
        mass = LinearSystem(M, opt.mass_solver, "mass matrix");

    Vector f_half(u0.size(), 0.0);
    if (load) {
        Vector f0 = load(0);
        Vector f1 = load(1);
        for (std::size_t i = 0; i < u0.size(); ++i) f_half[i] = 0.5 * (f0[i] + f1[i]);
    }

    TimeState state;
    state.k = k;
    state.u_prev = u0;
    state.u_curr = first_step(M, A, S, u0, f_half, v0_load, k);
    state.n = 1;

    RunResult res;
    DiscreteEnergy e_first;
    if (opt.track_energy) e_first = discrete_energy(M, A, state.u_prev, state.u_curr, k);
    const bool is_explicit = opt.integrator == Integrator::explicit_scheme;
    res.initial_energy = is_explicit ? e_first.explicit_total() : e_first.implicit_total();
    const double blowup_ref = e_first.kinetic + e_first.potential;

    if (observer) {
        observer({0, 0.0, u0, e_first});
        observer({1, k, state.u_curr, e_first});
    }
    res.steps_completed = 1;

    Vector f_n, f_quarter;
    for (int n = 1; n < opt.num_steps; ++n) {
        Vector u_next;
        try {
            if (is_explicit) {
                if (load) f_n = load(n);
                u_next = explicit_step(M, A, mass, state, load ? &f_n : nullptr);
            } else {
                if (load) {
                    Vector fp = load(n + 1);
                    Vector fc = load(n);
                    Vector fm = load(n - 1);
                    f_quarter.assign(u0.size(), 0.0);
                    for (std::size_t i = 0; i < u0.size(); ++i)
                        f_quarter[i] = 0.25 * (fp[i] + 2.0 * fc[i] + fm[i]);
                }
                u_next = implicit_step(M, A, S, state, load ? &f_quarter : nullptr);
            }
        } catch (const InstabilityError& err) {
            if (!opt.stop_on_blowup) throw;
            res.blew_up = true;
            res.blow_up_step = err.step;
            break;
        }

        DiscreteEnergy e;
        if (opt.track_energy) {
            e = discrete_energy(M, A, state.u_curr, u_next, k);
            double total = is_explicit ? e.explicit_total() : e.implicit_total();
            if (res.initial_energy != 0.0)
                res.max_energy_drift = std::max(
                    res.max_energy_drift,
                    std::abs(total - res.initial_energy) / std::abs(res.initial_energy));
            if (e.kinetic + e.potential > opt.blowup_factor * blowup_ref) {
                res.blew_up = true;
                res.blow_up_step = n + 1;
                if (!opt.stop_on_blowup)
                    throw InstabilityError(n + 1, "energy grew by more than " +
                                                      std::to_string(opt.blowup_factor));
            }
        }

        state.advance(std::move(u_next));
        res.steps_completed = n + 1;
        if (observer) observer({state.n, state.t(), state.u_curr, e});
        if (res.blew_up) break;
    }

    res.u_final = state.u_curr;
    res.u_penultimate = state.u_prev;
    return res;
}

} // namespace biharm
