#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biharm/spaces.hpp"
#include "biharm/timestep.hpp"

namespace biharm {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

enum class StepRule { automatic, equal_h, ratio_h2, fixed };

inline std::string to_string(StepRule r) {
    switch (r) {
        case StepRule::automatic: return "auto";
        case StepRule::equal_h: return "equal_h";
        case StepRule::ratio_h2: return "ratio_h2";
        case StepRule::fixed: return "fixed";
    }
    return "?";
}

// Full experiment description. Defaults mirror the reference experiments, so
// a bare `converge --scheme morley --integrator implicit` reproduces the
// published table setup.
struct RunConfig {
    std::string problem = "example1";
    SpaceKind scheme = SpaceKind::morley;
    Integrator integrator = Integrator::implicit_scheme;
    std::vector<int> ns = {4, 8, 16, 32};
    // negative extents mean "use the problem's own domain / end time"
    Rect domain{0, 0, -1, -1};
    double T = -1.0;
    StepRule step_rule = StepRule::automatic;
    double k = 0.0;          // for StepRule::fixed
    double k_ratio = 0.01;   // k = ratio * h^2 for ratio_h2
    double sigma_dg1 = 10.0;
    double sigma_dg2 = 15.0;
    double sigma_ip = 10.0;
    std::string out;         // output path stem
    double solver_tol = 1e-12;
    int solver_max_iter = 200000;
    std::string solver_method = "auto"; // auto | cg | cholesky
    bool cfl_override = false;
    int n_steps = 0;         // force the step count (sensor runs); 0 = derive
    std::vector<double> snapshot_times;
    bool write_steps = false;

    bool domain_overridden() const { return domain.x1 > domain.x0 && domain.y1 > domain.y0; }

    bool operator==(const RunConfig&) const = default;
};

inline std::string serialize(const RunConfig& c) {
    std::ostringstream os;
    auto list_int = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    auto list_double = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
        return s;
    };
    os << "problem = " << c.problem << '\n';
    os << "scheme = " << to_string(c.scheme) << '\n';
    os << "integrator = " << to_string(c.integrator) << '\n';
    os << "n = " << list_int(c.ns) << '\n';
    os << "domain = " << format_double(c.domain.x0) << ' ' << format_double(c.domain.y0) << ' '
       << format_double(c.domain.x1) << ' ' << format_double(c.domain.y1) << '\n';
    os << "T = " << format_double(c.T) << '\n';
    os << "step_rule = " << to_string(c.step_rule) << '\n';
    os << "k = " << format_double(c.k) << '\n';
    os << "k_ratio = " << format_double(c.k_ratio) << '\n';
    os << "sigma_dg1 = " << format_double(c.sigma_dg1) << '\n';
    os << "sigma_dg2 = " << format_double(c.sigma_dg2) << '\n';
    os << "sigma_ip = " << format_double(c.sigma_ip) << '\n';
    os << "out = " << c.out << '\n';
    os << "solver_tol = " << format_double(c.solver_tol) << '\n';
    os << "solver_max_iter = " << c.solver_max_iter << '\n';
    os << "solver_method = " << c.solver_method << '\n';
    os << "cfl_override = " << (c.cfl_override ? "true" : "false") << '\n';
    os << "n_steps = " << c.n_steps << '\n';
    os << "snapshot_times = " << list_double(c.snapshot_times) << '\n';
    os << "write_steps = " << (c.write_steps ? "true" : "false") << '\n';
    return os.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

} // namespace detail

inline SpaceKind parse_scheme(const std::string& s) {
    if (s == "morley") return SpaceKind::morley;
    if (s == "dg") return SpaceKind::dg;
    if (s == "c0ip") return SpaceKind::c0ip;
    throw std::invalid_argument("unknown scheme: " + s);
}

inline Integrator parse_integrator(const std::string& s) {
    if (s == "explicit") return Integrator::explicit_scheme;
    if (s == "implicit") return Integrator::implicit_scheme;
    throw std::invalid_argument("unknown integrator: " + s);
}

inline StepRule parse_step_rule(const std::string& s) {
    if (s == "auto") return StepRule::automatic;
    if (s == "equal_h") return StepRule::equal_h;
    if (s == "ratio_h2") return StepRule::ratio_h2;
    if (s == "fixed") return StepRule::fixed;
    throw std::invalid_argument("unknown step_rule: " + s);
}

inline bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("expected boolean, got: " + s);
}

inline RunConfig parse_config(std::istream& is) {
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key == "problem") c.problem = val;
        else if (key == "scheme") c.scheme = parse_scheme(val);
        else if (key == "integrator") c.integrator = parse_integrator(val);
        else if (key == "n") {
            c.ns.clear();
            for (const auto& p : detail::split(val, ',')) c.ns.push_back(std::stoi(p));
        } else if (key == "domain") {
            std::istringstream ss(val);
            if (!(ss >> c.domain.x0 >> c.domain.y0 >> c.domain.x1 >> c.domain.y1))
                throw std::invalid_argument("config: domain needs 4 numbers");
        } else if (key == "T") c.T = std::stod(val);
        else if (key == "step_rule") c.step_rule = parse_step_rule(val);
        else if (key == "k") c.k = std::stod(val);
        else if (key == "k_ratio") c.k_ratio = std::stod(val);
        else if (key == "sigma_dg1") c.sigma_dg1 = std::stod(val);
        else if (key == "sigma_dg2") c.sigma_dg2 = std::stod(val);
        else if (key == "sigma_ip") c.sigma_ip = std::stod(val);
        else if (key == "out") c.out = val;
        else if (key == "solver_tol") c.solver_tol = std::stod(val);
        else if (key == "solver_max_iter") c.solver_max_iter = std::stoi(val);
        else if (key == "solver_method") c.solver_method = val;
        else if (key == "cfl_override") c.cfl_override = parse_bool(val);
        else if (key == "n_steps") c.n_steps = std::stoi(val);
        else if (key == "snapshot_times") {
            c.snapshot_times.clear();
            for (const auto& p : detail::split(val, ','))
                if (!p.empty()) c.snapshot_times.push_back(std::stod(p));
        } else if (key == "write_steps") c.write_steps = parse_bool(val);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(f);
}

} // namespace biharm
