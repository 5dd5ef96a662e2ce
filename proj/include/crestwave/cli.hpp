#pragma once

#include "crestwave/acceptance.hpp"
#include "crestwave/asymptotics.hpp"
#include "crestwave/coefficients.hpp"
#include "crestwave/diagnostics.hpp"
#include "crestwave/error.hpp"
#include "crestwave/halfstrip.hpp"
#include "crestwave/lambda_pipeline.hpp"
#include "crestwave/spectrum.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace crestwave::cli {

using json = nlohmann::json;

struct RunConfig {
    std::string command;
    json parameters = json::object();
    std::optional<std::string> output_path;
    bool deterministic = false;
};

struct RunOutcome {
    int status = 0;
    std::string text;   // stdout
    std::string error;  // one-line diagnostic for stderr
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// Formatting and hashing

inline double round15(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

inline json round15(const json& j) {
    if (j.is_number_float()) return round15(j.get<double>());
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = round15(*it);
        return out;
    }
    return j;
}

inline std::string fmt15(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[md[k] >> 4]);
        out.push_back(hex[md[k] & 0xf]);
    }
    return out;
}

inline json config_json(const RunConfig& cfg) {
    return {{"command", cfg.command}, {"parameters", cfg.parameters}};
}

// Artifact = payload + config + hash of both; the timestamp stays outside the hash.
inline json make_artifact(const RunConfig& cfg, json payload) {
    if (!payload.is_object()) payload = json{{"result", payload}};
    payload["config"] = config_json(cfg);
    payload["sha256"] = sha256_hex(payload.dump());
    if (!cfg.deterministic) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        payload["timestamp"] = buf;
    }
    return payload;
}

// Recomputes the hash of an artifact read back from disk.
inline bool verify_artifact(json artifact) {
    if (!artifact.contains("sha256")) return false;
    const std::string stored = artifact["sha256"].get<std::string>();
    artifact.erase("sha256");
    artifact.erase("timestamp");
    return sha256_hex(artifact.dump()) == stored;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open " + path + " for writing");
    out << text;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Logging

inline std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::stderr_color_mt("crestwave");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::warn);
        if (const char* env = std::getenv("CRESTWAVE_LOG")) {
            const std::string v = env;
            if (v == "error") l->set_level(spdlog::level::err);
            else if (v == "warn") l->set_level(spdlog::level::warn);
            else if (v == "info") l->set_level(spdlog::level::info);
            else if (v == "debug") l->set_level(spdlog::level::debug);
            else l->warn("CRESTWAVE_LOG={} not one of error|warn|info|debug; using warn", v);
        }
        return l;
    }();
    return log;
}

// ---------------------------------------------------------------------------
// Parameter schema

struct ParamSpec {
    json fallback;  // null marks a required key without default
    bool required = false;
};

inline const std::map<std::string, std::map<std::string, ParamSpec>>& schema() {
    static const std::map<std::string, std::map<std::string, ParamSpec>> s = {
        {"eigen", {{"count", {3}}}},
        {"lambda", {{"nodes", {64}}, {"method", {"chebyshev"}}}},
        {"coeffs", {{"omega1", {nullptr, true}}}},
        {"expand", {{"omega1", {nullptr, true}}, {"x_max", {0.01}}, {"samples", {50}}, {"r", {1.0}}}},
        {"solve",
         {{"omega1", {nullptr}}, {"omega_coeffs", {nullptr}}, {"q0", {2.0}}, {"Q", {14.0}}, {"nq", {480}},
          {"nz", {64}}, {"spacing", {"chebyshev"}}, {"max_iter", {50}}, {"tol", {1e-10}}}},
        {"residual", {{"in", {nullptr, true}}}},
        {"fit", {{"in", {nullptr, true}}, {"quantity", {nullptr, true}}, {"q_lo", {nullptr}}, {"q_hi", {nullptr}}}},
        {"validate", {{"criterion", {0}}}},
    };
    return s;
}

// Fills defaults and rejects unknown or missing keys.
inline json normalize(const RunConfig& cfg) {
    const auto& s = schema();
    const auto it = s.find(cfg.command);
    if (it == s.end()) throw UsageError("unknown command \"" + cfg.command + "\"");
    if (!cfg.parameters.is_object()) throw UsageError("parameters must be an object");
    for (const auto& [key, value] : cfg.parameters.items())
        if (!it->second.count(key)) throw UsageError(cfg.command + ": unknown parameter \"" + key + "\"");
    json out = json::object();
    for (const auto& [key, spec] : it->second) {
        if (cfg.parameters.contains(key) && !cfg.parameters[key].is_null())
            out[key] = cfg.parameters[key];
        else if (spec.required)
            throw UsageError(cfg.command + ": missing required parameter \"" + key + "\"");
        else
            out[key] = spec.fallback;
    }
    return out;
}

template <class T>
T param(const json& p, const std::string& key) {
    try {
        return p.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("parameter \"" + key + "\" has the wrong type");
    }
}

inline int positive_int(const json& p, const std::string& key, int min = 1) {
    const int v = param<int>(p, key);
    if (v < min) throw UsageError("parameter \"" + key + "\" must be at least " + std::to_string(min));
    return v;
}

// ---------------------------------------------------------------------------
// Commands

inline json cmd_eigen(const json& p) {
    const int count = positive_int(p, "count");
    json arr = json::array();
    for (int j = 0; j < count; ++j) {
        const auto e = solve_eigenpair(j);
        arr.push_back({{"j", j}, {"tau", e.tau}, {"mu", e.mu}});
    }
    return arr;
}

inline json cmd_lambda(const json& p) {
    BvpOptions opt;
    opt.nodes = positive_int(p, "nodes", 8);
    const auto method = param<std::string>(p, "method");
    if (method == "chebyshev") opt.method = BvpMethod::chebyshev;
    else if (method == "fd4") opt.method = BvpMethod::fd4;
    else throw UsageError("lambda: method must be chebyshev or fd4");
    const auto lr = compute_lambda(opt);
    return {{"lambda", lr.lambda}, {"a1", a1_from_lambda(lr.lambda)}, {"tau1", solve_eigenpair(1).tau},
            {"residual", lr.residual_norm}};
}

inline ExpansionCoefficients coefficients_for(double omega1) {
    return make_coefficients_unchecked(omega1, compute_lambda().lambda, solve_eigenpair(1).tau);
}

inline json cmd_coeffs(const json& p) {
    const auto c = coefficients_for(param<double>(p, "omega1"));
    return {{"omega1", c.omega1},     {"kappa", c.kappa}, {"lambda", c.lambda},
            {"a1", c.a1},             {"tau1", c.tau1},   {"remainder_exp", c.remainder_exp},
            {"eta_x_crest", -kInvSqrt3}};
}

inline std::string cmd_expand(const json& p) {
    const auto c = coefficients_for(param<double>(p, "omega1"));
    const double x_max = param<double>(p, "x_max"), r = param<double>(p, "r");
    const int n = positive_int(p, "samples", 2);
    if (!(x_max > 0.0)) throw UsageError("expand: x_max must be positive");
    std::ostringstream out;
    out << "x,eta_x,eta_xx,eta\n";
    for (int k = 1; k <= n; ++k) {
        const double x = x_max * k / n;
        out << fmt15(x) << ',' << fmt15(eta_x_series(x, c)) << ',' << fmt15(eta_xx_series(x, c)) << ','
            << fmt15(eta_series(x, r, c)) << '\n';
    }
    return out.str();
}

inline StripGrid grid_from(const json& p) {
    StripGrid g;
    g.q0 = param<double>(p, "q0");
    g.Q = param<double>(p, "Q");
    g.nq = positive_int(p, "nq", 4);
    g.nz = positive_int(p, "nz", 4);
    try {
        g.spacing = zspacing_from_string(param<std::string>(p, "spacing"));
        g.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return g;
}

inline VorticityModel vorticity_from(const json& p) {
    const bool has_w = !p["omega1"].is_null(), has_file = !p["omega_coeffs"].is_null();
    if (has_w && has_file) throw UsageError("solve: give either omega1 or omega_coeffs, not both");
    if (has_file) {
        try {
            return VorticityModel::from_json(read_json_file(param<std::string>(p, "omega_coeffs")));
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }
    return VorticityModel::constant(has_w ? param<double>(p, "omega1") : 0.0);
}

struct SolveResult {
    StripField field;
    NewtonReport report;
};

inline SolveResult run_solve(const json& p) {
    const auto grid = grid_from(p);
    const auto omega = vorticity_from(p);
    NewtonOptions opt;
    opt.max_iter = positive_int(p, "max_iter");
    opt.tol = param<double>(p, "tol");
    if (!(opt.tol > 0.0)) throw UsageError("solve: tol must be positive");
    SolveResult r;
    logger()->info("solve: omega(1) = {}, grid {} x {} on [{}, {}]", omega.omega_at_one(), grid.nq, grid.nz, grid.q0,
                   grid.Q);
    r.field = newton_solve(grid, omega, std::nullopt, opt, &r.report);
    for (std::size_t k = 0; k < r.report.residual_history.size(); ++k)
        logger()->debug("newton {}: |F| = {}", k, r.report.residual_history[k]);
    return r;
}

inline json newton_summary(const NewtonReport& rep, double residual) {
    return {{"iterations", rep.iterations},
            {"converged", rep.converged},
            {"residual", residual},
            {"residual_history", rep.residual_history},
            {"step_history", rep.step_history},
            {"alpha", rep.alpha},
            {"domain_extended", rep.domain_extended}};
}

inline json residual_summary(const ResidualReport& r) {
    return {{"interior", r.interior_max()},
            {"bottom", ResidualReport::vmax(r.bottom)},
            {"top", ResidualReport::vmax(r.top)},
            {"bernoulli", ResidualReport::vmax(r.bernoulli)},
            {"max", r.max()},
            {"solved_lines_max", r.solved_max()},
            {"domain_extended", r.domain_extended}};
}

inline StripField load_field(const json& p) {
    const auto j = read_json_file(param<std::string>(p, "in"));
    try {
        return field_from_json(j);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    } catch (const json::exception& e) {
        throw UsageError(std::string("field: ") + e.what());
    }
}

inline json cmd_residual(const json& p) { return residual_summary(assemble_residual(load_field(p))); }

inline json cmd_fit(const json& p) {
    const auto f = load_field(p);
    const auto quantity = param<std::string>(p, "quantity");
    auto [lo, hi] = middle_third(f.grid.q0, f.grid.Q);
    if (!p["q_lo"].is_null()) lo = param<double>(p, "q_lo");
    if (!p["q_hi"].is_null()) hi = param<double>(p, "q_hi");
    std::vector<double> v(f.q.size());
    if (quantity == "xi") {
        v = f.xi();
    } else if (quantity == "eta_x") {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = eta_x_from_zeta(f.zeta[i], f.zeta_q[i]) + kInvSqrt3;
    } else if (quantity == "residual") {
        const auto r = assemble_residual(f);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = r.line_max(static_cast<int>(i));
    } else {
        throw UsageError("fit: quantity must be xi, eta_x or residual");
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (f.q[i] >= lo && f.q[i] <= hi) peak = std::max(peak, std::abs(v[i]));
    if (peak < 1e-13) throw Error("fit: " + quantity + " vanishes to round-off on the window");
    const auto d = fit_decay(f.q, v, lo, hi);
    return {{"quantity", quantity}, {"rate", d.rate},   {"amplitude", d.amplitude}, {"rms_residual", d.rms_residual},
            {"q_lo", d.q_lo},       {"q_hi", d.q_hi},   {"samples", d.samples}};
}

// ---------------------------------------------------------------------------
// Dispatch

inline std::string dump(const json& j) { return round15(j).dump(2) + "\n"; }

inline RunOutcome run_checked(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.parameters = normalize(cfg_in);
    const auto& p = cfg.parameters;
    RunOutcome out;
    auto emit = [&](const json& result) {
        out.text = dump(result);
        if (cfg.output_path) write_text(*cfg.output_path, make_artifact(cfg, round15(result)).dump(2) + "\n");
    };

    if (cfg.command == "eigen") {
        emit(cmd_eigen(p));
    } else if (cfg.command == "lambda") {
        emit(cmd_lambda(p));
    } else if (cfg.command == "coeffs") {
        emit(cmd_coeffs(p));
    } else if (cfg.command == "expand") {
        const auto csv = cmd_expand(p);
        if (cfg.output_path) {
            write_text(*cfg.output_path, csv);
            const json meta = make_artifact(cfg, json{{"csv_sha256", sha256_hex(csv)}});
            write_text(*cfg.output_path + ".meta.json", meta.dump(2) + "\n");
        } else {
            out.text = csv;
        }
    } else if (cfg.command == "solve") {
        try {
            auto r = run_solve(p);
            const json summary = newton_summary(r.report, r.field.residual);
            out.text = dump(summary);
            if (cfg.output_path) {
                // Field arrays keep full precision so that residual and fit reproduce the solve.
                json artifact = r.field.to_json();
                artifact["newton"] = round15(summary);
                write_text(*cfg.output_path, make_artifact(cfg, artifact).dump() + "\n");
            }
        } catch (const ConvergenceError& e) {
            logger()->error("{}", e.what());
            out.text = dump(json{{"converged", false},
                                 {"error", e.what()},
                                 {"residual_history", e.residual_history},
                                 {"step_history", e.step_history}});
            out.status = kExitFailure;
        }
    } else if (cfg.command == "residual") {
        emit(cmd_residual(p));
    } else if (cfg.command == "fit") {
        emit(cmd_fit(p));
    } else if (cfg.command == "validate") {
        const int id = param<int>(p, "criterion");
        if (id < 0 || id > acceptance::kCriteria) throw UsageError("validate: criterion must be in 0..9");
        std::vector<acceptance::CriterionResult> results;
        std::ostringstream lines;
        auto sink = [&](const acceptance::CriterionResult& r) {
            lines << acceptance::format_line(r) << '\n';
            results.push_back(r);
        };
        if (id > 0) sink(acceptance::run_criterion(id));
        else acceptance::run_all(sink);
        json arr = json::array();
        bool all = true;
        for (const auto& r : results) {
            arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
            all = all && r.pass;
        }
        out.text = lines.str();
        if (cfg.output_path)
            write_text(*cfg.output_path, make_artifact(cfg, json{{"criteria", arr}, {"passed", all}}).dump(2) + "\n");
        out.status = all ? kExitOk : kExitFailure;
    }
    return out;
}

// Usage problems map to exit 2, numerical failures to exit 1.
inline RunOutcome run(const RunConfig& cfg) {
    try {
        return run_checked(cfg);
    } catch (const UsageError& e) {
        return {kExitUsage, "", std::string("error: ") + e.what() + "\n"};
    } catch (const std::exception& e) {
        logger()->error("{}: {}", cfg.command, e.what());
        return {kExitFailure, "", std::string("error: ") + e.what() + "\n"};
    }
}

} // namespace crestwave::cli
