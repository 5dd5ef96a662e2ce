#include "crestwave/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

using crestwave::cli::json;

namespace {

// Options are collected as strings and typed against the command schema.
struct Sub {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> text;
    std::map<std::string, double> num;
    std::map<std::string, int> integer;
    std::map<std::string, std::string> flags;  // parameter key -> option name
    std::string out;
    bool deterministic = false;
};

void add_common(Sub& s) {
    s.app->add_option("--out", s.out, "write the result artifact to this path");
    s.app->add_flag("--deterministic", s.deterministic, "omit the timestamp so identical configs give identical bytes");
}

CLI::Option* add_num(Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    s.flags[key] = flag;
    return s.app->add_option(flag, s.num[key], help);
}

CLI::Option* add_int(Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    s.flags[key] = flag;
    return s.app->add_option(flag, s.integer[key], help);
}

CLI::Option* add_text(Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    s.flags[key] = flag;
    return s.app->add_option(flag, s.text[key], help);
}

json collect(const Sub& s) {
    json p = json::object();
    auto given = [&](const std::string& key) { return s.app->count(s.flags.at(key)) > 0; };
    for (const auto& [k, v] : s.num)
        if (given(k)) p[k] = v;
    for (const auto& [k, v] : s.integer)
        if (given(k)) p[k] = v;
    for (const auto& [k, v] : s.text)
        if (given(k)) p[k] = v;
    return p;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crestwave: crest asymptotics of steady rotational gravity waves", "crestwave"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every command");

    std::map<std::string, Sub> subs;
    auto make = [&](const std::string& name, const std::string& about) -> Sub& {
        Sub& s = subs[name];
        s.app = app.add_subcommand(name, about);
        add_common(s);
        return s;
    };

    {
        Sub& s = make("eigen", "eigenpairs of the crest spectral problem as JSON");
        add_int(s, "--count", "count", "number of eigenpairs, j = 0..count-1 (default 3)");
    }
    {
        Sub& s = make("lambda", "second-order coefficient lambda from the reduced boundary-value problem");
        add_int(s, "--nodes", "nodes", "collocation nodes (default 64)");
        add_text(s, "--method", "method", "chebyshev or fd4 (default chebyshev)");
    }
    {
        Sub& s = make("coeffs", "expansion coefficients for a given omega(1)");
        add_num(s, "--omega1", "omega1", "vorticity at the free surface")->required();
    }
    {
        Sub& s = make("expand", "sample the surface-slope expansion as CSV");
        add_num(s, "--omega1", "omega1", "vorticity at the free surface")->required();
        add_num(s, "--x-max", "x_max", "largest x sampled (default 0.01)");
        add_int(s, "--samples", "samples", "number of samples (default 50)");
        add_num(s, "--r", "r", "crest height for eta (default 1)");
    }
    {
        Sub& s = make("solve", "Newton solve of the half-strip problem; --out writes the field");
        add_num(s, "--omega1", "omega1", "constant vorticity omega(1) (default 0)");
        add_text(s, "--omega-coeffs", "omega_coeffs", "JSON file {\"coeffs\": [...], \"delta\": d}");
        add_num(s, "--q0", "q0", "inflow line (default 2)");
        add_num(s, "--Q", "Q", "outflow line (default 14)");
        add_int(s, "--nq", "nq", "q-lines (default 480)");
        add_int(s, "--nz", "nz", "z-nodes (default 64)");
        add_text(s, "--spacing", "spacing", "chebyshev or uniform (default chebyshev)");
        add_int(s, "--max-iter", "max_iter", "Newton iteration cap (default 50)");
        add_num(s, "--tol", "tol", "max-norm tolerance of the scaled system (default 1e-10)");
    }
    {
        Sub& s = make("residual", "defect norms of a stored field");
        add_text(s, "--in", "in", "field JSON written by solve")->required();
    }
    {
        Sub& s = make("fit", "log-linear decay fit of a field quantity");
        add_text(s, "--in", "in", "field JSON written by solve")->required();
        add_text(s, "--quantity", "quantity", "xi, eta_x or residual")->required();
        add_num(s, "--q-lo", "q_lo", "window start (default: middle third of the strip)");
        add_num(s, "--q-hi", "q_hi", "window end (default: middle third of the strip)");
    }
    {
        Sub& s = make("validate", "run the acceptance criteria; exit 1 on any failure");
        add_int(s, "--criterion", "criterion", "single criterion 1-9 (default: all)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return crestwave::cli::kExitUsage;
    }

    for (auto& [name, s] : subs) {
        if (!s.app->parsed()) continue;
        crestwave::cli::RunConfig cfg;
        cfg.command = name;
        cfg.parameters = collect(s);
        if (!s.out.empty()) cfg.output_path = s.out;
        cfg.deterministic = s.deterministic;
        const auto r = crestwave::cli::run(cfg);
        std::fputs(r.text.c_str(), stdout);
        std::fputs(r.error.c_str(), stderr);
        return r.status;
    }
    return crestwave::cli::kExitUsage;
}
