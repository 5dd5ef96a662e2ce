#include "crestwave/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using crestwave::cli::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run tool(const std::string& args) {
    const std::string cmd = std::string(CRESTWAVE_TOOL) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("crestwave_cli_" + std::to_string(getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

class HelpSnapshot : public ::testing::TestWithParam<std::string> {};

} // namespace

TEST_P(HelpSnapshot, MatchesStoredText) {
    const std::string cmd = GetParam();
    const auto r = tool(cmd.empty() ? "--help" : cmd + " --help");
    EXPECT_EQ(r.status, 0);
    const fs::path snap = fs::path(CRESTWAVE_SOURCE_DIR) / "tests" / "snapshots" / ("help_" + (cmd.empty() ? "main" : cmd) + ".txt");
    ASSERT_TRUE(fs::exists(snap)) << snap;
    EXPECT_EQ(r.out, slurp(snap));
}

INSTANTIATE_TEST_SUITE_P(Commands, HelpSnapshot,
                         ::testing::Values("", "eigen", "lambda", "coeffs", "expand", "solve", "residual", "fit",
                                           "validate"),
                         [](const auto& info) { return info.param.empty() ? std::string("main") : info.param; });

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(tool("").status, 2);
    EXPECT_EQ(tool("eigen --bogus 1").status, 2);
    EXPECT_EQ(tool("coeffs").status, 2);
    EXPECT_EQ(tool("residual --in /nonexistent/field.json").status, 2);
    EXPECT_EQ(tool("eigen --count 0").status, 2);
    EXPECT_EQ(tool("solve --nq 10").status, 2);
    EXPECT_EQ(tool("lambda --method spline").status, 2);
}

TEST(Cli, EigenListsTau1) {
    const auto r = tool("eigen --count 3");
    ASSERT_EQ(r.status, 0);
    const auto j = json::parse(r.out);
    ASSERT_EQ(j.size(), 3u);
    EXPECT_EQ(j[1]["j"], 1);
    EXPECT_NEAR(j[1]["tau"].get<double>(), 1.8, 0.05);
    EXPECT_NE(r.out.find("1.80267907376669"), std::string::npos);
}

TEST(Cli, CoeffsWithoutVorticity) {
    const auto r = tool("coeffs --omega1 0");
    ASSERT_EQ(r.status, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["kappa"].get<double>(), 0.0);
    EXPECT_NEAR(j["eta_x_crest"].get<double>(), -crestwave::kInvSqrt3, 1e-15);
}

TEST(Cli, ExpandWritesCsvAndMeta) {
    const auto csv = scratch_dir() / "expand.csv";
    const auto r = tool("expand --omega1 -1 --x-max 0.001 --samples 5 --deterministic --out " + csv.string());
    ASSERT_EQ(r.status, 0);
    const auto text = slurp(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "x,eta_x,eta_xx,eta");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
    const auto meta = json::parse(slurp(csv.string() + ".meta.json"));
    EXPECT_EQ(meta["csv_sha256"].get<std::string>(), crestwave::cli::sha256_hex(text));
    EXPECT_TRUE(crestwave::cli::verify_artifact(meta));
    EXPECT_EQ(meta["config"]["parameters"]["samples"], 5);
}

TEST(Cli, DeterministicArtifactsAreByteIdentical) {
    const auto a = scratch_dir() / "a.json", b = scratch_dir() / "b.json", c = scratch_dir() / "c.json";
    ASSERT_EQ(tool("lambda --deterministic --out " + a.string()).status, 0);
    ASSERT_EQ(tool("lambda --deterministic --out " + b.string()).status, 0);
    ASSERT_EQ(tool("lambda --out " + c.string()).status, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    const auto ja = json::parse(slurp(a)), jc = json::parse(slurp(c));
    EXPECT_FALSE(ja.contains("timestamp"));
    EXPECT_TRUE(jc.contains("timestamp"));
    EXPECT_EQ(ja["sha256"], jc["sha256"]);
    EXPECT_TRUE(crestwave::cli::verify_artifact(ja));
    auto tampered = ja;
    tampered["result"]["lambda"] = 1.1869;
    EXPECT_FALSE(crestwave::cli::verify_artifact(tampered));
}

TEST(Cli, SolveResidualFitPipeline) {
    const auto field = scratch_dir() / "field.json";
    const auto r = tool("solve --omega1 0.5 --nq 241 --nz 24 --deterministic --out " + field.string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_TRUE(json::parse(r.out)["converged"].get<bool>());
    const auto art = json::parse(slurp(field));
    for (const char* key : {"grid", "psi_bar", "zeta", "residual", "config", "sha256"}) EXPECT_TRUE(art.contains(key)) << key;
    EXPECT_EQ(art["psi_bar"].size(), 241u * 24u);
    EXPECT_TRUE(crestwave::cli::verify_artifact(art));

    const auto res = tool("residual --in " + field.string());
    ASSERT_EQ(res.status, 0);
    EXPECT_LT(json::parse(res.out)["solved_lines_max"].get<double>(), 1e-10);

    const auto fit = tool("fit --in " + field.string() + " --quantity xi");
    ASSERT_EQ(fit.status, 0);
    EXPECT_NEAR(json::parse(fit.out)["rate"].get<double>(), 0.5, 0.02);
    EXPECT_EQ(tool("fit --in " + field.string() + " --quantity psi").status, 2);
}

TEST(Cli, FitOnAFlatSurfaceIsANumericalFailure) {
    const auto field = scratch_dir() / "flat.json";
    ASSERT_EQ(tool("solve --omega1 0 --nq 121 --nz 12 --deterministic --out " + field.string()).status, 0);
    EXPECT_EQ(tool("fit --in " + field.string() + " --quantity eta_x").status, 1);
}

TEST(Cli, ValidateExitStatusFollowsTheCriteria) {
    const auto ok = tool("validate --criterion 1");
    EXPECT_EQ(ok.status, 0);
    EXPECT_EQ(ok.out.rfind("AC1 PASS", 0), 0u) << ok.out;
    const auto bad = tool("validate --criterion 3");
    EXPECT_EQ(bad.status, 1);
    EXPECT_EQ(bad.out.rfind("AC3 FAIL", 0), 0u) << bad.out;
    EXPECT_EQ(tool("validate --criterion 12").status, 2);
}

TEST(RunConfig, RejectsUnknownAndMissingKeys) {
    using namespace crestwave::cli;
    auto run = [](const std::string& command, const json& parameters) {
        RunConfig cfg;
        cfg.command = command;
        cfg.parameters = parameters;
        return crestwave::cli::run(cfg);
    };
    EXPECT_EQ(run("eigen", {{"count", 2}, {"extra", 1}}).status, kExitUsage);
    EXPECT_EQ(run("coeffs", json::object()).status, kExitUsage);
    EXPECT_EQ(run("plot", json::object()).status, kExitUsage);
    EXPECT_EQ(run("eigen", {{"count", "three"}}).status, kExitUsage);
    const auto r = run("eigen", {{"count", 2}});
    EXPECT_EQ(r.status, kExitOk);
    EXPECT_EQ(json::parse(r.text).size(), 2u);
}

TEST(RunConfig, RoundsTo15SignificantDigits) {
    using crestwave::cli::round15;
    EXPECT_EQ(round15(1.8026790737666898578), 1.80267907376669);
    EXPECT_EQ(crestwave::cli::fmt15(1.0 / 3.0), "0.333333333333333");
    EXPECT_EQ(crestwave::cli::sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
