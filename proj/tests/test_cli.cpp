#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "emx/cli.hpp"
#include "emx/errors.hpp"
#include "emx/io/checkpoint.hpp"

using namespace emx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("emx-cli-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

Result run(const TempDir& tmp, const std::string& args) {
    const std::string err = tmp / "stderr.txt";
    const std::string cmd = std::string(EMX_BINARY) + " " + args + " 2>" + err;
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

std::vector<nlohmann::json> rows(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

const char* kSmallRun = R"(seed = 3
[grid]
d = 1
n_per_axis = 16
[equilibrium]
doping = "cosine"
beta = 0.5
epsilon = 0.2
[perturbation]
amplitude = 0.001
electric_free = true
[time]
dt = 0.002
t_end = 0.4
[output]
cadence = 0.02
checkpoint_every = 50
)";

double max_state_difference(const std::string& a, const std::string& b) {
    const auto x = load_state(a);
    const auto y = load_state(b);
    PlasmaFields d = x.state.fields;
    d.axpy(-1.0, y.state.fields);
    return d.max_abs();
}

}  // namespace

TEST_CASE("verify-algebra reports a passing check") {
    TempDir tmp;
    const Result r = run(tmp, "verify-algebra --samples 1000 --seed 7");
    CHECK(r.code == 0);
    const auto j = rows(r.out);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["type"] == "algebra");
    CHECK(j[0]["pass"] == true);
    CHECK(j[0]["samples"] == 1000);
    CHECK(j[0]["seed"] == 7);
}

TEST_CASE("usage errors") {
    TempDir tmp;
    CHECK(run(tmp, "").code == 2);
    CHECK(run(tmp, "frobnicate").code == 2);
    CHECK(run(tmp, "simulate").code == 2);
    CHECK(run(tmp, "--help").code == 0);
}

TEST_CASE("corrupt config exits with 2") {
    TempDir tmp;
    spit(tmp / "bad.toml", "[grid]\nd = 1\nn_per_axis = \"many\"\n");
    const Result r = run(tmp, "simulate --config " + (tmp / "bad.toml") + " --out " + (tmp / "run"));
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
    REQUIRE(rows(r.out).size() == 1);
    CHECK(rows(r.out)[0]["kind"] == "ParseError");

    spit(tmp / "range.toml", "[grid]\nn_per_axis = 24\n");
    CHECK(run(tmp, "equilibrium --config " + (tmp / "range.toml") + " --out " + (tmp / "e.emx")).code ==
          2);
    CHECK(run(tmp, "simulate --config " + (tmp / "missing.toml") + " --out " + (tmp / "r")).code == 2);
}

TEST_CASE("non-positive doping exits with 4") {
    TempDir tmp;
    spit(tmp / "dop.toml", "[grid]\nn_per_axis = 16\n[equilibrium]\ndoping = \"constant\"\nbeta = 0.0\n");
    const Result r = run(tmp, "equilibrium --config " + (tmp / "dop.toml") + " --out " + (tmp / "e.emx"));
    CHECK(r.code == 4);
    CHECK(r.err.find("InvalidDoping") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "e.emx"));
}

TEST_CASE("equilibrium subcommand writes a loadable checkpoint") {
    TempDir tmp;
    spit(tmp / "c.toml", kSmallRun);
    const Result r = run(tmp, "equilibrium --config " + (tmp / "c.toml") + " --out " + (tmp / "e.emx"));
    CHECK(r.code == 0);
    const auto j = rows(r.out);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["residual"].get<double>() <= 1e-10);
    const auto eq = load_equilibrium(tmp / "e.emx");
    CHECK(eq.header.config_hash == j[0]["config_hash"]);

    const Result s = run(tmp, "simulate --config " + (tmp / "c.toml") + " --equilibrium " +
                                  (tmp / "e.emx") + " --out " + (tmp / "run"));
    CHECK(s.code == 0);
    CHECK(fs::exists(tmp / "run/final.emx"));
}

TEST_CASE("numerical failure exits with 3 and leaves a final checkpoint") {
    TempDir tmp;
    // dt far beyond the stability limit of the explicit scheme.
    std::string cfg = kSmallRun;
    cfg.replace(cfg.find("dt = 0.002"), 10, "dt = 0.08");
    cfg.replace(cfg.find("t_end = 0.4"), 11, "t_end = 400");
    spit(tmp / "c.toml", cfg);
    const Result r = run(tmp, "simulate --config " + (tmp / "c.toml") + " --out " + (tmp / "run"));
    CHECK(r.code == 3);
    REQUIRE(fs::exists(tmp / "run/final.emx"));
    const auto last = load_state(tmp / "run/final.emx");
    CHECK(last.state.fields.all_finite());
    const auto stream = rows(slurp(tmp / "run/diagnostics.ndjson"));
    CHECK(stream.front()["type"] == "start");
    CHECK(stream.front().contains("warning"));
    CHECK(stream.back()["type"] == "error");
    const auto summary = nlohmann::json::parse(slurp(tmp / "run/summary.json"));
    CHECK(summary["status"] == "failed");
}

TEST_CASE("identical configs give byte-identical outputs") {
    TempDir tmp;
    spit(tmp / "c.toml", kSmallRun);
    REQUIRE(run(tmp, "simulate --config " + (tmp / "c.toml") + " --out " + (tmp / "a")).code == 0);
    REQUIRE(run(tmp, "simulate --config " + (tmp / "c.toml") + " --out " + (tmp / "b")).code == 0);
    CHECK(slurp(tmp / "a/diagnostics.ndjson") == slurp(tmp / "b/diagnostics.ndjson"));
    CHECK(slurp(tmp / "a/final.emx") == slurp(tmp / "b/final.emx"));
    CHECK(slurp(tmp / "a/equilibrium.emx") == slurp(tmp / "b/equilibrium.emx"));
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(tmp.path / "a/checkpoints")) {
        const auto name = e.path().filename().string();
        CHECK(slurp(e.path().string()) == slurp(tmp / ("b/checkpoints/" + name)));
        ++compared;
    }
    CHECK(compared == 4);

    const auto stream = rows(slurp(tmp / "a/diagnostics.ndjson"));
    CHECK(stream.front()["type"] == "start");
    CHECK(stream.back()["type"] == "end");
    std::size_t samples = 0;
    for (const auto& r : stream) samples += r["type"] == "sample";
    CHECK(samples == 21);
}

TEST_CASE("resume reproduces an uninterrupted run") {
    TempDir tmp;
    spit(tmp / "full.toml", kSmallRun);
    std::string half = kSmallRun;
    half.replace(half.find("t_end = 0.4"), 11, "t_end = 0.2");
    spit(tmp / "half.toml", half);
    REQUIRE(run(tmp, "simulate --config " + (tmp / "full.toml") + " --out " + (tmp / "full")).code == 0);
    REQUIRE(run(tmp, "simulate --config " + (tmp / "half.toml") + " --out " + (tmp / "part")).code == 0);
    const Result r = run(tmp, "resume --run " + (tmp / "part") + " --t-end 0.4");
    CHECK(r.code == 0);
    CHECK(max_state_difference(tmp / "full/final.emx", tmp / "part/final.emx") <= 1e-13);
    const auto a = load_state(tmp / "full/final.emx");
    const auto b = load_state(tmp / "part/final.emx");
    CHECK(a.header.step == b.header.step);
    CHECK(a.state.t == b.state.t);

    const auto stream = rows(slurp(tmp / "part/diagnostics.ndjson"));
    bool saw_resume = false;
    for (const auto& row : stream) saw_resume = saw_resume || row["type"] == "resume";
    CHECK(saw_resume);

    CHECK(run(tmp, "resume --run " + (tmp / "nowhere")).code == 2);
}

TEST_CASE("diagnose emits fits and a csv table") {
    TempDir tmp;
    spit(tmp / "c.toml", kSmallRun);
    REQUIRE(run(tmp, "simulate --config " + (tmp / "c.toml") + " --out " + (tmp / "run")).code == 0);
    const Result r = run(tmp, "diagnose --run " + (tmp / "run"));
    CHECK(r.code == 0);
    const auto j = rows(r.out);
    REQUIRE(j.size() == 6);
    for (int k = 0; k < 5; ++k) {
        CHECK(j[k]["type"] == "fit");
        CHECK(j[k].contains("rate"));
        CHECK(j[k]["samples"] == 21);
    }
    CHECK(j[0]["series"] == "fluid");
    CHECK(j[5]["type"] == "monotonicity");
    const std::string csv = slurp(tmp / "run/diagnose.csv");
    CHECK(csv.rfind("step,t,fluid,F,dtB,gradB,e_quad,gauss,div_b\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);

    const auto w = rows(run(tmp, "diagnose --run " + (tmp / "run") + " --window 0.1,0.3").out);
    CHECK(w[0]["samples"] == 11);
    const auto short_window = rows(run(tmp, "diagnose --run " + (tmp / "run") + " --window 0,0.05").out);
    CHECK(short_window[0]["error"] == "InsufficientData");
    CHECK(run(tmp, "diagnose --run " + (tmp / "run") + " --window 3").code == 2);
}

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ParseError(1, "k", "m")) == 2);
    CHECK(exit_code_for(ValidationError("k", "c")) == 2);
    CHECK(exit_code_for(FormatError("x")) == 2);
    CHECK(exit_code_for(InvalidDoping(-0.1)) == 4);
    CHECK(exit_code_for(PositivityViolation("n_e", 0, -1, 0)) == 3);
    CHECK(exit_code_for(NumericalBlowup(1e9, 1e6)) == 3);
    CHECK(exit_code_for(StepFailure(5, NumericalBlowup(1e9, 1e6))) == 3);
    CHECK(exit_code_for(StepFailure(5, NoConvergence(50, 1.0))) == 4);
}
