#include "emx/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>

#include "emx/algebra.hpp"
#include "emx/diagnostics.hpp"
#include "emx/io/checkpoint.hpp"
#include "emx/io/config.hpp"
#include "emx/io/run.hpp"
#include "emx/io/seeds.hpp"

namespace emx {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
    const std::string& k = e.kind();
    if (k == "ParseError" || k == "ValidationError" || k == "FormatError") return 2;
    if (k == "NoConvergence" || k == "InvalidDoping") return 4;
    if (k == "PositivityViolation" || k == "NumericalBlowup" || k == "NonNeutral" ||
        k == "InvalidState")
        return 3;
    if (k == "StepFailure") {
        const auto* sf = dynamic_cast<const StepFailure*>(&e);
        return sf && (sf->cause_kind == "NoConvergence") ? 4 : 3;
    }
    return 1;
}

namespace {

nlohmann::json error_row(const Error& e) {
    return {{"type", "error"}, {"kind", e.kind()}, {"message", e.what()}};
}

nlohmann::json algebra_json(const AlgebraReport& r, std::uint64_t master) {
    return {{"type", "algebra"},
            {"samples", r.samples},
            {"seed", master},
            {"derived_seed", r.seed},
            {"thresholds",
             {{"symmetry", r.thresholds.symmetry},
              {"min_eigenvalue", r.thresholds.min_eigenvalue},
              {"antisymmetry", r.thresholds.antisymmetry}}},
            {"max_symmetry_defect", r.max_symmetry_defect},
            {"max_product_mismatch", r.max_product_mismatch},
            {"min_eigenvalue_a0", r.min_eigenvalue_a0},
            {"max_antisymmetry_defect", r.max_antisymmetry_defect},
            {"symmetry_pass", r.symmetry_pass},
            {"definiteness_pass", r.definiteness_pass},
            {"antisymmetry_pass", r.antisymmetry_pass},
            {"pass", r.pass()}};
}

std::pair<double, double> parse_window(const std::string& w) {
    const auto comma = w.find(',');
    if (comma == std::string::npos) throw ValidationError("window", "of the form a,b");
    try {
        std::size_t used = 0;
        const std::string a = w.substr(0, comma), b = w.substr(comma + 1);
        const double t0 = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        const double t1 = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        if (!(t0 < t1)) throw ValidationError("window", "a,b with a < b");
        return {t0, t1};
    } catch (const std::logic_error&) {
        throw ValidationError("window", "two numbers a,b");
    }
}

int diagnose(const std::string& dir, const std::optional<std::string>& window) {
    const fs::path path = fs::path(dir) / "diagnostics.ndjson";
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");

    static const std::vector<std::string> series{"fluid", "F", "dtB", "gradB", "e_quad"};
    std::vector<nlohmann::json> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw FormatError("malformed NDJSON at line " + std::to_string(lineno));
        }
        if (j.value("type", "") == "sample") rows.push_back(std::move(j));
    }
    if (rows.empty()) throw InsufficientData(0, 10);

    double t0 = rows.front().at("t").get<double>();
    double t1 = rows.back().at("t").get<double>();
    if (window) std::tie(t0, t1) = parse_window(*window);

    for (const auto& name : series) {
        std::vector<TimeSample> ts;
        for (const auto& r : rows) ts.push_back({r.at("t").get<double>(), r.at(name).get<double>()});
        nlohmann::json out{{"type", "fit"}, {"series", name}, {"t0", t0}, {"t1", t1}};
        try {
            const DecayFit f = decay_fit(ts, t0, t1);
            out["rate"] = f.rate;
            out["r2"] = f.r2;
            out["samples"] = f.samples;
            const auto first = std::find_if(ts.begin(), ts.end(), [&](auto& s) { return s.t >= t0; });
            const auto last = std::find_if(ts.rbegin(), ts.rend(), [&](auto& s) { return s.t <= t1; });
            out["ratio"] = last->value / first->value;
        } catch (const Error& e) {
            out["error"] = e.kind();
            out["message"] = e.what();
        }
        std::cout << out.dump() << "\n";
    }

    // Largest relative step-to-step increase of e_quad inside the window.
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double ta = rows[k - 1].at("t").get<double>();
        if (ta < t0 || rows[k].at("t").get<double>() > t1) continue;
        const double a = rows[k - 1].at("e_quad").get<double>();
        const double b = rows[k].at("e_quad").get<double>();
        if (a > 0.0) worst = std::max(worst, (b - a) / a);
    }
    std::cout << nlohmann::json{{"type", "monotonicity"},
                                {"series", "e_quad"},
                                {"max_relative_increase", std::isfinite(worst) ? worst : 0.0}}
                     .dump()
              << "\n";

    std::ofstream csv(fs::path(dir) / "diagnose.csv");
    csv << "step,t";
    for (const auto& s : series) csv << "," << s;
    csv << ",gauss,div_b\n";
    csv.precision(17);
    for (const auto& r : rows) {
        csv << r.at("step").get<std::size_t>() << "," << r.at("t").get<double>();
        for (const auto& s : series) csv << "," << r.at(s).get<double>();
        csv << "," << r.at("gauss").get<double>() << "," << r.at("div_b").get<double>() << "\n";
    }
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Two-fluid Euler-Maxwell periodic-box laboratory"};
    app.require_subcommand(1);

    std::string config, out, eq_path, run_dir, window_arg;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double t_end = 0.0;

    auto* eq_cmd = app.add_subcommand("equilibrium", "Solve for the steady state and save it");
    eq_cmd->add_option("--config", config, "TOML run config")->required();
    eq_cmd->add_option("--out", out, "Output checkpoint path")->required();

    auto* sim = app.add_subcommand("simulate", "Run a perturbation simulation");
    sim->add_option("--config", config, "TOML run config")->required();
    sim->add_option("--equilibrium", eq_path, "Precomputed equilibrium checkpoint");
    sim->add_option("--out", out, "Run directory (overrides [output] dir)");

    auto* alg = app.add_subcommand("verify-algebra", "Check the symmetrizer identities");
    alg->add_option("--samples", samples, "Random states")->check(CLI::PositiveNumber);
    alg->add_option("--seed", seed, "Master seed");

    auto* diag = app.add_subcommand("diagnose", "Decay fits for a finished run");
    diag->add_option("--run", run_dir, "Run directory")->required();
    auto* window_opt = diag->add_option("--window", window_arg, "Fit window a,b");

    auto* res = app.add_subcommand("resume", "Continue a run from its latest checkpoint");
    res->add_option("--run", run_dir, "Run directory")->required();
    auto* t_end_opt = res->add_option("--t-end", t_end, "New end time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*eq_cmd) {
            const RunConfig c = load_config(config);
            const Equilibrium eq = build_equilibrium(c);
            save_equilibrium(out, eq, run_meta(c));
            std::cout << nlohmann::json{{"type", "equilibrium"},
                                        {"residual", eq.residual},
                                        {"iterations", eq.iterations},
                                        {"min_nbar_e", eq.nbar_e.min()},
                                        {"min_nbar_i", eq.nbar_i.min()},
                                        {"config_hash", config_hash(c)}}
                             .dump()
                      << "\n";
            return 0;
        }
        if (*sim) {
            RunConfig c = load_config(config);
            if (!out.empty()) c.out_dir = out;
            if (c.out_dir.empty()) throw ValidationError("output.dir", "set in the config or via --out");
            std::optional<Equilibrium> eq;
            if (!eq_path.empty()) eq = load_equilibrium(eq_path).equilibrium;
            const RunRecord r = run_simulation(c, c.out_dir, eq ? &*eq : nullptr);
            std::cerr << "completed " << r.steps << " steps to t = " << r.final_state.t << "\n";
            return 0;
        }
        if (*alg) {
            const std::uint64_t derived = derive_seed(seed, "algebra");
            const AlgebraReport r = check_algebra(samples, derived);
            std::cout << algebra_json(r, seed).dump() << "\n";
            return r.pass() ? 0 : 1;
        }
        if (*diag) {
            return diagnose(run_dir, *window_opt ? std::optional(window_arg) : std::nullopt);
        }
        if (*res) {
            const RunRecord r =
                resume_run(run_dir, *t_end_opt ? std::optional(t_end) : std::nullopt);
            std::cerr << "resumed to step " << r.steps << ", t = " << r.final_state.t << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        std::cout << error_row(e).dump() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int cli_main(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("emx");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace emx
