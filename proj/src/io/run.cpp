#include "emx/io/run.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "emx/errors.hpp"

namespace emx {

namespace fs = std::filesystem;

NdjsonWriter::NdjsonWriter(const std::string& path, bool append, std::size_t capacity)
    : capacity_(std::max<std::size_t>(capacity, 1)) {
    file_ = std::fopen(path.c_str(), append ? "ab" : "wb");
    if (!file_) throw FormatError("cannot open '" + path + "' for writing");
    thread_ = std::thread([this] { loop(); });
}

NdjsonWriter::~NdjsonWriter() { close(); }

void NdjsonWriter::push(nlohmann::json row) {
    std::string line = row.dump() + "\n";
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closing_; });
    if (closing_) return;
    queue_.push_back(std::move(line));
    not_empty_.notify_one();
}

void NdjsonWriter::close() {
    {
        std::lock_guard lock(mu_);
        if (closing_ && !thread_.joinable()) return;
        closing_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
    if (thread_.joinable()) thread_.join();
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
    }
}

void NdjsonWriter::loop() {
    std::unique_lock lock(mu_);
    while (true) {
        not_empty_.wait(lock, [&] { return !queue_.empty() || closing_; });
        if (queue_.empty()) return;
        std::string line = std::move(queue_.front());
        queue_.pop_front();
        not_full_.notify_one();
        lock.unlock();
        std::fwrite(line.data(), 1, line.size(), file_);
        std::fflush(file_);
        lock.lock();
    }
}

nlohmann::json report_json(const EnergyReport& r, std::size_t step) {
    return {{"type", "sample"},
            {"step", step},
            {"t", r.t},
            {"order", r.order},
            {"fluid", r.fluid},
            {"F", r.F},
            {"dtB", r.dtB},
            {"gradB", r.gradB},
            {"e_quad", r.e_quad},
            {"gauss", r.gauss},
            {"div_b", r.div_b},
            {"density_discrepancy", r.density_discrepancy},
            {"fluid_by_order", r.fluid_by_order},
            {"F_by_order", r.F_by_order},
            {"G_by_order", r.G_by_order}};
}

CheckpointMeta run_meta(const RunConfig& c) {
    CheckpointMeta m;
    m.config_hash = config_hash(c);
    m.seeds = {{"master", c.seed},
               {"doping", doping_seed(c)},
               {"perturbation", perturbation_seed(c)}};
    return m;
}

Equilibrium build_equilibrium(const RunConfig& c) {
    const GridPtr grid = make_grid(c);
    EquilibriumOptions opts;
    opts.max_iter = c.eq_max_iter;
    return solve_equilibrium(make_doping(c, grid), c.ion_mass, c.Bbar, c.eq_tol, opts);
}

namespace {

std::string checkpoint_name(std::size_t step) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "step-%010zu.emx", step);
    return buf;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + p.string() + "'");
    out << text;
}

struct Positivity {
    double min_ratio;
    double min_theta;
    double max_theta;
};

Positivity positivity(const PlasmaFields& f, const Equilibrium& eq) {
    Positivity p{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
    for (Species sp : {Species::electron, Species::ion}) {
        const auto& s = f.of(sp);
        const auto& nb = eq.nbar(sp);
        for (std::size_t i = 0; i < s.n.size(); ++i) p.min_ratio = std::min(p.min_ratio, s.n[i] / nb[i]);
        p.min_theta = std::min(p.min_theta, s.theta.min());
        p.max_theta = std::max(p.max_theta, s.theta.max());
    }
    return p;
}

nlohmann::json record_json(const RunRecord& r) {
    return {{"start_step", r.start_step},
            {"steps", r.steps},
            {"t", r.final_state.t},
            {"min_density_ratio", r.min_density_ratio},
            {"min_temperature", r.min_temperature},
            {"max_temperature", r.max_temperature},
            {"max_gauss_residual", r.max_gauss_residual},
            {"max_div_b", r.max_div_b},
            {"cfl_ratio", r.cfl_ratio}};
}

// Shared driver for fresh and resumed runs.
RunRecord drive(const RunConfig& c, const fs::path& dir, const Equilibrium& eq,
                const PlasmaState& init, std::size_t start_step, NdjsonWriter& out) {
    const CheckpointMeta meta = run_meta(c);
    const fs::path final_path = dir / "final.emx";
    RunObserver obs;
    obs.on_sample = [&](std::size_t step, const PlasmaState& s) {
        nlohmann::json row = report_json(energy_report(s, eq, c.sobolev_order), step);
        const Positivity p = positivity(s.fields, eq);
        row["min_density_ratio"] = p.min_ratio;
        row["min_temperature"] = p.min_theta;
        row["max_temperature"] = p.max_theta;
        out.push(std::move(row));
    };
    obs.on_checkpoint = [&](std::size_t step, const PlasmaState& s) {
        save_state((dir / "checkpoints" / checkpoint_name(step)).string(), s, step, meta);
    };
    obs.on_failure = [&](std::size_t step, const PlasmaState& s, const Error& e) {
        save_state(final_path.string(), s, step, meta);
        out.push({{"type", "error"},
                  {"kind", e.kind()},
                  {"message", e.what()},
                  {"step", step + 1},
                  {"last_good_step", step}});
    };

    try {
        RunRecord rec = simulate(c.time, eq, init, obs, start_step);
        save_state(final_path.string(), rec.final_state, rec.steps, meta);
        nlohmann::json end = record_json(rec);
        end["type"] = "end";
        out.push(end);
        out.close();
        nlohmann::json summary = record_json(rec);
        summary["status"] = "ok";
        summary["config_hash"] = meta.config_hash;
        summary["wall_seconds"] = rec.wall_seconds;
        write_text(dir / "summary.json", summary.dump(2) + "\n");
        return rec;
    } catch (const StepFailure& e) {
        out.close();
        const nlohmann::json summary{{"status", "failed"},
                                     {"config_hash", meta.config_hash},
                                     {"failed_step", e.step},
                                     {"kind", e.cause_kind},
                                     {"message", e.what()}};
        write_text(dir / "summary.json", summary.dump(2) + "\n");
        throw;
    }
}

nlohmann::json start_row(const RunConfig& c, const Equilibrium& eq, const PlasmaState& init) {
    const CheckpointMeta meta = run_meta(c);
    const double limit = cfl_limit(init.fields, c.n_per_axis);
    nlohmann::json row{{"type", "start"},
                       {"config_hash", meta.config_hash},
                       {"seeds", meta.seeds},
                       {"d", c.d},
                       {"N", c.n_per_axis},
                       {"dt", c.time.dt},
                       {"t_end", c.time.t_end},
                       {"steps", total_steps(c.time)},
                       {"scheme", to_string(c.time.scheme)},
                       {"equilibrium_residual", eq.residual},
                       {"equilibrium_iterations", eq.iterations},
                       {"cfl_limit", limit},
                       {"cfl_ratio", c.time.dt / limit}};
    if (c.time.dt > limit) {
        row["warning"] = "dt exceeds the CFL guard";
        std::cerr << "warning: dt = " << c.time.dt << " exceeds the CFL guard " << limit << "\n";
    }
    return row;
}

}  // namespace

RunRecord run_simulation(const RunConfig& c, const std::string& dir_str, const Equilibrium* eq_in) {
    const fs::path dir(dir_str);
    fs::create_directories(dir / "checkpoints");
    write_text(dir / "resolved-config.toml", to_toml(c));

    Equilibrium eq;
    if (eq_in) {
        const GridPtr& g = eq_in->grid();
        if (g->dims() != c.d || g->n() != c.n_per_axis)
            throw ValidationError("equilibrium", "on the grid given by [grid]");
        eq = *eq_in;
    } else {
        eq = build_equilibrium(c);
    }
    const CheckpointMeta meta = run_meta(c);
    save_equilibrium((dir / "equilibrium.emx").string(), eq, meta);

    const PlasmaState init = make_initial_data(eq, c.perturbation, perturbation_seed(c),
                                               c.time.floor_factor);
    NdjsonWriter out((dir / "diagnostics.ndjson").string(), false);
    out.push(start_row(c, eq, init));
    return drive(c, dir, eq, init, 0, out);
}

std::string latest_checkpoint(const std::string& dir_str) {
    const fs::path dir(dir_str);
    if (fs::exists(dir / "final.emx")) return (dir / "final.emx").string();
    std::string best;
    if (fs::is_directory(dir / "checkpoints"))
        for (const auto& e : fs::directory_iterator(dir / "checkpoints"))
            if (e.path().extension() == ".emx" && e.path().filename().string() > fs::path(best).filename().string())
                best = e.path().string();
    if (best.empty()) throw FormatError("no checkpoint found in '" + dir_str + "'");
    return best;
}

RunRecord resume_run(const std::string& dir_str, std::optional<double> t_end) {
    const fs::path dir(dir_str);
    RunConfig c = load_config((dir / "resolved-config.toml").string());
    const LoadedState ls = load_state(latest_checkpoint(dir_str));
    if (ls.header.config_hash != config_hash(c))
        throw FormatError("checkpoint config hash does not match resolved-config.toml");
    const LoadedEquilibrium le = load_equilibrium((dir / "equilibrium.emx").string());

    if (t_end) {
        if (!(*t_end >= 0.0)) throw ValidationError("t_end", "non-negative");
        c.time.t_end = *t_end;
        write_text(dir / "resolved-config.toml", to_toml(c));
    }
    const std::size_t start = static_cast<std::size_t>(ls.header.step);
    if (start > total_steps(c.time))
        throw ValidationError("t_end", "not earlier than the checkpoint time");

    NdjsonWriter out((dir / "diagnostics.ndjson").string(), true);
    out.push({{"type", "resume"},
              {"from_step", start},
              {"t", ls.state.t},
              {"t_end", c.time.t_end},
              {"config_hash", config_hash(c)}});
    return drive(c, dir, le.equilibrium, ls.state, start, out);
}

}  // namespace emx
