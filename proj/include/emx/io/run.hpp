#pragma once

// Run directories:
//   resolved-config.toml   every setting, defaults filled in
//   equilibrium.emx        the equilibrium the run perturbs
//   diagnostics.ndjson     start / sample / resume / error / end rows
//   checkpoints/           step-NNNNNNNNNN.emx every checkpoint_every steps
//   final.emx              last state (also written on a failed step)
//   summary.json           run record including wall time

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "emx/diagnostics.hpp"
#include "emx/io/checkpoint.hpp"
#include "emx/io/config.hpp"

namespace emx {

/// Appends one JSON object per line from a background thread. push() blocks
/// only while `capacity` rows are already queued.
class NdjsonWriter {
public:
    NdjsonWriter(const std::string& path, bool append, std::size_t capacity = 256);
    ~NdjsonWriter();
    NdjsonWriter(const NdjsonWriter&) = delete;
    NdjsonWriter& operator=(const NdjsonWriter&) = delete;

    void push(nlohmann::json row);
    /// Drains the queue and joins the writer thread.
    void close();

private:
    void loop();

    std::FILE* file_ = nullptr;
    std::size_t capacity_;
    std::deque<std::string> queue_;
    std::mutex mu_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    bool closing_ = false;
    std::thread thread_;
};

nlohmann::json report_json(const EnergyReport& r, std::size_t step);

CheckpointMeta run_meta(const RunConfig& c);

/// Solves for the configured equilibrium.
Equilibrium build_equilibrium(const RunConfig& c);

/// Fresh run into `dir`. `eq` overrides the solve when given. Step failures
/// leave final.emx and an error row behind, then propagate as StepFailure.
RunRecord run_simulation(const RunConfig& c, const std::string& dir,
                         const Equilibrium* eq = nullptr);

/// Continues the run in `dir` from its latest state, optionally to a new t_end.
RunRecord resume_run(const std::string& dir, std::optional<double> t_end = std::nullopt);

/// Latest state checkpoint in a run directory (final.emx, else highest step).
std::string latest_checkpoint(const std::string& dir);

}  // namespace emx
