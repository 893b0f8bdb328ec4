#pragma once

// "EMX1" checkpoints.
//
//   bytes 0..3   magic "EMX1"
//   bytes 4..11  header length L, unsigned 64-bit little-endian
//   next L bytes UTF-8 JSON header
//   remainder    payload: little-endian IEEE-754 doubles, one block of grid
//                size per entry of header.fields, in that order, C-order
//                with the last axis fastest

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emx/equilibrium.hpp"
#include "emx/state.hpp"

namespace emx {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointHeader {
    int version = kCheckpointVersion;
    std::string kind;  // "state" or "equilibrium"
    int d = 1;
    int n = 8;
    double t = 0.0;
    std::uint64_t step = 0;
    std::vector<std::string> fields;
    nlohmann::json seeds = nlohmann::json::object();
    std::string config_hash;
    std::uint64_t payload_bytes = 0;
    std::string payload_sha256;
    nlohmann::json extras = nlohmann::json::object();
};

struct RawCheckpoint {
    CheckpointHeader header;
    std::vector<double> payload;
};

/// Fills payload_bytes and payload_sha256, then writes via a temporary file and rename.
void write_checkpoint(const std::string& path, CheckpointHeader header,
                      const std::vector<double>& payload);
/// Throws FormatError on bad magic, version mismatch, truncation or hash mismatch.
RawCheckpoint read_checkpoint(const std::string& path);

struct CheckpointMeta {
    nlohmann::json seeds = nlohmann::json::object();
    std::string config_hash;
};

void save_state(const std::string& path, const PlasmaState& s, std::uint64_t step,
                const CheckpointMeta& meta = {});

struct LoadedState {
    PlasmaState state;
    CheckpointHeader header;
};
LoadedState load_state(const std::string& path);

void save_equilibrium(const std::string& path, const Equilibrium& eq,
                      const CheckpointMeta& meta = {});

struct LoadedEquilibrium {
    Equilibrium equilibrium;
    CheckpointHeader header;
};
LoadedEquilibrium load_equilibrium(const std::string& path);

}  // namespace emx
