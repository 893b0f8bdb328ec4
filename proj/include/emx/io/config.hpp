#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "emx/dynamics.hpp"
#include "emx/equilibrium.hpp"

namespace emx {

struct DopingConfig {
    std::string kind = "cosine";  // constant | cosine | random
    double beta = 0.5;
    double epsilon = 0.2;
    int axis = 0;
    int mode = 1;
    double floor = 0.25;      // random: min b
    double amplitude = 0.5;   // random: max b - min b
    int kmax = 3;             // random
    std::optional<std::uint64_t> seed;
};

struct RunConfig {
    std::uint64_t seed = 0;

    int d = 1;
    int n_per_axis = 64;

    DopingConfig doping;
    double ion_mass = 1.0;
    Vec3 Bbar{0.0, 0.0, 0.0};
    double eq_tol = 1e-10;
    int eq_max_iter = 50;

    PerturbationSpec perturbation = [] {
        PerturbationSpec p;
        p.amplitude = 1e-3;
        return p;
    }();
    std::optional<std::uint64_t> perturbation_seed;

    SimConfig time;

    std::string out_dir;
    int sobolev_order = 3;
};

/// Throws ParseError(line, key) for syntax, type and unknown-key problems and
/// ValidationError(key, constraint) for out-of-range values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every field written out explicitly; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const RunConfig& c);
/// SHA-256 of to_toml with the output directory blanked.
std::string config_hash(const RunConfig& c);

std::uint64_t doping_seed(const RunConfig& c);
std::uint64_t perturbation_seed(const RunConfig& c);

GridPtr make_grid(const RunConfig& c);
DopingProfile make_doping(const RunConfig& c, const GridPtr& grid);

}  // namespace emx
