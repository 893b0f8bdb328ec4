#pragma once

// Field bundles shared by the dynamics and diagnostics modules.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "emx/algebra.hpp"
#include "emx/grid.hpp"

namespace emx {

struct SpeciesFields {
    ScalarField n;
    VectorField u;
    ScalarField theta;
};

/// Primitive unknowns (n, u, theta per species, E, B). Also used for tangents.
struct PlasmaFields {
    std::array<SpeciesFields, 2> species;
    VectorField E;
    VectorField B;

    static PlasmaFields zeros(const GridPtr& grid);

    SpeciesFields& of(Species s) { return species[static_cast<std::size_t>(s)]; }
    const SpeciesFields& of(Species s) const { return species[static_cast<std::size_t>(s)]; }
    const GridPtr& grid() const { return E.grid(); }

    static constexpr std::size_t kComponents = 16;
    /// Canonical component order: n_e, u_e_{x,y,z}, theta_e, n_i, u_i_{x,y,z}, theta_i, E_{x,y,z}, B_{x,y,z}.
    std::array<ScalarField*, kComponents> components();
    std::array<const ScalarField*, kComponents> components() const;
    static const std::array<std::string, kComponents>& component_names();

    PlasmaFields& axpy(double a, const PlasmaFields& x);
    PlasmaFields& operator*=(double s);
    double max_abs() const;
    bool all_finite() const;
};

struct PlasmaState {
    double t = 0.0;
    PlasmaFields fields;
};

struct SpeciesPerturbation {
    ScalarField Q;      // ln p - ln pbar
    VectorField u;
    ScalarField Theta;  // theta - 1
    ScalarField N;      // n - nbar
};

/// Perturbation variables Z = (V_e, V_i, F, G) with V = (Q, u, Theta).
struct PerturbationState {
    std::array<SpeciesPerturbation, 2> species;
    VectorField F;  // E - Ebar
    VectorField G;  // B - Bbar
    /// max |N - (e^{q}/theta - e^{qbar})| between the two density representations.
    double density_discrepancy = 0.0;

    SpeciesPerturbation& of(Species s) { return species[static_cast<std::size_t>(s)]; }
    const SpeciesPerturbation& of(Species s) const {
        return species[static_cast<std::size_t>(s)];
    }
};

/// Worker count from EMX_THREADS (default: hardware concurrency, at least 1).
int worker_threads();

}  // namespace emx
