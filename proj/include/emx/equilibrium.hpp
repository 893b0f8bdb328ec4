#pragma once

// Non-constant steady states with u = 0, theta = 1 and constant Bbar.
//
// With Ebar = -grad(phibar) the force balance integrates to
//   nbar_e = M_e e^{phibar} / <e^{phibar}>,  nbar_i = M_i e^{-phibar} / <e^{-phibar}>,
// where <.> is the torus average and M_e = M_i + <b> enforces global
// neutrality. The remaining Gauss law
//   -lap(phibar) = nbar_i - nbar_e + b
// is solved for mean-zero phibar by damped Newton with a PCG inner solve.

#include <cstdint>

#include "emx/algebra.hpp"
#include "emx/grid.hpp"

namespace emx {

struct DopingProfile {
    ScalarField b;

    static DopingProfile constant(const GridPtr& grid, double beta);
    /// beta + epsilon cos(2 pi mode x_axis)
    static DopingProfile cosine(const GridPtr& grid, double beta, double epsilon, int axis = 0,
                                int mode = 1);
    /// Random band-limited profile (|k|_inf <= kmax) with peak-to-floor
    /// spread `amplitude`, shifted so that min b equals `floor` on the grid.
    static DopingProfile random(const GridPtr& grid, double floor, double amplitude, int kmax,
                                std::uint64_t seed);
};

struct Equilibrium {
    ScalarField nbar_e;
    ScalarField nbar_i;
    ScalarField phibar;
    VectorField Ebar;
    Vec3 Bbar{0.0, 0.0, 0.0};
    ScalarField b;
    double ion_mass = 1.0;
    double residual = 0.0;
    int iterations = 0;

    const GridPtr& grid() const { return b.grid(); }
    const ScalarField& nbar(Species s) const { return s == Species::electron ? nbar_e : nbar_i; }
    /// ln(pbar) = ln(nbar) since thetabar = 1.
    ScalarField qbar(Species s) const;
};

struct EquilibriumOptions {
    int max_iter = 50;
    int cg_max_iter = 200;
    double cg_rel_tol = 1e-13;
};

struct EquilibriumResidual {
    double force_e = 0.0;  // max |grad ln nbar_e + Ebar|
    double force_i = 0.0;  // max |grad ln nbar_i - Ebar|
    double gauss = 0.0;    // max |div Ebar - (nbar_i - nbar_e + b)|
    double max() const;
};

/// Throws InvalidDoping if min b <= 0, NoConvergence if Newton stalls or
/// exceeds max_iter, InvalidState for a non-positive ion mass or tolerance.
Equilibrium solve_equilibrium(const DopingProfile& doping, double ion_mass, const Vec3& Bbar,
                              double tol, const EquilibriumOptions& options = {});

/// Builds densities and field from a given potential through the mass-preserving closures.
Equilibrium equilibrium_from_potential(const ScalarField& phibar, const DopingProfile& doping,
                                       double ion_mass, const Vec3& Bbar);

EquilibriumResidual equilibrium_residual(const Equilibrium& eq);

/// Solution of (-lap + nbar0_e + nbar0_i) phi1 = b - mean(b), with
/// nbar0_i = M_i and nbar0_e = M_i + mean(b).
ScalarField linearized_oracle(const DopingProfile& doping, double ion_mass = 1.0);

}  // namespace emx
