#pragma once

// Perturbation variables, energies, norms and decay fits.

#include <cstddef>
#include <vector>

#include "emx/dynamics.hpp"
#include "emx/equilibrium.hpp"
#include "emx/state.hpp"

namespace emx {

/// Z = (Q, u, Theta, F, G) with N = n - nbar. Throws PositivityViolation if p <= 0.
PerturbationState perturbation_of(const PlasmaState& s, const Equilibrium& eq);

/// Inverse map: n = e^{Q + qbar} / (1 + Theta), theta = 1 + Theta, E = Ebar + F, B = Bbar + G.
PlasmaFields primitive_of(const PerturbationState& z, const Equilibrium& eq);

/// sum_{|alpha| <= s_d} [ sum_nu int <A_0(p, theta) d^a V, d^a V> + |d^a F|^2 + |d^a G|^2 ].
/// `s` supplies the pointwise (p, theta) entering A_0.
double quadratic_energy(const PerturbationState& z, const PlasmaFields& s, const Equilibrium& eq,
                        int s_d);

/// sqrt( sum_{k <= k_max} ||d_t^k (N, u, Theta, F, G)||^2_{s_tot - k} ), time derivatives
/// from rhs_primitive. k_max must be 0 or 1.
double mixed_norm(const PlasmaState& s, const Equilibrium& eq, int s_tot, int k_max);

struct PotentialRecovery {
    ScalarField psi;         // mean zero, grad psi = -(irrotational part of F)
    double remainder = 0.0;  // L2 norm of F + grad psi
};

PotentialRecovery recover_potential(const VectorField& F);

struct TimeSample {
    double t = 0.0;
    double value = 0.0;
};

struct DecayFit {
    double rate = 0.0;  // slope of ln(value) against t
    double r2 = 0.0;
    std::size_t samples = 0;
};

/// Least squares over samples with t0 <= t <= t1. Throws InsufficientData below
/// 10 samples and NonPositiveValue for a value <= 0 in the window.
DecayFit decay_fit(const std::vector<TimeSample>& series, double t0, double t1);

struct EnergyReport {
    double t = 0.0;
    int order = 0;                     // s
    std::vector<double> fluid_by_order;  // ||(N, u, Theta)||_k, both species, k = 0..s
    std::vector<double> F_by_order;
    std::vector<double> G_by_order;
    double fluid = 0.0;   // ||(N, u, Theta)||_s
    double F = 0.0;       // ||F||_{s-1}
    double dtB = 0.0;     // ||curl E||_{s-2}
    double gradB = 0.0;   // ||grad B||_{s-2}
    double e_quad = 0.0;  // quadratic_energy with s_d = 0
    double gauss = 0.0;
    double div_b = 0.0;
    double density_discrepancy = 0.0;
};

/// Requires s >= 2.
EnergyReport energy_report(const PlasmaState& s, const Equilibrium& eq, int order);

}  // namespace emx
