#pragma once

// Two-fluid non-isentropic Euler-Maxwell dynamics on the periodic box.
//
// Evolved unknowns are the primitive fields. With p = n theta and unit
// physical constants, per species (charge q):
//   dn/dt     = -div(n u)
//   du/dt     = -(u.grad)u - grad(p)/n + q (E + u x B) - u
//   dtheta/dt = -u.grad(theta) - theta div(u) + |u|^2/2 - (theta - 1)
// and for the fields
//   dE/dt = curl B + n_e u_e - n_i u_i,   dB/dt = -curl E,
// with the constraints div E = n_i - n_e + b and div B = 0 carried along.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emx/equilibrium.hpp"
#include "emx/errors.hpp"
#include "emx/state.hpp"

namespace emx {

enum class Scheme { rk4, strang_exact_relaxation };

std::string to_string(Scheme s);
/// Accepts "rk4" and "strang-exact-relaxation"; throws ValidationError otherwise.
Scheme scheme_from_string(const std::string& s);

struct RhsOptions {
    bool dealias = true;
    /// When false the linear relaxation terms -u and -(theta - 1) are omitted.
    bool relaxation = true;
};

/// Tangent of the primitive system. Throws PositivityViolation if n or theta <= 0.
PlasmaFields rhs_primitive(const PlasmaFields& s, const RhsOptions& options = {});

/// Tangent of the perturbation system, assembled in matrix form
///   dV/dt = -sum_j A_j dV/dx_j - L V + K,  plus the Maxwell equations for (F, G).
/// The N members of the result are left empty.
PerturbationState rhs_perturbation(const PerturbationState& z, const Equilibrium& eq,
                                   const RhsOptions& options = {});

/// The equilibrium as a primitive state (nbar, 0, 1, Ebar, Bbar).
PlasmaState equilibrium_state(const Equilibrium& eq);

struct ModePerturbation {
    std::string field;  // a component name, or E_free_{x,y,z}
    std::array<int, 3> k{1, 0, 0};
    double amplitude = 1.0;
    double phase = 0.0;
};

struct PerturbationSpec {
    enum class Kind { random, modes };
    Kind kind = Kind::random;
    double amplitude = 0.0;
    /// Random recipe: |k|_inf bound of the seeded modes (clipped to the 2/3 band).
    int kmax = 4;
    bool density = true;
    bool velocity = true;
    bool temperature = true;
    bool magnetic = true;
    bool electric_free = false;
    std::vector<ModePerturbation> modes;
};

/// Builds compatible initial data: B0 = Bbar + P(dB), E0 = Ebar + grad psi0 (+ P(dE)) with
///   lap psi0 = (n0_i - n0_e + b) - div Ebar.
/// Throws PositivityViolation when a floor (floor_factor x equilibrium) is crossed and
/// NonNeutral when the density perturbation carries net charge.
PlasmaState make_initial_data(const Equilibrium& eq, const PerturbationSpec& pert,
                              std::uint64_t seed, double floor_factor = 0.55);

struct ConstraintResiduals {
    double gauss = 0.0;  // L2 norm of div E - (n_i - n_e + b)
    double div_b = 0.0;  // L2 norm of div B
};

ConstraintResiduals constraint_residuals(const PlasmaFields& s, const ScalarField& b);

/// E <- E + grad lap^{-1} (rho - div E).
void clean_gauss_law(PlasmaFields& s, const ScalarField& b);

struct IntegratorOptions {
    Scheme scheme = Scheme::rk4;
    bool dealias = true;
    double floor_factor = 0.55;
};

class Integrator {
public:
    /// `eq` supplies the pointwise positivity floors; without it only n, theta > 0
    /// is enforced. `reference` fixes the blow-up threshold (1e6 x its max norm).
    Integrator(IntegratorOptions options, const Equilibrium* eq, const PlasmaFields& reference);

    /// Advances by dt. Throws PositivityViolation or NumericalBlowup.
    PlasmaState step(const PlasmaState& s, double dt) const;

    void check(const PlasmaFields& f) const;
    const IntegratorOptions& options() const { return options_; }

private:
    PlasmaFields rk4(const PlasmaFields& y, double dt, const RhsOptions& rhs) const;

    IntegratorOptions options_;
    std::optional<std::array<ScalarField, 2>> density_floor_;
    double reference_norm_ = 0.0;
};

struct SimConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    Scheme scheme = Scheme::rk4;
    bool dealias = true;
    int gauss_clean_every = 0;
    double cadence = 0.1;               // time between diagnostics samples
    std::size_t checkpoint_every = 0;   // steps; 0 = final checkpoint only
    double floor_factor = 0.55;
};

/// Time-integration bookkeeping shared by fresh and resumed runs.
std::size_t total_steps(const SimConfig& cfg);
std::size_t sample_interval(const SimConfig& cfg);
/// 0.5 / (2 pi N max(sqrt(2 theta) + |u|, 1)).
double cfl_limit(const PlasmaFields& s, int n_per_axis);

struct RunObserver {
    std::function<void(std::size_t step, const PlasmaState&)> on_sample;
    std::function<void(std::size_t step, const PlasmaState&)> on_checkpoint;
    std::function<void(std::size_t step, const PlasmaState&, const Error&)> on_failure;
};

struct RunRecord {
    std::size_t start_step = 0;
    std::size_t steps = 0;
    PlasmaState final_state;
    double min_density_ratio = 0.0;      // min over samples of n / nbar
    double min_temperature = 0.0;
    double max_temperature = 0.0;
    double max_gauss_residual = 0.0;
    double max_div_b = 0.0;
    double cfl_ratio = 0.0;              // dt / cfl_limit at the start
    double wall_seconds = 0.0;
};

/// Advances `init` (taken to sit at step `start_step`) to t_end. Step failures are
/// reported to on_failure with the last good state and rethrown as StepFailure.
RunRecord simulate(const SimConfig& cfg, const Equilibrium& eq, const PlasmaState& init,
                   const RunObserver& observer = {}, std::size_t start_step = 0);

}  // namespace emx
