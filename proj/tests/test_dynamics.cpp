#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emx/diagnostics.hpp"
#include "emx/dynamics.hpp"
#include "emx/errors.hpp"

using namespace emx;

namespace {

constexpr double pi = std::numbers::pi;

Equilibrium uniform_equilibrium(int d, int n, double beta, Vec3 bbar = {0, 0, 0}) {
    return solve_equilibrium(DopingProfile::constant(Grid::make(d, n), beta), 1.0, bbar, 1e-12);
}

Equilibrium cosine_equilibrium(int d, int n) {
    return solve_equilibrium(DopingProfile::cosine(Grid::make(d, n), 0.5, 0.2), 1.0, {0, 0, 0.3},
                             1e-12);
}

double field_distance(const PlasmaFields& a, const PlasmaFields& b) {
    PlasmaFields d = a;
    d.axpy(-1.0, b);
    return d.max_abs();
}

// Spatially uniform two-fluid ODE: y = (u_e, u_i, E, theta_e, theta_i).
using Ode = std::array<double, 11>;

Ode ode_rhs(const Ode& y, double ne, double ni, const Vec3& B) {
    Ode f{};
    const Vec3 ue{y[0], y[1], y[2]}, ui{y[3], y[4], y[5]}, E{y[6], y[7], y[8]};
    const auto cross = [](const Vec3& a, const Vec3& b) {
        return Vec3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    };
    const Vec3 ce = cross(ue, B), ci = cross(ui, B);
    for (int c = 0; c < 3; ++c) {
        f[c] = -(E[c] + ce[c]) - ue[c];
        f[3 + c] = (E[c] + ci[c]) - ui[c];
        f[6 + c] = ne * ue[c] - ni * ui[c];
    }
    const double ue2 = ue[0] * ue[0] + ue[1] * ue[1] + ue[2] * ue[2];
    const double ui2 = ui[0] * ui[0] + ui[1] * ui[1] + ui[2] * ui[2];
    f[9] = ue2 / 2 - (y[9] - 1);
    f[10] = ui2 / 2 - (y[10] - 1);
    return f;
}

Ode ode_solve(Ode y, double t_end, double h, double ne, double ni, const Vec3& B) {
    const long steps = std::lround(t_end / h);
    const auto add = [](const Ode& a, double s, const Ode& b) {
        Ode r;
        for (std::size_t k = 0; k < r.size(); ++k) r[k] = a[k] + s * b[k];
        return r;
    };
    for (long n = 0; n < steps; ++n) {
        const Ode k1 = ode_rhs(y, ne, ni, B);
        const Ode k2 = ode_rhs(add(y, h / 2, k1), ne, ni, B);
        const Ode k3 = ode_rhs(add(y, h / 2, k2), ne, ni, B);
        const Ode k4 = ode_rhs(add(y, h, k3), ne, ni, B);
        for (std::size_t k = 0; k < y.size(); ++k)
            y[k] += h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
    }
    return y;
}

PlasmaState uniform_state(const Equilibrium& eq, const Ode& y) {
    PlasmaState s = equilibrium_state(eq);
    const GridPtr& g = eq.grid();
    s.fields.of(Species::electron).u = VectorField(g, {y[0], y[1], y[2]});
    s.fields.of(Species::ion).u = VectorField(g, {y[3], y[4], y[5]});
    s.fields.E = VectorField(g, {y[6], y[7], y[8]});
    s.fields.of(Species::electron).theta = ScalarField(g, y[9]);
    s.fields.of(Species::ion).theta = ScalarField(g, y[10]);
    return s;
}

PlasmaState integrate(const PlasmaState& s0, double dt, double t_end, Scheme scheme,
                      const Equilibrium* eq) {
    const Integrator it(IntegratorOptions{scheme, true, 0.55}, eq, s0.fields);
    PlasmaState s = s0;
    const long steps = std::lround(t_end / dt);
    for (long n = 0; n < steps; ++n) s = it.step(s, dt);
    return s;
}

PerturbationSpec random_spec(double amp) {
    PerturbationSpec p;
    p.amplitude = amp;
    p.electric_free = true;
    return p;
}

}  // namespace

TEST_CASE("scheme names") {
    CHECK(scheme_from_string("rk4") == Scheme::rk4);
    CHECK(scheme_from_string("strang-exact-relaxation") == Scheme::strang_exact_relaxation);
    CHECK(to_string(Scheme::strang_exact_relaxation) == "strang-exact-relaxation");
    CHECK_THROWS_AS(scheme_from_string("euler"), ValidationError);
}

TEST_CASE("equilibrium is a steady state of the primitive system") {
    for (int d = 1; d <= 2; ++d) {
        const auto eq = cosine_equilibrium(d, 32);
        const PlasmaFields t = rhs_primitive(equilibrium_state(eq).fields);
        CHECK(t.max_abs() <= 1e-10);
    }
}

TEST_CASE("uniform temperature excess relaxes only theta") {
    const auto eq = uniform_equilibrium(1, 16, 0.5);
    PlasmaState s = equilibrium_state(eq);
    const double t0 = 0.2;
    for (auto& sp : s.fields.species) sp.theta = ScalarField(eq.grid(), 1 + t0);
    const PlasmaFields t = rhs_primitive(s.fields);
    for (const auto& sp : t.species) {
        CHECK(sp.n.max_abs() <= 1e-15);
        CHECK(sp.u.max_abs() <= 1e-15);
        CHECK((sp.theta - ScalarField(eq.grid(), -t0)).max_abs() <= 1e-15);
    }
    CHECK(t.E.max_abs() <= 1e-15);
    CHECK(t.B.max_abs() <= 1e-15);
}

TEST_CASE("uniform drift tangent") {
    const double beta = 0.5, a = 0.1;
    const auto eq = uniform_equilibrium(1, 16, beta);
    Ode y{};
    y[0] = a;
    y[9] = y[10] = 1.0;
    const PlasmaFields t = rhs_primitive(uniform_state(eq, y).fields);
    CHECK(t.of(Species::electron).u[0][3] == doctest::Approx(-a));
    CHECK(t.E[0][5] == doctest::Approx((1 + beta) * a));
    CHECK(t.of(Species::ion).u.max_abs() <= 1e-15);
}

TEST_CASE("positivity is enforced by the tangent") {
    const auto eq = uniform_equilibrium(1, 16, 0.5);
    PlasmaState s = equilibrium_state(eq);
    s.fields.of(Species::ion).n[4] = -0.1;
    CHECK_THROWS_AS(rhs_primitive(s.fields), PositivityViolation);
    try {
        rhs_primitive(s.fields);
    } catch (const PositivityViolation& e) {
        CHECK(e.field == "n_i");
        CHECK(e.index == 4);
        CHECK(e.value == -0.1);
    }
}

TEST_CASE("perturbation tangent examples") {
    const auto eq = cosine_equilibrium(1, 32);
    const PerturbationState z = perturbation_of(equilibrium_state(eq), eq);
    const PerturbationState t = rhs_perturbation(z, eq);
    for (const auto& sp : t.species) {
        CHECK(sp.Q.max_abs() <= 1e-10);
        CHECK(sp.u.max_abs() <= 1e-10);
        CHECK(sp.Theta.max_abs() <= 1e-10);
    }
    CHECK(t.F.max_abs() <= 1e-10);
    CHECK(t.G.max_abs() <= 1e-15);

    // Uniform temperature excess on a homogeneous background.
    const auto flat = uniform_equilibrium(1, 16, 0.5);
    const double t0 = 0.1;
    PerturbationState w = perturbation_of(equilibrium_state(flat), flat);
    w.of(Species::electron).Theta = ScalarField(flat.grid(), t0);
    w.of(Species::electron).Q = ScalarField(flat.grid(), 0.0);
    const PerturbationState u = rhs_perturbation(w, flat);
    const auto& e = u.of(Species::electron);
    CHECK((e.Theta - ScalarField(flat.grid(), -t0)).max_abs() <= 1e-10);
    CHECK((e.Q - ScalarField(flat.grid(), -t0 / (1 + t0))).max_abs() <= 1e-10);
    CHECK(e.u.max_abs() <= 1e-10);
    CHECK(u.of(Species::ion).Theta.max_abs() <= 1e-10);
}

TEST_CASE("primitive and perturbation tangents agree") {
    const auto eq = cosine_equilibrium(1, 32);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PlasmaState s = make_initial_data(eq, random_spec(1e-3), seed);
        const RhsOptions raw{false, true};
        const PlasmaFields tp = rhs_primitive(s.fields, raw);
        const PerturbationState z = perturbation_of(s, eq);
        const PerturbationState tz = rhs_perturbation(z, eq, raw);
        double err = 0.0;
        for (Species sp : {Species::electron, Species::ion}) {
            const auto& f = s.fields.of(sp);
            const auto& df = tp.of(sp);
            const auto& dz = tz.of(sp);
            for (std::size_t i = 0; i < f.n.size(); ++i) {
                const double dq = df.n[i] / f.n[i] + df.theta[i] / f.theta[i];
                err = std::max(err, std::abs(dq - dz.Q[i]));
                err = std::max(err, std::abs(df.theta[i] - dz.Theta[i]));
                for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(df.u[c][i] - dz.u[c][i]));
            }
        }
        err = std::max(err, (tp.E - tz.F).max_abs());
        err = std::max(err, (tp.B - tz.G).max_abs());
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("initial data construction") {
    const auto eq = cosine_equilibrium(1, 64);
    const PlasmaState zero = make_initial_data(eq, PerturbationSpec{}, 1);
    CHECK(field_distance(zero.fields, equilibrium_state(eq).fields) == 0.0);

    PerturbationSpec modes;
    modes.kind = PerturbationSpec::Kind::modes;
    modes.amplitude = 1e-3;
    modes.modes.push_back({"n_e", {1, 0, 0}, 1.0, 0.0});
    const PlasmaState m = make_initial_data(eq, modes, 1);
    CHECK(constraint_residuals(m.fields, eq.b).gauss <= 1e-12);
    const auto expect = ScalarField::from_function(
        eq.grid(), [](const Vec3& x) { return 1e-3 * std::cos(2 * pi * x[0]); });
    CHECK((m.fields.of(Species::electron).n - eq.nbar_e - expect).max_abs() <= 1e-15);

    const PlasmaState r1 = make_initial_data(eq, random_spec(1e-3), 17);
    const PlasmaState r2 = make_initial_data(eq, random_spec(1e-3), 17);
    CHECK(field_distance(r1.fields, r2.fields) == 0.0);
    const auto cr = constraint_residuals(r1.fields, eq.b);
    CHECK(cr.gauss <= 1e-10);
    CHECK(cr.div_b <= 1e-10);
    CHECK(field_distance(r1.fields, make_initial_data(eq, random_spec(1e-3), 18).fields) > 0.0);

    auto g2 = cosine_equilibrium(2, 16);
    const PlasmaState r3 = make_initial_data(g2, random_spec(1e-3), 3);
    CHECK(constraint_residuals(r3.fields, g2.b).gauss <= 1e-10);
    CHECK(constraint_residuals(r3.fields, g2.b).div_b <= 1e-10);
}

TEST_CASE("initial data errors") {
    const auto eq = cosine_equilibrium(1, 32);
    PerturbationSpec charged;
    charged.kind = PerturbationSpec::Kind::modes;
    charged.amplitude = 1e-3;
    charged.modes.push_back({"n_i", {0, 0, 0}, 1.0, 0.0});
    CHECK_THROWS_AS(make_initial_data(eq, charged, 1), NonNeutral);

    CHECK_THROWS_AS(make_initial_data(eq, random_spec(0.9), 1), PositivityViolation);
    PerturbationSpec neg = random_spec(-1.0);
    CHECK_THROWS_AS(make_initial_data(eq, neg, 1), ValidationError);
    PerturbationSpec bad;
    bad.kind = PerturbationSpec::Kind::modes;
    bad.amplitude = 1e-3;
    bad.modes.push_back({"E_x", {1, 0, 0}, 1.0, 0.0});
    CHECK_THROWS_AS(make_initial_data(eq, bad, 1), ValidationError);
}

TEST_CASE("uniform relaxation is exact to RK4 accuracy") {
    const auto eq = uniform_equilibrium(1, 8, 0.5);
    const double t0 = 0.1;
    Ode y{};
    y[9] = y[10] = 1 + t0;
    const PlasmaState s0 = uniform_state(eq, y);
    const PlasmaState s1 = integrate(s0, 1e-2, 1.0, Scheme::rk4, &eq);
    const double ratio = (s1.fields.of(Species::electron).theta[0] - 1) / t0;
    CHECK(std::abs(ratio - std::exp(-1.0)) <= 1e-8);
    CHECK(s1.t == doctest::Approx(1.0));

    const PlasmaState s2 = integrate(s0, 1e-1, 1.0, Scheme::strang_exact_relaxation, &eq);
    const double r2 = (s2.fields.of(Species::ion).theta[0] - 1) / t0;
    CHECK(std::abs(r2 - std::exp(-1.0)) <= 1e-14);
}

TEST_CASE("RK4 convergence order on uniform relaxation") {
    const auto eq = uniform_equilibrium(1, 8, 0.5);
    Ode y{};
    y[9] = y[10] = 1.5;
    const PlasmaState s0 = uniform_state(eq, y);
    std::vector<double> errs;
    for (double dt : {4e-2, 2e-2, 1e-2}) {
        const PlasmaState s = integrate(s0, dt, 1.0, Scheme::rk4, &eq);
        errs.push_back(std::abs(s.fields.of(Species::electron).theta[0] - 1 - 0.5 * std::exp(-1.0)));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 3.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 3.8);
}

TEST_CASE("uniform two-fluid motion matches an ODE reference") {
    for (const Vec3 bbar : {Vec3{0, 0, 0}, Vec3{0.2, 0, 0.7}}) {
        const auto eq = uniform_equilibrium(1, 8, 0.5, bbar);
        Ode y{};
        y[0] = 0.05;
        y[1] = -0.02;
        y[4] = 0.03;
        y[8] = 0.01;
        y[9] = 1.01;
        y[10] = 0.99;
        const Ode ref = ode_solve(y, 1.0, 1e-5, 1.5, 1.0, bbar);
        const PlasmaState s = integrate(uniform_state(eq, y), 1e-3, 1.0, Scheme::rk4, &eq);
        const Ode got{s.fields.of(Species::electron).u[0][2], s.fields.of(Species::electron).u[1][2],
                      s.fields.of(Species::electron).u[2][2], s.fields.of(Species::ion).u[0][2],
                      s.fields.of(Species::ion).u[1][2],      s.fields.of(Species::ion).u[2][2],
                      s.fields.E[0][2],                       s.fields.E[1][2],
                      s.fields.E[2][2],                       s.fields.of(Species::electron).theta[2],
                      s.fields.of(Species::ion).theta[2]};
        double num = 0, den = 0;
        for (std::size_t k = 0; k < 9; ++k) {
            num += (got[k] - ref[k]) * (got[k] - ref[k]);
            den += ref[k] * ref[k];
        }
        CHECK(std::sqrt(num / den) <= 1e-6);
        CHECK(std::abs(got[9] - ref[9]) <= 1e-9);
    }
}

TEST_CASE("equilibrium stays fixed under stepping") {
    const auto eq = cosine_equilibrium(1, 64);
    const PlasmaState s0 = equilibrium_state(eq);
    for (Scheme sc : {Scheme::rk4, Scheme::strang_exact_relaxation}) {
        const PlasmaState s = integrate(s0, 1e-3, 0.1, sc, &eq);
        CHECK(field_distance(s.fields, s0.fields) <= 1e-9);
    }
}

TEST_CASE("constraints and total charge are propagated") {
    const auto eq = cosine_equilibrium(1, 64);
    const PlasmaState s0 = make_initial_data(eq, random_spec(1e-3), 4);
    const PlasmaState s = integrate(s0, 1e-3, 0.3, Scheme::rk4, &eq);
    const auto cr = constraint_residuals(s.fields, eq.b);
    CHECK(cr.gauss <= 1e-8);
    CHECK(cr.div_b <= 1e-8);
    const auto charge = [&](const PlasmaState& st) {
        return (st.fields.of(Species::ion).n - st.fields.of(Species::electron).n + eq.b).mean();
    };
    CHECK(std::abs(charge(s) - charge(s0)) <= 1e-12);
}

TEST_CASE("Gauss cleaning removes an injected defect") {
    const auto eq = cosine_equilibrium(2, 16);
    PlasmaState s = make_initial_data(eq, random_spec(1e-3), 2);
    s.fields.E[0] += ScalarField::from_function(eq.grid(), [](const Vec3& x) {
        return 1e-4 * std::sin(2 * pi * x[0]);
    });
    CHECK(constraint_residuals(s.fields, eq.b).gauss > 1e-5);
    clean_gauss_law(s.fields, eq.b);
    CHECK(constraint_residuals(s.fields, eq.b).gauss <= 1e-12);
}

TEST_CASE("simulate bookkeeping") {
    const auto eq = cosine_equilibrium(1, 32);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.1;
    cfg.cadence = 0.02;
    cfg.checkpoint_every = 25;
    CHECK(total_steps(cfg) == 100);
    CHECK(sample_interval(cfg) == 20);

    std::vector<std::size_t> samples, checkpoints;
    double worst = 0.0;
    RunObserver obs;
    obs.on_sample = [&](std::size_t step, const PlasmaState& s) {
        samples.push_back(step);
        worst = std::max(worst, mixed_norm(s, eq, 2, 0));
    };
    obs.on_checkpoint = [&](std::size_t step, const PlasmaState&) { checkpoints.push_back(step); };
    const RunRecord rec = simulate(cfg, eq, equilibrium_state(eq), obs);
    CHECK(rec.steps == 100);
    CHECK(rec.final_state.t == doctest::Approx(0.1));
    CHECK(samples == std::vector<std::size_t>{0, 20, 40, 60, 80, 100});
    CHECK(checkpoints == std::vector<std::size_t>{25, 50, 75, 100});
    CHECK(worst <= 1e-10);
    CHECK(rec.min_density_ratio == doctest::Approx(1.0));

    std::vector<std::size_t> resumed;
    obs.on_sample = [&](std::size_t step, const PlasmaState&) { resumed.push_back(step); };
    obs.on_checkpoint = nullptr;
    simulate(cfg, eq, equilibrium_state(eq), obs, 50);
    CHECK(resumed == std::vector<std::size_t>{60, 80, 100});
}

TEST_CASE("simulate is deterministic") {
    const auto eq = cosine_equilibrium(1, 32);
    SimConfig cfg;
    cfg.t_end = 0.05;
    const PlasmaState s0 = make_initial_data(eq, random_spec(1e-3), 9);
    const RunRecord a = simulate(cfg, eq, s0);
    const RunRecord b = simulate(cfg, eq, s0);
    CHECK(field_distance(a.final_state.fields, b.final_state.fields) == 0.0);
}

TEST_CASE("a positivity failure reports the last good state") {
    const auto eq = cosine_equilibrium(1, 32);
    const PlasmaState s0 = make_initial_data(eq, random_spec(2e-2), 9);
    SimConfig cfg;
    cfg.t_end = 0.05;
    cfg.floor_factor = 0.999;
    std::size_t failed_at = 1000;
    RunObserver obs;
    obs.on_failure = [&](std::size_t step, const PlasmaState& s, const Error& e) {
        failed_at = step;
        CHECK(e.kind() == "PositivityViolation");
        CHECK(s.t == doctest::Approx(0.001 * static_cast<double>(step)));
    };
    CHECK_THROWS_AS(simulate(cfg, eq, s0, obs), StepFailure);
    CHECK(failed_at == 0);
}

TEST_CASE("CFL estimate") {
    const auto eq = uniform_equilibrium(1, 64, 0.5);
    const double lim = cfl_limit(equilibrium_state(eq).fields, 64);
    CHECK(lim == doctest::Approx(0.5 / (2 * pi * 64 * std::sqrt(2.0))));
}
