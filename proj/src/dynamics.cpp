#include "emx/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include "emx/errors.hpp"

namespace emx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* species_tag(Species s) { return s == Species::electron ? "e" : "i"; }

void require_positive(const ScalarField& f, const std::string& name) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0)) throw PositivityViolation(name, i, f[i], 0.0);
}

// Runs both callables, the second on a worker thread when more than one is allowed.
template <class F0, class F1>
void run_pair(F0&& f0, F1&& f1) {
    if (worker_threads() > 1) {
        auto fut = std::async(std::launch::async, std::forward<F1>(f1));
        f0();
        fut.get();
    } else {
        f0();
        f1();
    }
}

SpeciesFields species_rhs(const SpeciesFields& s, Species sp, const VectorField& E,
                          const VectorField& B, const RhsOptions& opt) {
    const std::string tag = species_tag(sp);
    require_positive(s.n, "n_" + tag);
    require_positive(s.theta, "theta_" + tag);
    const double q = charge(sp);
    const GridPtr& grid = s.n.grid();

    SpeciesFields out;
    out.n = divergence(s.n * s.u);
    out.n *= -1.0;

    const std::array<VectorField, 3> gu{gradient(s.u[0]), gradient(s.u[1]), gradient(s.u[2])};
    const VectorField gp = gradient(s.n * s.theta);
    const VectorField gth = gradient(s.theta);

    out.u = VectorField(grid);
    out.theta = ScalarField(grid);
    const double relax = opt.relaxation ? 1.0 : 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const Vec3 u = s.u.at(i);
        const Vec3 e = E.at(i);
        const Vec3 b = B.at(i);
        const double n = s.n[i];
        const double th = s.theta[i];
        const Vec3 uxb{u[1] * b[2] - u[2] * b[1], u[2] * b[0] - u[0] * b[2],
                       u[0] * b[1] - u[1] * b[0]};
        Vec3 du{};
        for (int c = 0; c < 3; ++c) {
            double adv = 0.0;
            for (int a = 0; a < 3; ++a) adv += u[a] * gu[c][a][i];
            du[c] = -adv - gp[c][i] / n + q * (e[c] + uxb[c]) - relax * u[c];
        }
        out.u.set(i, du);
        const double divu = gu[0][0][i] + gu[1][1][i] + gu[2][2][i];
        const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        double ugt = 0.0;
        for (int a = 0; a < 3; ++a) ugt += u[a] * gth[a][i];
        out.theta[i] = -ugt - th * divu + 0.5 * u2 - relax * (th - 1.0);
    }
    return out;
}

void dealias_all(PlasmaFields& f) {
    for (auto* c : f.components()) dealias_in_place(*c);
}

// The 5-vector (Q, u, Theta) at point i and its derivative along axis a.
Vector5 pack(const ScalarField& Q, const VectorField& u, const ScalarField& T, std::size_t i) {
    Vector5 v;
    v << Q[i], u[0][i], u[1][i], u[2][i], T[i];
    return v;
}

}  // namespace

std::string to_string(Scheme s) {
    return s == Scheme::rk4 ? "rk4" : "strang-exact-relaxation";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "rk4") return Scheme::rk4;
    if (s == "strang-exact-relaxation") return Scheme::strang_exact_relaxation;
    throw ValidationError("scheme", "one of rk4, strang-exact-relaxation");
}

PlasmaFields rhs_primitive(const PlasmaFields& s, const RhsOptions& options) {
    PlasmaFields out;
    run_pair(
        [&] {
            out.species[0] =
                species_rhs(s.species[0], Species::electron, s.E, s.B, options);
        },
        [&] {
            out.species[1] = species_rhs(s.species[1], Species::ion, s.E, s.B, options);
        });

    const auto& e = s.of(Species::electron);
    const auto& ion = s.of(Species::ion);
    out.E = curl(s.B);
    out.E += e.n * e.u;
    out.E -= ion.n * ion.u;
    out.B = curl(s.E);
    out.B *= -1.0;

    if (options.dealias) dealias_all(out);
    return out;
}

PerturbationState rhs_perturbation(const PerturbationState& z, const Equilibrium& eq,
                                   const RhsOptions& options) {
    const GridPtr& grid = z.F.grid();
    const int dims = grid->dims();
    PerturbationState out;
    std::array<ScalarField, 2> density;

    for (Species sp : {Species::electron, Species::ion}) {
        const auto& v = z.of(sp);
        const ScalarField theta = v.Theta.map([](double t) { return 1.0 + t; });
        require_positive(theta, std::string("theta_") + species_tag(sp));
        const ScalarField qbar = eq.qbar(sp);
        const VectorField gq = gradient(qbar);
        const std::array<VectorField, 5> gv{gradient(v.Q), gradient(v.u[0]), gradient(v.u[1]),
                                            gradient(v.u[2]), gradient(v.Theta)};
        auto& o = out.of(sp);
        o.Q = ScalarField(grid);
        o.u = VectorField(grid);
        o.Theta = ScalarField(grid);
        ScalarField& n = density[static_cast<std::size_t>(sp)];
        n = ScalarField(grid);

        for (std::size_t i = 0; i < grid->size(); ++i) {
            const Vec3 u = v.u.at(i);
            const double th = theta[i];
            Vector5 dv = -source_matrix(gq.at(i)) * pack(v.Q, v.u, v.Theta, i);
            for (int j = 0; j < dims; ++j) {
                Vector5 dj;
                for (int c = 0; c < 5; ++c) dj(c) = gv[static_cast<std::size_t>(c)][j][i];
                dv -= flux_matrix(j, u, th) * dj;
            }
            dv += stiff_source(u, th, z.F.at(i), z.G.at(i), eq.Bbar, charge(sp));
            o.Q[i] = dv(0);
            o.u.set(i, {dv(1), dv(2), dv(3)});
            o.Theta[i] = dv(4);
            n[i] = std::exp(v.Q[i] + qbar[i]) / th;
        }
    }

    out.F = curl(z.G);
    out.F += density[0] * z.of(Species::electron).u;
    out.F -= density[1] * z.of(Species::ion).u;
    out.G = curl(z.F);
    out.G *= -1.0;

    if (options.dealias) {
        for (auto& o : out.species) {
            dealias_in_place(o.Q);
            for (int c = 0; c < 3; ++c) dealias_in_place(o.u[c]);
            dealias_in_place(o.Theta);
        }
        for (int c = 0; c < 3; ++c) {
            dealias_in_place(out.F[c]);
            dealias_in_place(out.G[c]);
        }
    }
    return out;
}

PlasmaState equilibrium_state(const Equilibrium& eq) {
    const GridPtr& grid = eq.grid();
    PlasmaState s;
    s.fields = PlasmaFields::zeros(grid);
    s.fields.of(Species::electron).n = eq.nbar_e;
    s.fields.of(Species::ion).n = eq.nbar_i;
    for (auto& sp : s.fields.species) sp.theta = ScalarField(grid, 1.0);
    s.fields.E = eq.Ebar;
    s.fields.B = VectorField(grid, eq.Bbar);
    return s;
}

namespace {

ScalarField* perturbation_target(const std::string& field, PlasmaFields& delta,
                                 VectorField& e_free) {
    if (field == "E_free_x") return &e_free[0];
    if (field == "E_free_y") return &e_free[1];
    if (field == "E_free_z") return &e_free[2];
    const auto& names = PlasmaFields::component_names();
    auto comps = delta.components();
    for (std::size_t c = 0; c < names.size(); ++c) {
        // E itself is fixed by the Gauss law; its free part goes through E_free_*.
        if (names[c] == field && field.rfind("E_", 0) != 0) return comps[c];
    }
    throw ValidationError("perturbation.mode.field", "a perturbable field name, got '" + field + "'");
}

}  // namespace

PlasmaState make_initial_data(const Equilibrium& eq, const PerturbationSpec& pert,
                              std::uint64_t seed, double floor_factor) {
    if (!(pert.amplitude >= 0.0)) throw ValidationError("amplitude", "non-negative");
    const GridPtr& grid = eq.grid();
    PlasmaState s = equilibrium_state(eq);
    if (pert.amplitude == 0.0) return s;

    PlasmaFields delta = PlasmaFields::zeros(grid);
    VectorField e_free(grid);

    if (pert.kind == PerturbationSpec::Kind::random) {
        std::mt19937_64 rng(seed);
        const int kmax = std::max(1, std::min(pert.kmax, grid->n() / 3));
        const auto draw = [&](ScalarField& target, bool enabled) {
            // Always draw so the stream layout is independent of which groups are enabled.
            ScalarField f = random_band_limited(grid, kmax, rng);
            if (enabled) target = pert.amplitude * std::move(f);
        };
        for (auto& sp : delta.species) {
            draw(sp.n, pert.density);
            for (int c = 0; c < 3; ++c) draw(sp.u[c], pert.velocity);
            draw(sp.theta, pert.temperature);
        }
        for (int c = 0; c < 3; ++c) draw(delta.B[c], pert.magnetic);
        for (int c = 0; c < 3; ++c) draw(e_free[c], pert.electric_free);
    } else {
        for (const auto& m : pert.modes) {
            ScalarField* target = perturbation_target(m.field, delta, e_free);
            const double amp = pert.amplitude * m.amplitude;
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const Vec3 x = grid->point(i);
                const double ph = kTwoPi * (m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2]);
                (*target)[i] += amp * std::cos(ph + m.phase);
            }
        }
    }

    for (std::size_t k = 0; k < 2; ++k) {
        s.fields.species[k].n += delta.species[k].n;
        s.fields.species[k].u += delta.species[k].u;
        s.fields.species[k].theta += delta.species[k].theta;
    }
    s.fields.B += leray_project(delta.B);

    // Gauss law: lap psi0 = (n0_i - n0_e + b) - div Ebar.
    ScalarField source = s.fields.of(Species::ion).n - s.fields.of(Species::electron).n + eq.b;
    source -= divergence(eq.Ebar);
    const double mean = source.mean();
    if (std::abs(mean) > std::max(1e-10 * source.max_abs(), 1e-14)) throw NonNeutral(mean);
    source += -mean;
    s.fields.E += gradient(poisson_solve_mean_zero(source));
    s.fields.E += leray_project(e_free);

    Integrator(IntegratorOptions{Scheme::rk4, true, floor_factor}, &eq, s.fields).check(s.fields);
    return s;
}

ConstraintResiduals constraint_residuals(const PlasmaFields& s, const ScalarField& b) {
    ScalarField g = divergence(s.E);
    g -= s.of(Species::ion).n;
    g += s.of(Species::electron).n;
    g -= b;
    return {g.l2_norm(), divergence(s.B).l2_norm()};
}

void clean_gauss_law(PlasmaFields& s, const ScalarField& b) {
    ScalarField defect = s.of(Species::ion).n - s.of(Species::electron).n + b;
    defect -= divergence(s.E);
    defect += -defect.mean();
    s.E += gradient(poisson_solve_mean_zero(defect));
}

// ---------------------------------------------------------------------------
// Integrator

Integrator::Integrator(IntegratorOptions options, const Equilibrium* eq,
                       const PlasmaFields& reference)
    : options_(options), reference_norm_(reference.max_abs()) {
    if (eq) {
        density_floor_ = std::array<ScalarField, 2>{options_.floor_factor * eq->nbar_e,
                                                    options_.floor_factor * eq->nbar_i};
    }
}

void Integrator::check(const PlasmaFields& f) const {
    const double norm = f.max_abs();
    if (!f.all_finite() || !(norm <= 1e6 * reference_norm_))
        throw NumericalBlowup(norm, reference_norm_);
    const double theta_floor = density_floor_ ? options_.floor_factor : 0.0;
    for (Species sp : {Species::electron, Species::ion}) {
        const auto& s = f.of(sp);
        const std::string tag = species_tag(sp);
        for (std::size_t i = 0; i < s.n.size(); ++i) {
            const double floor = density_floor_ ? (*density_floor_)[static_cast<std::size_t>(sp)][i] : 0.0;
            if (!(s.n[i] > floor)) throw PositivityViolation("n_" + tag, i, s.n[i], floor);
            if (!(s.theta[i] > theta_floor))
                throw PositivityViolation("theta_" + tag, i, s.theta[i], theta_floor);
        }
    }
}

PlasmaFields Integrator::rk4(const PlasmaFields& y, double dt, const RhsOptions& rhs) const {
    const PlasmaFields k1 = rhs_primitive(y, rhs);
    PlasmaFields y2 = y;
    y2.axpy(0.5 * dt, k1);
    const PlasmaFields k2 = rhs_primitive(y2, rhs);
    PlasmaFields y3 = y;
    y3.axpy(0.5 * dt, k2);
    const PlasmaFields k3 = rhs_primitive(y3, rhs);
    PlasmaFields y4 = y;
    y4.axpy(dt, k3);
    const PlasmaFields k4 = rhs_primitive(y4, rhs);

    PlasmaFields out = y;
    out.axpy(dt / 6.0, k1);
    out.axpy(dt / 3.0, k2);
    out.axpy(dt / 3.0, k3);
    out.axpy(dt / 6.0, k4);
    return out;
}

namespace {

// Exact flow of du/dt = -u, d(theta - 1)/dt = -(theta - 1) over time h.
void relax(PlasmaFields& f, double h) {
    const double decay = std::exp(-h);
    for (auto& s : f.species) {
        s.u *= decay;
        for (auto& v : s.theta.values()) v = 1.0 + (v - 1.0) * decay;
    }
}

}  // namespace

PlasmaState Integrator::step(const PlasmaState& s, double dt) const {
    if (!(dt > 0.0)) throw InvalidState("time step must be positive");
    PlasmaState out;
    out.t = s.t + dt;
    if (options_.scheme == Scheme::rk4) {
        out.fields = rk4(s.fields, dt, RhsOptions{options_.dealias, true});
    } else {
        PlasmaFields y = s.fields;
        relax(y, 0.5 * dt);
        y = rk4(y, dt, RhsOptions{options_.dealias, false});
        relax(y, 0.5 * dt);
        out.fields = std::move(y);
    }
    check(out.fields);
    return out;
}

// ---------------------------------------------------------------------------
// Run loop

std::size_t total_steps(const SimConfig& cfg) {
    return static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
}

std::size_t sample_interval(const SimConfig& cfg) {
    return static_cast<std::size_t>(std::max(1LL, std::llround(cfg.cadence / cfg.dt)));
}

double cfl_limit(const PlasmaFields& s, int n_per_axis) {
    double speed = 1.0;
    for (const auto& sp : s.species) {
        double umax = 0.0;
        for (std::size_t i = 0; i < sp.n.size(); ++i) {
            const Vec3 u = sp.u.at(i);
            umax = std::max(umax, std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]));
        }
        speed = std::max(speed, std::sqrt(2.0 * sp.theta.max()) + umax);
    }
    return 0.5 / (kTwoPi * n_per_axis * speed);
}

RunRecord simulate(const SimConfig& cfg, const Equilibrium& eq, const PlasmaState& init,
                   const RunObserver& observer, std::size_t start_step) {
    if (!(cfg.dt > 0.0)) throw ValidationError("dt", "positive");
    if (!(cfg.t_end >= 0.0)) throw ValidationError("t_end", "non-negative");
    const auto wall_start = std::chrono::steady_clock::now();

    const Integrator integrator(IntegratorOptions{cfg.scheme, cfg.dealias, cfg.floor_factor}, &eq,
                                init.fields);
    const std::size_t n_total = total_steps(cfg);
    const std::size_t every = sample_interval(cfg);

    RunRecord rec;
    rec.start_step = start_step;
    rec.cfl_ratio = cfg.dt / cfl_limit(init.fields, eq.grid()->n());
    rec.min_density_ratio = std::numeric_limits<double>::infinity();
    rec.min_temperature = std::numeric_limits<double>::infinity();
    rec.max_temperature = -std::numeric_limits<double>::infinity();

    PlasmaState s = init;
    const auto sample = [&](std::size_t step) {
        const auto cr = constraint_residuals(s.fields, eq.b);
        rec.max_gauss_residual = std::max(rec.max_gauss_residual, cr.gauss);
        rec.max_div_b = std::max(rec.max_div_b, cr.div_b);
        for (Species sp : {Species::electron, Species::ion}) {
            const auto& f = s.fields.of(sp);
            const auto& nb = eq.nbar(sp);
            for (std::size_t i = 0; i < f.n.size(); ++i)
                rec.min_density_ratio = std::min(rec.min_density_ratio, f.n[i] / nb[i]);
            rec.min_temperature = std::min(rec.min_temperature, f.theta.min());
            rec.max_temperature = std::max(rec.max_temperature, f.theta.max());
        }
        if (observer.on_sample) observer.on_sample(step, s);
    };

    if (start_step == 0) sample(0);
    std::size_t step = start_step;
    while (step < n_total) {
        try {
            PlasmaState next = integrator.step(s, cfg.dt);
            ++step;
            next.t = static_cast<double>(step) * cfg.dt;
            if (cfg.gauss_clean_every > 0 &&
                step % static_cast<std::size_t>(cfg.gauss_clean_every) == 0)
                clean_gauss_law(next.fields, eq.b);
            s = std::move(next);
        } catch (const Error& e) {
            if (observer.on_failure) observer.on_failure(step, s, e);
            throw StepFailure(step + 1, e);
        }
        if (step % every == 0 || step == n_total) sample(step);
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && observer.on_checkpoint)
            observer.on_checkpoint(step, s);
    }

    rec.steps = step;
    rec.final_state = std::move(s);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return rec;
}

}  // namespace emx
