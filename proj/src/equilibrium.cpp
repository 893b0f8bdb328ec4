#include "emx/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "emx/errors.hpp"

namespace emx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double inner(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s / static_cast<double>(a.size());
}

struct Densities {
    ScalarField ne;
    ScalarField ni;
};

Densities closures(const ScalarField& phi, double ion_mass, double electron_mass) {
    ScalarField ep = phi.map([](double v) { return std::exp(v); });
    ScalarField em = phi.map([](double v) { return std::exp(-v); });
    ep *= electron_mass / ep.mean();
    em *= ion_mass / em.mean();
    return {std::move(ep), std::move(em)};
}

// -lap(phi) - (ni - ne + b)
ScalarField gauss_residual(const ScalarField& phi, const Densities& d, const ScalarField& b) {
    ScalarField r = laplacian(phi);
    r *= -1.0;
    r -= d.ni;
    r += d.ne;
    r -= b;
    return r;
}

// Newton operator restricted to mean-zero fields:
// J v = -lap v + (ne + ni) v - ne <ne, v>/M_e - ni <ni, v>/M_i
class Jacobian {
public:
    Jacobian(const Densities& d, double me, double mi) : d_(d), me_(me), mi_(mi) {
        diag_ = d_.ne + d_.ni;
    }

    ScalarField apply(const ScalarField& v) const {
        ScalarField out = laplacian(v);
        out *= -1.0;
        out += diag_ * v;
        out.axpy(-inner(d_.ne, v) / me_, d_.ne);
        out.axpy(-inner(d_.ni, v) / mi_, d_.ni);
        return out;
    }

private:
    const Densities& d_;
    double me_;
    double mi_;
    ScalarField diag_;
};

// Preconditioned CG on the mean-zero subspace with (1 - lap)^{-1}.
ScalarField pcg(const Jacobian& jac, ScalarField rhs, const EquilibriumOptions& opt) {
    rhs += -rhs.mean();
    ScalarField x(rhs.grid());
    ScalarField r = rhs;
    ScalarField z = screened_poisson_solve(r, 1.0);
    ScalarField p = z;
    double rz = inner(r, z);
    const double r0 = std::sqrt(inner(r, r));
    if (r0 == 0.0) return x;
    for (int it = 0; it < opt.cg_max_iter; ++it) {
        const ScalarField ap = jac.apply(p);
        const double pap = inner(p, ap);
        if (!(pap > 0.0)) throw NoConvergence(it, r0, "Newton operator lost positive definiteness");
        const double alpha = rz / pap;
        x.axpy(alpha, p);
        r.axpy(-alpha, ap);
        if (std::sqrt(inner(r, r)) <= opt.cg_rel_tol * r0) break;
        z = screened_poisson_solve(r, 1.0);
        const double rz_new = inner(r, z);
        p *= rz_new / rz;
        p += z;
        rz = rz_new;
    }
    x += -x.mean();
    return x;
}

}  // namespace

DopingProfile DopingProfile::constant(const GridPtr& grid, double beta) {
    return {ScalarField(grid, beta)};
}

DopingProfile DopingProfile::cosine(const GridPtr& grid, double beta, double epsilon, int axis,
                                    int mode) {
    return {ScalarField::from_function(grid, [=](const Vec3& x) {
        return beta + epsilon * std::cos(kTwoPi * mode * x[static_cast<std::size_t>(axis)]);
    })};
}

DopingProfile DopingProfile::random(const GridPtr& grid, double floor, double amplitude, int kmax,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const ScalarField g = random_band_limited(grid, kmax, rng);
    const double lo = g.min();
    const double spread = g.max() - lo;
    return {g.map([&](double v) { return floor + amplitude * (v - lo) / spread; })};
}

ScalarField Equilibrium::qbar(Species s) const {
    return nbar(s).map([](double v) { return std::log(v); });
}

double EquilibriumResidual::max() const { return std::max({force_e, force_i, gauss}); }

Equilibrium equilibrium_from_potential(const ScalarField& phibar, const DopingProfile& doping,
                                       double ion_mass, const Vec3& Bbar) {
    const double me = ion_mass + doping.b.mean();
    Densities d = closures(phibar, ion_mass, me);
    Equilibrium eq;
    eq.nbar_e = std::move(d.ne);
    eq.nbar_i = std::move(d.ni);
    eq.phibar = phibar;
    eq.Ebar = gradient(phibar);
    eq.Ebar *= -1.0;
    eq.Bbar = Bbar;
    eq.b = doping.b;
    eq.ion_mass = ion_mass;
    eq.residual = equilibrium_residual(eq).max();
    return eq;
}

Equilibrium solve_equilibrium(const DopingProfile& doping, double ion_mass, const Vec3& Bbar,
                              double tol, const EquilibriumOptions& options) {
    const ScalarField& b = doping.b;
    const double bmin = b.min();
    if (!(bmin > 0.0)) throw InvalidDoping(bmin);
    if (!(ion_mass > 0.0)) throw InvalidState("ion mass must be positive");
    if (!(tol > 0.0)) throw InvalidState("equilibrium tolerance must be positive");

    const double me = ion_mass + b.mean();
    ScalarField phi(b.grid());
    Densities d = closures(phi, ion_mass, me);
    ScalarField r = gauss_residual(phi, d, b);
    double res = r.max_abs();

    int iter = 0;
    while (res > tol) {
        if (iter >= options.max_iter) throw NoConvergence(iter, res, "iteration limit reached");
        ++iter;

        const Jacobian jac(d, me, ion_mass);
        ScalarField rhs = r;
        rhs *= -1.0;
        ScalarField trial = phi + pcg(jac, std::move(rhs), options);
        Densities dt = closures(trial, ion_mass, me);
        ScalarField rt = gauss_residual(trial, dt, b);
        double res_t = rt.max_abs();

        if (!(res_t < res)) {
            // Damped Picard: phi <- phi + 0.5 (phi_P - phi), -lap(phi_P) = ni - ne + b.
            ScalarField rho = d.ni - d.ne + b;
            rho += -rho.mean();
            ScalarField picard = poisson_solve_mean_zero(rho);
            picard *= -1.0;
            trial = phi;
            trial *= 0.5;
            trial.axpy(0.5, picard);
            dt = closures(trial, ion_mass, me);
            rt = gauss_residual(trial, dt, b);
            res_t = rt.max_abs();
            if (!(res_t < res)) throw NoConvergence(iter, res, "residual stopped decreasing");
        }
        phi = std::move(trial);
        d = std::move(dt);
        r = std::move(rt);
        res = res_t;
    }

    Equilibrium eq = equilibrium_from_potential(phi, doping, ion_mass, Bbar);
    eq.iterations = iter;
    if (!(eq.nbar_e.min() > 0.0) || !(eq.nbar_i.min() > 0.0))
        throw NoConvergence(iter, eq.residual, "non-positive equilibrium density");
    return eq;
}

EquilibriumResidual equilibrium_residual(const Equilibrium& eq) {
    EquilibriumResidual r;
    const auto log_of = [](const ScalarField& f) { return f.map([](double v) { return std::log(v); }); };
    const VectorField ge = gradient(log_of(eq.nbar_e));
    const VectorField gi = gradient(log_of(eq.nbar_i));
    r.force_e = (ge + eq.Ebar).max_abs();
    r.force_i = (gi - eq.Ebar).max_abs();
    ScalarField g = divergence(eq.Ebar);
    g -= eq.nbar_i;
    g += eq.nbar_e;
    g -= eq.b;
    r.gauss = g.max_abs();
    return r;
}

ScalarField linearized_oracle(const DopingProfile& doping, double ion_mass) {
    const double mean_b = doping.b.mean();
    const double shift = (ion_mass + mean_b) + ion_mass;
    ScalarField src = doping.b;
    src += -mean_b;
    return screened_poisson_solve(src, shift);
}

}  // namespace emx
