#include "emx/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "emx/errors.hpp"

namespace emx {

namespace {

using MultiIndex = std::array<int, 3>;

// All alpha over the active axes with |alpha| <= order.
std::vector<MultiIndex> multi_indices(int dims, int order) {
    std::vector<MultiIndex> out;
    for (int a = 0; a <= order; ++a)
        for (int b = 0; b <= (dims > 1 ? order - a : 0); ++b)
            for (int c = 0; c <= (dims > 2 ? order - a - b : 0); ++c) out.push_back({a, b, c});
    return out;
}

ScalarField partial(ScalarField f, const MultiIndex& alpha) {
    for (int axis = 0; axis < 3; ++axis)
        for (int r = 0; r < alpha[static_cast<std::size_t>(axis)]; ++r)
            f = spectral_derivative(f, axis);
    return f;
}

VectorField partial(const VectorField& v, const MultiIndex& alpha) {
    return VectorField(partial(v[0], alpha), partial(v[1], alpha), partial(v[2], alpha));
}

double mean_square(const VectorField& v) {
    const double n = v.l2_norm();
    return n * n;
}

double fluid_norm_sq(const PerturbationState& z, int order) {
    double acc = 0.0;
    for (const auto& sp : z.species) {
        const double a = sobolev_norm(sp.N, order);
        const double b = sobolev_norm(sp.u, order);
        const double c = sobolev_norm(sp.Theta, order);
        acc += a * a + b * b + c * c;
    }
    return acc;
}

double tangent_norm_sq(const PlasmaFields& t, int order) {
    double acc = 0.0;
    for (const auto* c : t.components()) {
        const double v = sobolev_norm(*c, order);
        acc += v * v;
    }
    return acc;
}

double sq(double v) { return v * v; }

}  // namespace

PerturbationState perturbation_of(const PlasmaState& s, const Equilibrium& eq) {
    PerturbationState z;
    for (Species sp : {Species::electron, Species::ion}) {
        const auto& f = s.fields.of(sp);
        const auto& nbar = eq.nbar(sp);
        auto& v = z.of(sp);
        const std::string tag = sp == Species::electron ? "e" : "i";
        v.Q = ScalarField(f.n.grid());
        v.N = f.n - nbar;
        v.u = f.u;
        v.Theta = f.theta.map([](double t) { return t - 1.0; });
        for (std::size_t i = 0; i < f.n.size(); ++i) {
            const double p = f.n[i] * f.theta[i];
            if (!(p > 0.0)) throw PositivityViolation("p_" + tag, i, p, 0.0);
            v.Q[i] = std::log(p) - std::log(nbar[i]);
            // N through the log-pressure representation.
            const double alt = std::exp(v.Q[i] + std::log(nbar[i])) / f.theta[i] - nbar[i];
            z.density_discrepancy = std::max(z.density_discrepancy, std::abs(alt - v.N[i]));
        }
    }
    z.F = s.fields.E - eq.Ebar;
    z.G = s.fields.B - VectorField(eq.grid(), eq.Bbar);
    return z;
}

PlasmaFields primitive_of(const PerturbationState& z, const Equilibrium& eq) {
    PlasmaFields f;
    for (Species sp : {Species::electron, Species::ion}) {
        const auto& v = z.of(sp);
        const ScalarField qbar = eq.qbar(sp);
        auto& out = f.of(sp);
        out.theta = v.Theta.map([](double t) { return 1.0 + t; });
        out.n = ScalarField(qbar.grid());
        for (std::size_t i = 0; i < qbar.size(); ++i)
            out.n[i] = std::exp(v.Q[i] + qbar[i]) / out.theta[i];
        out.u = v.u;
    }
    f.E = eq.Ebar + z.F;
    f.B = VectorField(eq.grid(), eq.Bbar) + z.G;
    return f;
}

double quadratic_energy(const PerturbationState& z, const PlasmaFields& s, const Equilibrium& eq,
                        int s_d) {
    if (s_d < 0) throw InvalidState("derivative order must be non-negative");
    const GridPtr& grid = eq.grid();
    double total = 0.0;
    for (const auto& alpha : multi_indices(grid->dims(), s_d)) {
        for (Species sp : {Species::electron, Species::ion}) {
            const auto& v = z.of(sp);
            const auto& f = s.of(sp);
            const ScalarField Q = partial(v.Q, alpha);
            const VectorField u = partial(v.u, alpha);
            const ScalarField T = partial(v.Theta, alpha);
            double acc = 0.0;
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const double p = f.n[i] * f.theta[i];
                if (!(p > 0.0) || !(f.theta[i] > 0.0))
                    throw PositivityViolation(sp == Species::electron ? "p_e" : "p_i", i, p, 0.0);
                Vector5 w;
                w << Q[i], u[0][i], u[1][i], u[2][i], T[i];
                acc += w.dot(symmetrizer(p, f.theta[i]) * w);
            }
            total += acc / static_cast<double>(grid->size());
        }
        total += mean_square(partial(z.F, alpha)) + mean_square(partial(z.G, alpha));
    }
    return total;
}

double mixed_norm(const PlasmaState& s, const Equilibrium& eq, int s_tot, int k_max) {
    if (k_max < 0 || k_max > 1) throw InvalidState("mixed_norm supports k_max in {0, 1}");
    if (s_tot < k_max) throw InvalidState("mixed_norm needs s_tot >= k_max");
    const PerturbationState z = perturbation_of(s, eq);
    double acc = fluid_norm_sq(z, s_tot) + sq(sobolev_norm(z.F, s_tot)) +
                 sq(sobolev_norm(z.G, s_tot));
    if (k_max == 1) acc += tangent_norm_sq(rhs_primitive(s.fields), s_tot - 1);
    return std::sqrt(acc);
}

PotentialRecovery recover_potential(const VectorField& F) {
    ScalarField src = divergence(F);
    src *= -1.0;
    src += -src.mean();
    PotentialRecovery r;
    r.psi = poisson_solve_mean_zero(src);
    r.remainder = (F + gradient(r.psi)).l2_norm();
    return r;
}

DecayFit decay_fit(const std::vector<TimeSample>& series, double t0, double t1) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : series) {
        if (s.t < t0 || s.t > t1) continue;
        if (!(s.value > 0.0)) throw NonPositiveValue(s.t, s.value);
        pts.emplace_back(s.t, std::log(s.value));
    }
    if (pts.size() < 10) throw InsufficientData(pts.size(), 10);
    const double n = static_cast<double>(pts.size());
    double mt = 0.0, my = 0.0;
    for (const auto& [t, y] : pts) {
        mt += t;
        my += y;
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (const auto& [t, y] : pts) {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    DecayFit fit;
    fit.samples = pts.size();
    fit.rate = stt > 0.0 ? sty / stt : 0.0;
    double sse = 0.0;
    for (const auto& [t, y] : pts) sse += sq(y - (my + fit.rate * (t - mt)));
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

EnergyReport energy_report(const PlasmaState& s, const Equilibrium& eq, int order) {
    if (order < 2) throw InvalidState("energy report needs order >= 2");
    const PerturbationState z = perturbation_of(s, eq);
    EnergyReport r;
    r.t = s.t;
    r.order = order;
    for (int k = 0; k <= order; ++k) {
        r.fluid_by_order.push_back(std::sqrt(fluid_norm_sq(z, k)));
        r.F_by_order.push_back(sobolev_norm(z.F, k));
        r.G_by_order.push_back(sobolev_norm(z.G, k));
    }
    r.fluid = r.fluid_by_order.back();
    r.F = r.F_by_order[static_cast<std::size_t>(order - 1)];
    VectorField dtB = curl(s.fields.E);
    r.dtB = sobolev_norm(dtB, order - 2);
    double gb = 0.0;
    for (int c = 0; c < 3; ++c) gb += sq(sobolev_norm(gradient(s.fields.B[c]), order - 2));
    r.gradB = std::sqrt(gb);
    r.e_quad = quadratic_energy(z, s.fields, eq, 0);
    const auto cr = constraint_residuals(s.fields, eq.b);
    r.gauss = cr.gauss;
    r.div_b = cr.div_b;
    r.density_discrepancy = z.density_discrepancy;
    return r;
}

}  // namespace emx
