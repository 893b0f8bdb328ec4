#include "emx/state.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace emx {

PlasmaFields PlasmaFields::zeros(const GridPtr& grid) {
    PlasmaFields f;
    for (auto& s : f.species) {
        s.n = ScalarField(grid);
        s.u = VectorField(grid);
        s.theta = ScalarField(grid);
    }
    f.E = VectorField(grid);
    f.B = VectorField(grid);
    return f;
}

std::array<ScalarField*, PlasmaFields::kComponents> PlasmaFields::components() {
    auto& e = species[0];
    auto& i = species[1];
    return {&e.n, &e.u[0], &e.u[1], &e.u[2], &e.theta, &i.n, &i.u[0], &i.u[1],
            &i.u[2], &i.theta, &E[0], &E[1], &E[2], &B[0], &B[1], &B[2]};
}

std::array<const ScalarField*, PlasmaFields::kComponents> PlasmaFields::components() const {
    auto& e = species[0];
    auto& i = species[1];
    return {&e.n, &e.u[0], &e.u[1], &e.u[2], &e.theta, &i.n, &i.u[0], &i.u[1],
            &i.u[2], &i.theta, &E[0], &E[1], &E[2], &B[0], &B[1], &B[2]};
}

const std::array<std::string, PlasmaFields::kComponents>& PlasmaFields::component_names() {
    static const std::array<std::string, kComponents> names{
        "n_e", "u_e_x", "u_e_y", "u_e_z", "theta_e", "n_i", "u_i_x", "u_i_y",
        "u_i_z", "theta_i", "E_x", "E_y", "E_z", "B_x", "B_y", "B_z"};
    return names;
}

PlasmaFields& PlasmaFields::axpy(double a, const PlasmaFields& x) {
    auto dst = components();
    auto src = x.components();
    for (std::size_t c = 0; c < kComponents; ++c) dst[c]->axpy(a, *src[c]);
    return *this;
}

PlasmaFields& PlasmaFields::operator*=(double s) {
    for (auto* c : components()) *c *= s;
    return *this;
}

double PlasmaFields::max_abs() const {
    double m = 0.0;
    for (const auto* c : components()) m = std::max(m, c->max_abs());
    return m;
}

bool PlasmaFields::all_finite() const {
    const auto cs = components();
    return std::all_of(cs.begin(), cs.end(), [](const ScalarField* c) { return c->all_finite(); });
}

int worker_threads() {
    if (const char* env = std::getenv("EMX_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace emx
