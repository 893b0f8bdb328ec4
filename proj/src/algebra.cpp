#include "emx/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "emx/errors.hpp"

namespace emx {

namespace {

void require_positive_theta(double theta) {
    if (!(theta > 0.0)) throw InvalidState("temperature must be positive");
}

void require_positive(double p, double theta) {
    if (!(p > 0.0)) throw InvalidState("pressure must be positive");
    require_positive_theta(theta);
}

void require_axis(int j) {
    if (j < 0 || j > 2) throw InvalidState("flux direction must be 0, 1 or 2");
}

}  // namespace

Matrix5 flux_matrix(int j, const Vec3& u, double theta) {
    require_axis(j);
    require_positive_theta(theta);
    Matrix5 a = Matrix5::Identity() * u[j];
    a(0, 1 + j) = 2.0;
    a(1 + j, 0) = theta;
    a(4, 1 + j) = theta;
    return a;
}

Matrix5 symmetrizer(double p, double theta) {
    require_positive(p, theta);
    const double pt = p / theta;
    Matrix5 a = Matrix5::Zero();
    a(0, 0) = p;
    a(0, 4) = a(4, 0) = -pt;
    a(1, 1) = a(2, 2) = a(3, 3) = pt;
    a(4, 4) = 2.0 * p / (theta * theta);
    return a;
}

Matrix5 symmetrized_flux(int j, double p, const Vec3& u, double theta) {
    require_axis(j);
    require_positive(p, theta);
    const double uj = u[j];
    const double pt = p / theta;
    Matrix5 a = Matrix5::Zero();
    a(0, 0) = p * uj;
    a(0, 1 + j) = a(1 + j, 0) = p;
    a(0, 4) = a(4, 0) = -pt * uj;
    a(1, 1) = a(2, 2) = a(3, 3) = pt * uj;
    a(4, 4) = 2.0 * p / (theta * theta) * uj;
    return a;
}

Matrix5 source_matrix(const Vec3& grad_qbar) {
    Matrix5 l = Matrix5::Zero();
    for (int k = 0; k < 3; ++k) {
        l(0, 1 + k) = grad_qbar[k];
        l(1 + k, 4) = grad_qbar[k];
    }
    return l;
}

Vector5 stiff_source(const Vec3& u, double theta, const Vec3& F, const Vec3& G, const Vec3& Bbar,
                     int q) {
    require_positive_theta(theta);
    const double big_theta = theta - 1.0;
    const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    const Vec3 b{Bbar[0] + G[0], Bbar[1] + G[1], Bbar[2] + G[2]};
    const Vec3 uxb{u[1] * b[2] - u[2] * b[1], u[2] * b[0] - u[0] * b[2],
                   u[0] * b[1] - u[1] * b[0]};
    Vector5 k;
    k(0) = u2 / (2.0 * theta) - big_theta / theta;
    for (int a = 0; a < 3; ++a) k(1 + a) = q * (F[a] + uxb[a]) - u[a];
    k(4) = 0.5 * u2 - big_theta;
    return k;
}

Matrix5 commutator_matrix(const SpeciesScalars& sc) {
    require_positive(sc.p, sc.theta);
    const double p = sc.p;
    const double pt = p / sc.theta;
    Matrix5 b = Matrix5::Zero();
    b(0, 0) = sc.div_pu;
    b(0, 4) = b(4, 0) = -sc.div_pu_over_theta;
    b(4, 4) = 2.0 * sc.div_pu_over_theta2;
    for (int k = 0; k < 3; ++k) {
        // p/pbar grad(pbar) = p grad(qbar)
        b(0, 1 + k) = sc.grad_p[k] - 2.0 * p * sc.grad_qbar[k];
        b(1 + k, 0) = sc.grad_p[k];
        b(1 + k, 1 + k) = sc.div_pu_over_theta;
        b(1 + k, 4) = -2.0 * pt * sc.grad_qbar[k];
        b(4, 1 + k) = 2.0 * pt * sc.grad_qbar[k];
    }
    return b;
}

Vector5 symmetrizer_eigenvalues(double p, double theta) {
    Eigen::SelfAdjointEigenSolver<Matrix5> es(symmetrizer(p, theta), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double max_abs_entry(const Matrix5& m) { return m.cwiseAbs().maxCoeff(); }

AlgebraReport check_algebra(std::size_t samples, std::uint64_t seed,
                            const AlgebraThresholds& thresholds) {
    if (samples == 0) throw InvalidState("check_algebra needs at least one sample");
    AlgebraReport r;
    r.samples = samples;
    r.seed = seed;
    r.thresholds = thresholds;
    r.min_eigenvalue_a0 = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(0.5, 2.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    for (std::size_t n = 0; n < samples; ++n) {
        const double p = box(rng);
        const Vec3 u{unit(rng), unit(rng), unit(rng)};
        const double theta = box(rng);

        const Matrix5 a0 = symmetrizer(p, theta);
        for (int j = 0; j < 3; ++j) {
            const Matrix5 product = a0 * flux_matrix(j, u, theta);
            r.max_symmetry_defect =
                std::max(r.max_symmetry_defect, max_abs_entry(product - product.transpose()));
            r.max_product_mismatch = std::max(
                r.max_product_mismatch, max_abs_entry(product - symmetrized_flux(j, p, u, theta)));
        }
        r.min_eigenvalue_a0 = std::min(r.min_eigenvalue_a0, symmetrizer_eigenvalues(p, theta)(0));

        // Equilibrium-consistent point: u = 0, theta = 1, p = pbar, grad p = grad pbar,
        // every divergence vanishing.
        SpeciesScalars sc;
        sc.p = p;
        sc.theta = 1.0;
        sc.q = (n % 2 == 0) ? -1 : 1;
        for (int k = 0; k < 3; ++k) {
            sc.grad_p[k] = unit(rng);
            sc.grad_qbar[k] = sc.grad_p[k] / p;
        }
        const Matrix5 b = commutator_matrix(sc);
        r.max_antisymmetry_defect =
            std::max(r.max_antisymmetry_defect, max_abs_entry(b + b.transpose()));
    }

    r.symmetry_pass = r.max_symmetry_defect <= thresholds.symmetry;
    r.definiteness_pass = r.min_eigenvalue_a0 > thresholds.min_eigenvalue;
    r.antisymmetry_pass = r.max_antisymmetry_defect <= thresholds.antisymmetry;
    return r;
}

}  // namespace emx
