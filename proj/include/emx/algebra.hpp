#pragma once

// Pointwise 5x5 matrix families of the log-pressure formulation.
//
// State ordering for one species is V = (Q, u1, u2, u3, Theta). Flux
// directions are indexed 0..2.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

#include "emx/grid.hpp"

namespace emx {

using Matrix5 = Eigen::Matrix<double, 5, 5, Eigen::RowMajor>;
using Vector5 = Eigen::Matrix<double, 5, 1>;

/// Charge sign: electrons -1, ions +1.
enum class Species : int { electron = 0, ion = 1 };
constexpr int charge(Species s) { return s == Species::electron ? -1 : +1; }

/// Pointwise data entering the commutator matrix B.
struct SpeciesScalars {
    double p = 1.0;
    Vec3 u{0.0, 0.0, 0.0};
    double theta = 1.0;
    int q = 1;
    Vec3 grad_p{0.0, 0.0, 0.0};
    Vec3 grad_qbar{0.0, 0.0, 0.0};  // grad(ln pbar)
    double div_pu = 0.0;
    double div_pu_over_theta = 0.0;
    double div_pu_over_theta2 = 0.0;
};

/// A_j(u, theta). Throws InvalidState if theta <= 0.
Matrix5 flux_matrix(int j, const Vec3& u, double theta);

/// Friedrichs symmetrizer A_0(p, theta). Throws InvalidState unless p, theta > 0.
Matrix5 symmetrizer(double p, double theta);

/// A_0 A_j in closed form.
Matrix5 symmetrized_flux(int j, double p, const Vec3& u, double theta);

/// L(x) built from grad(qbar).
Matrix5 source_matrix(const Vec3& grad_qbar);

/// K(u, theta, F, G): zeroth-order source of the perturbation system.
Vector5 stiff_source(const Vec3& u, double theta, const Vec3& F, const Vec3& G, const Vec3& Bbar,
                     int q);

/// B = sum_j d_j(A_0 A_j) - 2 A_0 L, assembled from precomputed derivatives.
Matrix5 commutator_matrix(const SpeciesScalars& sc);

/// Eigenvalues of A_0(p, theta) in ascending order.
Vector5 symmetrizer_eigenvalues(double p, double theta);

struct AlgebraThresholds {
    double symmetry = 1e-12;
    double min_eigenvalue = 0.0;  // strict: must exceed this
    double antisymmetry = 1e-10;
};

struct AlgebraReport {
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    AlgebraThresholds thresholds;
    double max_symmetry_defect = 0.0;       // max_j ||Atilde_j - Atilde_j^T||_inf
    double max_product_mismatch = 0.0;      // closed form vs A_0 * A_j
    double min_eigenvalue_a0 = 0.0;
    double max_antisymmetry_defect = 0.0;   // ||B + B^T||_inf at equilibrium-consistent inputs
    bool symmetry_pass = false;
    bool definiteness_pass = false;
    bool antisymmetry_pass = false;
    bool pass() const { return symmetry_pass && definiteness_pass && antisymmetry_pass; }
};

/// Samples (p, u, theta) uniformly in [1/2,2] x [-1,1]^3 x [1/2,2] and
/// checks the symmetry, definiteness and antisymmetry claims. Deterministic in `seed`.
AlgebraReport check_algebra(std::size_t samples, std::uint64_t seed,
                            const AlgebraThresholds& thresholds = {});

double max_abs_entry(const Matrix5& m);

}  // namespace emx
