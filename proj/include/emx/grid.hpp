#pragma once

// Periodic tensor grid on the unit torus with pseudo-spectral calculus.
//
// Layout: C-order over the active axes, last active axis fastest. Every
// VectorField carries three components; inactive axes have zero wavenumber,
// so derivatives along them vanish identically.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace emx {

class Grid;
using GridPtr = std::shared_ptr<const Grid>;
using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

struct FftPlans;

class Grid {
public:
    /// Throws ValidationError unless dims in {1,2,3} and n is a power of two >= 8.
    static GridPtr make(int dims, int n);

    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    int dims() const noexcept { return dims_; }
    int n() const noexcept { return n_; }
    std::size_t size() const noexcept { return size_; }
    std::size_t spectral_size() const noexcept { return spectral_size_; }
    bool same_shape(const Grid& other) const noexcept {
        return dims_ == other.dims_ && n_ == other.n_;
    }

    /// Coordinates in [0,1)^3 of real-space point `index` (inactive axes at 0).
    Vec3 point(std::size_t index) const;

    /// Integer lattice wavenumber of half-spectrum mode `mode`.
    std::array<int, 3> wavenumber(std::size_t mode) const { return kint_[mode]; }
    /// 2*pi*k with the Nyquist component of every axis zeroed.
    const Vec3& derivative_multiplier(std::size_t mode) const { return kdiff_[mode]; }
    /// 4*pi^2*|k~|^2 where k~ has Nyquist components zeroed.
    double laplacian_symbol(std::size_t mode) const { return lap_[mode]; }
    /// 2/3-rule mask: false where any |k_axis| > N/3.
    bool dealias_keep(std::size_t mode) const { return keep_[mode] != 0; }
    /// Multiplicity of a half-spectrum mode in the full spectrum (1 or 2).
    double mode_weight(std::size_t mode) const { return weight_[mode]; }

    /// Normalised forward transform: coefficients c_k with f(x) = sum_k c_k e^{2 pi i k.x}.
    void forward(std::span<const double> real, std::span<Complex> spectral) const;
    void inverse(std::span<const Complex> spectral, std::span<double> real) const;

private:
    Grid(int dims, int n);

    int dims_;
    int n_;
    std::size_t size_;
    std::size_t spectral_size_;
    std::array<int, 3> shape_{1, 1, 1};
    std::array<int, 3> cshape_{1, 1, 1};
    std::vector<std::array<int, 3>> kint_;
    std::vector<Vec3> kdiff_;
    std::vector<double> lap_;
    std::vector<char> keep_;
    std::vector<double> weight_;
    std::unique_ptr<FftPlans> plans_;
};

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double value = 0.0);
    ScalarField(GridPtr grid, std::vector<double> values);

    /// Samples f(x) at every grid point.
    static ScalarField from_function(GridPtr grid, const std::function<double(const Vec3&)>& f);

    const GridPtr& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(const ScalarField& other);
    ScalarField& operator*=(double s);
    ScalarField& operator+=(double s);
    /// this += a * x
    ScalarField& axpy(double a, const ScalarField& x);

    template <class F>
    ScalarField map(F&& f) const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = f(values_[i]);
        return out;
    }

    double mean() const;
    double min() const;
    double max() const;
    double max_abs() const;
    /// L2 norm on the unit torus, sqrt(mean(f^2)).
    double l2_norm() const;
    bool all_finite() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const GridPtr& grid, const Vec3& value = {0.0, 0.0, 0.0});
    VectorField(ScalarField x, ScalarField y, ScalarField z);

    const GridPtr& grid() const noexcept { return c_[0].grid(); }
    ScalarField& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    const ScalarField& operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    Vec3 at(std::size_t i) const { return {c_[0][i], c_[1][i], c_[2][i]}; }
    void set(std::size_t i, const Vec3& v) {
        c_[0][i] = v[0];
        c_[1][i] = v[1];
        c_[2][i] = v[2];
    }

    VectorField& operator+=(const VectorField& other);
    VectorField& operator-=(const VectorField& other);
    VectorField& operator*=(double s);
    VectorField& axpy(double a, const VectorField& x);

    double max_abs() const;
    /// sqrt(sum over components of the squared L2 norms).
    double l2_norm() const;
    bool all_finite() const;

private:
    std::array<ScalarField, 3> c_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);
VectorField operator*(const ScalarField& s, const VectorField& v);
ScalarField dot(const VectorField& a, const VectorField& b);
VectorField cross(const VectorField& a, const VectorField& b);
VectorField cross(const VectorField& a, const Vec3& b);

// Spectral calculus. Fields must share a grid shape.

struct Spectrum {
    GridPtr grid;
    std::vector<Complex> coeffs;
};

Spectrum to_spectrum(const ScalarField& f);
ScalarField from_spectrum(const Spectrum& s);

/// d f / d x_axis with axis in 0..2; zero field for an inactive axis.
ScalarField spectral_derivative(const ScalarField& f, int axis);
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
VectorField curl(const VectorField& v);
/// Laplacian consistent with divergence(gradient(f)).
ScalarField laplacian(const ScalarField& f);

/// Solves laplacian(psi) = rhs with mean(psi) = 0. Throws NonZeroMean when
/// |mean(rhs)| > max(1e-10 * max|rhs|, 1e-14).
ScalarField poisson_solve_mean_zero(const ScalarField& rhs);

/// Solves (shift - laplacian) u = rhs for shift > 0.
ScalarField screened_poisson_solve(const ScalarField& rhs, double shift);

/// v - grad lap^{-1} div v.
VectorField leray_project(const VectorField& v);

/// sqrt(sum_k (1 + 4 pi^2 |k|^2)^s |c_k|^2) with Parseval-normalised c_k.
double sobolev_norm(const ScalarField& f, int s);
double sobolev_norm(const VectorField& v, int s);

/// Zeroes modes outside the 2/3 mask.
ScalarField dealias(const ScalarField& f);
void dealias_in_place(ScalarField& f);

/// Zero-mean real field with random coefficients on 1 <= |k|_inf <= kmax
/// (sub-Nyquist), scaled to max|f| = 1 on the grid.
ScalarField random_band_limited(const GridPtr& grid, int kmax, std::mt19937_64& rng);

/// Spectral interpolation onto a grid with the same dimension count.
ScalarField resample(const ScalarField& f, const GridPtr& target);

}  // namespace emx
