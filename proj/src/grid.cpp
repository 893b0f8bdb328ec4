#include "emx/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "emx/errors.hpp"

namespace emx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The FFTW planner is not thread-safe; execution with the new-array API is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int signed_wavenumber(int m, int n) { return m <= n / 2 ? m : m - n; }

void require_same_grid(const ScalarField& a, const ScalarField& b) {
    if (!a.grid() || !b.grid() || !a.grid()->same_shape(*b.grid()))
        throw InvalidState("field grid mismatch");
}

}  // namespace

struct FftPlans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;

    ~FftPlans() {
        std::lock_guard lock(planner_mutex());
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

GridPtr Grid::make(int dims, int n) {
    if (dims < 1 || dims > 3) throw ValidationError("d", "1, 2 or 3");
    if (!is_power_of_two(n) || n < 8) throw ValidationError("n_per_axis", "power of two >= 8");
    return GridPtr(new Grid(dims, n));
}

Grid::Grid(int dims, int n) : dims_(dims), n_(n) {
    for (int a = 0; a < dims_; ++a) {
        shape_[a] = n_;
        cshape_[a] = n_;
    }
    cshape_[dims_ - 1] = n_ / 2 + 1;
    size_ = static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2];
    spectral_size_ = static_cast<std::size_t>(cshape_[0]) * cshape_[1] * cshape_[2];

    kint_.resize(spectral_size_);
    kdiff_.resize(spectral_size_);
    lap_.resize(spectral_size_);
    keep_.resize(spectral_size_);
    weight_.resize(spectral_size_);

    const int nyquist = n_ / 2;
    const double cutoff = n_ / 3.0;
    std::size_t mode = 0;
    for (int m0 = 0; m0 < cshape_[0]; ++m0) {
        for (int m1 = 0; m1 < cshape_[1]; ++m1) {
            for (int m2 = 0; m2 < cshape_[2]; ++m2, ++mode) {
                const std::array<int, 3> m{m0, m1, m2};
                std::array<int, 3> k{0, 0, 0};
                bool keep = true;
                double lap = 0.0;
                Vec3 kd{0.0, 0.0, 0.0};
                for (int a = 0; a < dims_; ++a) {
                    k[a] = signed_wavenumber(m[a], n_);
                    if (std::abs(k[a]) > cutoff) keep = false;
                    if (std::abs(k[a]) != nyquist) {
                        kd[a] = kTwoPi * k[a];
                        lap += kd[a] * kd[a];
                    }
                }
                kint_[mode] = k;
                kdiff_[mode] = kd;
                lap_[mode] = lap;
                keep_[mode] = keep ? 1 : 0;
                const int mlast = m[dims_ - 1];
                weight_[mode] = (mlast > 0 && mlast < nyquist) ? 2.0 : 1.0;
            }
        }
    }

    plans_ = std::make_unique<FftPlans>();
    std::vector<int> dims_n(static_cast<std::size_t>(dims_), n_);
    double* rbuf = fftw_alloc_real(size_);
    fftw_complex* cbuf = fftw_alloc_complex(spectral_size_);
    {
        std::lock_guard lock(planner_mutex());
        // ESTIMATE keeps plan selection (and hence rounding) reproducible run to run.
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plans_->r2c = fftw_plan_dft_r2c(dims_, dims_n.data(), rbuf, cbuf, flags);
        plans_->c2r = fftw_plan_dft_c2r(dims_, dims_n.data(), cbuf, rbuf, flags);
    }
    fftw_free(rbuf);
    fftw_free(cbuf);
    if (!plans_->r2c || !plans_->c2r) throw InvalidState("FFTW planning failed");
}

Grid::~Grid() = default;

Vec3 Grid::point(std::size_t index) const {
    Vec3 x{0.0, 0.0, 0.0};
    std::size_t rem = index;
    for (int a = 2; a >= 0; --a) {
        const auto extent = static_cast<std::size_t>(shape_[a]);
        const std::size_t i = rem % extent;
        rem /= extent;
        if (a < dims_) x[a] = static_cast<double>(i) / n_;
    }
    return x;
}

void Grid::forward(std::span<const double> real, std::span<Complex> spectral) const {
    // r2c out-of-place leaves its input untouched.
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(real.data()),
                         reinterpret_cast<fftw_complex*>(spectral.data()));
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& c : spectral) c *= scale;
}

void Grid::inverse(std::span<const Complex> spectral, std::span<double> real) const {
    // Multi-dimensional c2r destroys its input.
    std::vector<Complex> scratch(spectral.begin(), spectral.end());
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()),
                         real.data());
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(grid_->size(), value) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw InvalidState("field size does not match grid");
}

ScalarField ScalarField::from_function(GridPtr grid,
                                       const std::function<double(const Vec3&)>& f) {
    ScalarField out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] = f(grid->point(i));
    return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::operator+=(double s) {
    for (auto& v : values_) v += s;
    return *this;
}

ScalarField& ScalarField::axpy(double a, const ScalarField& x) {
    require_same_grid(*this, x);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
    return *this;
}

double ScalarField::mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s / static_cast<double>(values_.size()));
}

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(const GridPtr& grid, const Vec3& value)
    : c_{ScalarField(grid, value[0]), ScalarField(grid, value[1]), ScalarField(grid, value[2])} {}

VectorField::VectorField(ScalarField x, ScalarField y, ScalarField z)
    : c_{std::move(x), std::move(y), std::move(z)} {}

VectorField& VectorField::operator+=(const VectorField& other) {
    for (int i = 0; i < 3; ++i) (*this)[i] += other[i];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
    for (int i = 0; i < 3; ++i) (*this)[i] -= other[i];
    return *this;
}

VectorField& VectorField::operator*=(double s) {
    for (auto& c : c_) c *= s;
    return *this;
}

VectorField& VectorField::axpy(double a, const VectorField& x) {
    for (int i = 0; i < 3; ++i) (*this)[i].axpy(a, x[i]);
    return *this;
}

double VectorField::max_abs() const {
    return std::max({c_[0].max_abs(), c_[1].max_abs(), c_[2].max_abs()});
}

double VectorField::l2_norm() const {
    double s = 0.0;
    for (const auto& c : c_) {
        const double n = c.l2_norm();
        s += n * n;
    }
    return std::sqrt(s);
}

bool VectorField::all_finite() const {
    return c_[0].all_finite() && c_[1].all_finite() && c_[2].all_finite();
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

VectorField operator*(const ScalarField& s, const VectorField& v) {
    return VectorField(s * v[0], s * v[1], s * v[2]);
}

ScalarField dot(const VectorField& a, const VectorField& b) {
    ScalarField out = a[0] * b[0];
    out += a[1] * b[1];
    out += a[2] * b[2];
    return out;
}

VectorField cross(const VectorField& a, const VectorField& b) {
    return VectorField(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                       a[0] * b[1] - a[1] * b[0]);
}

VectorField cross(const VectorField& a, const Vec3& b) {
    VectorField out(a.grid());
    for (std::size_t i = 0; i < a[0].size(); ++i) {
        const Vec3 v = a.at(i);
        out.set(i, {v[1] * b[2] - v[2] * b[1], v[2] * b[0] - v[0] * b[2],
                    v[0] * b[1] - v[1] * b[0]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral calculus

Spectrum to_spectrum(const ScalarField& f) {
    Spectrum s{f.grid(), std::vector<Complex>(f.grid()->spectral_size())};
    f.grid()->forward(f.values(), s.coeffs);
    return s;
}

ScalarField from_spectrum(const Spectrum& s) {
    ScalarField f(s.grid);
    s.grid->inverse(s.coeffs, f.values());
    return f;
}

namespace {

const Complex kI{0.0, 1.0};

ScalarField derivative_of(const Spectrum& s, int axis) {
    const Grid& g = *s.grid;
    if (axis >= g.dims()) return ScalarField(s.grid);
    Spectrum d{s.grid, std::vector<Complex>(s.coeffs.size())};
    for (std::size_t m = 0; m < s.coeffs.size(); ++m)
        d.coeffs[m] = kI * g.derivative_multiplier(m)[axis] * s.coeffs[m];
    return from_spectrum(d);
}

}  // namespace

ScalarField spectral_derivative(const ScalarField& f, int axis) {
    if (axis < 0 || axis > 2) throw InvalidState("axis must be 0, 1 or 2");
    if (axis >= f.grid()->dims()) return ScalarField(f.grid());
    return derivative_of(to_spectrum(f), axis);
}

VectorField gradient(const ScalarField& f) {
    const Spectrum s = to_spectrum(f);
    return VectorField(derivative_of(s, 0), derivative_of(s, 1), derivative_of(s, 2));
}

ScalarField divergence(const VectorField& v) {
    const GridPtr& grid = v.grid();
    const Grid& g = *grid;
    Spectrum acc{grid, std::vector<Complex>(g.spectral_size(), Complex{})};
    for (int a = 0; a < g.dims(); ++a) {
        const Spectrum s = to_spectrum(v[a]);
        for (std::size_t m = 0; m < s.coeffs.size(); ++m)
            acc.coeffs[m] += kI * g.derivative_multiplier(m)[a] * s.coeffs[m];
    }
    return from_spectrum(acc);
}

VectorField curl(const VectorField& v) {
    const GridPtr& grid = v.grid();
    const Grid& g = *grid;
    const std::array<Spectrum, 3> s{to_spectrum(v[0]), to_spectrum(v[1]), to_spectrum(v[2])};
    std::array<Spectrum, 3> out;
    for (auto& o : out) o = Spectrum{grid, std::vector<Complex>(g.spectral_size())};
    for (std::size_t m = 0; m < g.spectral_size(); ++m) {
        const Vec3& k = g.derivative_multiplier(m);
        out[0].coeffs[m] = kI * (k[1] * s[2].coeffs[m] - k[2] * s[1].coeffs[m]);
        out[1].coeffs[m] = kI * (k[2] * s[0].coeffs[m] - k[0] * s[2].coeffs[m]);
        out[2].coeffs[m] = kI * (k[0] * s[1].coeffs[m] - k[1] * s[0].coeffs[m]);
    }
    return VectorField(from_spectrum(out[0]), from_spectrum(out[1]), from_spectrum(out[2]));
}

ScalarField laplacian(const ScalarField& f) {
    Spectrum s = to_spectrum(f);
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) s.coeffs[m] *= -f.grid()->laplacian_symbol(m);
    return from_spectrum(s);
}

ScalarField poisson_solve_mean_zero(const ScalarField& rhs) {
    const double mean = rhs.mean();
    const double tol = std::max(1e-10 * rhs.max_abs(), 1e-14);
    if (std::abs(mean) > tol) throw NonZeroMean(mean, tol);
    Spectrum s = to_spectrum(rhs);
    const Grid& g = *rhs.grid();
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
        const double lap = g.laplacian_symbol(m);
        // k = 0 and pure-Nyquist modes are outside the range of the discrete Laplacian.
        s.coeffs[m] = lap > 0.0 ? -s.coeffs[m] / lap : Complex{};
    }
    return from_spectrum(s);
}

ScalarField screened_poisson_solve(const ScalarField& rhs, double shift) {
    Spectrum s = to_spectrum(rhs);
    for (std::size_t m = 0; m < s.coeffs.size(); ++m)
        s.coeffs[m] /= shift + rhs.grid()->laplacian_symbol(m);
    return from_spectrum(s);
}

VectorField leray_project(const VectorField& v) {
    const GridPtr& grid = v.grid();
    const Grid& g = *grid;
    std::array<Spectrum, 3> s{to_spectrum(v[0]), to_spectrum(v[1]), to_spectrum(v[2])};
    for (std::size_t m = 0; m < g.spectral_size(); ++m) {
        const double lap = g.laplacian_symbol(m);
        if (lap <= 0.0) continue;
        const Vec3& k = g.derivative_multiplier(m);
        const Complex kdotv = k[0] * s[0].coeffs[m] + k[1] * s[1].coeffs[m] + k[2] * s[2].coeffs[m];
        for (int a = 0; a < 3; ++a) s[a].coeffs[m] -= k[a] * kdotv / lap;
    }
    return VectorField(from_spectrum(s[0]), from_spectrum(s[1]), from_spectrum(s[2]));
}

double sobolev_norm(const ScalarField& f, int s) {
    const Spectrum sp = to_spectrum(f);
    const Grid& g = *f.grid();
    double acc = 0.0;
    for (std::size_t m = 0; m < sp.coeffs.size(); ++m) {
        const double mult = std::pow(1.0 + g.laplacian_symbol(m), s);
        acc += g.mode_weight(m) * mult * std::norm(sp.coeffs[m]);
    }
    return std::sqrt(acc);
}

double sobolev_norm(const VectorField& v, int s) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double n = sobolev_norm(v[a], s);
        acc += n * n;
    }
    return std::sqrt(acc);
}

void dealias_in_place(ScalarField& f) {
    Spectrum s = to_spectrum(f);
    for (std::size_t m = 0; m < s.coeffs.size(); ++m)
        if (!f.grid()->dealias_keep(m)) s.coeffs[m] = Complex{};
    f.grid()->inverse(s.coeffs, f.values());
}

ScalarField dealias(const ScalarField& f) {
    ScalarField out = f;
    dealias_in_place(out);
    return out;
}

ScalarField resample(const ScalarField& f, const GridPtr& target) {
    const Grid& src = *f.grid();
    const Grid& dst = *target;
    if (src.dims() != dst.dims()) throw InvalidState("resample requires equal dimension counts");
    const Spectrum s = to_spectrum(f);
    const int n_src = src.n();
    const int n_dst = dst.n();
    const int limit = std::min(n_src, n_dst) / 2;  // Nyquist modes are dropped
    Spectrum out{target, std::vector<Complex>(dst.spectral_size(), Complex{})};
    const int d = dst.dims();
    std::array<int, 3> dshape{1, 1, 1};
    for (int a = 0; a < d; ++a) dshape[a] = n_dst;
    dshape[d - 1] = n_dst / 2 + 1;
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
        const auto k = src.wavenumber(m);
        bool inside = true;
        for (int a = 0; a < d; ++a)
            if (std::abs(k[a]) >= limit) inside = false;
        if (!inside) continue;
        std::size_t idx = 0;
        for (int a = 0; a < 3; ++a) {
            const int mi = a < d ? (k[a] >= 0 ? k[a] : k[a] + n_dst) : 0;
            idx = idx * static_cast<std::size_t>(dshape[a]) + static_cast<std::size_t>(mi);
        }
        out.coeffs[idx] = s.coeffs[m];
    }
    return from_spectrum(out);
}

ScalarField random_band_limited(const GridPtr& grid, int kmax, std::mt19937_64& rng) {
    const Grid& g = *grid;
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    Spectrum s{grid, std::vector<Complex>(g.spectral_size(), Complex{})};
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
        const auto k = g.wavenumber(m);
        int kinf = 0;
        for (int a = 0; a < g.dims(); ++a) kinf = std::max(kinf, std::abs(k[a]));
        if (kinf == 0 || kinf > kmax || kinf >= g.n() / 2) continue;
        const double re = coef(rng);
        const double im = coef(rng);
        s.coeffs[m] = Complex{re, im};
    }
    ScalarField f = from_spectrum(s);
    f += -f.mean();
    const double peak = f.max_abs();
    if (peak > 0.0) f *= 1.0 / peak;
    return f;
}

}  // namespace emx
