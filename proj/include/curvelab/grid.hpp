#pragma once

// Discretized complex fields on a periodic 2D box with paired physical /
// frequency views.
//
// Conventions (used by every module):
//   * box [-L/2, L/2)^2 sampled at x_i = -L/2 + i*h, h = L/N;
//   * frequency lattice xi_k = (2*pi/L)*k, k in [-N/2, N/2)^2;
//   * transform pair  fhat(xi) = (2pi)^{-2} \int f(x) e^{-i x.xi} dx,
//                     f(x)    = \int fhat(xi) e^{i x.xi} dxi,
//     realized as exact discrete quadratures (round trip is the identity);
//   * l2_norm() is the physical L2(dx) quadrature norm; on the frequency
//     side the same value is 2*pi*||fhat||_{L2(dxi)} (discrete Parseval is
//     exact, this is the "after normalization" identity);
//   * spectral_l2_norm() = ||fhat||_{L2(dxi)} = l2_norm()/(2*pi); bounds
//     whose sharp constants come from the Fourier side use it.

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvelab {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const;
};

struct GridSpec {
    double side_length = 0.0;   // L
    int points_per_side = 0;    // N, power of two, >= 32
    double frequency_extent = 0.0;  // max |xi| represented

    GridSpec() = default;
    GridSpec(double L, int N);

    double spacing() const { return side_length / points_per_side; }
    double freq_spacing() const { return kTwoPi / side_length; }
    double nyquist() const { return kPi * points_per_side / side_length; }
    std::int64_t sample_count() const {
        return std::int64_t(points_per_side) * points_per_side;
    }
    double coord(int i) const { return -0.5 * side_length + i * spacing(); }
    // FFT-order bin -> signed wavenumber
    int wavenumber(int i) const {
        return i < points_per_side / 2 ? i : i - points_per_side;
    }
    double freq(int i) const { return freq_spacing() * wavenumber(i); }
    bool operator==(const GridSpec& o) const {
        return side_length == o.side_length && points_per_side == o.points_per_side;
    }
};

struct FrequencySupport {
    enum class Kind { ball, annulus, full_unit_ball };
    Kind kind = Kind::full_unit_ball;
    Vec2 center{0.0, 0.0};
    double radius = 1.0;  // ball radius (M^{-1} semantics for unit-scale data)
    int annulus_k = 0;    // annulus A(2^k)

    static FrequencySupport ball_at(Vec2 c, double r);
    static FrequencySupport annulus(int k);
    static FrequencySupport unit_ball() { return FrequencySupport{}; }
    double max_abs_freq() const;
    bool contains(Vec2 xi) const;
};

enum class Side : std::uint8_t { physical = 0, frequency = 1 };

class SampledField {
public:
    SampledField() = default;
    SampledField(GridSpec grid, Side side);
    SampledField(GridSpec grid, Side side, std::vector<cplx> values);

    const GridSpec& grid() const { return grid_; }
    Side side() const { return side_; }
    int n() const { return grid_.points_per_side; }
    const std::vector<cplx>& values() const { return values_; }
    std::vector<cplx>& values() { return values_; }
    cplx at(int i, int j) const { return values_[std::int64_t(i) * n() + j]; }
    cplx& at(int i, int j) { return values_[std::int64_t(i) * n() + j]; }

    const std::optional<FrequencySupport>& support() const { return support_; }
    void declare_support(FrequencySupport s) { support_ = s; }

    double l2_norm() const;           // physical L2(dx) calibration
    double spectral_l2_norm() const;  // ||fhat||_{L2(dxi)}

private:
    GridSpec grid_;
    Side side_ = Side::physical;
    std::vector<cplx> values_;
    std::optional<FrequencySupport> support_;
};

SampledField forward_transform(const SampledField& f);
SampledField inverse_transform(const SampledField& F);

double sobolev_norm(const SampledField& f, double s);

struct BallRegion {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
};

// Riemann-sum L^p norm over the region; p = inf handled as max.
double lp_norm_on_region(const SampledField& f, double p, const BallRegion& region);
constexpr double kPinf = -1.0;  // sentinel for the L^inf mode

SampledField littlewood_paley_project(const SampledField& f, int k);

struct FreqCap {
    enum class Shape { ball, rect };
    Shape shape = Shape::ball;
    Vec2 center{0.0, 0.0};
    double radius = 0.0;     // ball
    Vec2 lo{0.0, 0.0}, hi{0.0, 0.0};  // rect, half-open [lo, hi)
    bool contains(Vec2 xi) const {
        if (shape == Shape::ball) return (xi - center).norm2() <= radius * radius;
        return xi.x >= lo.x && xi.x < hi.x && xi.y >= lo.y && xi.y < hi.y;
    }
    static FreqCap ball(Vec2 c, double r) { return {Shape::ball, c, r, {}, {}}; }
    static FreqCap rect(Vec2 lo, Vec2 hi) { return {Shape::rect, {}, 0.0, lo, hi}; }
};

// Sharp cutoff of fhat to the cap (input may be on either side; the result is
// frequency-side).
SampledField frequency_restrict(const SampledField& f, const FreqCap& cap);

// Flat little-endian record: header + row-major complex64 samples.
void save_field(const SampledField& f, const std::string& path);
SampledField load_field(const std::string& path);

// Campaign plumbing: a field of uniformly random phases on the lattice nodes
// inside `support`, normalized to unit l2_norm. Deterministic under seed.
SampledField random_bandlimited_field(const GridSpec& g, const FrequencySupport& support,
                                      std::uint64_t seed);

} // namespace curvelab
