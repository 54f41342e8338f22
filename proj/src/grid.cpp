#include "curvelab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <random>

#include "curvelab/bump.hpp"

namespace curvelab {

double Vec2::norm() const { return std::sqrt(norm2()); }

GridSpec::GridSpec(double L, int N) : side_length(L), points_per_side(N) {
    if (N < 32 || (N & (N - 1)) != 0)
        throw std::invalid_argument("GridSpec: N must be a power of two >= 32");
    if (!(L > 0.0)) throw std::invalid_argument("GridSpec: side length must be positive");
    frequency_extent = nyquist();
}

FrequencySupport FrequencySupport::ball_at(Vec2 c, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("FrequencySupport: ball radius must be positive");
    FrequencySupport s;
    s.kind = Kind::ball;
    s.center = c;
    s.radius = r;
    return s;
}

FrequencySupport FrequencySupport::annulus(int k) {
    if (k < 1) throw std::invalid_argument("FrequencySupport: annulus scale must be >= 2");
    FrequencySupport s;
    s.kind = Kind::annulus;
    s.annulus_k = k;
    return s;
}

double FrequencySupport::max_abs_freq() const {
    switch (kind) {
        case Kind::ball: return center.norm() + radius;
        case Kind::annulus: return std::ldexp(2.0, annulus_k);  // 2^{k+1}
        default: return 1.0;
    }
}

bool FrequencySupport::contains(Vec2 xi) const {
    switch (kind) {
        case Kind::ball: return (xi - center).norm() <= radius;
        case Kind::annulus: {
            double r = xi.norm();
            return r >= std::ldexp(0.5, annulus_k) && r <= std::ldexp(2.0, annulus_k);
        }
        default: return xi.norm() <= 1.0;
    }
}

SampledField::SampledField(GridSpec grid, Side side)
    : grid_(grid), side_(side), values_(grid.sample_count(), cplx{0.0, 0.0}) {}

SampledField::SampledField(GridSpec grid, Side side, std::vector<cplx> values)
    : grid_(grid), side_(side), values_(std::move(values)) {
    if (std::int64_t(values_.size()) != grid_.sample_count())
        throw std::invalid_argument("SampledField: values length must be N^2");
}

double SampledField::l2_norm() const {
    double s = 0.0;
    for (const cplx& v : values_) s += std::norm(v);
    if (side_ == Side::physical) return grid_.spacing() * std::sqrt(s);
    return kTwoPi * grid_.freq_spacing() * std::sqrt(s);
}

double SampledField::spectral_l2_norm() const { return l2_norm() / kTwoPi; }

// ---------------------------------------------------------------------------
// FFT backend. Plans are FFTW_ESTIMATE so repeated runs execute the same
// algorithm (bit-identical outputs); creation is serialized behind a mutex.
// ---------------------------------------------------------------------------
namespace {

std::mutex g_plan_mutex;

void run_fft(std::vector<cplx>& data, int n, int sign) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(data.data()),
                                reinterpret_cast<fftw_complex*>(data.data()), sign,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
}

// (-1)^{k1+k2} factors recentring the box/lattice at the origin
void apply_alternating_sign(std::vector<cplx>& v, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i + j) & 1) v[std::int64_t(i) * n + j] = -v[std::int64_t(i) * n + j];
}

} // namespace

SampledField forward_transform(const SampledField& f) {
    if (f.side() != Side::physical)
        throw std::invalid_argument("forward_transform: field must be physical-side");
    const int n = f.n();
    std::vector<cplx> buf = f.values();
    run_fft(buf, n, FFTW_FORWARD);
    // x starts at -L/2, so bin k carries the extra phase e^{i pi k} = (-1)^k
    apply_alternating_sign(buf, n);
    const double h = f.grid().spacing();
    const double scale = h * h / (kTwoPi * kTwoPi);
    for (cplx& v : buf) v *= scale;
    SampledField out(f.grid(), Side::frequency, std::move(buf));
    if (f.support()) out.declare_support(*f.support());
    return out;
}

SampledField inverse_transform(const SampledField& F) {
    if (F.side() != Side::frequency)
        throw std::invalid_argument("inverse_transform: field must be frequency-side");
    const int n = F.n();
    std::vector<cplx> buf = F.values();
    apply_alternating_sign(buf, n);
    run_fft(buf, n, FFTW_BACKWARD);
    const double dxi = F.grid().freq_spacing();
    const double scale = dxi * dxi;
    for (cplx& v : buf) v *= scale;
    SampledField out(F.grid(), Side::physical, std::move(buf));
    if (F.support()) out.declare_support(*F.support());
    return out;
}

double sobolev_norm(const SampledField& f, double s) {
    if (s < -2.0 || s > 2.0) throw std::domain_error("sobolev_norm: s must lie in [-2, 2]");
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const int n = F.n();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 xi{F.grid().freq(i), F.grid().freq(j)};
            acc += std::pow(1.0 + xi.norm2(), s) * std::norm(F.at(i, j));
        }
    }
    return kTwoPi * F.grid().freq_spacing() * std::sqrt(acc);
}

double lp_norm_on_region(const SampledField& f, double p, const BallRegion& region) {
    if (f.side() != Side::physical)
        throw std::invalid_argument("lp_norm_on_region: field must be physical-side");
    if (p != kPinf && (p < 1.0 || p > 16.0))
        throw std::domain_error("lp_norm_on_region: p must lie in [1, 16]");
    const int n = f.n();
    const double h = f.grid().spacing();
    const double r2 = region.radius * region.radius;
    double acc = 0.0, sup = 0.0;
    bool any = false;
    for (int i = 0; i < n; ++i) {
        const double dx = f.grid().coord(i) - region.center.x;
        if (dx * dx > r2) continue;
        for (int j = 0; j < n; ++j) {
            const double dy = f.grid().coord(j) - region.center.y;
            if (dx * dx + dy * dy > r2) continue;
            any = true;
            const double a = std::abs(f.at(i, j));
            if (p == kPinf)
                sup = std::max(sup, a);
            else
                acc += std::pow(a, p) * h * h;
        }
    }
    if (!any) return 0.0;
    return p == kPinf ? sup : std::pow(acc, 1.0 / p);
}

SampledField littlewood_paley_project(const SampledField& f, int k) {
    if (k < 0) throw std::domain_error("littlewood_paley_project: k must be >= 0");
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const int n = F.n();
    SampledField out(F.grid(), Side::frequency);
    const double corner = F.grid().nyquist() * std::sqrt(2.0);
    if (k >= 1 && std::ldexp(1.0, k - 1) > corner) return out;  // beyond Nyquist
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double r = Vec2{F.grid().freq(i), F.grid().freq(j)}.norm();
            double m = k == 0 ? dyadic_lowpass(r)
                              : dyadic_lowpass(r / std::ldexp(1.0, k)) -
                                    dyadic_lowpass(r / std::ldexp(1.0, k - 1));
            out.at(i, j) = m * F.at(i, j);
        }
    }
    if (k == 0)
        out.declare_support(FrequencySupport::unit_ball());
    else
        out.declare_support(FrequencySupport::annulus(k));
    return out;
}

SampledField frequency_restrict(const SampledField& f, const FreqCap& cap) {
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const int n = F.n();
    SampledField out(F.grid(), Side::frequency);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cap.contains(Vec2{F.grid().freq(i), F.grid().freq(j)}))
                out.at(i, j) = F.at(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Binary record. Layout (little-endian):
//   magic "CLF1" | u32 N | f64 L | u8 side | u8 support kind (255 = none)
//   | f64 cx, cy, radius | i32 annulus_k | N*N complex64 (float32 re, im)
// ---------------------------------------------------------------------------
namespace {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
} // namespace

void save_field(const SampledField& f, const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_field: cannot open " + path);
    std::fwrite("CLF1", 1, 4, fp.get());
    std::uint32_t n = f.n();
    double L = f.grid().side_length;
    std::uint8_t side = static_cast<std::uint8_t>(f.side());
    std::uint8_t kind = 255;
    double params[3] = {0, 0, 0};
    std::int32_t ak = 0;
    if (f.support()) {
        kind = static_cast<std::uint8_t>(f.support()->kind);
        params[0] = f.support()->center.x;
        params[1] = f.support()->center.y;
        params[2] = f.support()->radius;
        ak = f.support()->annulus_k;
    }
    std::fwrite(&n, sizeof n, 1, fp.get());
    std::fwrite(&L, sizeof L, 1, fp.get());
    std::fwrite(&side, 1, 1, fp.get());
    std::fwrite(&kind, 1, 1, fp.get());
    std::fwrite(params, sizeof(double), 3, fp.get());
    std::fwrite(&ak, sizeof ak, 1, fp.get());
    std::vector<float> row(2 * f.values().size());
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        row[2 * i] = static_cast<float>(f.values()[i].real());
        row[2 * i + 1] = static_cast<float>(f.values()[i].imag());
    }
    std::fwrite(row.data(), sizeof(float), row.size(), fp.get());
}

SampledField load_field(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_field: cannot open " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, fp.get()) != 4 || std::memcmp(magic, "CLF1", 4) != 0)
        throw std::runtime_error("load_field: bad magic in " + path);
    std::uint32_t n = 0;
    double L = 0;
    std::uint8_t side = 0, kind = 255;
    double params[3];
    std::int32_t ak = 0;
    if (std::fread(&n, sizeof n, 1, fp.get()) != 1 || std::fread(&L, sizeof L, 1, fp.get()) != 1 ||
        std::fread(&side, 1, 1, fp.get()) != 1 || std::fread(&kind, 1, 1, fp.get()) != 1 ||
        std::fread(params, sizeof(double), 3, fp.get()) != 3 ||
        std::fread(&ak, sizeof ak, 1, fp.get()) != 1)
        throw std::runtime_error("load_field: truncated header in " + path);
    GridSpec g(L, static_cast<int>(n));
    SampledField out(g, static_cast<Side>(side));
    std::vector<float> row(2 * g.sample_count());
    if (std::fread(row.data(), sizeof(float), row.size(), fp.get()) != row.size())
        throw std::runtime_error("load_field: truncated samples in " + path);
    for (std::int64_t i = 0; i < g.sample_count(); ++i)
        out.values()[i] = cplx(row[2 * i], row[2 * i + 1]);
    if (kind != 255) {
        FrequencySupport s;
        s.kind = static_cast<FrequencySupport::Kind>(kind);
        s.center = {params[0], params[1]};
        s.radius = params[2];
        s.annulus_k = ak;
        out.declare_support(s);
    }
    return out;
}

SampledField random_bandlimited_field(const GridSpec& g, const FrequencySupport& support,
                                      std::uint64_t seed) {
    if (support.max_abs_freq() > g.nyquist())
        throw std::out_of_range("random_bandlimited_field: support exceeds grid range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    SampledField F(g, Side::frequency);
    const int n = g.points_per_side;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (support.contains(Vec2{g.freq(i), g.freq(j)}))
                F.at(i, j) = std::polar(1.0, phase(rng));
    const double norm = F.l2_norm();
    if (norm > 0.0)
        for (cplx& v : F.values()) v /= norm;
    F.declare_support(support);
    return F;
}

} // namespace curvelab
