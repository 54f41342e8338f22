#pragma once

// Tile lattices at scale R, the tight packet frame, tube geometry of the
// evolved packets, and the recentered frame used inside sub-balls.
//
// Frame normalization. The analysis/synthesis windows
//   what_{theta,nu}(xi) = (sqrt(R)/(2pi)^2) e^{-i c(nu).xi}
//                         prod_j phihat((xi_j - c(theta)_j) * sqrt(R))
// form an exact Parseval frame on the discrete torus whenever the box side is
// an integer multiple of sqrt(R): sum |<f, w>|^2 = ||f||^2 and
// f = sum <f, w> w, both to rounding error. A Gabor family on this lattice
// cannot be Parseval with unit-norm elements (its phase-space redundancy is
// (2pi)^2), so the unit-norm packet returned by packet_function is
// 2pi * window, and coefficients are taken against the window.

#include <cstdint>
#include <vector>

#include "curvelab/propagator.hpp"
#include "curvelab/vec3.hpp"

namespace curvelab {

struct Tile {
    Vec2 theta{0.0, 0.0};  // frequency cube center, cube side 1/sqrt(R)
    Vec2 nu{0.0, 0.0};     // physical cube center, lattice spacing sqrt(R)
    double R = 4.0;

    double freq_side() const { return 1.0 / std::sqrt(R); }
    Vec3 direction() const { return {-2.0 * theta.x, -2.0 * theta.y, 1.0}; }  // G(theta)
};

struct TileLattice {
    double R = 4.0;
    double box_side = 0.0;  // must be an integer multiple of sqrt(R)
    FrequencySupport support;
    std::vector<Vec2> thetas;  // cube centers on the (1/sqrt(R))-lattice
    std::vector<Vec2> nus;     // cube centers on the sqrt(R)-lattice
    int nu_per_side = 0;

    std::size_t tile_count() const { return thetas.size() * nus.size(); }
    Tile tile(std::size_t i_theta, std::size_t i_nu) const {
        return Tile{thetas[i_theta], nus[i_nu], R};
    }
};

// Grid sized for packet work at scale R: box side 64*sqrt(R) (so the
// nu-lattice divides the box and packet translates are exact grid shifts),
// N chosen to keep |xi| <= xi_max representable.
GridSpec packet_grid(double R, double xi_max = 1.5);

// Pure lattice geometry; grids are validated where fields enter
// (packet_function / decompose need frequency spacing <= 1/sqrt(R)).
TileLattice build_tile_lattice(double R, const FrequencySupport& support, double box_side);

// Unit-L2-norm packet on the given grid, frequency side, support declared.
SampledField packet_function(const Tile& tile, const GridSpec& grid);

struct PacketCoefficient {
    std::uint32_t i_theta = 0;
    std::uint32_t i_nu = 0;
    cplx value{0.0, 0.0};
};

struct Decomposition {
    const TileLattice* lattice = nullptr;
    GridSpec grid;
    std::vector<PacketCoefficient> coeffs;
    double coefficient_energy() const;  // sum |value|^2
};

// Frame coefficients <f, w_{theta,nu}>; sum of squares equals ||f||_2^2.
Decomposition decompose(const SampledField& f, const TileLattice& lat);

// Synthesis sum_c value * w_tile; exact inverse of decompose on a full
// lattice, partial sum on a partial one.
SampledField reconstruct(const TileLattice& lat, const std::vector<PacketCoefficient>& coeffs,
                         const GridSpec& grid);

struct Tube {
    Tile tile;
    double delta = 0.1;
    double halfwidth = 0.0;  // R^{1/2+delta}

    Vec2 core_at(double t) const { return tile.nu - tile.theta * (2.0 * t); }
    bool contains(Vec2 x, double t) const {
        return t >= 0.0 && t <= tile.R && (x - core_at(t)).norm() <= halfwidth;
    }
    Vec3 direction() const { return tile.direction(); }
};

Tube tube_of(const Tile& tile, double delta);

struct TubeMassReport {
    double fraction = 0.0;       // in-tube share of the weighted space-time mass
    double fraction_dilated2 = 0.0;  // same against the 2x-dilated tube
    double fraction_dilated6 = 0.0;  // same against the 6x-dilated tube
    double sup_outside = 0.0;    // sup |psi| outside the 2x-dilated tube
    double sup_bound = 0.0;      // reference scale R^{-1/2}
    double total_mass = 0.0;
};

// Mass localization of the evolved packet against its tube, psi2-weighted.
// Quadrature is a direct separable evaluation of the oscillatory integral
// over the packet's compact frequency support (no periodization).
TubeMassReport tube_mass_fraction(const Tile& tile, const CurveParams& curve, double delta,
                                  double eps = 0.1, int time_samples = 192);

// Value of the evolved unit-norm packet at one space-time point (separable
// direct quadrature; matches evolve() of packet_function on a grid).
cplx evolved_packet_value(const Tile& tile, const CurveParams& curve, Vec2 x, double t);

struct RecenteredBasis {
    Vec3 center{0.0, 0.0, 0.0};  // (x0, t0)
    double rho = 4.0;
    TileLattice lattice;
    CurveParams curve;

    // Modulation phase applied to each window: exp(-i x0.xi + i sqrt(t0)
    // mu.xi - i t0 |xi|^2).
    cplx modulation(Vec2 xi) const;
};

RecenteredBasis recenter_packets(Vec3 center, double rho, const CurveParams& curve,
                                 double box_side, const FrequencySupport& support);

// Coefficients against the modulated windows; same Parseval identity.
Decomposition decompose_recentered(const SampledField& f, const RecenteredBasis& basis);
SampledField reconstruct_recentered(const RecenteredBasis& basis,
                                    const std::vector<PacketCoefficient>& coeffs,
                                    const GridSpec& grid);

// Value of the evolved recentered packet (child scale rho around (x0,t0)).
cplx evolved_recentered_packet_value(const RecenteredBasis& basis, const Tile& tile, Vec2 x,
                                     double t);

// Eq-(5.7)/(5.8) predicate: the child (scale rho, nu relative to x0)
// contributes to the parent's recentered expansion.
bool packet_compatibility(const Tile& parent, const Tile& child, Vec3 center, double delta);

} // namespace curvelab
