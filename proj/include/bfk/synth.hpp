#ifndef BFK_SYNTH_HPP
#define BFK_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "bfk/field.hpp"

namespace bfk {

// Smooth random surface: a triangular Legendre expansion plus a few
// trigonometric cross terms, rescaled into [rescale_lo, rescale_hi].
struct BiasSynthSpec {
    int legendre_degree = 15;
    int trig_degree = 2;
    double weight_lo = -20.0;
    double weight_hi = 20.0;
    double rescale_lo = 0.8;  // low level; (0.3, 1.7) is the high-level preset
    double rescale_hi = 1.2;
    std::uint64_t seed = 0;

    void validate() const;
};

// Legendre polynomial P_n(x) by the Bonnet recurrence
// (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}. Requires x in [-1,1].
double legendre(int n, double x);

// raw(x,y) = sum_{i=0}^{L}   sum_{j=0}^{L-i} w_ij P_i(xh) P_j(yh)
//          + sum_{l=0}^{Lt}  sum_{k=0}^{l}   w_lk sin(xt^k yt^(l-k))
// evaluated at pixel centers, xh,yh mapped linearly to [-1,1] and xt,yt to
// [0,1], then rescaled into the requested range. Weights are i.i.d. uniform
// on [weight_lo, weight_hi] drawn from mt19937_64(seed) in a fixed order:
// Legendre weights in (i,j) lexicographic order first, then trigonometric
// weights in (l,k) lexicographic order. Same spec, same bits.
ScalarField synth_bias(int width, int height, const BiasSynthSpec& spec);

// Affine map sending [min,max] onto [lo,hi]; a constant field maps to the
// midpoint. Outputs are clamped so they lie in [lo,hi] exactly.
ScalarField rescale_to_range(const ScalarField& field, double lo, double hi);

enum class PhantomGeometry { kConcentricDisks, kVoronoiCells };

struct PhantomSpec {
    int width = 128;
    int height = 128;
    int n_classes = 4;
    std::vector<double> class_intensities = {0.25, 0.5, 0.75, 1.0};  // ascending, in (0,1]
    PhantomGeometry geometry = PhantomGeometry::kConcentricDisks;
    int voronoi_sites = 0;  // used by kVoronoiCells only; must be >= n_classes
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Phantom {
    ImageGrid image;
    LabelField labels;  // class ids, kBackgroundLabel outside the phantom
};

// Piecewise-constant ground-truth image plus its label map. Concentric disks
// use equal-area rings inside radius 0.45*min(w,h), brightest class at the
// center and descending outward; Voronoi cells label each pixel by nearest
// site mod n_classes. Gaussian noise (sd noise_sigma, clamped at 0) is added
// to foreground pixels only, so the zero background survives a file round
// trip.
Phantom make_phantom(const PhantomSpec& spec);

// I(r) = clean(r) * b(r) + n(r) with n ~ Gaussian(0, noise_sigma^2) drawn in
// row-major order, clamped to >= 0. The mask is inherited from clean.
ImageGrid apply_bias(const ImageGrid& clean, const ScalarField& bias, double noise_sigma,
                     std::uint64_t seed);

}  // namespace bfk

#endif
