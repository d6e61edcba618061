#ifndef BFK_ENERGY_HPP
#define BFK_ENERGY_HPP

#include <span>
#include <vector>

#include "bfk/field.hpp"

namespace bfk {

// Distances, membership totals and smoothed denominators below this are
// treated as degenerate (zero for all practical purposes).
inline constexpr double kDegenerateTol = 1e-12;

// Membership exponent p. Values approach a hard assignment as p -> 1+ and a
// uniform one as p grows; the update formulas divide by p-1, so p > 1.
struct Fuzziness {
    explicit Fuzziness(double p);
    double value;
};

// Class centers, kept sorted ascending and pairwise distinct so results are
// label-permutation free. Default-constructed centers are empty placeholders;
// the validating constructor is the only way to populate them.
struct ClassCenters {
    ClassCenters() = default;
    explicit ClassCenters(std::vector<double> v);
    std::vector<double> values;
    int count() const { return static_cast<int>(values.size()); }
};

// Nudges ties in an ascending sequence upward by 1e-9 steps so it becomes
// strictly increasing. Input must already be sorted.
void apply_min_separation(std::vector<double>& sorted_values);

// Normalized non-negative n x n filter, n odd; symmetric under 90-degree
// rotation and reflection.
struct Kernel2D {
    Kernel2D(int n, std::vector<double> w);
    int size;
    std::vector<double> weights;
    double at(int dy, int dx) const {
        int h = size / 2;
        return weights[static_cast<std::size_t>(dy + h) * size + (dx + h)];
    }
};

// Sampled Gaussian exp(-(dx^2+dy^2)/(2 sigma^2)) at integer offsets from the
// center, normalized to sum 1.
Kernel2D gaussian_kernel(int size, double sigma);

// Same-size convolution with clamp-to-edge boundary handling. Kernels here
// are symmetric, so correlation and convolution coincide.
ScalarField convolve_same(const ScalarField& field, const Kernel2D& k);

// Lower/upper bounds applied to the smoothed bias. none() disables clamping.
struct BiasClamp {
    double lo = 0.2;
    double hi = 2.5;
    static BiasClamp none();
    void validate() const;  // 0 <= lo < hi
};

// Clustering energy sum_i sum_{r in mask} u_i(r)^p (I(r) - b(r) c_i)^2.
// Throws on shape mismatch or if the membership violates the simplex
// constraint by more than 1e-6 at any masked pixel.
double evaluate_energy(const ImageGrid& img, const MembershipMap& u,
                       std::span<const double> centers, const ScalarField& bias, Fuzziness p);
double evaluate_energy(const ImageGrid& img, const MembershipMap& u, const ClassCenters& c,
                       const ScalarField& bias, Fuzziness p);

// Minimizer of the energy in u for fixed centers and bias:
//   u_i(r) = 1 / sum_j (d_i^2(r)/d_j^2(r))^(1/(p-1)),  d_i(r) = |I(r) - b(r) c_i|.
// Pixels where some d_i < 1e-12 split probability 1 equally among the tied
// classes; unmasked pixels are assigned to plane 0.
MembershipMap update_membership(const ImageGrid& img, const ScalarField& bias,
                                const ClassCenters& c, Fuzziness p);

struct CenterUpdate {
    ClassCenters centers;
    MembershipMap membership;  // planes permuted to match the sorted centers
};

// Minimizer of the energy in the centers for fixed u and bias:
//   c_i = sum_r b I u_i^p / sum_r b^2 u_i^p   over masked pixels.
// A class whose denominator degenerates keeps prev[i]. The result is
// re-sorted ascending and the membership planes are permuted along with it.
CenterUpdate update_centers(const ImageGrid& img, const ScalarField& bias,
                            const MembershipMap& u, Fuzziness p, const ClassCenters& prev);

// Smoothed bias update
//   b = [K * sum_i c_i I u_i^p] / [K * sum_i c_i^2 u_i^p]
// with numerator and denominator zeroed outside the mask before convolution,
// the ratio taken pixelwise afterwards, then clamped. Pixels with a
// degenerate smoothed denominator, and all unmasked pixels, get b = 1.
ScalarField update_bias(const ImageGrid& img, const MembershipMap& u, const ClassCenters& c,
                        Fuzziness p, const Kernel2D& k, BiasClamp clamp);

}  // namespace bfk

#endif
