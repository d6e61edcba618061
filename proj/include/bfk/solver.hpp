#ifndef BFK_SOLVER_HPP
#define BFK_SOLVER_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bfk/energy.hpp"
#include "bfk/field.hpp"

namespace bfk {

struct EmptyMaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    int n_classes = 4;
    double fuzziness = 2.0;
    int kernel_size = 5;
    double kernel_sigma = 0.0;  // 0 = auto (kernel_size / 3)
    int max_iters = 200;
    double epsilon = 1e-6;
    double clamp_lo = 0.2;
    double clamp_hi = 2.5;
    std::uint64_t seed = 0;  // bookkeeping only; the solver itself is deterministic

    double resolved_sigma() const { return kernel_sigma > 0 ? kernel_sigma : kernel_size / 3.0; }
    void validate() const;  // throws std::invalid_argument
};

struct SolverState {
    int iteration = 0;
    MembershipMap membership;
    ClassCenters centers;
    ScalarField bias;
    std::vector<double> energy_trace;       // energy at init, then after each step
    std::vector<double> bias_change_trace;  // mean squared bias change per step
};

struct CorrectionResult {
    ScalarField corrected;  // I / b on the mask, I elsewhere
    ScalarField bias;       // mean-normalized, 1 off the mask
    MembershipMap membership;
    ClassCenters centers;
    bool converged = false;
    int iterations = 0;
    double final_energy = 0.0;
};

// b0 = 1 everywhere (the binary foreground indicator on the mask), centers
// from evenly spaced empirical quantiles of the masked intensities (levels
// (i+0.5)/n, ties separated by 1e-9), u0 from one membership update.
// Throws EmptyMaskError when nothing is masked.
SolverState initialize(const ImageGrid& img, const SolverConfig& cfg);

// One alternation sweep: centers, membership, centers again, then the
// smoothed bias; appends the new energy and the mean squared bias change.
SolverState step(const ImageGrid& img, const SolverState& s, const SolverConfig& cfg);

// One line of the optional per-iteration trace emitted by fit. Row 0 records
// the initialization (its bias change is NaN).
struct TraceRow {
    int iteration = 0;
    double energy = 0.0;
    double bias_ms_change = 0.0;
    std::vector<double> centers;
};

// Runs initialize then step until the mean squared bias change drops below
// epsilon or max_iters is reached. The output bias is mean-normalized and the
// corrected image is I / max(b, 1e-6) on the mask.
CorrectionResult fit(const ImageGrid& img, const SolverConfig& cfg,
                     std::vector<TraceRow>* trace = nullptr);

// Resolves the multiplicative scale ambiguity between bias and centers:
// divides the masked bias by its mask mean mu (off-mask pixels stay 1) and
// multiplies the centers by mu. The energy is invariant under this rescaling.
std::pair<ScalarField, ClassCenters> normalize_bias(const ScalarField& bias,
                                                    const ClassCenters& c, const Mask& mask);

// Squared-difference residuals between consecutive iterates, summed over the
// mask. Diagnostics, and the seam where a learned predictor would plug in.
double seg_residual(const MembershipMap& u_new, const MembershipMap& u_old, const Mask& mask);
double bias_residual(const ScalarField& b_new, const ScalarField& b_old, const Mask& mask);

}  // namespace bfk

#endif
