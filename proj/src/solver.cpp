#include "bfk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bfk {

void SolverConfig::validate() const {
    if (n_classes < 1) throw std::invalid_argument("n_classes must be >= 1");
    if (!(fuzziness > 1.0)) throw std::invalid_argument("fuzziness must be > 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("kernel_size must be odd and >= 1");
    if (kernel_sigma < 0.0) throw std::invalid_argument("kernel_sigma must be positive (or 0 for auto)");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    BiasClamp{clamp_lo, clamp_hi}.validate();
}

SolverState initialize(const ImageGrid& img, const SolverConfig& cfg) {
    cfg.validate();
    img.validate();
    Mask mask = img.effective_mask();
    std::size_t n = mask.count();
    if (n == 0) throw EmptyMaskError("image has no masked pixels");

    std::vector<double> vals;
    vals.reserve(n);
    for (std::size_t r = 0; r < mask.on.size(); ++r)
        if (mask.on[r]) vals.push_back(img.values.data[r]);
    std::sort(vals.begin(), vals.end());

    // Empirical quantiles at levels (i+0.5)/n_classes: sorted[floor(q*n)].
    std::vector<double> centers(cfg.n_classes);
    for (int i = 0; i < cfg.n_classes; ++i) {
        double q = (i + 0.5) / cfg.n_classes;
        auto idx = std::min(static_cast<std::size_t>(q * static_cast<double>(n)), n - 1);
        centers[i] = vals[idx];
    }
    apply_min_separation(centers);

    SolverState s;
    s.iteration = 0;
    s.bias = ScalarField(img.width(), img.height(), 1.0);
    s.centers = ClassCenters(std::move(centers));
    s.membership = update_membership(img, s.bias, s.centers, Fuzziness(cfg.fuzziness));
    s.energy_trace.push_back(
        evaluate_energy(img, s.membership, s.centers, s.bias, Fuzziness(cfg.fuzziness)));
    return s;
}

SolverState step(const ImageGrid& img, const SolverState& s, const SolverConfig& cfg) {
    Fuzziness p(cfg.fuzziness);
    Kernel2D k = gaussian_kernel(cfg.kernel_size, cfg.resolved_sigma());
    BiasClamp clamp{cfg.clamp_lo, cfg.clamp_hi};
    Mask mask = img.effective_mask();

    // Centers, membership, centers again, then the smoothed bias.
    CenterUpdate cu = update_centers(img, s.bias, s.membership, p, s.centers);
    MembershipMap u = update_membership(img, s.bias, cu.centers, p);
    CenterUpdate cu2 = update_centers(img, s.bias, u, p, cu.centers);
    ScalarField b = update_bias(img, cu2.membership, cu2.centers, p, k, clamp);

    SolverState next;
    next.iteration = s.iteration + 1;
    next.membership = std::move(cu2.membership);
    next.centers = std::move(cu2.centers);
    next.energy_trace = s.energy_trace;
    next.bias_change_trace = s.bias_change_trace;

    double change = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < mask.on.size(); ++r) {
        if (!mask.on[r]) continue;
        double d = b.data[r] - s.bias.data[r];
        change += d * d;
        ++n;
    }
    next.bias = std::move(b);
    next.bias_change_trace.push_back(n > 0 ? change / static_cast<double>(n) : 0.0);
    next.energy_trace.push_back(evaluate_energy(img, next.membership, next.centers, next.bias, p));
    return next;
}

CorrectionResult fit(const ImageGrid& img, const SolverConfig& cfg,
                     std::vector<TraceRow>* trace) {
    SolverState s = initialize(img, cfg);
    Mask mask = img.effective_mask();
    if (trace)
        trace->push_back({0, s.energy_trace.back(), std::numeric_limits<double>::quiet_NaN(),
                          s.centers.values});

    bool converged = false;
    while (s.iteration < cfg.max_iters) {
        s = step(img, s, cfg);
        if (trace)
            trace->push_back(
                {s.iteration, s.energy_trace.back(), s.bias_change_trace.back(), s.centers.values});
        if (s.bias_change_trace.back() < cfg.epsilon) {
            converged = true;
            break;
        }
    }

    auto [bias, centers] = normalize_bias(s.bias, s.centers, mask);

    ScalarField corrected(img.width(), img.height());
    for (std::size_t r = 0; r < mask.on.size(); ++r)
        corrected.data[r] = mask.on[r] ? img.values.data[r] / std::max(bias.data[r], 1e-6)
                                       : img.values.data[r];

    CorrectionResult res;
    res.corrected = std::move(corrected);
    res.bias = std::move(bias);
    res.membership = std::move(s.membership);
    res.centers = std::move(centers);
    res.converged = converged;
    res.iterations = s.iteration;
    res.final_energy = s.energy_trace.back();
    return res;
}

std::pair<ScalarField, ClassCenters> normalize_bias(const ScalarField& bias,
                                                    const ClassCenters& c, const Mask& mask) {
    if (bias.width != mask.width || bias.height != mask.height)
        throw std::invalid_argument("normalize_bias: shape mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < mask.on.size(); ++r) {
        if (!mask.on[r]) continue;
        sum += bias.data[r];
        ++n;
    }
    if (n == 0) throw EmptyMaskError("normalize_bias: empty mask");
    double mu = sum / static_cast<double>(n);
    if (!(mu > 0.0)) throw std::invalid_argument("normalize_bias: non-positive mask mean");

    ScalarField out(bias.width, bias.height, 1.0);
    for (std::size_t r = 0; r < mask.on.size(); ++r)
        if (mask.on[r]) out.data[r] = bias.data[r] / mu;

    std::vector<double> scaled = c.values;
    for (double& v : scaled) v *= mu;
    return {std::move(out), ClassCenters(std::move(scaled))};
}

double seg_residual(const MembershipMap& u_new, const MembershipMap& u_old, const Mask& mask) {
    if (u_new.classes() != u_old.classes() || u_new.width() != u_old.width() ||
        u_new.height() != u_old.height())
        throw std::invalid_argument("seg_residual: shape mismatch");
    if (u_new.width() != mask.width || u_new.height() != mask.height)
        throw std::invalid_argument("seg_residual: mask shape mismatch");
    double s = 0.0;
    for (int i = 0; i < u_new.classes(); ++i)
        for (std::size_t r = 0; r < mask.on.size(); ++r) {
            if (!mask.on[r]) continue;
            double d = u_new.planes[i].data[r] - u_old.planes[i].data[r];
            s += d * d;
        }
    return s;
}

double bias_residual(const ScalarField& b_new, const ScalarField& b_old, const Mask& mask) {
    if (!b_new.same_shape(b_old) || b_new.width != mask.width || b_new.height != mask.height)
        throw std::invalid_argument("bias_residual: shape mismatch");
    double s = 0.0;
    for (std::size_t r = 0; r < mask.on.size(); ++r) {
        if (!mask.on[r]) continue;
        double d = b_new.data[r] - b_old.data[r];
        s += d * d;
    }
    return s;
}

}  // namespace bfk
