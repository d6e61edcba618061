#include "bfk/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bfk {

namespace {

// u^p with the common p=2 case kept branch-stable and cheap.
inline double pow_p(double u, double p) { return p == 2.0 ? u * u : std::pow(u, p); }

void require_same_shape(const ScalarField& a, const ScalarField& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

Fuzziness::Fuzziness(double p) : value(p) {
    if (!(p > 1.0)) throw std::invalid_argument("fuzziness must be > 1");
}

ClassCenters::ClassCenters(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw std::invalid_argument("need at least one class center");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw std::invalid_argument("class centers must be finite and >= 0");
        if (i > 0 && !(values[i] > values[i - 1]))
            throw std::invalid_argument("class centers must be strictly increasing");
    }
}

void apply_min_separation(std::vector<double>& sorted_values) {
    for (std::size_t i = 1; i < sorted_values.size(); ++i)
        if (sorted_values[i] <= sorted_values[i - 1])
            sorted_values[i] = sorted_values[i - 1] + 1e-9;
}

Kernel2D::Kernel2D(int n, std::vector<double> w) : size(n), weights(std::move(w)) {
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("kernel size must be odd and >= 1");
    if (weights.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("kernel weight count does not match size");
    double sum = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) throw std::invalid_argument("kernel weights must be non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("kernel weights must sum to 1");
}

Kernel2D gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("kernel size must be odd and >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel sigma must be positive");
    int h = size / 2;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    double sum = 0.0;
    for (int dy = -h; dy <= h; ++dy)
        for (int dx = -h; dx <= h; ++dx) {
            double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(dy + h) * size + (dx + h)] = v;
            sum += v;
        }
    for (double& v : w) v /= sum;
    return Kernel2D(size, std::move(w));
}

ScalarField convolve_same(const ScalarField& field, const Kernel2D& k) {
    if (field.width < 1 || field.height < 1)
        throw std::invalid_argument("convolution needs a non-empty field");
    ScalarField out(field.width, field.height);
    int h = k.size / 2;
    for (int r = 0; r < field.height; ++r)
        for (int c = 0; c < field.width; ++c) {
            double acc = 0.0;
            for (int dy = -h; dy <= h; ++dy) {
                int rr = std::clamp(r + dy, 0, field.height - 1);
                for (int dx = -h; dx <= h; ++dx) {
                    int cc = std::clamp(c + dx, 0, field.width - 1);
                    acc += k.at(dy, dx) * field.at(rr, cc);
                }
            }
            out.at(r, c) = acc;
        }
    return out;
}

BiasClamp BiasClamp::none() { return {0.0, std::numeric_limits<double>::infinity()}; }

void BiasClamp::validate() const {
    if (!(lo >= 0.0) || !(hi > lo)) throw std::invalid_argument("bias clamp needs 0 <= lo < hi");
}

double evaluate_energy(const ImageGrid& img, const MembershipMap& u,
                       std::span<const double> centers, const ScalarField& bias, Fuzziness p) {
    if (u.classes() != static_cast<int>(centers.size()))
        throw std::invalid_argument("energy: class count mismatch");
    require_same_shape(img.values, bias, "energy");
    if (u.width() != img.width() || u.height() != img.height())
        throw std::invalid_argument("energy: shape mismatch");
    Mask mask = img.effective_mask();
    if (u.max_simplex_error(mask) > 1e-6)
        throw std::invalid_argument("energy: membership violates the simplex constraint");

    double e = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& plane = u.planes[i].data;
        for (std::size_t r = 0; r < mask.on.size(); ++r) {
            if (!mask.on[r]) continue;
            double d = img.values.data[r] - bias.data[r] * centers[i];
            e += pow_p(plane[r], p.value) * d * d;
        }
    }
    return e;
}

double evaluate_energy(const ImageGrid& img, const MembershipMap& u, const ClassCenters& c,
                       const ScalarField& bias, Fuzziness p) {
    return evaluate_energy(img, u, std::span<const double>(c.values), bias, p);
}

MembershipMap update_membership(const ImageGrid& img, const ScalarField& bias,
                                const ClassCenters& c, Fuzziness p) {
    require_same_shape(img.values, bias, "membership update");
    Mask mask = img.effective_mask();
    int nc = c.count();
    MembershipMap u(nc, img.width(), img.height());

    double inv_exp = 1.0 / (p.value - 1.0);
    std::vector<double> d2(nc);
    for (std::size_t r = 0; r < mask.on.size(); ++r) {
        if (!mask.on[r]) {
            u.planes[0].data[r] = 1.0;
            continue;
        }
        int ties = 0;
        for (int i = 0; i < nc; ++i) {
            double d = img.values.data[r] - bias.data[r] * c.values[i];
            d2[i] = d * d;
            if (std::abs(d) < kDegenerateTol) ++ties;
        }
        if (ties > 0) {
            // Pointwise limit of the formula at d -> 0: mass splits equally
            // among the zero-distance classes.
            double share = 1.0 / ties;
            for (int i = 0; i < nc; ++i) {
                double d = img.values.data[r] - bias.data[r] * c.values[i];
                u.planes[i].data[r] = std::abs(d) < kDegenerateTol ? share : 0.0;
            }
            continue;
        }
        if (p.value == 2.0) {
            // Exponent 1/(p-1) is 1; u_i reduces to (1/d_i^2) normalized.
            double s = 0.0;
            for (int j = 0; j < nc; ++j) s += 1.0 / d2[j];
            for (int i = 0; i < nc; ++i) u.planes[i].data[r] = (1.0 / d2[i]) / s;
        } else {
            // Ratio form: the winning class sums terms <= 1, so nothing
            // overflows even for p close to 1.
            for (int i = 0; i < nc; ++i) {
                double s = 0.0;
                for (int j = 0; j < nc; ++j) s += std::pow(d2[i] / d2[j], inv_exp);
                u.planes[i].data[r] = 1.0 / s;
            }
        }
    }
    return u;
}

CenterUpdate update_centers(const ImageGrid& img, const ScalarField& bias,
                            const MembershipMap& u, Fuzziness p, const ClassCenters& prev) {
    require_same_shape(img.values, bias, "center update");
    if (u.classes() != prev.count())
        throw std::invalid_argument("center update: class count mismatch");
    Mask mask = img.effective_mask();
    int nc = prev.count();

    std::vector<double> c(nc);
    for (int i = 0; i < nc; ++i) {
        const auto& plane = u.planes[i].data;
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < mask.on.size(); ++r) {
            if (!mask.on[r]) continue;
            double w = pow_p(plane[r], p.value);
            num += bias.data[r] * img.values.data[r] * w;
            den += bias.data[r] * bias.data[r] * w;
        }
        c[i] = den < kDegenerateTol ? prev.values[i] : num / den;
    }

    // Re-sort ascending, carrying the membership planes along so labels stay
    // attached to their centers.
    std::vector<int> order(nc);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });

    std::vector<double> sorted(nc);
    std::vector<ScalarField> planes;
    planes.reserve(nc);
    for (int i = 0; i < nc; ++i) {
        sorted[i] = c[order[i]];
        planes.push_back(u.planes[order[i]]);
    }
    apply_min_separation(sorted);
    return {ClassCenters(std::move(sorted)), MembershipMap(std::move(planes))};
}

ScalarField update_bias(const ImageGrid& img, const MembershipMap& u, const ClassCenters& c,
                        Fuzziness p, const Kernel2D& k, BiasClamp clamp) {
    if (u.classes() != c.count()) throw std::invalid_argument("bias update: class count mismatch");
    if (u.width() != img.width() || u.height() != img.height())
        throw std::invalid_argument("bias update: shape mismatch");
    clamp.validate();
    Mask mask = img.effective_mask();

    // Zero outside the mask so the background cannot leak into tissue bias
    // through the convolution.
    ScalarField num(img.width(), img.height());
    ScalarField den(img.width(), img.height());
    for (int i = 0; i < c.count(); ++i) {
        const auto& plane = u.planes[i].data;
        double ci = c.values[i];
        for (std::size_t r = 0; r < mask.on.size(); ++r) {
            if (!mask.on[r]) continue;
            double w = pow_p(plane[r], p.value);
            num.data[r] += ci * img.values.data[r] * w;
            den.data[r] += ci * ci * w;
        }
    }

    ScalarField num_s = convolve_same(num, k);
    ScalarField den_s = convolve_same(den, k);

    ScalarField b(img.width(), img.height(), 1.0);
    for (std::size_t r = 0; r < mask.on.size(); ++r) {
        if (!mask.on[r]) continue;
        if (den_s.data[r] < kDegenerateTol) continue;  // keep b = 1
        b.data[r] = std::clamp(num_s.data[r] / den_s.data[r], clamp.lo, clamp.hi);
    }
    return b;
}

}  // namespace bfk
