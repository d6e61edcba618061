#include "bfk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfk/rng.hpp"

namespace bfk {

void BiasSynthSpec::validate() const {
    if (legendre_degree < 0 || trig_degree < 0)
        throw std::invalid_argument("polynomial degrees must be >= 0");
    if (!(weight_lo <= weight_hi)) throw std::invalid_argument("weight range must be ordered");
    if (!(rescale_lo > 0.0) || !(rescale_lo <= rescale_hi))
        throw std::invalid_argument("rescale range needs 0 < lo <= hi");
}

double legendre(int n, double x) {
    if (n < 0) throw std::invalid_argument("legendre degree must be >= 0");
    if (x < -1.0 || x > 1.0) throw std::invalid_argument("legendre argument must lie in [-1,1]");
    if (n == 0) return 1.0;
    double pk_1 = 1.0;  // P_{k-1}
    double pk = x;      // P_k
    for (int k = 1; k < n; ++k) {
        double pk1 = ((2 * k + 1) * x * pk - k * pk_1) / (k + 1);
        pk_1 = pk;
        pk = pk1;
    }
    return pk;
}

ScalarField synth_bias(int width, int height, const BiasSynthSpec& spec) {
    spec.validate();
    if (width < 1 || height < 1) throw std::invalid_argument("field dimensions must be >= 1");

    // Fixed draw order: Legendre weights in (i,j) lexicographic order, then
    // trigonometric weights in (l,k) lexicographic order.
    Rng rng(spec.seed);
    std::vector<double> wl, wt;
    for (int i = 0; i <= spec.legendre_degree; ++i)
        for (int j = 0; j <= spec.legendre_degree - i; ++j)
            wl.push_back(rng.uniform(spec.weight_lo, spec.weight_hi));
    for (int l = 0; l <= spec.trig_degree; ++l)
        for (int k = 0; k <= l; ++k) wt.push_back(rng.uniform(spec.weight_lo, spec.weight_hi));

    ScalarField raw(width, height);
    for (int r = 0; r < height; ++r) {
        double yh = 2.0 * (r + 0.5) / height - 1.0;
        double yt = (r + 0.5) / height;
        for (int c = 0; c < width; ++c) {
            double xh = 2.0 * (c + 0.5) / width - 1.0;
            double xt = (c + 0.5) / width;
            double acc = 0.0;
            std::size_t t = 0;
            for (int i = 0; i <= spec.legendre_degree; ++i)
                for (int j = 0; j <= spec.legendre_degree - i; ++j)
                    acc += wl[t++] * legendre(i, xh) * legendre(j, yh);
            t = 0;
            for (int l = 0; l <= spec.trig_degree; ++l)
                for (int k = 0; k <= l; ++k)
                    acc += wt[t++] * std::sin(std::pow(xt, k) * std::pow(yt, l - k));
            raw.at(r, c) = acc;
        }
    }
    return rescale_to_range(raw, spec.rescale_lo, spec.rescale_hi);
}

ScalarField rescale_to_range(const ScalarField& field, double lo, double hi) {
    field.validate();
    if (!(lo <= hi)) throw std::invalid_argument("rescale range must be ordered");
    if (field.size() == 0) return field;

    double mn = field.data[0], mx = field.data[0];
    for (double v : field.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }

    ScalarField out(field.width, field.height);
    if (mx == mn) {
        std::fill(out.data.begin(), out.data.end(), (lo + hi) / 2.0);
        return out;
    }
    for (std::size_t i = 0; i < field.size(); ++i) {
        double t = (field.data[i] - mn) / (mx - mn);
        // lo*(1-t) + hi*t hits the endpoints exactly at t = 0 and t = 1; the
        // clamp removes any rounding spill in between.
        out.data[i] = std::clamp(lo * (1.0 - t) + hi * t, lo, hi);
    }
    return out;
}

void PhantomSpec::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("phantom dimensions must be >= 1");
    if (n_classes < 1) throw std::invalid_argument("phantom needs at least one class");
    if (static_cast<int>(class_intensities.size()) != n_classes)
        throw std::invalid_argument("class_intensities length must equal n_classes");
    for (std::size_t i = 0; i < class_intensities.size(); ++i) {
        double v = class_intensities[i];
        if (!(v > 0.0) || v > 1.0)
            throw std::invalid_argument("class intensities must lie in (0,1]");
        if (i > 0 && !(v > class_intensities[i - 1]))
            throw std::invalid_argument("class intensities must be strictly increasing");
    }
    if (geometry == PhantomGeometry::kVoronoiCells && voronoi_sites < n_classes)
        throw std::invalid_argument("voronoi geometry needs at least n_classes sites");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
}

Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    ScalarField img(spec.width, spec.height, 0.0);
    LabelField labels;
    labels.width = spec.width;
    labels.height = spec.height;
    labels.ids.assign(img.size(), kBackgroundLabel);

    Rng rng(spec.seed);
    if (spec.geometry == PhantomGeometry::kConcentricDisks) {
        // Equal-area rings: ring index covers (radius/R)^2 in [k/N, (k+1)/N),
        // so every class holds the same mass and the quantile initializer
        // lands inside each class. Classes descend outward (brightest at the
        // center): the least-separated intensities sit where smooth bias
        // fields are flattest, like the bright white-matter core of a T1
        // slice.
        double cx = spec.width / 2.0, cy = spec.height / 2.0;
        double radius = 0.45 * std::min(spec.width, spec.height);
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c) {
                double dx = (c + 0.5) - cx, dy = (r + 0.5) - cy;
                double q = (dx * dx + dy * dy) / (radius * radius);
                if (q >= 1.0) continue;
                int ring = std::min(static_cast<int>(q * spec.n_classes), spec.n_classes - 1);
                int k = spec.n_classes - 1 - ring;
                img.at(r, c) = spec.class_intensities[k];
                labels.ids[static_cast<std::size_t>(r) * spec.width + c] =
                    static_cast<std::uint8_t>(k);
            }
    } else {
        // Site coordinates drawn x then y per site; nearest site wins, ties
        // go to the lowest site index.
        std::vector<double> sx(spec.voronoi_sites), sy(spec.voronoi_sites);
        for (int s = 0; s < spec.voronoi_sites; ++s) {
            sx[s] = rng.uniform(0.0, spec.width);
            sy[s] = rng.uniform(0.0, spec.height);
        }
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c) {
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (int s = 0; s < spec.voronoi_sites; ++s) {
                    double dx = (c + 0.5) - sx[s], dy = (r + 0.5) - sy[s];
                    double d = dx * dx + dy * dy;
                    if (d < best_d) {
                        best_d = d;
                        best = s;
                    }
                }
                int k = best % spec.n_classes;
                img.at(r, c) = spec.class_intensities[k];
                labels.ids[static_cast<std::size_t>(r) * spec.width + c] =
                    static_cast<std::uint8_t>(k);
            }
    }

    if (spec.noise_sigma > 0.0) {
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (labels.ids[i] == kBackgroundLabel) continue;
            img.data[i] = std::max(0.0, img.data[i] + rng.gaussian(spec.noise_sigma));
        }
    }
    return {ImageGrid(std::move(img)), std::move(labels)};
}

ImageGrid apply_bias(const ImageGrid& clean, const ScalarField& bias, double noise_sigma,
                     std::uint64_t seed) {
    if (!clean.values.same_shape(bias)) throw std::invalid_argument("apply_bias: shape mismatch");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");

    ScalarField out(clean.width(), clean.height());
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = clean.values.data[i] * bias.data[i];
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        for (double& v : out.data) v = std::max(0.0, v + rng.gaussian(noise_sigma));
    }
    return ImageGrid(std::move(out), clean.effective_mask());
}

}  // namespace bfk
