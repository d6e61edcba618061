#include "bfk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

#include "bfk/energy.hpp"

namespace bfk {

namespace {

Mask mask_intersection(const ImageGrid& a, const ImageGrid& b) {
    Mask ma = a.effective_mask();
    Mask mb = b.effective_mask();
    Mask m(ma.width, ma.height);
    for (std::size_t i = 0; i < m.on.size(); ++i) m.on[i] = ma.on[i] && mb.on[i];
    return m;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b) {
    if (!a.values.same_shape(b.values)) throw std::invalid_argument("metric: shape mismatch");
}

}  // namespace

double coefficient_of_variation(const ImageGrid& img, const Mask& class_mask) {
    if (img.width() != class_mask.width || img.height() != class_mask.height)
        throw std::invalid_argument("cv: mask shape mismatch");
    double sum = 0.0, lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < class_mask.on.size(); ++i) {
        if (!class_mask.on[i]) continue;
        double v = img.values.data[i];
        sum += v;
        lo = n == 0 ? v : std::min(lo, v);
        hi = n == 0 ? v : std::max(hi, v);
        ++n;
    }
    if (n < 2) throw std::invalid_argument("cv: region needs at least two pixels");
    double mean = sum / static_cast<double>(n);
    if (!(mean > 0.0)) throw std::invalid_argument("cv: region mean must be positive");
    if (lo == hi) return 0.0;  // constant region, exactly zero variance

    double ss = 0.0;
    for (std::size_t i = 0; i < class_mask.on.size(); ++i) {
        if (!class_mask.on[i]) continue;
        double d = img.values.data[i] - mean;
        ss += d * d;
    }
    // Population standard deviation: the region is the whole tissue in-slice.
    double sd = std::sqrt(ss / static_cast<double>(n));
    return 100.0 * sd / mean;
}

double psnr(const ImageGrid& reference, const ImageGrid& test, double peak) {
    require_same_shape(reference, test);
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    Mask m = mask_intersection(reference, test);
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.on.size(); ++i) {
        if (!m.on[i]) continue;
        double d = reference.values.data[i] - test.values.data[i];
        se += d * d;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("psnr: empty mask intersection");
    double mse = se / static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImageGrid& reference, const ImageGrid& test) {
    require_same_shape(reference, test);
    for (double v : reference.values.data)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("ssim: values outside [0,1]");
    for (double v : test.values.data)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("ssim: values outside [0,1]");

    constexpr double kC1 = 0.01 * 0.01;  // (0.01 L)^2, L = 1
    constexpr double kC2 = 0.03 * 0.03;
    Kernel2D win = gaussian_kernel(11, 1.5);
    int h = win.size / 2;

    Mask m = mask_intersection(reference, test);
    int width = reference.width(), height = reference.height();
    double total = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            if (!m.at(r, c)) continue;
            double mx = 0, my = 0, ex2 = 0, ey2 = 0, exy = 0;
            for (int dy = -h; dy <= h; ++dy) {
                int rr = std::clamp(r + dy, 0, height - 1);
                for (int dx = -h; dx <= h; ++dx) {
                    int cc = std::clamp(c + dx, 0, width - 1);
                    double w = win.at(dy, dx);
                    double x = reference.values.at(rr, cc);
                    double y = test.values.at(rr, cc);
                    mx += w * x;
                    my += w * y;
                    ex2 += w * (x * x);
                    ey2 += w * (y * y);
                    exy += w * (x * y);
                }
            }
            double vx = ex2 - mx * mx;
            double vy = ey2 - my * my;
            double cxy = exy - mx * my;
            double local = ((2.0 * (mx * my) + kC1) * (2.0 * cxy + kC2)) /
                           ((mx * mx + my * my + kC1) * (vx + vy + kC2));
            total += local;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("ssim: empty mask intersection");
    return total / static_cast<double>(n);
}

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string MetricReport::csv_header() const {
    std::string s;
    for (const auto& [k, cv] : per_class_cv) s += "class_cv_" + std::to_string(k) + ",";
    return s + "ssim,psnr_db,n_pixels";
}

std::string MetricReport::csv_row() const {
    std::string s;
    for (const auto& [k, cv] : per_class_cv) s += format_g9(cv) + ",";
    return s + format_g9(ssim) + "," + format_g9(psnr_db) + "," + std::to_string(n_pixels);
}

std::string MetricReport::to_json() const {
    std::string s = "{";
    for (const auto& [k, cv] : per_class_cv)
        s += "\"class_cv_" + std::to_string(k) + "\": " + format_g9(cv) + ", ";
    auto num = [](double v) {
        return std::isinf(v) ? std::string("\"inf\"") : format_g9(v);
    };
    s += "\"ssim\": " + num(ssim) + ", ";
    s += "\"psnr_db\": " + num(psnr_db) + ", ";
    s += "\"n_pixels\": " + std::to_string(n_pixels) + "}";
    return s;
}

MetricReport evaluate_report(const ImageGrid& clean, const ImageGrid& test,
                             const LabelField& labels) {
    require_same_shape(clean, test);
    if (labels.width != clean.width() || labels.height != clean.height())
        throw std::invalid_argument("metric: label shape mismatch");

    std::set<std::uint8_t> classes;
    for (auto id : labels.ids)
        if (id != kBackgroundLabel) classes.insert(id);

    MetricReport rep;
    for (auto k : classes) {
        Mask region(labels.width, labels.height);
        for (std::size_t i = 0; i < labels.ids.size(); ++i) region.on[i] = labels.ids[i] == k;
        rep.per_class_cv.emplace_back(k, coefficient_of_variation(test, region));
    }
    rep.ssim = ssim(clean, test);
    rep.psnr_db = psnr(clean, test, 1.0);
    rep.n_pixels = mask_intersection(clean, test).count();
    return rep;
}

}  // namespace bfk
