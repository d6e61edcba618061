#ifndef BFK_METRICS_HPP
#define BFK_METRICS_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bfk/field.hpp"

namespace bfk {

// 100 * (population standard deviation / mean) over the selected pixels.
// Requires at least two pixels and a positive mean.
double coefficient_of_variation(const ImageGrid& img, const Mask& class_mask);

// 10 log10(peak^2 / MSE) over the intersection of both foreground masks.
// Zero MSE returns +infinity.
double psnr(const ImageGrid& reference, const ImageGrid& test, double peak = 1.0);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01 L)^2,
// C2=(0.03 L)^2 with L=1. Windows are centered on masked pixels (mask
// intersection); window contents use raw values with clamp-to-edge sampling.
// Both images must lie in [0,1].
double ssim(const ImageGrid& reference, const ImageGrid& test);

struct MetricReport {
    std::vector<std::pair<int, double>> per_class_cv;  // (class id, cv percent)
    double ssim = 0.0;
    double psnr_db = 0.0;
    std::size_t n_pixels = 0;

    // Field names: class_cv_<k>, ssim, psnr_db, n_pixels. Numbers are printed
    // with 9 significant digits; infinities as "inf".
    std::string csv_header() const;
    std::string csv_row() const;
    std::string to_json() const;
};

// Per-class CV of `test` over the label regions, plus SSIM/PSNR of `test`
// against `clean`. Background labels (255) are skipped.
MetricReport evaluate_report(const ImageGrid& clean, const ImageGrid& test,
                             const LabelField& labels);

// Shared formatting helper: shortest text with 9 significant digits.
std::string format_g9(double v);

}  // namespace bfk

#endif
