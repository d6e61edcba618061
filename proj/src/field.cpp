#include "bfk/field.hpp"

#include <cmath>
#include <stdexcept>

namespace bfk {

ScalarField::ScalarField(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("field dimensions must be non-negative");
}

void ScalarField::validate() const {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("field data length does not match width*height");
    for (double v : data)
        if (!std::isfinite(v)) throw std::invalid_argument("field contains non-finite values");
}

Mask::Mask(int w, int h, bool fill)
    : width(w), height(h), on(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

std::size_t Mask::count() const {
    std::size_t n = 0;
    for (auto v : on) n += (v != 0);
    return n;
}

ImageGrid::ImageGrid(ScalarField f, std::optional<Mask> m) : values(std::move(f)), mask(std::move(m)) {
    validate();
}

void ImageGrid::validate() const {
    values.validate();
    for (double v : values.data)
        if (v < 0.0) throw std::invalid_argument("image intensities must be non-negative");
    if (mask && (mask->width != values.width || mask->height != values.height))
        throw std::invalid_argument("mask dimensions do not match image");
}

Mask ImageGrid::effective_mask() const {
    if (mask) return *mask;
    return default_mask(*this);
}

Mask default_mask(const ImageGrid& img) {
    Mask m(img.width(), img.height());
    for (std::size_t i = 0; i < img.values.data.size(); ++i) m.on[i] = img.values.data[i] > 0.0;
    return m;
}

MembershipMap::MembershipMap(int n_classes, int w, int h) {
    if (n_classes < 1) throw std::invalid_argument("membership needs at least one class");
    planes.assign(static_cast<std::size_t>(n_classes), ScalarField(w, h, 0.0));
}

MembershipMap::MembershipMap(std::vector<ScalarField> p) : planes(std::move(p)) { validate(); }

double MembershipMap::max_simplex_error(const Mask& mask) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < mask.on.size(); ++i) {
        if (!mask.on[i]) continue;
        double s = 0.0;
        for (const auto& plane : planes) s += plane.data[i];
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

void MembershipMap::validate() const {
    if (planes.empty()) throw std::invalid_argument("membership needs at least one class");
    for (const auto& plane : planes) {
        plane.validate();
        if (!plane.same_shape(planes.front()))
            throw std::invalid_argument("membership planes differ in shape");
        for (double v : plane.data)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("membership values must lie in [0,1]");
    }
}

}  // namespace bfk
