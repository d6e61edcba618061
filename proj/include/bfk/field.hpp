#ifndef BFK_FIELD_HPP
#define BFK_FIELD_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace bfk {

// Row-major 2D field of finite reals. (row, col) indexing everywhere.
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ScalarField() = default;
    ScalarField(int w, int h, double fill = 0.0);

    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const ScalarField& o) const { return width == o.width && height == o.height; }

    // Throws std::invalid_argument if data length != width*height or any value is non-finite.
    void validate() const;
};

struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> on;

    Mask() = default;
    Mask(int w, int h, bool fill = false);

    bool at(int r, int c) const { return on[static_cast<std::size_t>(r) * width + c] != 0; }
    void set(int r, int c, bool v) { on[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0; }
    std::size_t count() const;
};

// Grayscale image with non-negative intensities and an optional foreground mask.
// When no explicit mask is present the foreground is the set of positive pixels
// (MR background is zero).
struct ImageGrid {
    ScalarField values;
    std::optional<Mask> mask;

    ImageGrid() = default;
    explicit ImageGrid(ScalarField f, std::optional<Mask> m = std::nullopt);

    int width() const { return values.width; }
    int height() const { return values.height; }
    double at(int r, int c) const { return values.at(r, c); }

    Mask effective_mask() const;
    void validate() const;
};

// Foreground indicator: true exactly where intensity > 0.
Mask default_mask(const ImageGrid& img);

// Per-pixel class probabilities, one plane per class. The simplex constraint
// (planes summing to 1) is only meaningful relative to a mask and is checked
// where the energy is evaluated, not at construction.
struct MembershipMap {
    std::vector<ScalarField> planes;

    MembershipMap() = default;
    MembershipMap(int n_classes, int w, int h);
    explicit MembershipMap(std::vector<ScalarField> p);

    int classes() const { return static_cast<int>(planes.size()); }
    int width() const { return planes.empty() ? 0 : planes.front().width; }
    int height() const { return planes.empty() ? 0 : planes.front().height; }

    // Largest |sum_i u_i(r) - 1| over masked pixels.
    double max_simplex_error(const Mask& mask) const;

    void validate() const;  // >= 1 class, matching plane shapes, values in [0,1]
};

// Per-pixel class ids; 255 marks background (no class).
struct LabelField {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> ids;

    std::uint8_t at(int r, int c) const { return ids[static_cast<std::size_t>(r) * width + c]; }
};

inline constexpr std::uint8_t kBackgroundLabel = 255;

}  // namespace bfk

#endif
