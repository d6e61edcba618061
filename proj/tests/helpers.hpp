#ifndef BFK_TEST_HELPERS_HPP
#define BFK_TEST_HELPERS_HPP

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "bfk/field.hpp"
#include "bfk/rng.hpp"

namespace bfk::test {

inline ScalarField make_field(int w, int h, std::vector<double> v) {
    ScalarField f(w, h);
    f.data = std::move(v);
    f.validate();
    return f;
}

inline ImageGrid make_image(int w, int h, std::vector<double> v) {
    return ImageGrid(make_field(w, h, std::move(v)));
}

inline Mask full_mask(int w, int h) { return Mask(w, h, true); }

inline ImageGrid random_image(Rng& rng, int w, int h, double lo, double hi) {
    ScalarField f(w, h);
    for (double& v : f.data) v = rng.uniform(lo, hi);
    return ImageGrid(std::move(f));
}

inline ScalarField random_field(Rng& rng, int w, int h, double lo, double hi) {
    ScalarField f(w, h);
    for (double& v : f.data) v = rng.uniform(lo, hi);
    return f;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("bfk_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace bfk::test

#endif
