#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "bfk/synth.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bfk;

namespace {

// Independent straight-loop reimplementation of the synthesized surface:
// its own engine mapping, its own Legendre recurrence, its own rescale.
std::vector<double> synth_oracle(int width, int height, const BiasSynthSpec& s) {
    std::mt19937_64 eng(s.seed);
    auto draw = [&]() {
        double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        return s.weight_lo + u * (s.weight_hi - s.weight_lo);
    };
    std::vector<double> wl, wt;
    for (int i = 0; i <= s.legendre_degree; ++i)
        for (int j = 0; j <= s.legendre_degree - i; ++j) wl.push_back(draw());
    for (int l = 0; l <= s.trig_degree; ++l)
        for (int k = 0; k <= l; ++k) wt.push_back(draw());

    auto P = [](int n, double x) {
        if (n == 0) return 1.0;
        double a = 1.0, b = x;
        for (int k = 1; k < n; ++k) {
            double nb = ((2 * k + 1) * x * b - k * a) / (k + 1);
            a = b;
            b = nb;
        }
        return b;
    };

    std::vector<double> raw(static_cast<std::size_t>(width) * height);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            double xh = 2.0 * (c + 0.5) / width - 1.0;
            double yh = 2.0 * (r + 0.5) / height - 1.0;
            double xt = (c + 0.5) / width;
            double yt = (r + 0.5) / height;
            double acc = 0.0;
            std::size_t t = 0;
            for (int i = 0; i <= s.legendre_degree; ++i)
                for (int j = 0; j <= s.legendre_degree - i; ++j)
                    acc += wl[t++] * P(i, xh) * P(j, yh);
            t = 0;
            for (int l = 0; l <= s.trig_degree; ++l)
                for (int k = 0; k <= l; ++k)
                    acc += wt[t++] * std::sin(std::pow(xt, k) * std::pow(yt, l - k));
            raw[static_cast<std::size_t>(r) * width + c] = acc;
        }

    double mn = raw[0], mx = raw[0];
    for (double v : raw) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    for (double& v : raw) {
        if (mx == mn) {
            v = (s.rescale_lo + s.rescale_hi) / 2.0;
        } else {
            double t = (v - mn) / (mx - mn);
            v = std::clamp(s.rescale_lo * (1.0 - t) + s.rescale_hi * t, s.rescale_lo,
                           s.rescale_hi);
        }
    }
    return raw;
}

}  // namespace

TEST_CASE("legendre base cases and recurrence") {
    CHECK(legendre(0, -0.3) == 1.0);
    CHECK(legendre(0, 1.0) == 1.0);
    CHECK(legendre(1, 0.7) == 0.7);
    CHECK(legendre(2, 0.5) == doctest::Approx(-0.125).epsilon(1e-15));
    // P_3(x) = (5x^3 - 3x)/2
    CHECK(legendre(3, 0.4) == doctest::Approx((5 * 0.064 - 3 * 0.4) / 2).epsilon(1e-14));
    CHECK_THROWS_AS(legendre(2, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(legendre(-1, 0.0), std::invalid_argument);
}

TEST_CASE("rescale_to_range endpoints, midpoint, and degenerate cases") {
    ScalarField f = test::make_field(3, 1, {0.0, 1.0, 2.0});
    ScalarField out = rescale_to_range(f, 0.8, 1.2);
    CHECK(out.data[0] == 0.8);
    CHECK(out.data[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out.data[2] == 1.2);

    ScalarField c(4, 2, 123.0);
    out = rescale_to_range(c, 0.3, 1.7);
    for (double v : out.data) CHECK(v == 1.0);

    out = rescale_to_range(f, 1.0, 1.0);
    for (double v : out.data) CHECK(v == 1.0);

    CHECK_THROWS_AS(rescale_to_range(f, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("synth_bias degenerate spec gives a constant field") {
    BiasSynthSpec s;
    s.legendre_degree = 0;
    s.trig_degree = 0;
    s.rescale_lo = 1.0;
    s.rescale_hi = 1.0;
    s.seed = 5;
    ScalarField b = synth_bias(6, 4, s);
    for (double v : b.data) CHECK(v == 1.0);
}

TEST_CASE("synth_bias output occupies the rescale range exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 42ull, 99ull}) {
        BiasSynthSpec s;
        s.seed = seed;
        s.rescale_lo = 0.3;
        s.rescale_hi = 1.7;
        ScalarField b = synth_bias(32, 24, s);
        double mn = b.data[0], mx = b.data[0];
        for (double v : b.data) {
            CHECK(v >= 0.3);
            CHECK(v <= 1.7);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        CHECK(mn == 0.3);
        CHECK(mx == 1.7);
    }
}

TEST_CASE("synth_bias matches the straight-loop oracle bit for bit") {
    BiasSynthSpec s;
    s.seed = 42;
    ScalarField b = synth_bias(8, 8, s);
    std::vector<double> expect = synth_oracle(8, 8, s);
    REQUIRE(b.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b.data[i] == expect[i]);

    // And the draw order must make non-default degrees reproducible too.
    s.legendre_degree = 3;
    s.trig_degree = 1;
    s.seed = 7;
    b = synth_bias(5, 9, s);
    expect = synth_oracle(5, 9, s);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b.data[i] == expect[i]);
}

TEST_CASE("synth_bias is bitwise reproducible") {
    BiasSynthSpec s;
    s.seed = 1234;
    ScalarField a = synth_bias(17, 13, s);
    ScalarField b = synth_bias(17, 13, s);
    CHECK(a.data == b.data);
}

TEST_CASE("synthesized fields stay within their measured smoothness envelope") {
    // Empirically frozen regression bound over seeds 0..99 at the default
    // spec, 128x128. Degree-15 Legendre modes have steep derivatives near the
    // domain edges (P'_n(1) = n(n+1)/2), so the max 4-neighbor difference
    // lands at the field border; the measured per-seed max/range over this
    // seed set is 0.17..0.48. Interior pixels sit an order of magnitude lower.
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        BiasSynthSpec s;
        s.seed = seed;
        ScalarField b = synth_bias(128, 128, s);
        for (int r = 0; r < 128; ++r)
            for (int c = 0; c < 128; ++c) {
                if (r + 1 < 128) worst = std::max(worst, std::abs(b.at(r, c) - b.at(r + 1, c)));
                if (c + 1 < 128) worst = std::max(worst, std::abs(b.at(r, c) - b.at(r, c + 1)));
            }
    }
    CHECK(worst <= 0.5 * 0.4);
}

TEST_CASE("make_phantom single class and validation") {
    PhantomSpec s;
    s.width = 8;
    s.height = 8;
    s.n_classes = 1;
    s.class_intensities = {0.5};
    Phantom ph = make_phantom(s);
    for (std::size_t i = 0; i < ph.image.values.size(); ++i) {
        if (ph.labels.ids[i] == kBackgroundLabel) {
            CHECK(ph.image.values.data[i] == 0.0);
        } else {
            CHECK(ph.labels.ids[i] == 0);
            CHECK(ph.image.values.data[i] == 0.5);
        }
    }

    s.class_intensities = {0.5, 0.4};
    s.n_classes = 2;
    CHECK_THROWS_AS(make_phantom(s), std::invalid_argument);
}

TEST_CASE("concentric phantom covers every class with zero in-class variance") {
    PhantomSpec s;
    s.width = 128;
    s.height = 128;
    Phantom ph = make_phantom(s);

    std::set<std::uint8_t> seen;
    for (auto id : ph.labels.ids)
        if (id != kBackgroundLabel) seen.insert(id);
    CHECK(seen == std::set<std::uint8_t>{0, 1, 2, 3});

    for (int k = 0; k < 4; ++k) {
        double ref = s.class_intensities[k];
        for (std::size_t i = 0; i < ph.labels.ids.size(); ++i)
            if (ph.labels.ids[i] == k) CHECK(ph.image.values.data[i] == ref);
    }
    // Background exists and is unmasked.
    CHECK(ph.image.effective_mask().count() < ph.image.values.size());
}

TEST_CASE("voronoi phantom covers every class") {
    PhantomSpec s;
    s.width = 64;
    s.height = 64;
    s.geometry = PhantomGeometry::kVoronoiCells;
    s.voronoi_sites = 12;
    s.seed = 3;
    Phantom ph = make_phantom(s);
    std::set<std::uint8_t> seen(ph.labels.ids.begin(), ph.labels.ids.end());
    CHECK(seen == std::set<std::uint8_t>{0, 1, 2, 3});
    CHECK(ph.image.effective_mask().count() == ph.image.values.size());
}

TEST_CASE("apply_bias is the plain multiplicative model") {
    ImageGrid clean = test::make_image(1, 1, {0.5});
    ScalarField b(1, 1, 1.5);
    ImageGrid out = apply_bias(clean, b, 0.0, 0);
    CHECK(out.values.data[0] == 0.75);

    Rng rng(61);
    ImageGrid c2 = test::random_image(rng, 9, 7, 0.2, 1.0);
    ScalarField b1(9, 7, 1.0);
    ImageGrid same = apply_bias(c2, b1, 0.0, 0);
    CHECK(same.values.data == c2.values.data);

    ScalarField br = test::random_field(rng, 9, 7, 0.4, 1.6);
    ImageGrid biased = apply_bias(c2, br, 0.0, 0);
    for (std::size_t i = 0; i < biased.values.size(); ++i)
        CHECK(biased.values.data[i] / c2.values.data[i] ==
              doctest::Approx(br.data[i]).epsilon(1e-12));

    // The mask is inherited, so masked-pixel count is invariant even under noise.
    ImageGrid noisy = apply_bias(c2, br, 0.05, 77);
    CHECK(noisy.effective_mask().count() == c2.effective_mask().count());

    CHECK_THROWS_AS(apply_bias(c2, ScalarField(3, 3, 1.0), 0.0, 0), std::invalid_argument);
}

TEST_CASE("phantom noise respects the background and the floor") {
    PhantomSpec s;
    s.width = 32;
    s.height = 32;
    s.noise_sigma = 0.05;
    s.seed = 9;
    Phantom ph = make_phantom(s);
    for (std::size_t i = 0; i < ph.labels.ids.size(); ++i) {
        if (ph.labels.ids[i] == kBackgroundLabel) CHECK(ph.image.values.data[i] == 0.0);
        CHECK(ph.image.values.data[i] >= 0.0);
    }
}
