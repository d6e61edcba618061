#include <cstdint>
#include <filesystem>
#include <fstream>

#include "bfk/io.hpp"
#include "bfk/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bfk;
namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("read_image parses an 8-bit graymap and normalizes by maxval") {
    auto dir = test::scratch_dir("grid");
    auto p = dir / "a.pgm";
    std::string bytes = "P5\n2 2\n255\n";
    bytes.push_back('\x00');
    bytes.push_back('\xff');
    bytes.push_back('\x80');
    bytes.push_back('\x40');
    write_bytes(p, bytes);

    ImageGrid img = read_image(p.string());
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    CHECK(img.values.data[0] == 0.0);
    CHECK(img.values.data[1] == 1.0);
    CHECK(img.values.data[2] == 128.0 / 255.0);
    CHECK(img.values.data[3] == 64.0 / 255.0);
}

TEST_CASE("read_image rejects degenerate inputs") {
    auto dir = test::scratch_dir("grid_bad");
    auto empty = dir / "empty.pgm";
    write_bytes(empty, "");
    CHECK_THROWS_AS(read_image(empty.string()), std::runtime_error);

    auto zero = dir / "zero.pgm";
    write_bytes(zero, "P5\n0 0\n255\n");
    CHECK_THROWS_AS(read_image(zero.string()), std::runtime_error);

    auto noexist = dir / "missing.pgm";
    CHECK_THROWS_AS(read_image(noexist.string()), std::runtime_error);

    auto truncated = dir / "trunc.pgm";
    write_bytes(truncated, "P5\n2 2\n255\nab");
    CHECK_THROWS_AS(read_image(truncated.string()), std::runtime_error);
}

TEST_CASE("write/read round trip is lossless at matching bit depth") {
    auto dir = test::scratch_dir("grid_rt");
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        ScalarField f(16, 16);
        for (double& v : f.data)
            v = static_cast<double>(static_cast<int>(rng.uniform(0.0, 256.0)) % 256) / 255.0;
        auto p = dir / "rt.pgm";
        write_image(f, p.string(), false, 8);
        ImageGrid back = read_image(p.string());
        REQUIRE(back.values.data == f.data);
    }
    // And at 16 bits.
    ScalarField f(9, 5);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.data[i] = static_cast<double>((i * 4099) % 65536) / 65535.0;
    auto p = dir / "rt16.pgm";
    write_image(f, p.string(), false, 16);
    CHECK(read_image(p.string()).values.data == f.data);
}

TEST_CASE("write_image quantization and rescale behavior") {
    auto dir = test::scratch_dir("grid_w");
    auto p = dir / "w.pgm";

    // Constant 0.5 rounds half up to 128.
    write_image(ScalarField(3, 2, 0.5), p.string(), false, 8);
    std::string bytes = read_bytes(p);
    std::string payload = bytes.substr(bytes.size() - 6);
    for (char b : payload) CHECK(static_cast<unsigned char>(b) == 128);

    // rescale=true maps [min,max] to the endpoints.
    write_image(test::make_field(2, 1, {0.25, 0.75}), p.string(), true, 8);
    bytes = read_bytes(p);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 0);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 255);

    // Out-of-range values without rescale are a contract violation.
    CHECK_THROWS_AS(write_image(ScalarField(2, 2, 1.5), p.string(), false, 8),
                    std::invalid_argument);
}

TEST_CASE("default_mask marks positive pixels") {
    CHECK(default_mask(test::make_image(2, 1, {0.0, 0.0})).count() == 0);
    CHECK(default_mask(test::make_image(2, 1, {0.3, 0.7})).count() == 2);
    Mask m = default_mask(test::make_image(2, 1, {0.0, 0.5}));
    CHECK_FALSE(m.at(0, 0));
    CHECK(m.at(0, 1));
}

TEST_CASE("raw float field round trip") {
    auto dir = test::scratch_dir("grid_f");
    auto p = dir / "b.bfk";
    Rng rng(11);
    ScalarField f = test::random_field(rng, 7, 3, -2.0, 3.0);
    write_field(f, p.string());

    ScalarField back = read_field(p.string());
    REQUIRE(back.same_shape(f));
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(f.data[i])));

    // Re-writing what was read reproduces the file byte for byte.
    auto p2 = dir / "b2.bfk";
    write_field(back, p2.string());
    CHECK(read_bytes(p) == read_bytes(p2));

    auto bad = dir / "bad.bfk";
    write_bytes(bad, "NOPE");
    CHECK_THROWS_AS(read_field(bad.string()), std::runtime_error);
}

TEST_CASE("label map round trip") {
    auto dir = test::scratch_dir("grid_l");
    LabelField lf;
    lf.width = 3;
    lf.height = 2;
    lf.ids = {0, 1, 2, 3, 255, 1};
    auto p = dir / "labels.pgm";
    write_labels(lf, p.string());
    LabelField back = read_labels(p.string());
    CHECK(back.ids == lf.ids);
}

TEST_CASE("membership simplex bookkeeping") {
    MembershipMap u(2, 2, 1);
    u.planes[0].data = {0.25, 1.0};
    u.planes[1].data = {0.75, 0.0};
    CHECK(u.max_simplex_error(test::full_mask(2, 1)) == 0.0);
    u.planes[1].data[0] = 0.70;
    CHECK(u.max_simplex_error(test::full_mask(2, 1)) == doctest::Approx(0.05));
    CHECK_THROWS_AS(MembershipMap(std::vector<ScalarField>{ScalarField(2, 1, 1.5)}),
                    std::invalid_argument);
}
