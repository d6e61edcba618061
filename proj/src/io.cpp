#include "bfk/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace bfk {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Reads one PGM header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

long parse_dim(std::istream& in, const std::string& path) {
    std::string tok = next_token(in);
    if (tok.empty()) fail(path, "malformed header: truncated");
    for (char c : tok)
        if (c < '0' || c > '9') fail(path, "malformed header: expected a number, got '" + tok + "'");
    return std::stol(tok);
}

void put_u32_le(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

ImageGrid read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    std::string magic = next_token(in);
    if (magic != "P5") fail(path, "malformed header: not a binary graymap (P5)");
    long w = parse_dim(in, path);
    long h = parse_dim(in, path);
    long maxval = parse_dim(in, path);
    if (w <= 0 || h <= 0) fail(path, "zero-size image");
    if (maxval <= 0 || maxval > 65535) fail(path, "malformed header: bad maxval");
    // Exactly one whitespace byte separates the header from the samples; the
    // token reader has already consumed it.
    int bytes = maxval > 255 ? 2 : 1;
    std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(path, "truncated pixel data");

    ScalarField f(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < n; ++i) {
        long v = bytes == 1 ? raw[i] : (static_cast<long>(raw[2 * i]) << 8) | raw[2 * i + 1];
        if (v > maxval) fail(path, "sample exceeds maxval");
        f.data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return ImageGrid(std::move(f));
}

void write_image(const ScalarField& field, const std::string& path, bool rescale, int bit_depth) {
    field.validate();
    if (field.size() == 0) throw std::invalid_argument("refusing to write an empty image");
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("bit depth must be 8 or 16");

    double lo = 0.0, hi = 1.0;
    if (rescale) {
        lo = field.data[0];
        hi = field.data[0];
        for (double v : field.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    } else {
        for (double v : field.data)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("values outside [0,1]; pass rescale=true");
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    long maxval = bit_depth == 8 ? 255 : 65535;
    out << "P5\n" << field.width << " " << field.height << "\n" << maxval << "\n";
    for (double v : field.data) {
        double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;  // constant fields map to mid-gray
        long q = std::lround(t * static_cast<double>(maxval));
        if (bit_depth == 16) out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
    }
    if (!out) fail(path, "write failed");
}

void write_image(const ImageGrid& img, const std::string& path, bool rescale, int bit_depth) {
    write_image(img.values, path, rescale, bit_depth);
}

ScalarField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || magic[0] != 'B' || magic[1] != 'F' || magic[2] != 'K' || magic[3] != '1')
        fail(path, "malformed header: bad magic");
    std::uint32_t w = get_u32_le(in);
    std::uint32_t h = get_u32_le(in);
    get_u32_le(in);  // reserved
    if (!in || w == 0 || h == 0) fail(path, "malformed header");
    if (w > 1u << 20 || h > 1u << 20) fail(path, "implausible dimensions");

    ScalarField f(static_cast<int>(w), static_cast<int>(h));
    std::vector<unsigned char> raw(f.size() * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(path, "truncated payload");
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                             (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        f.data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    f.validate();
    return f;
}

void write_field(const ScalarField& field, const std::string& path) {
    field.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write("BFK1", 4);
    put_u32_le(out, static_cast<std::uint32_t>(field.width));
    put_u32_le(out, static_cast<std::uint32_t>(field.height));
    put_u32_le(out, 0);
    for (double v : field.data) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                     static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
        out.write(b, 4);
    }
    if (!out) fail(path, "write failed");
}

LabelField read_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    std::string magic = next_token(in);
    if (magic != "P5") fail(path, "malformed header: not a binary graymap (P5)");
    long w = parse_dim(in, path);
    long h = parse_dim(in, path);
    long maxval = parse_dim(in, path);
    if (w <= 0 || h <= 0 || maxval != 255) fail(path, "not an 8-bit label map");
    LabelField lf;
    lf.width = static_cast<int>(w);
    lf.height = static_cast<int>(h);
    lf.ids.resize(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(lf.ids.data()), static_cast<std::streamsize>(lf.ids.size()));
    if (static_cast<std::size_t>(in.gcount()) != lf.ids.size()) fail(path, "truncated pixel data");
    return lf;
}

void write_labels(const LabelField& labels, const std::string& path) {
    if (labels.ids.size() != static_cast<std::size_t>(labels.width) * labels.height)
        throw std::invalid_argument("label data length does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << labels.width << " " << labels.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(labels.ids.data()),
              static_cast<std::streamsize>(labels.ids.size()));
    if (!out) fail(path, "write failed");
}

}  // namespace bfk
