#ifndef BFK_IO_HPP
#define BFK_IO_HPP

#include <string>

#include "bfk/field.hpp"

namespace bfk {

// Binary portable graymap (P5), 8-bit or 16-bit, big-endian samples as per
// the format. Intensities are normalized to [0,1] on read by dividing by the
// header maxval; all solver math runs in that normalized space.
ImageGrid read_image(const std::string& path);

// Writes a P5 graymap. bit_depth is 8 or 16. With rescale=false every value
// must already be in [0,1]; with rescale=true [min,max] is mapped linearly
// onto the full range (a constant field maps to mid-gray). Quantization
// rounds half up.
void write_image(const ScalarField& field, const std::string& path, bool rescale,
                 int bit_depth = 8);
void write_image(const ImageGrid& img, const std::string& path, bool rescale,
                 int bit_depth = 8);

// Raw float field exchange format: 16-byte header (magic "BFK1", u32 width,
// u32 height, u32 reserved, little-endian) followed by width*height float32
// little-endian samples in row-major order.
ScalarField read_field(const std::string& path);
void write_field(const ScalarField& field, const std::string& path);

// Class-id maps stored as 8-bit P5 files (ids are raw sample values).
LabelField read_labels(const std::string& path);
void write_labels(const LabelField& labels, const std::string& path);

}  // namespace bfk

#endif
