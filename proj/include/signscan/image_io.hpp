#pragma once

#include <string>

#include "signscan/image.hpp"

namespace signscan {

/// Reads a PNG or binary PPM (P6) image, dispatching on the file magic.
/// Any PNG color type is converted to 8-bit RGB. Throws IoError.
RgbImage read_image(const std::string& path);

/// Writes an 8-bit RGB PNG. Throws IoError.
void write_png(const std::string& path, const RgbImage& image);

/// Writes a mask as an 8-bit grayscale PNG with values 0/255. Throws IoError.
void write_png(const std::string& path, const BinaryMask& mask);

/// Reads an image as a mask: any pixel with mean intensity > 127 is foreground.
BinaryMask read_mask(const std::string& path);

}  // namespace signscan
