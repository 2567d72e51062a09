#pragma once

#include <filesystem>

#include "pixgbp/imaging.hpp"

namespace pixgbp {

/// Reads an 8- or 16-bit PNG (colour is converted to luma) or a grayscale PFM,
/// chosen by file extension. Values are normalised to [0, 1].
GrayImage read_image(const std::filesystem::path& path);

/// Writes a grayscale PNG, clamping to [0, 1]. `bit_depth` is 8 or 16.
void write_png(const GrayImage& img, const std::filesystem::path& path, int bit_depth = 16);

/// Lossless float round trip (little-endian "Pf", bottom-to-top rows).
void write_pfm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace pixgbp
