#pragma once

#include <filesystem>

#include "dermprep/imgops.hpp"

namespace dermprep {

/// Decodes a PNG or JPEG file (detected by signature) into 8-bit RGB.
/// Grayscale, palette and alpha variants are converted/stripped on the
/// fly. Throws IoError on missing files and decode failures.
ImageBuffer load_image(const std::filesystem::path& path);

/// Encodes 8-bit RGB as a non-interlaced PNG with fixed settings, so the
/// bytes written for identical pixels are identical across runs.
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace dermprep
