#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dermprep {

/// 8-bit interleaved RGB raster, row-major.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size == width * height * 3

    bool operator==(const ImageBuffer&) const = default;

    static ImageBuffer filled(int w, int h, std::uint8_t r, std::uint8_t g,
                              std::uint8_t b);

    std::uint8_t* pixel(int x, int y) {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    const std::uint8_t* pixel(int x, int y) const {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    bool valid() const {
        return width >= 1 && height >= 1 &&
               data.size() == static_cast<std::size_t>(width) * height * 3;
    }
};

/// Keys cubic convolution kernel, a = -0.5.
inline constexpr double kCubicA = -0.5;

/// Weights of the four taps floor(s)-1 .. floor(s)+2 for a fractional
/// offset t in [0,1). They sum to 1; t = 0 yields (0, 1, 0, 0) exactly,
/// so integer-aligned sampling is lossless.
std::array<double, 4> cubic_weights(double t);

/// Mirror about the vertical axis: out(x, y) = in(width-1-x, y).
ImageBuffer hflip(const ImageBuffer& img);

/// Rotates the image content about its centre ((w-1)/2, (h-1)/2) onto a
/// canvas of the same size. Positive angles turn the content
/// counter-clockwise as displayed (x right, y down). Angles that are 0
/// mod 360 return a bit-exact copy. Multiples of 90 degrees use exact
/// index remapping whenever the inverse map lands on the integer grid
/// (always for 180; for 90/270 when width and height have equal parity);
/// everything else is bicubically resampled with clamp-to-edge source
/// handling, rounded half away from zero and clamped to [0, 255].
ImageBuffer rotate(const ImageBuffer& img, double theta_deg);

/// White-patch (max-RGB) colour normalization: each channel is scaled so
/// its maximum maps to 255 (von Kries diagonal correction with the
/// illuminant estimated as the per-channel maximum). All-zero channels
/// are left unchanged.
ImageBuffer max_rgb_normalize(const ImageBuffer& img);

}  // namespace dermprep
