#include "dermprep/imgops.hpp"

#include <cmath>
#include <numbers>

#include "dermprep/errors.hpp"

namespace dermprep {

ImageBuffer ImageBuffer::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                                std::uint8_t b) {
    ImageBuffer img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        img.data[i] = r;
        img.data[i + 1] = g;
        img.data[i + 2] = b;
    }
    return img;
}

std::array<double, 4> cubic_weights(double t) {
    // Keys kernel with a = -0.5, evaluated at the tap distances
    // 1+t, t, 1-t, 2-t. Outer taps use a*(s-1)*(s-2)^2, inner taps
    // ((a+2)*s - (a+3))*s^2 + 1.
    const double a = kCubicA;
    const double u = 1.0 - t;
    std::array<double, 4> w;
    w[0] = a * t * u * u;                      // s = 1+t
    w[1] = ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    w[2] = ((a + 2.0) * u - (a + 3.0)) * u * u + 1.0;
    w[3] = a * u * t * t;                      // s = 2-t
    return w;
}

ImageBuffer hflip(const ImageBuffer& img) {
    ImageBuffer out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.data.size());
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* src = img.pixel(img.width - 1 - x, y);
            std::uint8_t* dst = out.pixel(x, y);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    }
    return out;
}

namespace {

inline int clamp_index(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

inline std::uint8_t round_clamp(double v) {
    const long r = std::lround(v);  // halfway cases away from zero
    return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

// Exact quarter-turn remap. ct/st are the integer cosine/sine of the
// inverse rotation; callers guarantee the mapped grid is integral.
ImageBuffer remap_quarter(const ImageBuffer& img, int ct, int st) {
    const int w = img.width;
    const int h = img.height;
    ImageBuffer out;
    out.width = w;
    out.height = h;
    out.data.resize(img.data.size());
    // src = R(p - c) + c computed as 2*src to stay in integers:
    // 2*sx = (w-1) + ct*(2x - (w-1)) - st*(2y - (h-1))
    for (int y = 0; y < h; ++y) {
        const int dy = 2 * y - (h - 1);
        for (int x = 0; x < w; ++x) {
            const int dx = 2 * x - (w - 1);
            const int sx2 = (w - 1) + ct * dx - st * dy;
            const int sy2 = (h - 1) + st * dx + ct * dy;
            const int sx = clamp_index(sx2 / 2, w - 1);
            const int sy = clamp_index(sy2 / 2, h - 1);
            const std::uint8_t* src = img.pixel(sx, sy);
            std::uint8_t* dst = out.pixel(x, y);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    }
    return out;
}

ImageBuffer rotate_bicubic(const ImageBuffer& img, double deg) {
    const int w = img.width;
    const int h = img.height;
    const double cx = (w - 1) * 0.5;
    const double cy = (h - 1) * 0.5;
    const double rad = deg * std::numbers::pi / 180.0;
    const double ct = std::cos(rad);
    const double st = std::sin(rad);

    ImageBuffer out;
    out.width = w;
    out.height = h;
    out.data.resize(img.data.size());

    for (int y = 0; y < h; ++y) {
        const double dy = y - cy;
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx;
            const double sx = cx + ct * dx - st * dy;
            const double sy = cy + st * dx + ct * dy;

            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const auto wx = cubic_weights(sx - x0);
            const auto wy = cubic_weights(sy - y0);

            double acc[3] = {0.0, 0.0, 0.0};
            for (int j = 0; j < 4; ++j) {
                const int yy = clamp_index(y0 - 1 + j, h - 1);
                double row[3] = {0.0, 0.0, 0.0};
                for (int i = 0; i < 4; ++i) {
                    const int xx = clamp_index(x0 - 1 + i, w - 1);
                    const std::uint8_t* p = img.pixel(xx, yy);
                    row[0] += wx[i] * p[0];
                    row[1] += wx[i] * p[1];
                    row[2] += wx[i] * p[2];
                }
                acc[0] += wy[j] * row[0];
                acc[1] += wy[j] * row[1];
                acc[2] += wy[j] * row[2];
            }
            std::uint8_t* dst = out.pixel(x, y);
            dst[0] = round_clamp(acc[0]);
            dst[1] = round_clamp(acc[1]);
            dst[2] = round_clamp(acc[2]);
        }
    }
    return out;
}

}  // namespace

ImageBuffer rotate(const ImageBuffer& img, double theta_deg) {
    if (!img.valid()) throw DataError("invalid image buffer");
    double t = std::fmod(theta_deg, 360.0);
    if (t < 0) t += 360.0;
    if (t == 0.0) return img;

    if (t == 90.0 || t == 180.0 || t == 270.0) {
        // Inverse rotation uses cos/sin of +t.
        const int ct = (t == 180.0) ? -1 : 0;
        const int st = (t == 90.0) ? 1 : (t == 270.0) ? -1 : 0;
        const bool integral = (t == 180.0) || ((img.width + img.height) % 2 == 0);
        if (integral) return remap_quarter(img, ct, st);
    }
    return rotate_bicubic(img, t);
}

ImageBuffer max_rgb_normalize(const ImageBuffer& img) {
    if (!img.valid()) throw DataError("invalid image buffer");
    std::uint8_t max_c[3] = {0, 0, 0};
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        for (int c = 0; c < 3; ++c) {
            if (img.data[i + c] > max_c[c]) max_c[c] = img.data[i + c];
        }
    }

    // Per-channel lookup tables; an all-zero channel keeps the identity.
    std::array<std::array<std::uint8_t, 256>, 3> lut;
    for (int c = 0; c < 3; ++c) {
        for (int v = 0; v < 256; ++v) {
            lut[c][v] = (max_c[c] == 0)
                            ? static_cast<std::uint8_t>(v)
                            : round_clamp(v * 255.0 / max_c[c]);
        }
    }

    ImageBuffer out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        out.data[i] = lut[0][img.data[i]];
        out.data[i + 1] = lut[1][img.data[i + 1]];
        out.data[i + 2] = lut[2][img.data[i + 2]];
    }
    return out;
}

}  // namespace dermprep
