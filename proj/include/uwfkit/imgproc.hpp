#ifndef UWFKIT_IMGPROC_HPP
#define UWFKIT_IMGPROC_HPP

#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace uwfkit {

inline Raster to_grayscale(const Raster& r) {
    if (r.channels() == 1) return r;
    Raster out(r.width(), r.height(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(x, y) = 0.299f * r.at(x, y, 0) + 0.587f * r.at(x, y, 1) + 0.114f * r.at(x, y, 2);
    return out;
}

/// Bilinear sample with border clamp; coordinates are pixel-centered.
inline float sample_bilinear(const Raster& r, float x, float y, int c = 0) {
    int x0 = int(std::floor(x));
    int y0 = int(std::floor(y));
    float fx = x - x0;
    float fy = y - y0;
    float v00 = r.at_clamped(x0, y0, c);
    float v10 = r.at_clamped(x0 + 1, y0, c);
    float v01 = r.at_clamped(x0, y0 + 1, c);
    float v11 = r.at_clamped(x0 + 1, y0 + 1, c);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

/// Half-pixel-centered bilinear resize: src = (dst + 0.5) * scale - 0.5.
inline Raster resize_bilinear(const Raster& r, int w, int h) {
    if (w == r.width() && h == r.height()) return r;
    Raster out(w, h, r.channels());
    float sx = float(r.width()) / w;
    float sy = float(r.height()) / h;
    for (int y = 0; y < h; ++y) {
        float src_y = (y + 0.5f) * sy - 0.5f;
        for (int x = 0; x < w; ++x) {
            float src_x = (x + 0.5f) * sx - 0.5f;
            for (int c = 0; c < r.channels(); ++c)
                out.at(x, y, c) = sample_bilinear(r, src_x, src_y, c);
        }
    }
    return out;
}

/// Zero pixels outside the inscribed ellipse; returns the cropped raster and the
/// ellipse validity mask.
inline std::pair<Raster, BinaryMask> peripheral_crop(const Raster& r, double margin_frac) {
    assert(margin_frac >= 0.0 && margin_frac < 0.5);
    const double ax = (0.5 - margin_frac) * r.width();
    const double ay = (0.5 - margin_frac) * r.height();
    const double cx = 0.5 * (r.width() - 1);
    const double cy = 0.5 * (r.height() - 1);
    Raster out(r.width(), r.height(), r.channels());
    BinaryMask mask(r.width(), r.height());
    for (int y = 0; y < r.height(); ++y) {
        double dy = (y - cy) / ay;
        for (int x = 0; x < r.width(); ++x) {
            double dx = (x - cx) / ax;
            bool inside = dx * dx + dy * dy <= 1.0;
            mask.set(x, y, inside);
            if (inside)
                for (int c = 0; c < r.channels(); ++c)
                    out.at(x, y, c) = r.at(x, y, c);
        }
    }
    return {std::move(out), std::move(mask)};
}

/// Sampled Gaussian kernel, radius ceil(3 sigma), normalized.
inline std::vector<float> gaussian_kernel(float sigma) {
    int radius = std::max(1, int(std::ceil(3.0f * sigma)));
    std::vector<float> k(2 * radius + 1);
    float sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        float v = std::exp(-0.5f * i * i / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (float& v : k) v /= sum;
    return k;
}

/// Separable Gaussian blur with border clamp; single channel.
inline Raster gaussian_blur(const Raster& r, float sigma) {
    if (sigma <= 0) return r;
    auto k = gaussian_kernel(sigma);
    int radius = int(k.size() / 2);
    const int w = r.width(), h = r.height();
    Raster tmp(w, h, 1), out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float s = 0;
            for (int i = -radius; i <= radius; ++i)
                s += k[i + radius] * r.at_clamped(x + i, y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float s = 0;
            for (int i = -radius; i <= radius; ++i)
                s += k[radius + i] * tmp.at_clamped(x, y + i);
            out.at(x, y) = s;
        }
    return out;
}

/// Central-difference derivatives, border clamp.
inline Raster derivative_x(const Raster& r) {
    Raster out(r.width(), r.height(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(x, y) = 0.5f * (r.at_clamped(x + 1, y) - r.at_clamped(x - 1, y));
    return out;
}

inline Raster derivative_y(const Raster& r) {
    Raster out(r.width(), r.height(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(x, y) = 0.5f * (r.at_clamped(x, y + 1) - r.at_clamped(x, y - 1));
    return out;
}

/// 3x3 Sobel, border clamp.
inline Raster sobel_x(const Raster& r) {
    Raster out(r.width(), r.height(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(x, y) = (r.at_clamped(x + 1, y - 1) - r.at_clamped(x - 1, y - 1)) +
                           2 * (r.at_clamped(x + 1, y) - r.at_clamped(x - 1, y)) +
                           (r.at_clamped(x + 1, y + 1) - r.at_clamped(x - 1, y + 1));
    return out;
}

inline Raster sobel_y(const Raster& r) {
    Raster out(r.width(), r.height(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(x, y) = (r.at_clamped(x - 1, y + 1) - r.at_clamped(x - 1, y - 1)) +
                           2 * (r.at_clamped(x, y + 1) - r.at_clamped(x, y - 1)) +
                           (r.at_clamped(x + 1, y + 1) - r.at_clamped(x + 1, y - 1));
    return out;
}

/// 2x downsample by 2x2 mean pooling (floor dimensions).
inline Raster downsample_half(const Raster& r) {
    int w = r.width() / 2, h = r.height() / 2;
    Raster out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = 0.25f * (r.at(2 * x, 2 * y) + r.at(2 * x + 1, 2 * y) +
                                    r.at(2 * x, 2 * y + 1) + r.at(2 * x + 1, 2 * y + 1));
    return out;
}

inline Raster rotate90(const Raster& r) {
    // counter-clockwise: (x,y) -> (y, w-1-x)
    Raster out(r.height(), r.width(), 1);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            out.at(y, r.width() - 1 - x) = r.at(x, y);
    return out;
}

/// Morphological erosion by a (2r+1) square, separable.
inline BinaryMask erode(const BinaryMask& m, int radius) {
    const int w = m.width(), h = m.height();
    BinaryMask tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = true;
            for (int i = -radius; i <= radius && v; ++i) {
                int xx = x + i;
                v = xx >= 0 && xx < w && m.at(xx, y);
            }
            tmp.set(x, y, v);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = true;
            for (int i = -radius; i <= radius && v; ++i) {
                int yy = y + i;
                v = yy >= 0 && yy < h && tmp.at(x, yy);
            }
            out.set(x, y, v);
        }
    return out;
}

inline Raster clamp01(Raster r) {
    for (float& v : r.data()) v = std::clamp(v, 0.0f, 1.0f);
    return r;
}

} // namespace uwfkit

#endif
