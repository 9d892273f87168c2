#ifndef UWFKIT_VESSELNESS_HPP
#define UWFKIT_VESSELNESS_HPP

#include "core.hpp"
#include "imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace uwfkit {

enum class Polarity { BrightOnDark, DarkOnBright };

struct VesselParams {
    std::vector<float> scales = {1, 2, 4, 8}; // Gaussian sigmas at 1024x1024
    float beta = 0.5f;
    float c = 0.0f; // 0 = adaptive (half of max Hessian norm per scale)
    Polarity polarity = Polarity::BrightOnDark;
};

/// Multi-scale Frangi tube filter. Hessian from central differences on the
/// sigma-smoothed image, sigma^2 normalized; response max over scales,
/// rescaled to [0,1].
inline Raster frangi_vesselness(const Raster& img, const VesselParams& p) {
    if (p.scales.empty()) throw EmptyScaleList("vesselness: no scales given");
    const int w = img.width(), h = img.height();
    Raster best(w, h, 1, 0.0f);
    for (float sigma : p.scales) {
        assert(sigma > 0);
        Raster smooth = gaussian_blur(img, sigma);
        const float s2 = sigma * sigma;
        std::vector<float> hxx(size_t(w) * h), hyy(size_t(w) * h), hxy(size_t(w) * h);
        float max_norm2 = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float lxx = smooth.at_clamped(x + 1, y) - 2 * smooth.at(x, y) + smooth.at_clamped(x - 1, y);
                float lyy = smooth.at_clamped(x, y + 1) - 2 * smooth.at(x, y) + smooth.at_clamped(x, y - 1);
                float lxy = 0.25f * (smooth.at_clamped(x + 1, y + 1) - smooth.at_clamped(x - 1, y + 1) -
                                     smooth.at_clamped(x + 1, y - 1) + smooth.at_clamped(x - 1, y - 1));
                size_t i = size_t(y) * w + x;
                hxx[i] = s2 * lxx;
                hyy[i] = s2 * lyy;
                hxy[i] = s2 * lxy;
                max_norm2 = std::max(max_norm2, hxx[i] * hxx[i] + hyy[i] * hyy[i] + 2 * hxy[i] * hxy[i]);
            }
        float c = p.c > 0 ? p.c : 0.5f * std::sqrt(max_norm2);
        if (c <= 0) continue; // flat image at this scale
        const float inv_2b2 = 1.0f / (2 * p.beta * p.beta);
        const float inv_2c2 = 1.0f / (2 * c * c);
        for (size_t i = 0; i < hxx.size(); ++i) {
            // eigenvalues of [[hxx,hxy],[hxy,hyy]], |l1| <= |l2|
            float tr = hxx[i] + hyy[i];
            float d = std::sqrt((hxx[i] - hyy[i]) * (hxx[i] - hyy[i]) + 4 * hxy[i] * hxy[i]);
            float la = 0.5f * (tr + d), lb = 0.5f * (tr - d);
            float l1 = la, l2 = lb;
            if (std::abs(l1) > std::abs(l2)) std::swap(l1, l2);
            if (p.polarity == Polarity::BrightOnDark ? l2 > 0 : l2 < 0) continue;
            if (l2 == 0) continue;
            float rb = l1 / l2;
            float s = std::sqrt(l1 * l1 + l2 * l2);
            float v = std::exp(-rb * rb * inv_2b2) * (1 - std::exp(-s * s * inv_2c2));
            float& dst = best.data()[i];
            dst = std::max(dst, v);
        }
    }
    float vmax = *std::max_element(best.data().begin(), best.data().end());
    if (vmax > 0)
        for (float& v : best.data()) v /= vmax;
    return best;
}

/// Otsu threshold over the 256-bin histogram of the masked pixels.
/// Returns -1 for a degenerate (single-valued) histogram.
inline float otsu_threshold(const Raster& v, const BinaryMask& valid) {
    size_t hist[256] = {};
    size_t total = 0;
    for (int y = 0; y < v.height(); ++y)
        for (int x = 0; x < v.width(); ++x)
            if (valid.at(x, y)) {
                int b = std::clamp(int(v.at(x, y) * 255.0f + 0.5f), 0, 255);
                ++hist[b];
                ++total;
            }
    if (total == 0) throw EmptyValidMask("otsu: empty valid mask");
    double sum_all = 0;
    for (int i = 0; i < 256; ++i) sum_all += double(i) * hist[i];
    double sum_b = 0, w_b = 0, best_var = -1;
    int plateau_lo = -1, plateau_hi = -1;
    for (int t = 0; t < 255; ++t) {
        w_b += hist[t];
        if (w_b == 0) continue;
        double w_f = double(total) - w_b;
        if (w_f == 0) break;
        sum_b += double(t) * hist[t];
        double mu_b = sum_b / w_b;
        double mu_f = (sum_all - sum_b) / w_f;
        double var = w_b * w_f * (mu_b - mu_f) * (mu_b - mu_f);
        if (var > best_var) {
            best_var = var;
            plateau_lo = plateau_hi = t;
        } else if (var == best_var) {
            plateau_hi = t; // widely separated modes yield a flat optimum
        }
    }
    if (plateau_lo < 0) return -1; // all pixels in one bin
    return ((plateau_lo + plateau_hi) / 2 + 0.5f) / 255.0f;
}

/// Hysteresis binarization: high = Otsu inside valid, low = high/2; keep pixels
/// >= low that are 8-connected to a seed >= high. Degenerate histogram gives an
/// all-false mask.
inline BinaryMask binarize_mask(const Raster& v, const BinaryMask& valid, float high_override = -1) {
    if (v.width() != valid.width() || v.height() != valid.height())
        throw DimensionMismatch("binarize_mask: mask dimensions differ");
    const int w = v.width(), h = v.height();
    BinaryMask out(w, h);
    float high = high_override >= 0 ? high_override : otsu_threshold(v, valid);
    if (high < 0) return out;
    float low = 0.5f * high;
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (valid.at(x, y) && v.at(x, y) >= high) {
                out.set(x, y, true);
                queue.emplace_back(x, y);
            }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (out.at(nx, ny) || !valid.at(nx, ny)) continue;
                if (v.at(nx, ny) >= low) {
                    out.set(nx, ny, true);
                    queue.emplace_back(nx, ny);
                }
            }
    }
    return out;
}

} // namespace uwfkit

#endif
