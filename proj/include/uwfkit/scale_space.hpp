#ifndef UWFKIT_SCALE_SPACE_HPP
#define UWFKIT_SCALE_SPACE_HPP

#include "core.hpp"
#include "imgproc.hpp"

#include <algorithm>
#include <cmath>

namespace uwfkit {

struct ScaleLevel {
    Raster image;      // evolved image at this level's octave resolution
    float sigma;       // scale in full-resolution pixels
    float sigma_level; // scale in this level's own pixel units (sigma / 2^octave)
    int octave;
    int sublevel;
};

struct ScaleSpace {
    int octaves = 4;
    int sublevels = 4;
    float base_sigma = 1.6f;
    float contrast_k = 0;
    std::vector<ScaleLevel> levels;
};

namespace detail {

/// FED step sizes covering total time T under the explicit stability bound
/// tau_max. The cascade sizes come from the Chebyshev roots; the whole
/// sequence is rescaled so the steps sum exactly to T.
inline std::vector<float> fed_tau_sequence(float total_time, float tau_max) {
    int n = std::max(1, int(std::ceil(std::sqrt(3.0 * total_time / tau_max + 0.25) - 0.5)));
    std::vector<float> tau(n);
    double sum = 0;
    for (int j = 0; j < n; ++j) {
        double c = std::cos(M_PI * (2.0 * j + 1.0) / (4.0 * n + 2.0));
        tau[j] = float(tau_max / (2.0 * c * c));
        sum += tau[j];
    }
    float scale = float(total_time / sum);
    for (float& t : tau) t *= scale;
    return tau;
}

/// Perona-Malik g2 conductivity from the gradient of the 1.0-smoothed image.
inline Raster conductivity(const Raster& img, float k) {
    Raster smooth = gaussian_blur(img, 1.0f);
    Raster g(img.width(), img.height(), 1);
    const float inv_k2 = 1.0f / (k * k);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            float gx = 0.5f * (smooth.at_clamped(x + 1, y) - smooth.at_clamped(x - 1, y));
            float gy = 0.5f * (smooth.at_clamped(x, y + 1) - smooth.at_clamped(x, y - 1));
            g.at(x, y) = 1.0f / (1.0f + (gx * gx + gy * gy) * inv_k2);
        }
    return g;
}

/// One explicit diffusion step, zero-flux borders.
inline void explicit_step(Raster& img, const Raster& g, float tau) {
    const int w = img.width(), h = img.height();
    Raster next(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float lc = img.at(x, y), gc = g.at(x, y);
            float flux = 0;
            if (x + 1 < w) flux += 0.5f * (gc + g.at(x + 1, y)) * (img.at(x + 1, y) - lc);
            if (x > 0) flux -= 0.5f * (gc + g.at(x - 1, y)) * (lc - img.at(x - 1, y));
            if (y + 1 < h) flux += 0.5f * (gc + g.at(x, y + 1)) * (img.at(x, y + 1) - lc);
            if (y > 0) flux -= 0.5f * (gc + g.at(x, y - 1)) * (lc - img.at(x, y - 1));
            next.at(x, y) = lc + tau * flux;
        }
    img = std::move(next);
}

/// Percentile of gradient magnitudes of the 1.0-smoothed image, ignoring
/// (near-)zero gradients.
inline float contrast_factor(const Raster& img, float percentile) {
    Raster smooth = gaussian_blur(img, 1.0f);
    std::vector<float> mags;
    mags.reserve(img.size());
    for (int y = 1; y < img.height() - 1; ++y)
        for (int x = 1; x < img.width() - 1; ++x) {
            float gx = 0.5f * (smooth.at(x + 1, y) - smooth.at(x - 1, y));
            float gy = 0.5f * (smooth.at(x, y + 1) - smooth.at(x, y - 1));
            float m = std::sqrt(gx * gx + gy * gy);
            if (m > 1e-8f) mags.push_back(m);
        }
    if (mags.empty()) return 0.03f;
    size_t idx = std::min(mags.size() - 1, size_t(percentile * mags.size()));
    std::nth_element(mags.begin(), mags.begin() + idx, mags.end());
    return std::max(mags[idx], 1e-6f);
}

} // namespace detail

/// Nonlinear diffusion scale space advanced by FED cycles between the target
/// times t = sigma^2 / 2 of the sigma schedule sigma = base * 2^(o + s/S).
inline ScaleSpace build_scale_space(const Raster& img, int octaves = 4, int sublevels = 4,
                                    float base_sigma = 1.6f) {
    if (img.width() < 64 || img.height() < 64)
        throw ImageTooSmall("build_scale_space: need at least 64x64");
    assert(img.channels() == 1 && octaves >= 1 && sublevels >= 1);

    ScaleSpace ss;
    ss.octaves = octaves;
    ss.sublevels = sublevels;
    ss.base_sigma = base_sigma;
    ss.contrast_k = detail::contrast_factor(img, 0.70f);

    const float tau_max = 0.25f;
    Raster current = gaussian_blur(img, base_sigma);
    float prev_time = 0.5f * base_sigma * base_sigma;

    for (int o = 0; o < octaves; ++o) {
        if (o > 0) {
            if (current.width() < 2 || current.height() < 2) break;
            current = downsample_half(current);
            if (current.width() < 16 || current.height() < 16) break;
        }
        const float grid_area = float(1 << (2 * o)); // time scales with spacing^2
        for (int s = 0; s < sublevels; ++s) {
            float sigma = base_sigma * std::pow(2.0f, o + float(s) / sublevels);
            float time = 0.5f * sigma * sigma;
            if (!(o == 0 && s == 0)) {
                float dt = (time - prev_time) / grid_area;
                Raster g = detail::conductivity(current, ss.contrast_k);
                for (float tau : detail::fed_tau_sequence(dt, tau_max))
                    detail::explicit_step(current, g, tau);
            }
            ss.levels.push_back({current, sigma, sigma / float(1 << o), o, s});
            prev_time = time;
        }
    }
    return ss;
}

} // namespace uwfkit

#endif
