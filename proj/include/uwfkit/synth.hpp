#ifndef UWFKIT_SYNTH_HPP
#define UWFKIT_SYNTH_HPP

#include "core.hpp"
#include "geometry.hpp"
#include "imgproc.hpp"

#include <cmath>
#include <random>

namespace uwfkit {

struct SynthParams {
    int width = 1024;
    int height = 1024;
    double scale_min = 0.85, scale_max = 1.25;
    double rotation_max = 0.5;       // radians
    double translation_max = 50;     // pixels (also used as the minimum when
                                     // translation_min is set)
    double translation_min = 0;      // pixels; >0 forces a minimum shift magnitude
    double projective_max = 1e-5;
    double noise_sigma = 0.02;
    int trunk_count = 7;
    float width_min = 2, width_max = 8; // vessel widths in pixels
};

struct SynthPair {
    Raster fixed;   // RI-like: dark vessels on a brighter background
    Raster moving;  // FA-like: bright vessels, warped by true_h^-1
    Homography true_h; // moving -> fixed
};

namespace detail {

/// Stamp a Gaussian cross-section disc, max-composited.
inline void stamp(Raster& img, float cx, float cy, float sigma) {
    int r = std::max(1, int(std::ceil(2.5f * sigma)));
    int x0 = std::max(0, int(cx) - r), x1 = std::min(img.width() - 1, int(cx) + r);
    int y0 = std::max(0, int(cy) - r), y1 = std::min(img.height() - 1, int(cy) + r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            float d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            float v = std::exp(-0.5f * d2 / (sigma * sigma));
            float& dst = img.at(x, y);
            dst = std::max(dst, v);
        }
}

/// Random branching vessel tree as an intensity image in [0,1].
inline Raster vessel_tree(std::mt19937_64& rng, const SynthParams& p) {
    Raster img(p.width, p.height, 1, 0.0f);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::normal_distribution<float> jitter(0.0f, 0.08f);

    struct Branch { float x, y, angle, width, remaining; };
    std::vector<Branch> stack;
    const float cx = p.width * 0.5f, cy = p.height * 0.5f;
    for (int t = 0; t < p.trunk_count; ++t) {
        float ang = 2.0f * float(M_PI) * (t + unit(rng)) / p.trunk_count;
        float r0 = 0.05f * std::min(p.width, p.height) * unit(rng);
        stack.push_back({cx + r0 * std::cos(ang), cy + r0 * std::sin(ang), ang,
                         p.width_max * (0.7f + 0.3f * unit(rng)),
                         0.45f * std::min(p.width, p.height) * (0.7f + 0.3f * unit(rng))});
    }
    const float margin = 0.06f * std::min(p.width, p.height);
    while (!stack.empty()) {
        Branch b = stack.back();
        stack.pop_back();
        const float step = 2.0f;
        while (b.remaining > 0) {
            if (b.x < margin || b.y < margin || b.x > p.width - margin || b.y > p.height - margin)
                break;
            stamp(img, b.x, b.y, 0.5f * b.width);
            b.x += step * std::cos(b.angle);
            b.y += step * std::sin(b.angle);
            b.angle += jitter(rng);
            b.remaining -= step;
            b.width = std::max(p.width_min, b.width * 0.999f);
            if (unit(rng) < 0.012f && b.width > 1.5f * p.width_min) {
                float side = unit(rng) < 0.5f ? 1.0f : -1.0f;
                stack.push_back({b.x, b.y, b.angle + side * (0.4f + 0.5f * unit(rng)),
                                 b.width * 0.7f, b.remaining * 0.8f});
                b.width *= 0.85f;
            }
        }
    }
    return img;
}

inline Homography sample_transform(std::mt19937_64& rng, const SynthParams& p) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double s = p.scale_min + (p.scale_max - p.scale_min) * u01(rng);
    double theta = p.rotation_max * (2 * u01(rng) - 1);
    double tmag_lo = p.translation_min, tmag_hi = p.translation_max;
    double tmag = tmag_lo + (tmag_hi - tmag_lo) * u01(rng);
    double tdir = 2 * M_PI * u01(rng);
    double tx = tmag * std::cos(tdir), ty = tmag * std::sin(tdir);
    double p0 = p.projective_max * (2 * u01(rng) - 1);
    double p1 = p.projective_max * (2 * u01(rng) - 1);

    // similarity about the image center plus translation and mild projective row
    double cx = 0.5 * (p.width - 1), cy = 0.5 * (p.height - 1);
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    double c = std::cos(theta), sn = std::sin(theta);
    m(0, 0) = s * c;
    m(0, 1) = -s * sn;
    m(1, 0) = s * sn;
    m(1, 1) = s * c;
    m(0, 2) = cx - (m(0, 0) * cx + m(0, 1) * cy) + tx;
    m(1, 2) = cy - (m(1, 0) * cx + m(1, 1) * cy) + ty;
    m(2, 0) = p0;
    m(2, 1) = p1;
    return Homography::from_matrix(m);
}

} // namespace detail

/// Deterministic synthetic registration pair: a procedural vessel tree rendered
/// as the fixed (RI-like) frame, and a warped, polarity-inverted,
/// contrast-remapped, noisy copy as the moving (FA-like) frame.
inline SynthPair synth_pair(uint64_t seed, const SynthParams& params = {}) {
    std::mt19937_64 rng(seed ^ 0x5bf0'3635'dcf3'd8c5ull);
    Raster tree = detail::vessel_tree(rng, params);
    Homography true_h = detail::sample_transform(rng, params);

    Raster fixed(params.width, params.height, 1);
    for (size_t i = 0; i < tree.size(); ++i)
        fixed.data()[i] = std::clamp(0.68f - 0.55f * tree.data()[i], 0.0f, 1.0f);

    Raster fa_like(params.width, params.height, 1);
    for (size_t i = 0; i < tree.size(); ++i)
        fa_like.data()[i] = std::clamp(0.10f + 0.82f * std::pow(tree.data()[i], 0.9f), 0.0f, 1.0f);

    // moving(p) = fa_like(true_h * p) so that true_h maps moving -> fixed coords
    Raster moving = warp_image(fa_like, true_h.inverse(), params.width, params.height);
    std::normal_distribution<float> noise(0.0f, float(params.noise_sigma));
    for (float& v : moving.data())
        v = std::clamp(v + noise(rng), 0.0f, 1.0f);

    return {std::move(fixed), std::move(moving), true_h};
}

/// Training-style augmentation: random resized crop (area scale U[0.3, 3.5],
/// window clamped to the image), independent 50% horizontal/vertical flips,
/// rotation U[0, 45] degrees about the center with bilinear resampling and zero
/// fill. Deterministic per seed.
namespace detail {

/// First random draw of augment_random, exposed so the sampling distribution
/// can be checked directly.
inline double augment_area_scale(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    return 0.3 + (3.5 - 0.3) * u01(rng);
}

} // namespace detail

inline Raster augment_random(const Raster& img, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xa076'1d64'78bd'642full);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int w = img.width(), h = img.height();

    double area_scale = detail::augment_area_scale(rng);
    double lin = std::sqrt(area_scale);
    int cw = std::clamp(int(std::lround(w * lin)), 1, w);
    int ch = std::clamp(int(std::lround(h * lin)), 1, h);
    int x0 = int(u01(rng) * (w - cw + 1));
    int y0 = int(u01(rng) * (h - ch + 1));
    x0 = std::min(x0, w - cw);
    y0 = std::min(y0, h - ch);
    Raster crop(cw, ch, img.channels());
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            for (int c = 0; c < img.channels(); ++c)
                crop.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    Raster out = resize_bilinear(crop, w, h);

    if (u01(rng) < 0.5) { // horizontal flip
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w / 2; ++x)
                for (int c = 0; c < out.channels(); ++c)
                    std::swap(out.at(x, y, c), out.at(w - 1 - x, y, c));
    }
    if (u01(rng) < 0.5) { // vertical flip
        for (int y = 0; y < h / 2; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < out.channels(); ++c)
                    std::swap(out.at(x, y, c), out.at(x, h - 1 - y, c));
    }

    double angle = (M_PI / 4.0) * u01(rng); // [0, 45] degrees
    double c = std::cos(angle), s = std::sin(angle);
    double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    Raster rotated(w, h, out.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // inverse rotation about the center
            double dx = x - cx, dy = y - cy;
            double sx2 = cx + c * dx + s * dy;
            double sy2 = cy - s * dx + c * dy;
            if (sx2 < 0 || sy2 < 0 || sx2 > w - 1 || sy2 > h - 1) continue;
            for (int cc = 0; cc < out.channels(); ++cc)
                rotated.at(x, y, cc) = sample_bilinear(out, float(sx2), float(sy2), cc);
        }
    return rotated;
}

} // namespace uwfkit

#endif
