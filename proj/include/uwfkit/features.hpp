#ifndef UWFKIT_FEATURES_HPP
#define UWFKIT_FEATURES_HPP

#include "core.hpp"
#include "imgproc.hpp"
#include "scale_space.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

namespace uwfkit {

struct Keypoint {
    float x = 0, y = 0;     // full-resolution coordinates
    float sigma = 0;        // detection scale, full-resolution pixels
    float response = 0;
    float orientation = 0;  // radians in (-pi, pi]
    int level = 0;          // index into ScaleSpace::levels
};

using KeypointSet = std::vector<Keypoint>;

inline constexpr int kDescriptorBits = 486; // (C(4,2)+C(9,2)+C(16,2)) * 3 channels

struct Descriptor {
    std::array<uint64_t, 8> words{};

    void set_bit(int i) { words[i / 64] |= uint64_t(1) << (i % 64); }
    bool bit(int i) const { return (words[i / 64] >> (i % 64)) & 1; }

    int hamming(const Descriptor& o) const {
        int d = 0;
        for (int i = 0; i < 8; ++i)
            d += std::popcount(words[i] ^ o.words[i]);
        return d;
    }
};

using DescriptorSet = std::vector<Descriptor>;

namespace detail {

/// Determinant-of-Hessian response map, sigma^4 normalized in level units.
inline Raster doh_response(const Raster& img, float sigma_level) {
    const int w = img.width(), h = img.height();
    Raster resp(w, h, 1);
    const float norm = sigma_level * sigma_level * sigma_level * sigma_level;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float lxx = img.at_clamped(x + 1, y) - 2 * img.at(x, y) + img.at_clamped(x - 1, y);
            float lyy = img.at_clamped(x, y + 1) - 2 * img.at(x, y) + img.at_clamped(x, y - 1);
            float lxy = 0.25f * (img.at_clamped(x + 1, y + 1) - img.at_clamped(x - 1, y + 1) -
                                 img.at_clamped(x + 1, y - 1) + img.at_clamped(x - 1, y - 1));
            resp.at(x, y) = norm * (lxx * lyy - lxy * lxy);
        }
    return resp;
}

/// Level grid coordinate <-> full-resolution coordinate (2x2 mean pooling
/// places level pixel centers at (p + 0.5) * 2^o - 0.5).
inline float level_to_full(float v, int octave) {
    return (v + 0.5f) * float(1 << octave) - 0.5f;
}
inline float full_to_level(float v, int octave) {
    return (v + 0.5f) / float(1 << octave) - 0.5f;
}

/// Dominant gradient direction: max vector sum over a sliding 60-degree sector
/// of Gaussian-weighted gradient samples in a disc of radius 6 sigma.
inline float dominant_orientation(const Raster& img, float cx, float cy, float sigma_level) {
    const float radius = 6.0f * sigma_level;
    const int r = std::max(2, int(std::ceil(radius)));
    const float wsigma = 2.5f * sigma_level;
    struct Sample { float dx, dy, angle; };
    std::vector<Sample> samples;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > radius * radius) continue;
            int px = int(std::lround(cx)) + dx;
            int py = int(std::lround(cy)) + dy;
            if (px < 1 || py < 1 || px >= img.width() - 1 || py >= img.height() - 1) continue;
            float gx = 0.5f * (img.at(px + 1, py) - img.at(px - 1, py));
            float gy = 0.5f * (img.at(px, py + 1) - img.at(px, py - 1));
            float w = std::exp(-0.5f * (dx * dx + dy * dy) / (wsigma * wsigma));
            samples.push_back({w * gx, w * gy, std::atan2(gy, gx)});
        }
    if (samples.empty()) return 0;
    // bin the samples by gradient angle, then slide the 60-degree window over
    // bins instead of revisiting every sample per candidate angle
    constexpr int kBins = 128;
    float bx[kBins] = {}, by[kBins] = {};
    for (const auto& s : samples) {
        int b = int(std::floor((s.angle + float(M_PI)) / (2.0f * float(M_PI)) * kBins));
        b = std::clamp(b, 0, kBins - 1);
        bx[b] += s.dx;
        by[b] += s.dy;
    }
    const int half_bins = int(std::floor(float(M_PI) / 6.0f / (2.0f * float(M_PI) / kBins)));
    float best_norm2 = -1, best_angle = 0;
    for (int b = 0; b < kBins; ++b) {
        float sx = 0, sy = 0;
        for (int d = -half_bins; d <= half_bins; ++d) {
            int i = (b + d + kBins) % kBins;
            sx += bx[i];
            sy += by[i];
        }
        float n2 = sx * sx + sy * sy;
        if (n2 > best_norm2) {
            best_norm2 = n2;
            best_angle = std::atan2(sy, sx);
        }
    }
    return best_angle;
}

} // namespace detail

/// Scale-normalized determinant-of-Hessian extrema with subpixel refinement,
/// orientation assignment, validity-mask filtering, and a top-2000 cap ordered
/// by (response desc, y, x).
inline KeypointSet detect_keypoints(const ScaleSpace& ss, float threshold, const BinaryMask& valid,
                                    size_t max_keypoints = 2000) {
    assert(threshold > 0);
    std::vector<Raster> resp;
    resp.reserve(ss.levels.size());
    for (const auto& lv : ss.levels)
        resp.push_back(detail::doh_response(lv.image, lv.sigma_level));

    KeypointSet kps;
    for (size_t li = 0; li < ss.levels.size(); ++li) {
        const auto& lv = ss.levels[li];
        const Raster& r = resp[li];
        for (int y = 1; y < r.height() - 1; ++y)
            for (int x = 1; x < r.width() - 1; ++x) {
                float v = r.at(x, y);
                if (v <= threshold) continue;
                bool maximal = true;
                for (int dy = -1; dy <= 1 && maximal; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (r.at(x + dx, y + dy) >= v) {
                            maximal = false;
                            break;
                        }
                    }
                if (!maximal) continue;
                // compare against the two adjacent scale levels at the mapped position
                float fx = detail::level_to_full(float(x), lv.octave);
                float fy = detail::level_to_full(float(y), lv.octave);
                for (int d : {-1, 1}) {
                    size_t nj = li + d;
                    if (nj >= ss.levels.size()) continue;
                    const auto& nlv = ss.levels[nj];
                    int nx = int(std::lround(detail::full_to_level(fx, nlv.octave)));
                    int ny = int(std::lround(detail::full_to_level(fy, nlv.octave)));
                    if (nx < 0 || ny < 0 || nx >= resp[nj].width() || ny >= resp[nj].height())
                        continue;
                    if (resp[nj].at(nx, ny) >= v) {
                        maximal = false;
                        break;
                    }
                }
                if (!maximal) continue;
                // subpixel refinement by 2-D quadratic fit; reject offsets > 1 px
                float gx = 0.5f * (r.at(x + 1, y) - r.at(x - 1, y));
                float gy = 0.5f * (r.at(x, y + 1) - r.at(x, y - 1));
                float hxx = r.at(x + 1, y) - 2 * v + r.at(x - 1, y);
                float hyy = r.at(x, y + 1) - 2 * v + r.at(x, y - 1);
                float hxy = 0.25f * (r.at(x + 1, y + 1) - r.at(x - 1, y + 1) -
                                     r.at(x + 1, y - 1) + r.at(x - 1, y - 1));
                float det = hxx * hyy - hxy * hxy;
                float ox = 0, oy = 0;
                if (std::abs(det) > 1e-20f) {
                    ox = -(hyy * gx - hxy * gy) / det;
                    oy = -(hxx * gy - hxy * gx) / det;
                }
                if (std::abs(ox) > 1.0f || std::abs(oy) > 1.0f) continue;

                Keypoint kp;
                kp.level = int(li);
                kp.sigma = lv.sigma;
                kp.response = v;
                kp.x = detail::level_to_full(x + ox, lv.octave);
                kp.y = detail::level_to_full(y + oy, lv.octave);
                int mx = int(std::lround(kp.x)), my = int(std::lround(kp.y));
                if (mx < 0 || my < 0 || mx >= valid.width() || my >= valid.height()) continue;
                if (!valid.at(mx, my)) continue;
                kps.push_back(kp);
            }
    }
    std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (kps.size() > max_keypoints) kps.resize(max_keypoints);
    // orientation only for survivors of the response cap
    for (Keypoint& kp : kps) {
        const auto& lv = ss.levels[kp.level];
        kp.orientation = detail::dominant_orientation(lv.image,
                                                      detail::full_to_level(kp.x, lv.octave),
                                                      detail::full_to_level(kp.y, lv.octave),
                                                      lv.sigma_level);
    }
    return kps;
}

/// Full 486-bit M-LDB descriptor: a 20 sigma x 20 sigma oriented patch divided
/// into 2x2, 3x3, 4x4 grids; per cell mean intensity and mean x/y derivative;
/// one bit per unordered cell pair per channel. Keypoints whose patch leaves
/// the level image are dropped, keeping the two sets index-aligned.
inline DescriptorSet describe_keypoints(const ScaleSpace& ss, KeypointSet& kps) {
    constexpr int kSamples = 24; // divisible by 2, 3, 4
    struct LevelDerivs { Raster dx, dy; };
    std::vector<LevelDerivs> derivs;
    derivs.reserve(ss.levels.size());
    for (const auto& lv : ss.levels)
        derivs.push_back({derivative_x(lv.image), derivative_y(lv.image)});

    KeypointSet kept;
    DescriptorSet descs;
    for (const Keypoint& kp : kps) {
        const auto& lv = ss.levels[kp.level];
        const Raster& img = lv.image;
        const float half = 10.0f * lv.sigma_level;
        const float cx = detail::full_to_level(kp.x, lv.octave);
        const float cy = detail::full_to_level(kp.y, lv.octave);
        const float c = std::cos(kp.orientation), s = std::sin(kp.orientation);
        // rotated patch must stay inside the level image
        const float reach = half * float(M_SQRT2) + 1.0f;
        if (cx - reach < 0 || cy - reach < 0 ||
            cx + reach > img.width() - 1 || cy + reach > img.height() - 1)
            continue;

        float vals[kSamples][kSamples][3];
        for (int j = 0; j < kSamples; ++j)
            for (int i = 0; i < kSamples; ++i) {
                float u = ((i + 0.5f) / kSamples * 2.0f - 1.0f) * half;
                float v = ((j + 0.5f) / kSamples * 2.0f - 1.0f) * half;
                float px = cx + c * u - s * v;
                float py = cy + s * u + c * v;
                float gx = sample_bilinear(derivs[kp.level].dx, px, py);
                float gy = sample_bilinear(derivs[kp.level].dy, px, py);
                vals[j][i][0] = sample_bilinear(img, px, py);
                vals[j][i][1] = c * gx + s * gy;  // derivative along patch x
                vals[j][i][2] = -s * gx + c * gy; // derivative along patch y
            }

        Descriptor d;
        int bit = 0;
        for (int grid : {2, 3, 4}) {
            const int ncell = grid * grid;
            float mean[16][3] = {};
            int cnt[16] = {};
            for (int j = 0; j < kSamples; ++j)
                for (int i = 0; i < kSamples; ++i) {
                    int cell = (j * grid / kSamples) * grid + (i * grid / kSamples);
                    for (int ch = 0; ch < 3; ++ch) mean[cell][ch] += vals[j][i][ch];
                    ++cnt[cell];
                }
            for (int cell = 0; cell < ncell; ++cell)
                for (int ch = 0; ch < 3; ++ch) mean[cell][ch] /= cnt[cell];
            for (int ch = 0; ch < 3; ++ch)
                for (int a = 0; a < ncell; ++a)
                    for (int b = a + 1; b < ncell; ++b) {
                        if (mean[a][ch] > mean[b][ch]) d.set_bit(bit);
                        ++bit;
                    }
        }
        assert(bit == kDescriptorBits);
        kept.push_back(kp);
        descs.push_back(d);
    }
    kps = std::move(kept);
    return descs;
}

} // namespace uwfkit

#endif
