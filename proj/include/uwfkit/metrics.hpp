#ifndef UWFKIT_METRICS_HPP
#define UWFKIT_METRICS_HPP

#include "core.hpp"
#include "imgproc.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace uwfkit {

struct MetricReport {
    double mae = 0;     // 0-255 scale
    double psnr = 0;    // dB; +inf sentinel when identical
    double ssim = 0;
    double ms_ssim = 0;
    double gv = 0;
};

namespace detail {

inline void check_same_single(const Raster& a, const Raster& b, const char* who) {
    if (!a.same_shape(b))
        throw DimensionMismatch(std::string(who) + ": image dimensions differ");
    if (a.channels() != 1)
        throw DimensionMismatch(std::string(who) + ": expected single-channel images");
}

} // namespace detail

/// Mean absolute pixel difference, reported on the 0-255 scale. An optional
/// mask restricts the mean to valid pixels.
inline double mae(const Raster& pred, const Raster& target, const BinaryMask* mask = nullptr) {
    detail::check_same_single(pred, target, "mae");
    double sum = 0, comp = 0; // Kahan
    size_t n = 0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x) {
            if (mask && !mask->at(x, y)) continue;
            double d = std::abs(double(pred.at(x, y)) - target.at(x, y)) - comp;
            double t = sum + d;
            comp = (t - sum) - d;
            sum = t;
            ++n;
        }
    if (n == 0) return 0;
    return 255.0 * sum / double(n);
}

/// Peak signal-to-noise ratio in dB over [0,1] pixels; +inf for identical inputs.
inline double psnr(const Raster& pred, const Raster& target, const BinaryMask* mask = nullptr) {
    detail::check_same_single(pred, target, "psnr");
    double sum = 0, comp = 0;
    size_t n = 0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x) {
            if (mask && !mask->at(x, y)) continue;
            double d = double(pred.at(x, y)) - target.at(x, y);
            double term = d * d - comp;
            double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
            ++n;
        }
    if (n == 0) return std::numeric_limits<double>::infinity();
    double mse = sum / double(n);
    if (mse <= 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

/// Separable Gaussian convolution in double precision, "valid" region only
/// (output is (w-2r) x (h-2r)). Window normalized to sum 1.
struct SsimFilter {
    int radius;
    std::vector<double> k;

    explicit SsimFilter(int window = 11, double sigma = 1.5) : radius(window / 2), k(window) {
        double sum = 0;
        for (int i = 0; i < window; ++i) {
            k[i] = std::exp(-0.5 * (i - radius) * (i - radius) / (sigma * sigma));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
    }

    std::vector<double> valid_conv(const std::vector<double>& src, int w, int h,
                                   int& ow, int& oh) const {
        ow = w - 2 * radius;
        oh = h - 2 * radius;
        std::vector<double> tmp(size_t(ow) * h), out(size_t(ow) * oh);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0;
                for (int i = 0; i < int(k.size()); ++i)
                    s += k[i] * src[size_t(y) * w + x + i];
                tmp[size_t(y) * ow + x] = s;
            }
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0;
                for (int i = 0; i < int(k.size()); ++i)
                    s += k[i] * tmp[size_t(y + i) * ow + x];
                out[size_t(y) * ow + x] = s;
            }
        return out;
    }
};

struct SsimTerms {
    double mean_ssim;
    double mean_cs; // contrast-structure component, for MS-SSIM
};

inline SsimTerms ssim_terms(const Raster& a, const Raster& b) {
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    const int w = a.width(), h = a.height();
    if (w < 11 || h < 11) throw ImageTooSmall("ssim: images smaller than the 11x11 window");

    std::vector<double> x(a.data().begin(), a.data().end());
    std::vector<double> y(b.data().begin(), b.data().end());
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    SsimFilter f;
    int ow, oh;
    auto mx = f.valid_conv(x, w, h, ow, oh);
    auto my = f.valid_conv(y, w, h, ow, oh);
    auto mxx = f.valid_conv(xx, w, h, ow, oh);
    auto myy = f.valid_conv(yy, w, h, ow, oh);
    auto mxy = f.valid_conv(xy, w, h, ow, oh);

    double sum_ssim = 0, sum_cs = 0;
    for (size_t i = 0; i < mx.size(); ++i) {
        double vx = mxx[i] - mx[i] * mx[i];
        double vy = myy[i] - my[i] * my[i];
        double cov = mxy[i] - mx[i] * my[i];
        double lum = (2 * mx[i] * my[i] + C1) / (mx[i] * mx[i] + my[i] * my[i] + C1);
        double cs = (2 * cov + C2) / (vx + vy + C2);
        sum_ssim += lum * cs;
        sum_cs += cs;
    }
    return {sum_ssim / double(mx.size()), sum_cs / double(mx.size())};
}

} // namespace detail

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2 on the [0,1] scale.
inline double ssim(const Raster& pred, const Raster& target) {
    detail::check_same_single(pred, target, "ssim");
    return detail::ssim_terms(pred, target).mean_ssim;
}

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Five-scale MS-SSIM: contrast-structure at every scale, luminance only at the
/// coarsest, weighted-exponent product with the published weights.
inline double ms_ssim(const Raster& pred, const Raster& target) {
    detail::check_same_single(pred, target, "ms_ssim");
    if (std::min(pred.width(), pred.height()) < 11 * 16)
        throw ImageTooSmall("ms_ssim: need min side >= 176 for 5 scales");
    Raster a = pred, b = target;
    double result = 1.0;
    for (int scale = 0; scale < 5; ++scale) {
        auto terms = detail::ssim_terms(a, b);
        if (scale < 4) {
            result *= std::pow(std::max(terms.mean_cs, 0.0), kMsSsimWeights[scale]);
            a = downsample_half(a);
            b = downsample_half(b);
        } else {
            result *= std::pow(std::max(terms.mean_ssim, 0.0), kMsSsimWeights[scale]);
        }
    }
    return result;
}

/// Gradient-variance score: Sobel gradient maps, non-overlapping patch x patch
/// tiles, population variance per tile; mean squared difference of the
/// variance maps, averaged over the x and y directions.
inline double gradient_variance(const Raster& pred, const Raster& target, int patch = 8) {
    detail::check_same_single(pred, target, "gradient_variance");
    if (patch < 1 || pred.width() % patch != 0 || pred.height() % patch != 0)
        throw PatchSizeInvalid("gradient_variance: dimensions must be divisible by patch");

    auto tile_variances = [&](const Raster& g) {
        const int tx = g.width() / patch, ty = g.height() / patch;
        std::vector<double> vars(size_t(tx) * ty);
        for (int j = 0; j < ty; ++j)
            for (int i = 0; i < tx; ++i) {
                double sum = 0, sum2 = 0;
                for (int y = 0; y < patch; ++y)
                    for (int x = 0; x < patch; ++x) {
                        double v = g.at(i * patch + x, j * patch + y);
                        sum += v;
                        sum2 += v * v;
                    }
                double n = double(patch) * patch;
                double mean = sum / n;
                vars[size_t(j) * tx + i] = sum2 / n - mean * mean;
            }
        return vars;
    };

    double total = 0;
    for (int dir = 0; dir < 2; ++dir) {
        Raster gp = dir == 0 ? sobel_x(pred) : sobel_y(pred);
        Raster gt = dir == 0 ? sobel_x(target) : sobel_y(target);
        auto vp = tile_variances(gp);
        auto vt = tile_variances(gt);
        double sum = 0;
        for (size_t i = 0; i < vp.size(); ++i) {
            double d = vp[i] - vt[i];
            sum += d * d;
        }
        total += sum / double(vp.size());
    }
    return 0.5 * total;
}

} // namespace uwfkit

#endif
