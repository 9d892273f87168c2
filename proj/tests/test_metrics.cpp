#include <catch2/catch_amalgamated.hpp>

#include <uwfkit/metrics.hpp>
#include <uwfkit/imgproc.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace uwfkit;

// ---------------------------------------------------------------------------
// Naive reference implementations, written before the library kernels and kept
// deliberately literal: per-window double loops, no separability tricks.

namespace {

struct NaiveSsim {
    double mean_ssim = 0;
    double mean_cs = 0;
};

NaiveSsim naive_ssim_terms(const Raster& a, const Raster& b) {
    constexpr int W = 11;
    constexpr double sigma = 1.5;
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    double kernel[W][W];
    double ksum = 0;
    for (int j = 0; j < W; ++j)
        for (int i = 0; i < W; ++i) {
            double dx = i - W / 2, dy = j - W / 2;
            kernel[j][i] = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
            ksum += kernel[j][i];
        }
    for (int j = 0; j < W; ++j)
        for (int i = 0; i < W; ++i) kernel[j][i] /= ksum;

    double sum_ssim = 0, sum_cs = 0;
    int n = 0;
    for (int y = 0; y + W <= a.height(); ++y)
        for (int x = 0; x + W <= a.width(); ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int j = 0; j < W; ++j)
                for (int i = 0; i < W; ++i) {
                    double u = a.at(x + i, y + j);
                    double v = b.at(x + i, y + j);
                    mx += kernel[j][i] * u;
                    my += kernel[j][i] * v;
                    mxx += kernel[j][i] * u * u;
                    myy += kernel[j][i] * v * v;
                    mxy += kernel[j][i] * u * v;
                }
            double vx = mxx - mx * mx;
            double vy = myy - my * my;
            double cov = mxy - mx * my;
            double lum = (2 * mx * my + C1) / (mx * mx + my * my + C1);
            double cs = (2 * cov + C2) / (vx + vy + C2);
            sum_ssim += lum * cs;
            sum_cs += cs;
            ++n;
        }
    return {sum_ssim / n, sum_cs / n};
}

double naive_ssim(const Raster& a, const Raster& b) { return naive_ssim_terms(a, b).mean_ssim; }

Raster naive_halve(const Raster& r) {
    Raster out(r.width() / 2, r.height() / 2, 1);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.at(x, y) = 0.25f * (r.at(2 * x, 2 * y) + r.at(2 * x + 1, 2 * y) +
                                    r.at(2 * x, 2 * y + 1) + r.at(2 * x + 1, 2 * y + 1));
    return out;
}

double naive_ms_ssim(Raster a, Raster b) {
    const double w[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    double result = 1.0;
    for (int s = 0; s < 5; ++s) {
        NaiveSsim t = naive_ssim_terms(a, b);
        if (s < 4) {
            result *= std::pow(std::max(t.mean_cs, 0.0), w[s]);
            a = naive_halve(a);
            b = naive_halve(b);
        } else {
            result *= std::pow(std::max(t.mean_ssim, 0.0), w[s]);
        }
    }
    return result;
}

double naive_gv(const Raster& a, const Raster& b, int patch) {
    auto sobel_map = [](const Raster& r, bool xdir) {
        Raster g(r.width(), r.height(), 1);
        for (int y = 0; y < r.height(); ++y)
            for (int x = 0; x < r.width(); ++x) {
                if (xdir)
                    g.at(x, y) = (r.at_clamped(x + 1, y - 1) - r.at_clamped(x - 1, y - 1)) +
                                 2 * (r.at_clamped(x + 1, y) - r.at_clamped(x - 1, y)) +
                                 (r.at_clamped(x + 1, y + 1) - r.at_clamped(x - 1, y + 1));
                else
                    g.at(x, y) = (r.at_clamped(x - 1, y + 1) - r.at_clamped(x - 1, y - 1)) +
                                 2 * (r.at_clamped(x, y + 1) - r.at_clamped(x, y - 1)) +
                                 (r.at_clamped(x + 1, y + 1) - r.at_clamped(x + 1, y - 1));
            }
        return g;
    };
    auto tile_vars = [&](const Raster& g) {
        std::vector<double> vars;
        for (int j = 0; j + patch <= g.height(); j += patch)
            for (int i = 0; i + patch <= g.width(); i += patch) {
                double mean = 0;
                for (int y = 0; y < patch; ++y)
                    for (int x = 0; x < patch; ++x) mean += g.at(i + x, j + y);
                mean /= patch * patch;
                double var = 0;
                for (int y = 0; y < patch; ++y)
                    for (int x = 0; x < patch; ++x) {
                        double d = g.at(i + x, j + y) - mean;
                        var += d * d;
                    }
                vars.push_back(var / (patch * patch));
            }
        return vars;
    };
    double total = 0;
    for (bool xdir : {true, false}) {
        auto va = tile_vars(sobel_map(a, xdir));
        auto vb = tile_vars(sobel_map(b, xdir));
        double mse = 0;
        for (size_t i = 0; i < va.size(); ++i) mse += (va[i] - vb[i]) * (va[i] - vb[i]);
        total += mse / double(va.size());
    }
    return 0.5 * total;
}

Raster random_raster(int w, int h, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Raster r(w, h, 1);
    for (float& v : r.data()) v = u(rng);
    return r;
}

} // namespace

// ---------------------------------------------------------------------------

TEST_CASE("mae basics", "[metrics]") {
    Raster a = random_raster(32, 32, 1);
    CHECK(mae(a, a) == 0.0);

    Raster zero(8, 8, 1, 0.0f);
    Raster offset(8, 8, 1, 16.0f / 255.0f);
    // constant 16/255 offset on the 0-255 scale; float storage of 16/255
    // costs ~1e-6 of the exact value
    CHECK_THAT(mae(offset, zero), Catch::Matchers::WithinAbs(16.0, 1e-5));

    Raster cb(8, 8, 1), inv(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            cb.at(x, y) = float((x + y) % 2);
            inv.at(x, y) = float(1 - (x + y) % 2);
        }
    CHECK(mae(cb, inv) == 255.0);

    Raster wrong(9, 8, 1);
    CHECK_THROWS_AS(mae(wrong, zero), DimensionMismatch);
}

TEST_CASE("mae respects the validity mask", "[metrics]") {
    Raster a(4, 4, 1, 0.0f), b(4, 4, 1, 0.0f);
    b.at(0, 0) = 1.0f; // disagreement only outside the mask
    BinaryMask m(4, 4, true);
    m.set(0, 0, false);
    CHECK(mae(a, b, &m) == 0.0);
    CHECK(mae(a, b) > 0.0);
}

TEST_CASE("psnr basics", "[metrics]") {
    Raster a = random_raster(32, 32, 1);
    CHECK(std::isinf(psnr(a, a)));

    Raster zero(8, 8, 1, 0.0f);
    Raster offset(8, 8, 1, 16.0f / 255.0f);
    CHECK_THAT(psnr(offset, zero), Catch::Matchers::WithinAbs(24.0486, 1e-3));
}

TEST_CASE("psnr of known-variance noise", "[metrics]") {
    const int n = 1024;
    Raster a(n, n, 1, 0.5f), b(n, n, 1, 0.5f);
    const double v = 0.0025; // sigma = 0.05
    std::mt19937_64 rng(42);
    std::normal_distribution<float> noise(0.0f, 0.05f);
    for (float& p : b.data()) p += noise(rng);
    CHECK_THAT(psnr(b, a), Catch::Matchers::WithinAbs(10.0 * std::log10(1.0 / v), 0.1));
}

TEST_CASE("ssim basics", "[metrics]") {
    Raster a = random_raster(64, 64, 7);
    CHECK_THAT(ssim(a, a), Catch::Matchers::WithinAbs(1.0, 1e-9));

    Raster half = a;
    for (float& v : half.data()) v *= 0.5f;
    double s = ssim(a, half);
    CHECK(s > 0.0);
    CHECK(s < 1.0);

    Raster tiny(8, 8, 1);
    CHECK_THROWS_AS(ssim(tiny, tiny), ImageTooSmall);
}

TEST_CASE("ssim matches the naive oracle", "[metrics][oracle]") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Raster a = random_raster(64, 64, seed * 2 + 100);
        Raster b = random_raster(64, 64, seed * 2 + 101);
        CHECK_THAT(ssim(a, b), Catch::Matchers::WithinAbs(naive_ssim(a, b), 1e-8));
    }
}

TEST_CASE("ms-ssim basics", "[metrics]") {
    double wsum = 0;
    for (double w : kMsSsimWeights) wsum += w;
    CHECK_THAT(wsum, Catch::Matchers::WithinAbs(1.0, 1e-3)); // published constants sum to 1.0001

    Raster a = random_raster(256, 256, 9);
    CHECK_THAT(ms_ssim(a, a), Catch::Matchers::WithinAbs(1.0, 1e-9));

    Raster small(64, 64, 1);
    CHECK_THROWS_AS(ms_ssim(small, small), ImageTooSmall);
}

TEST_CASE("ms-ssim matches the naive oracle", "[metrics][oracle]") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Raster a = random_raster(256, 256, seed * 2 + 300);
        Raster b = random_raster(256, 256, seed * 2 + 301);
        CHECK_THAT(ms_ssim(a, b), Catch::Matchers::WithinAbs(naive_ms_ssim(a, b), 1e-7));
    }
}

TEST_CASE("gradient variance basics", "[metrics]") {
    Raster a = random_raster(32, 32, 11);
    CHECK(gradient_variance(a, a) == 0.0);

    // heavy blur collapses the gradient variance of a sharp step
    Raster step(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) step.at(x, y) = x < 32 ? 0.0f : 1.0f;
    CHECK(gradient_variance(step, gaussian_blur(step, 4.0f)) > 0.0);

    CHECK_THROWS_AS(gradient_variance(a, a, 5), PatchSizeInvalid); // 32 % 5 != 0
}

TEST_CASE("gradient variance matches the naive oracle", "[metrics][oracle]") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Raster a = random_raster(32, 32, seed * 2 + 500);
        Raster b = random_raster(32, 32, seed * 2 + 501);
        CHECK_THAT(gradient_variance(a, b, 8),
                   Catch::Matchers::WithinAbs(naive_gv(a, b, 8), 1e-10));
    }
}
