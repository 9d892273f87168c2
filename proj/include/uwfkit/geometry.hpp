#ifndef UWFKIT_GEOMETRY_HPP
#define UWFKIT_GEOMETRY_HPP

#include "core.hpp"
#include "features.hpp"
#include "imgproc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace uwfkit {

/// 3x3 projective transform, normalized so m[2][2] = 1.
struct Homography {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

    static Homography identity() { return {}; }

    static Homography from_matrix(const Eigen::Matrix3d& a) {
        if (std::abs(a(2, 2)) < 1e-15)
            throw SingularHomography("homography: cannot normalize, m[2][2] ~ 0");
        Homography h;
        h.m = a / a(2, 2);
        return h;
    }

    Homography inverse() const {
        if (std::abs(m.determinant()) < 1e-15)
            throw SingularHomography("homography: singular");
        return from_matrix(m.inverse().eval());
    }

    /// Apply to a 2-D point.
    std::array<double, 2> apply(double x, double y) const {
        Eigen::Vector3d p = m * Eigen::Vector3d(x, y, 1);
        if (std::abs(p.z()) < 1e-15)
            throw SingularHomography("homography: point maps to infinity");
        return {p.x() / p.z(), p.y() / p.z()};
    }

    Homography compose(const Homography& inner) const {
        return from_matrix((m * inner.m).eval());
    }
};

struct Match {
    int moving_index;
    int fixed_index;
    int hamming;
};

using MatchSet = std::vector<Match>;

struct ValidityOutcome {
    bool pass = false;
    std::string reason; // empty when pass
};

struct RegistrationResult {
    Homography homography;
    int inlier_count = 0;
    int total_matches = 0;
    double scale = 1.0;
    double rotation = 0.0;
    ValidityOutcome validity;
    double dice = 0.0;
};

/// Hamming nearest-neighbor matching with Lowe ratio test (strict: d1 < ratio*d2)
/// and mutual cross-check.
inline MatchSet match_descriptors(const DescriptorSet& a, const DescriptorSet& b,
                                  double ratio = 0.8) {
    assert(ratio > 0 && ratio <= 1);
    MatchSet out;
    if (a.empty() || b.empty()) return out;

    std::vector<int> best_for_b(b.size(), -1);
    std::vector<int> best_dist_b(b.size(), kDescriptorBits + 1);
    for (size_t j = 0; j < b.size(); ++j)
        for (size_t i = 0; i < a.size(); ++i) {
            int d = a[i].hamming(b[j]);
            if (d < best_dist_b[j]) {
                best_dist_b[j] = d;
                best_for_b[j] = int(i);
            }
        }

    for (size_t i = 0; i < a.size(); ++i) {
        int d1 = kDescriptorBits + 1, d2 = kDescriptorBits + 1, j1 = -1;
        for (size_t j = 0; j < b.size(); ++j) {
            int d = a[i].hamming(b[j]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                j1 = int(j);
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (j1 < 0) continue;
        if (b.size() > 1 && !(d1 < ratio * d2)) continue;
        if (best_for_b[j1] != int(i)) continue; // cross-check
        out.push_back({int(i), j1, d1});
    }
    return out;
}

/// Hartley-normalized direct linear transform from point correspondences
/// (src -> dst), 4 or more pairs.
inline Homography dlt_homography(const std::vector<std::array<double, 4>>& pairs) {
    const size_t n = pairs.size();
    if (n < 4) throw DegenerateConfiguration("dlt: need at least 4 correspondences");

    auto normalizer = [&](int off) {
        double mx = 0, my = 0;
        for (const auto& p : pairs) {
            mx += p[off];
            my += p[off + 1];
        }
        mx /= n;
        my /= n;
        double dist = 0;
        for (const auto& p : pairs)
            dist += std::hypot(p[off] - mx, p[off + 1] - my);
        dist /= n;
        double s = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
        Eigen::Matrix3d t;
        t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
        return t;
    };
    Eigen::Matrix3d ts = normalizer(0);
    Eigen::Matrix3d td = normalizer(2);

    Eigen::MatrixXd A(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        double x = ts(0, 0) * pairs[i][0] + ts(0, 2);
        double y = ts(1, 1) * pairs[i][1] + ts(1, 2);
        double u = td(0, 0) * pairs[i][2] + td(0, 2);
        double v = td(1, 1) * pairs[i][3] + td(1, 2);
        A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    if (svd.singularValues()(7) < 1e-10)
        throw DegenerateConfiguration("dlt: degenerate point configuration");
    Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    Eigen::Matrix3d h = td.inverse() * hn * ts;
    if (std::abs(h.determinant()) < 1e-12)
        throw DegenerateConfiguration("dlt: singular solution");
    return Homography::from_matrix(h);
}

namespace detail {

inline bool three_collinear(const std::array<std::array<double, 2>, 4>& pts) {
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            for (int c = b + 1; c < 4; ++c) {
                double cross = (pts[b][0] - pts[a][0]) * (pts[c][1] - pts[a][1]) -
                               (pts[b][1] - pts[a][1]) * (pts[c][0] - pts[a][0]);
                if (std::abs(cross) < 1e-9) return true;
            }
    return false;
}

inline double symmetric_transfer_error(const Homography& h, const Homography& hinv,
                                       double mx, double my, double fx, double fy) {
    auto f = h.apply(mx, my);
    auto b = hinv.apply(fx, fy);
    double fwd = std::hypot(f[0] - fx, f[1] - fy);
    double bwd = std::hypot(b[0] - mx, b[1] - my);
    return 0.5 * (fwd + bwd);
}

} // namespace detail

/// RANSAC homography from matched keypoints (moving -> fixed), symmetric
/// transfer error scoring, adaptive termination, final least-squares refit on
/// the best consensus set. Deterministic for a fixed seed.
inline RegistrationResult ransac_homography(const MatchSet& matches, const KeypointSet& moving,
                                            const KeypointSet& fixed, double thresh_px = 3.0,
                                            double conf = 0.995, int max_iter = 2000,
                                            uint64_t seed = 0) {
    const int n = int(matches.size());
    if (n < 4) throw TooFewMatches("ransac: fewer than 4 matches");

    std::vector<std::array<double, 4>> corr(n);
    for (int i = 0; i < n; ++i) {
        const Keypoint& m = moving[matches[i].moving_index];
        const Keypoint& f = fixed[matches[i].fixed_index];
        corr[i] = {double(m.x), double(m.y), double(f.x), double(f.y)};
    }

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_int_distribution<int> pick(0, n - 1);

    std::vector<int> best_inliers;
    int iter_bound = max_iter;
    for (int it = 0; it < iter_bound && it < max_iter; ++it) {
        int idx[4];
        for (int k = 0; k < 4; ++k) {
            int v;
            bool dup;
            do {
                v = pick(rng);
                dup = false;
                for (int j = 0; j < k; ++j)
                    if (idx[j] == v) dup = true;
            } while (dup);
            idx[k] = v;
        }
        std::array<std::array<double, 2>, 4> src;
        for (int k = 0; k < 4; ++k) src[k] = {corr[idx[k]][0], corr[idx[k]][1]};
        if (detail::three_collinear(src)) continue;

        Homography h;
        try {
            h = dlt_homography({corr[idx[0]], corr[idx[1]], corr[idx[2]], corr[idx[3]]});
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        Homography hinv;
        try {
            hinv = h.inverse();
        } catch (const SingularHomography&) {
            continue;
        }

        std::vector<int> inliers;
        for (int i = 0; i < n; ++i) {
            double e;
            try {
                e = detail::symmetric_transfer_error(h, hinv, corr[i][0], corr[i][1],
                                                     corr[i][2], corr[i][3]);
            } catch (const SingularHomography&) {
                continue;
            }
            if (e < thresh_px) inliers.push_back(i);
        }
        if (inliers.size() > best_inliers.size()) {
            best_inliers = std::move(inliers);
            double w = double(best_inliers.size()) / n;
            double denom = std::log(1.0 - std::min(0.9999, w * w * w * w));
            if (denom < 0) {
                int needed = int(std::ceil(std::log(1.0 - conf) / denom));
                iter_bound = std::min(max_iter, std::max(needed, it + 1));
            }
        }
    }

    if (int(best_inliers.size()) < 8)
        throw NoConsensus("ransac: best consensus below 8 inliers");

    // refit on the consensus set, then re-gate and refit until stable
    std::vector<int> inliers = best_inliers;
    Homography refined;
    for (int pass = 0; pass < 8; ++pass) {
        std::vector<std::array<double, 4>> inlier_corr;
        inlier_corr.reserve(inliers.size());
        for (int i : inliers) inlier_corr.push_back(corr[i]);
        refined = dlt_homography(inlier_corr);
        Homography rinv = refined.inverse();
        std::vector<int> next;
        for (int i = 0; i < n; ++i) {
            double e = detail::symmetric_transfer_error(refined, rinv, corr[i][0], corr[i][1],
                                                        corr[i][2], corr[i][3]);
            if (e < thresh_px) next.push_back(i);
        }
        if (next == inliers || int(next.size()) < 8) break;
        inliers = std::move(next);
    }

    RegistrationResult res;
    res.homography = refined;
    res.inlier_count = int(inliers.size());
    res.total_matches = n;
    return res;
}

/// Polar decomposition of the linear part: scale = sqrt(|det A|), rotation from
/// the closest rotation matrix. det A < 0 reports as a reflection.
inline std::pair<double, double> similarity_decompose(const Homography& h,
                                                      bool* reflection = nullptr) {
    Eigen::Matrix2d a = h.m.topLeftCorner<2, 2>();
    double det = a.determinant();
    if (std::abs(det) < 1e-15)
        throw SingularHomography("similarity_decompose: singular upper 2x2 block");
    if (reflection) *reflection = det < 0;
    double scale = std::sqrt(std::abs(det));
    // argmax_R trace(R^T A) for det A > 0
    double angle = std::atan2(a(1, 0) - a(0, 1), a(0, 0) + a(1, 1));
    return {scale, angle};
}

/// The registration validity restriction: scale within [0.8, 1.3] inclusive,
/// absolute rotation strictly below 2 rad.
inline ValidityOutcome validity_check(const Homography& h) {
    bool reflection = false;
    auto [scale, rotation] = similarity_decompose(h, &reflection);
    std::ostringstream msg;
    if (reflection) {
        msg << "reflection";
        return {false, msg.str()};
    }
    if (scale < 0.8) {
        msg << "scale " << scale << " < 0.8";
        return {false, msg.str()};
    }
    if (scale > 1.3) {
        msg << "scale " << scale << " > 1.3";
        return {false, msg.str()};
    }
    if (std::abs(rotation) >= 2.0) {
        msg << "|rotation| " << std::abs(rotation) << " >= 2";
        return {false, msg.str()};
    }
    return {true, ""};
}

/// Inverse-mapped warp, bilinear sampling, zero fill outside the source.
inline Raster warp_image(const Raster& src, const Homography& h, int out_w, int out_h) {
    Homography hinv = h.inverse();
    Raster out(out_w, out_h, src.channels());
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            auto [sx, sy] = hinv.apply(x, y);
            if (sx < 0 || sy < 0 || sx > src.width() - 1 || sy > src.height() - 1) continue;
            for (int c = 0; c < src.channels(); ++c)
                out.at(x, y, c) = sample_bilinear(src, float(sx), float(sy), c);
        }
    return out;
}

/// Mask variant: nearest-neighbor sampling, false outside the source.
inline BinaryMask warp_mask(const BinaryMask& src, const Homography& h, int out_w, int out_h) {
    Homography hinv = h.inverse();
    BinaryMask out(out_w, out_h);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            auto [sx, sy] = hinv.apply(x, y);
            int ix = int(std::lround(sx)), iy = int(std::lround(sy));
            if (ix < 0 || iy < 0 || ix >= src.width() || iy >= src.height()) continue;
            out.set(x, y, src.at(ix, iy));
        }
    return out;
}

/// Dice overlap 2|A n B| / (|A| + |B|) over the valid region; 0 when both empty.
inline double dice_coefficient(const BinaryMask& a, const BinaryMask& b, const BinaryMask& valid) {
    if (!a.same_shape(b) || !a.same_shape(valid))
        throw DimensionMismatch("dice: mask dimensions differ");
    size_t inter = 0, na = 0, nb = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (!valid.at(x, y)) continue;
            bool av = a.at(x, y), bv = b.at(x, y);
            na += av;
            nb += bv;
            inter += av && bv;
        }
    if (na + nb == 0) return 0.0;
    return 2.0 * double(inter) / double(na + nb);
}

/// Direct refinement of a homography by pyramidal Gauss-Newton alignment of
/// the moving image onto the fixed image (brightness constancy over
/// well-textured pixels). Optimizes the fixed->moving map so ridge pixels
/// contribute their gradient-normal constraint; returns the refined
/// moving->fixed homography, or the input if refinement does not reduce the
/// residual.
inline Homography refine_homography(const Raster& fixed, const Raster& moving,
                                    const Homography& h, const BinaryMask& valid,
                                    const BinaryMask* moving_valid = nullptr,
                                    int pyramid_levels = 3, int iterations = 30) {
    struct Level { Raster fixed, moving, mx, my; std::vector<std::pair<int, int>> px; };
    // keep away from crop boundaries where filter responses are distorted
    BinaryMask valid_eroded = erode(valid, 8);
    BinaryMask moving_valid_eroded =
        moving_valid ? erode(*moving_valid, 8) : BinaryMask();
    std::vector<Level> pyr;
    {
        Raster f = fixed, m = moving;
        for (int l = 0; l < pyramid_levels; ++l) {
            Level lv;
            lv.fixed = gaussian_blur(f, 1.0f);
            lv.moving = gaussian_blur(m, 1.0f);
            lv.mx = derivative_x(lv.moving);
            lv.my = derivative_y(lv.moving);
            // sample textured pixels of the fixed image inside the valid region
            Raster gx = derivative_x(lv.fixed), gy = derivative_y(lv.fixed);
            const int scale = 1 << l;
            for (int y = 1; y < lv.fixed.height() - 1; ++y)
                for (int x = 1; x < lv.fixed.width() - 1; ++x) {
                    int fy = std::min(valid.height() - 1, y * scale);
                    int fx = std::min(valid.width() - 1, x * scale);
                    if (!valid_eroded.at(fx, fy)) continue;
                    float g2 = gx.at(x, y) * gx.at(x, y) + gy.at(x, y) * gy.at(x, y);
                    if (g2 > 1e-5f) lv.px.emplace_back(x, y);
                }
            pyr.push_back(std::move(lv));
            if (l + 1 < pyramid_levels) {
                if (f.width() < 64 || f.height() < 64) break;
                f = downsample_half(f);
                m = downsample_half(m);
            }
        }
    }

    // optimize g: fixed -> moving, coarse to fine
    Eigen::Matrix3d g = h.inverse().m;
    for (int l = int(pyr.size()) - 1; l >= 0; --l) {
        const Level& lv = pyr[l];
        if (lv.px.size() < 64) continue;
        const double s = double(1 << l);
        // conjugate to level coordinates; 2x2 pooling puts level pixel centers
        // at x_full = s*x_level + (s-1)/2
        Eigen::Matrix3d sc = Eigen::Matrix3d::Identity();
        sc(0, 0) = sc(1, 1) = 1.0 / s;
        sc(0, 2) = sc(1, 2) = -(s - 1.0) / (2.0 * s);
        Eigen::Matrix3d gl = sc * g * sc.inverse();
        gl /= gl(2, 2);

        // projections must land inside the moving frame's valid region
        auto in_moving = [&](double u, double v) {
            if (u < 1 || v < 1 || u > lv.moving.width() - 2 || v > lv.moving.height() - 2)
                return false;
            if (moving_valid) {
                int fu = std::clamp(int(std::lround(u * s + (s - 1) * 0.5)), 0,
                                    moving_valid_eroded.width() - 1);
                int fv = std::clamp(int(std::lround(v * s + (s - 1) * 0.5)), 0,
                                    moving_valid_eroded.height() - 1);
                if (!moving_valid_eroded.at(fu, fv)) return false;
            }
            return true;
        };

        auto robust_err = [&](const Eigen::Matrix3d& m) {
            double e = 0;
            size_t used = 0;
            for (auto [x, y] : lv.px) {
                double d = m(2, 0) * x + m(2, 1) * y + m(2, 2);
                double u = (m(0, 0) * x + m(0, 1) * y + m(0, 2)) / d;
                double v = (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / d;
                if (!in_moving(u, v)) continue;
                double r = lv.fixed.at(x, y) - sample_bilinear(lv.moving, float(u), float(v));
                e += r * r;
                ++used;
            }
            return used > lv.px.size() / 4 ? e / double(used) : 1e30;
        };

        double best_err = robust_err(gl);
        for (int it = 0; it < iterations; ++it) {
            Eigen::Matrix<double, 8, 8> jtj = Eigen::Matrix<double, 8, 8>::Zero();
            Eigen::Matrix<double, 8, 1> jtr = Eigen::Matrix<double, 8, 1>::Zero();
            for (auto [x, y] : lv.px) {
                double d = gl(2, 0) * x + gl(2, 1) * y + gl(2, 2);
                double u = (gl(0, 0) * x + gl(0, 1) * y + gl(0, 2)) / d;
                double v = (gl(1, 0) * x + gl(1, 1) * y + gl(1, 2)) / d;
                if (!in_moving(u, v)) continue;
                double ix = sample_bilinear(lv.mx, float(u), float(v));
                double iy = sample_bilinear(lv.my, float(u), float(v));
                double r = lv.fixed.at(x, y) - sample_bilinear(lv.moving, float(u), float(v));
                Eigen::Matrix<double, 8, 1> j;
                j << ix * x / d, ix * y / d, ix / d,
                     iy * x / d, iy * y / d, iy / d,
                     (-u * ix - v * iy) * x / d, (-u * ix - v * iy) * y / d;
                jtj += j * j.transpose();
                jtr += j * r;
            }
            Eigen::Matrix<double, 8, 8> damped = jtj;
            for (int k = 0; k < 8; ++k) damped(k, k) += 1e-9 + 1e-6 * jtj(k, k);
            Eigen::Matrix<double, 8, 1> delta = damped.ldlt().solve(jtr);
            if (!delta.allFinite()) break;
            // backtracking line search on the GN step
            bool improved = false;
            double step = 1.0;
            for (int bt = 0; bt < 5 && !improved; ++bt, step *= 0.5) {
                Eigen::Matrix3d cand = gl;
                cand(0, 0) += step * delta(0); cand(0, 1) += step * delta(1);
                cand(0, 2) += step * delta(2); cand(1, 0) += step * delta(3);
                cand(1, 1) += step * delta(4); cand(1, 2) += step * delta(5);
                cand(2, 0) += step * delta(6); cand(2, 1) += step * delta(7);
                double err = robust_err(cand);
                if (err < best_err - 1e-15) {
                    best_err = err;
                    gl = cand;
                    improved = true;
                }
            }
            if (!improved) break;
        }
        g = sc.inverse() * gl * sc;
        g /= g(2, 2);
    }

    Homography refined;
    try {
        refined = Homography::from_matrix(g).inverse();
    } catch (const SingularHomography&) {
        return h;
    }
    return refined;
}

} // namespace uwfkit

#endif
