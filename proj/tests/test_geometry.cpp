#include <catch2/catch_amalgamated.hpp>

#include <uwfkit/geometry.hpp>
#include <uwfkit/imgproc.hpp>

#include <cmath>
#include <random>

using namespace uwfkit;

namespace {

Homography make_similarity(double scale, double angle, double tx = 0, double ty = 0) {
    Homography h;
    h.m << scale * std::cos(angle), -scale * std::sin(angle), tx,
           scale * std::sin(angle),  scale * std::cos(angle), ty,
           0, 0, 1;
    return h;
}

double corner_error(const Homography& a, const Homography& b, double w, double h) {
    double e = 0;
    for (auto [x, y] : {std::pair{0.0, 0.0}, {w - 1, 0.0}, {0.0, h - 1}, {w - 1, h - 1}}) {
        auto pa = a.apply(x, y);
        auto pb = b.apply(x, y);
        e += std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
    }
    return e / 4.0;
}

} // namespace

TEST_CASE("dlt: unit square to itself is identity", "[geometry]") {
    std::vector<std::array<double, 4>> pairs = {
        {0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {1, 1, 1, 1}};
    Homography h = dlt_homography(pairs);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK_THAT(h.m(i, j), Catch::Matchers::WithinAbs(i == j ? 1.0 : 0.0, 1e-10));
}

TEST_CASE("dlt: pure translation", "[geometry]") {
    std::vector<std::array<double, 4>> pairs = {
        {0, 0, 5, 7}, {10, 0, 15, 7}, {0, 10, 5, 17}, {10, 10, 15, 17}};
    Homography h = dlt_homography(pairs);
    Eigen::Matrix3d expected;
    expected << 1, 0, 5, 0, 1, 7, 0, 0, 1;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK_THAT(h.m(i, j), Catch::Matchers::WithinAbs(expected(i, j), 1e-9));
}

TEST_CASE("dlt: exact recovery of a random projective map", "[geometry]") {
    Homography truth;
    truth.m << 1.05, 0.02, 12.0,
              -0.03, 0.98, -7.0,
               1e-5, -2e-5, 1.0;
    std::vector<std::array<double, 4>> pairs;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int i = 0; i < 6; ++i) {
        double x = u(rng), y = u(rng);
        auto p = truth.apply(x, y);
        pairs.push_back({x, y, p[0], p[1]});
    }
    Homography h = dlt_homography(pairs);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK_THAT(h.m(i, j), Catch::Matchers::WithinAbs(truth.m(i, j), 1e-7));
}

TEST_CASE("dlt: too few or degenerate points", "[geometry]") {
    std::vector<std::array<double, 4>> three = {{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    CHECK_THROWS_AS(dlt_homography(three), DegenerateConfiguration);
    // four collinear points carry no projective information
    std::vector<std::array<double, 4>> collinear = {
        {0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2, 2, 2}, {3, 3, 3, 3}};
    CHECK_THROWS_AS(dlt_homography(collinear), DegenerateConfiguration);
}

namespace {

// build a synthetic match problem: inlier keypoints consistent with `truth`,
// plus uniform outliers
struct MatchProblem {
    KeypointSet moving, fixed;
    MatchSet matches;
};

MatchProblem make_problem(const Homography& truth, int n_inliers, int n_outliers,
                          uint64_t seed, double noise = 0.3) {
    MatchProblem p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(50.0, 950.0);
    std::normal_distribution<double> jitter(0.0, noise);
    for (int i = 0; i < n_inliers + n_outliers; ++i) {
        double x = u(rng), y = u(rng);
        Keypoint km;
        km.x = float(x);
        km.y = float(y);
        Keypoint kf;
        if (i < n_inliers) {
            auto q = truth.apply(x, y);
            kf.x = float(q[0] + jitter(rng));
            kf.y = float(q[1] + jitter(rng));
        } else {
            kf.x = float(u(rng));
            kf.y = float(u(rng));
        }
        p.moving.push_back(km);
        p.fixed.push_back(kf);
        p.matches.push_back({i, i, 0});
    }
    return p;
}

} // namespace

TEST_CASE("ransac: zero-noise consensus is total", "[geometry]") {
    Homography truth = make_similarity(1.1, 0.2, 20, -10);
    MatchProblem p = make_problem(truth, 60, 0, 3, 0.0);
    RegistrationResult r = ransac_homography(p.matches, p.moving, p.fixed, 3.0, 0.995, 2000, 0);
    CHECK(r.inlier_count == r.total_matches);
    CHECK(r.total_matches == 60);
    // keypoint coordinates are stored as float, which caps the achievable
    // precision around 1e-5 relative
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK_THAT(r.homography.m(i, j),
                       Catch::Matchers::WithinAbs(truth.m(i, j),
                                                  1e-5 * std::max(1.0, std::abs(truth.m(i, j)))));
}

TEST_CASE("ransac: 40 percent outliers", "[geometry]") {
    Homography truth = make_similarity(1.05, -0.15, 30, 25);
    int good = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        MatchProblem p = make_problem(truth, 120, 80, seed);
        RegistrationResult r =
            ransac_homography(p.matches, p.moving, p.fixed, 3.0, 0.995, 2000, seed);
        if (corner_error(r.homography, truth, 1000, 1000) < 2.0) ++good;
    }
    CHECK(good >= 90);
}

TEST_CASE("ransac: degenerate matches never crash", "[geometry]") {
    KeypointSet moving, fixed;
    MatchSet matches;
    for (int i = 0; i < 5; ++i) {
        Keypoint k;
        // first four collinear, one off-axis
        k.x = float(i < 4 ? i * 10 : 33);
        k.y = float(i < 4 ? i * 10 : 7);
        moving.push_back(k);
        fixed.push_back(k);
        matches.push_back({i, i, 0});
    }
    try {
        RegistrationResult r = ransac_homography(matches, moving, fixed, 3.0, 0.995, 500, 1);
        CHECK(r.total_matches == 5);
    } catch (const NoConsensus&) {
        SUCCEED("NoConsensus is an accepted outcome");
    }
    CHECK_THROWS_AS(ransac_homography(MatchSet{}, moving, fixed, 3.0, 0.995, 500, 1),
                    TooFewMatches);
}

TEST_CASE("similarity decomposition", "[geometry]") {
    auto [s1, r1] = similarity_decompose(Homography::identity());
    CHECK(s1 == 1.0);
    CHECK(r1 == 0.0);

    auto [s2, r2] = similarity_decompose(make_similarity(1.0, 0.3));
    CHECK_THAT(s2, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(r2, Catch::Matchers::WithinAbs(0.3, 1e-12));

    // unimodular shear does not change the area-based scale
    Homography h = make_similarity(1.2, 0.4);
    Eigen::Matrix3d shear = Eigen::Matrix3d::Identity();
    shear(0, 1) = 0.1;
    h.m = h.m * shear;
    auto [s3, r3] = similarity_decompose(h);
    CHECK_THAT(s3, Catch::Matchers::WithinAbs(1.2, 1e-9));
}

TEST_CASE("validity restriction", "[geometry]") {
    CHECK(validity_check(Homography::identity()).pass);

    ValidityOutcome low = validity_check(make_similarity(0.5, 0.0));
    CHECK_FALSE(low.pass);
    CHECK(low.reason.find("scale") != std::string::npos);
    CHECK(low.reason.find("< 0.8") != std::string::npos);

    ValidityOutcome high = validity_check(make_similarity(1.5, 0.0));
    CHECK_FALSE(high.pass);
    CHECK(high.reason.find("> 1.3") != std::string::npos);

    ValidityOutcome rot = validity_check(make_similarity(1.0, 2.5));
    CHECK_FALSE(rot.pass);
    CHECK(rot.reason.find("rotation") != std::string::npos);

    Homography refl;
    refl.m << 1, 0, 0, 0, -1, 0, 0, 0, 1;
    ValidityOutcome r = validity_check(refl);
    CHECK_FALSE(r.pass);
    CHECK(r.reason == "reflection");
}

TEST_CASE("warp: identity and translation", "[geometry]") {
    Raster img(32, 32, 1);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : img.data()) v = u(rng);
    Raster out = warp_image(img, Homography::identity(), 32, 32);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK_THAT(out.data()[i], Catch::Matchers::WithinAbs(img.data()[i], 1e-7));

    BinaryMask m(32, 32);
    m.set(5, 5, true);
    Homography t = make_similarity(1.0, 0.0, 10, 0);
    BinaryMask wm = warp_mask(m, t, 32, 32);
    CHECK(wm.at(15, 5));
    CHECK(wm.count() == 1);

    BinaryMask id = warp_mask(m, Homography::identity(), 32, 32);
    CHECK(id.at(5, 5));
    CHECK(id.count() == 1);
}

TEST_CASE("warp: round trip loses little", "[geometry]") {
    // smooth blob image
    Raster img(128, 128, 1);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            float d2 = (x - 60.0f) * (x - 60.0f) + (y - 70.0f) * (y - 70.0f);
            img.at(x, y) = std::exp(-d2 / 800.0f);
        }
    Homography h = make_similarity(1.05, 0.1, 3, -2);
    Raster round = warp_image(warp_image(img, h, 128, 128), h.inverse(), 128, 128);
    double mad = 0;
    int n = 0;
    for (int y = 10; y < 118; ++y)
        for (int x = 10; x < 118; ++x) {
            mad += std::abs(round.at(x, y) - img.at(x, y));
            ++n;
        }
    CHECK(mad / n < 0.02);
}

TEST_CASE("dice coefficient", "[geometry]") {
    BinaryMask a(20, 20), b(20, 20), valid(20, 20, true);
    for (int i = 0; i < 10; ++i) a.set(i, 0, true);
    CHECK(dice_coefficient(a, a, valid) == 1.0);

    for (int i = 0; i < 10; ++i) b.set(i, 1, true);
    CHECK(dice_coefficient(a, b, valid) == 0.0);

    // |A| = |B| = 100, |A and B| = 50 -> dice exactly at the 0.5 gate
    BinaryMask e(20, 20), f(20, 20);
    for (int i = 0; i < 100; ++i) e.set(i % 20, i / 20, true);   // cells 0..99
    for (int i = 50; i < 150; ++i) f.set(i % 20, i / 20, true);  // cells 50..149
    CHECK(dice_coefficient(e, f, valid) == 0.5);

    // empty valid region: |A| + |B| = 0 inside it, so 0 by convention
    BinaryMask empty_valid(20, 20, false);
    CHECK(dice_coefficient(a, b, empty_valid) == 0.0);
}

TEST_CASE("refine: recovers a perturbed homography", "[geometry]") {
    // textured image with distinct blobs
    Raster img(256, 256, 1, 0.0f);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> u(20.0f, 235.0f);
    for (int k = 0; k < 40; ++k) {
        float cx = u(rng), cy = u(rng);
        for (int y = 0; y < 256; ++y)
            for (int x = 0; x < 256; ++x) {
                float d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                img.at(x, y) = std::max(img.at(x, y), std::exp(-d2 / 18.0f));
            }
    }
    Homography truth = make_similarity(1.02, 0.01, 2.0, -1.5);
    Raster moving = warp_image(img, truth.inverse(), 256, 256);
    BinaryMask valid(256, 256, true);

    Homography init = make_similarity(1.0, 0.0, 0.0, 0.0); // ~3 px off at corners
    Homography refined = refine_homography(img, moving, init, valid, &valid);
    CHECK(corner_error(refined, truth, 256, 256) < 0.5);
}
