#include <catch2/catch_amalgamated.hpp>

#include <uwfkit/image_io.hpp>
#include <uwfkit/imgproc.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace uwfkit;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

} // namespace

TEST_CASE("pgm decode normalizes bytes", "[io]") {
    std::string path = temp_path("uwfkit_t_p5.pgm");
    write_bytes(path, {'P', '5', ' ', '2', ' ', '2', ' ', '2', '5', '5', '\n', 0, 255, 128, 64});
    Raster r = decode_image(path);
    REQUIRE(r.width() == 2);
    REQUIRE(r.height() == 2);
    REQUIRE(r.channels() == 1);
    CHECK(r.at(0, 0) == 0.0f);
    CHECK_THAT(r.at(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-7));
    CHECK_THAT(r.at(0, 1), Catch::Matchers::WithinAbs(0.50196, 1e-5));
    CHECK_THAT(r.at(1, 1), Catch::Matchers::WithinAbs(0.25098, 1e-5));
    fs::remove(path);
}

TEST_CASE("all-zero png round trip", "[io]") {
    std::string path = temp_path("uwfkit_t_zero.png");
    Raster zero(4, 4, 1, 0.0f);
    encode_image(zero, path);
    Raster back = decode_image(path);
    REQUIRE(back.width() == 4);
    REQUIRE(back.height() == 4);
    for (float v : back.data()) CHECK(v == 0.0f);
    fs::remove(path);
}

TEST_CASE("garbage bytes raise CorruptFile", "[io]") {
    std::string path = temp_path("uwfkit_t_garbage.png");
    write_bytes(path, {0x12, 0x34, 0x56});
    CHECK_THROWS_AS(decode_image(path), CorruptFile);
    fs::remove(path);
}

TEST_CASE("encode/decode round trip within quantization half-step", "[io]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Raster r(16, 16, 1);
    for (float& v : r.data()) v = u(rng);
    for (const char* name : {"uwfkit_t_rt.png", "uwfkit_t_rt.pgm"}) {
        std::string path = temp_path(name);
        encode_image(r, path);
        Raster back = decode_image(path);
        REQUIRE(back.same_shape(r));
        for (size_t i = 0; i < r.size(); ++i)
            CHECK_THAT(back.data()[i],
                       Catch::Matchers::WithinAbs(r.data()[i], 1.0 / 510.0 + 1e-7));
        fs::remove(path);
    }
}

TEST_CASE("0.5 stores as byte 128 (round half up)", "[io]") {
    std::string path = temp_path("uwfkit_t_half.pgm");
    encode_image(Raster(1, 1, 1, 0.5f), path);
    std::ifstream f(path, std::ios::binary);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    REQUIRE(!bytes.empty());
    CHECK(bytes.back() == 128);
    fs::remove(path);
}

TEST_CASE("unwritable destination raises IoError", "[io]") {
    CHECK_THROWS_AS(encode_image(Raster(2, 2, 1), "/nonexistent_dir_zzz/out.png"), IoError);
}

TEST_CASE("rgb png round trip", "[io]") {
    Raster rgb(3, 2, 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = float(x + y + c) / 8.0f;
    std::string path = temp_path("uwfkit_t_rgb.png");
    encode_image(rgb, path);
    Raster back = decode_image(path);
    REQUIRE(back.channels() == 3);
    for (size_t i = 0; i < rgb.size(); ++i)
        CHECK_THAT(back.data()[i], Catch::Matchers::WithinAbs(rgb.data()[i], 1.0 / 510.0 + 1e-7));
    fs::remove(path);
}

TEST_CASE("grayscale conversion weights", "[imgproc]") {
    Raster red(1, 1, 3);
    red.at(0, 0, 0) = 1.0f;
    CHECK_THAT(to_grayscale(red).at(0, 0), Catch::Matchers::WithinAbs(0.299, 1e-7));

    Raster gray(1, 1, 3);
    for (int c = 0; c < 3; ++c) gray.at(0, 0, c) = 0.42f;
    CHECK_THAT(to_grayscale(gray).at(0, 0), Catch::Matchers::WithinAbs(0.42, 1e-6));

    Raster mix(1, 1, 3);
    mix.at(0, 0, 0) = 0.2f;
    mix.at(0, 0, 1) = 0.4f;
    mix.at(0, 0, 2) = 0.6f;
    CHECK_THAT(to_grayscale(mix).at(0, 0), Catch::Matchers::WithinAbs(0.36300, 1e-6));
}

TEST_CASE("bilinear resize", "[imgproc]") {
    Raster r(5, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) r.at(x, y) = float(x * 4 + y) / 20.0f;
    Raster same = resize_bilinear(r, 5, 4);
    for (size_t i = 0; i < r.size(); ++i) CHECK(same.data()[i] == r.data()[i]);

    Raster c(7, 3, 1, 0.37f);
    Raster cr = resize_bilinear(c, 13, 9);
    for (float v : cr.data()) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.37, 1e-6));

    // half-pixel-centered mapping: 2x1 [0,1] -> 4x1 [0, 0.25, 0.75, 1]
    Raster two(2, 1, 1);
    two.at(1, 0) = 1.0f;
    Raster four = resize_bilinear(two, 4, 1);
    CHECK_THAT(four.at(0, 0), Catch::Matchers::WithinAbs(0.0, 1e-6));
    CHECK_THAT(four.at(1, 0), Catch::Matchers::WithinAbs(0.25, 1e-6));
    CHECK_THAT(four.at(2, 0), Catch::Matchers::WithinAbs(0.75, 1e-6));
    CHECK_THAT(four.at(3, 0), Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("peripheral crop ellipse", "[imgproc]") {
    Raster img(1024, 1024, 1, 1.0f);
    auto [cropped, mask] = peripheral_crop(img, 0.0);
    double frac = double(mask.count()) / double(mask.size());
    CHECK_THAT(frac, Catch::Matchers::WithinAbs(M_PI / 4.0, 0.005 * M_PI / 4.0));
    CHECK(mask.at(512, 512));       // center inside
    CHECK_FALSE(mask.at(0, 0));     // corner outside
    CHECK(cropped.at(0, 0) == 0.0f);
    CHECK(cropped.at(512, 512) == 1.0f);

    auto [c2, m2] = peripheral_crop(Raster(33, 17, 1, 1.0f), 0.1);
    CHECK(m2.at(16, 8));
    CHECK_FALSE(m2.at(0, 0));
    CHECK_FALSE(m2.at(32, 16));
}

TEST_CASE("erode shrinks masks", "[imgproc]") {
    BinaryMask m(9, 9);
    for (int y = 2; y <= 6; ++y)
        for (int x = 2; x <= 6; ++x) m.set(x, y, true);
    BinaryMask e = erode(m, 1);
    CHECK(e.count() == 9); // 5x5 block erodes to 3x3
    CHECK(e.at(4, 4));
    CHECK_FALSE(e.at(2, 2));
}
