#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "warpsdf/image.hpp"
#include "warpsdf/rng.hpp"

using namespace warpsdf;

TEST_CASE("pfm round trip preserves bits") {
    Image img(7, 5);
    Rng rng = Rng::keyed({61});
    for (auto& v : img.data) v = float(rng.uniform(-3.0, 3.0));
    std::string path = (std::filesystem::temp_directory_path() / "warpsdf_rt.pfm").string();
    write_pfm(path, img);
    Image back = read_pfm(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
    std::remove(path.c_str());
}

TEST_CASE("pfm header is 32-bit little-endian") {
    Image img(2, 2);
    std::string path = (std::filesystem::temp_directory_path() / "warpsdf_hdr.pfm").string();
    write_pfm(path, img);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    int w, h;
    double scale;
    in >> magic >> w >> h >> scale;
    CHECK(magic == "PF");
    CHECK(w == 2);
    CHECK(h == 2);
    CHECK(scale == -1.0); // negative: little-endian
    std::remove(path.c_str());
}

TEST_CASE("ppm applies gamma and clamps") {
    Image img(2, 1);
    img.pixel(0, 0)[0] = 1.0f;
    img.pixel(1, 0)[1] = 4.0f; // clamps to 1
    std::string path = (std::filesystem::temp_directory_path() / "warpsdf_g.ppm").string();
    write_ppm(path, img);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    int w, h, maxv;
    in >> magic >> w >> h >> maxv;
    CHECK(magic == "P6");
    in.get();
    unsigned char px[6];
    in.read(reinterpret_cast<char*>(px), 6);
    CHECK(int(px[0]) == 255);
    CHECK(int(px[4]) == 255);
    CHECK(int(px[1]) == 0);
    std::remove(path.c_str());
}

TEST_CASE("downsample halves and box-averages") {
    Image img(4, 2);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 2; ++y) img.pixel(x, y)[0] = float(x);
    Image half = downsample2(img);
    CHECK(half.width == 2);
    CHECK(half.height == 1);
    CHECK(half.pixel(0, 0)[0] == doctest::Approx(0.5));
    CHECK(half.pixel(1, 0)[0] == doctest::Approx(2.5));
}
