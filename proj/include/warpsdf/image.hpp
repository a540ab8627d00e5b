#pragma once

#include <string>
#include <vector>

namespace warpsdf {

// Interleaved RGB, float32, row 0 at the top.
struct Image {
    int width = 0, height = 0;
    std::vector<float> data; // 3 * width * height

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(std::size_t(3) * w * h, 0.0f) {}
    float* pixel(int x, int y) { return data.data() + 3 * (std::size_t(y) * width + x); }
    const float* pixel(int x, int y) const {
        return data.data() + 3 * (std::size_t(y) * width + x);
    }
};

// Single-channel float64 (gradient images).
struct ImageF {
    int width = 0, height = 0;
    std::vector<double> data;

    ImageF() = default;
    ImageF(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0.0) {}
    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

// 32-bit little-endian PFM ("PF" color / "Pf" grayscale).
void write_pfm(const std::string& path, const Image& img);
void write_pfm(const std::string& path, const ImageF& img);
Image read_pfm(const std::string& path);

// 8-bit binary PPM with gamma 2.2.
void write_ppm(const std::string& path, const Image& img);

// Box-filter factor-2 downsample (pyramid levels).
Image downsample2(const Image& img);

} // namespace warpsdf
