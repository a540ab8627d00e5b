#include "warpsdf/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace warpsdf {

namespace {

// PFM stores scanlines bottom-to-top; scale -1 marks little-endian.
void write_pfm_impl(const std::string& path, int w, int h, int channels,
                    const float* data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
    for (int y = h - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(data + std::size_t(channels) * w * y),
                  std::streamsize(sizeof(float)) * channels * w);
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

void write_pfm(const std::string& path, const Image& img) {
    write_pfm_impl(path, img.width, img.height, 3, img.data.data());
}

void write_pfm(const std::string& path, const ImageF& img) {
    std::vector<float> tmp(img.data.size());
    for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = float(img.data[i]);
    write_pfm_impl(path, img.width, img.height, 1, tmp.data());
}

Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0)
        throw std::runtime_error("not a PFM file: " + path);
    in.get(); // single whitespace after the header
    int channels = magic == "PF" ? 3 : 1;
    std::vector<float> raw(std::size_t(channels) * w * h);
    for (int y = h - 1; y >= 0; --y)
        in.read(reinterpret_cast<char*>(raw.data() + std::size_t(channels) * w * y),
                std::streamsize(sizeof(float)) * channels * w);
    if (!in) throw std::runtime_error("truncated PFM: " + path);
    if (scale > 0) { // big-endian source
        for (float& f : raw) {
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&f, &u, 4);
        }
    }
    Image img(w, h);
    if (channels == 3) {
        img.data = std::move(raw);
    } else {
        for (size_t i = 0; i < raw.size(); ++i)
            img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = raw[i];
    }
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(std::size_t(3) * img.width);
    for (int y = 0; y < img.height; ++y) {
        const float* src = img.data.data() + std::size_t(3) * img.width * y;
        for (int i = 0; i < 3 * img.width; ++i) {
            double v = std::clamp(double(src[i]), 0.0, 1.0);
            v = std::pow(v, 1.0 / 2.2);
            row[i] = (unsigned char)std::lround(v * 255.0);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Image downsample2(const Image& img) {
    int w = std::max(1, img.width / 2), h = std::max(1, img.height / 2);
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                int n = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int sx = 2 * x + dx, sy = 2 * y + dy;
                        if (sx < img.width && sy < img.height) {
                            acc += img.pixel(sx, sy)[c];
                            ++n;
                        }
                    }
                out.pixel(x, y)[c] = float(acc / n);
            }
        }
    return out;
}

} // namespace warpsdf
