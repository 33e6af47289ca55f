#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wsimil {

// Row-major interleaved RGB, 8 bits per channel.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // 3 * width * height

    static ImageRGB filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::uint8_t* px(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    bool empty() const { return width <= 0 || height <= 0; }
};

struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    static ImageGray zeros(int w, int h);
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Parsed header of a binary P6/P5 file; data_offset points at the first
// raster byte so regions can be read with seeks.
struct PnmHeader {
    int width = 0;
    int height = 0;
    int maxval = 0;
    int channels = 0; // 3 for P6, 1 for P5
    std::uint64_t data_offset = 0;
};

PnmHeader read_pnm_header(const std::filesystem::path& file);

void write_ppm(const std::filesystem::path& file, const ImageRGB& img);
ImageRGB read_ppm(const std::filesystem::path& file);

// Reads a w x h window of a P6 file. Memory O(w*h); one seek+read per row.
ImageRGB read_ppm_region(const std::filesystem::path& file, const PnmHeader& hdr, int x, int y, int w,
                         int h);

void write_pgm(const std::filesystem::path& file, const ImageGray& img);
ImageGray read_pgm(const std::filesystem::path& file);

// Luminance in [0,255]: round(0.299 R + 0.587 G + 0.114 B).
int luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b);

ImageRGB bilinear_resize(const ImageRGB& src, int new_w, int new_h);

} // namespace wsimil
