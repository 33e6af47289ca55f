#include "wsimil/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "wsimil/errors.hpp"

namespace wsimil {

ImageRGB ImageRGB::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    ImageRGB img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

ImageGray ImageGray::zeros(int w, int h) {
    ImageGray img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, 0);
    return img;
}

int luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<int>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

namespace {

// PNM header tokens are separated by whitespace; '#' starts a comment.
int next_pnm_int(std::istream& in, const std::filesystem::path& file) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF) throw data_error("truncated PNM header: " + file.string());
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw data_error("malformed PNM header: " + file.string());
    if (c != EOF) in.unget();
    return value;
}

} // namespace

PnmHeader read_pnm_header(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw data_error("cannot open raster: " + file.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    PnmHeader hdr;
    if (magic[0] == 'P' && magic[1] == '6') {
        hdr.channels = 3;
    } else if (magic[0] == 'P' && magic[1] == '5') {
        hdr.channels = 1;
    } else {
        throw data_error("not a binary PPM/PGM file: " + file.string());
    }
    hdr.width = next_pnm_int(in, file);
    hdr.height = next_pnm_int(in, file);
    hdr.maxval = next_pnm_int(in, file);
    if (hdr.width <= 0 || hdr.height <= 0) throw data_error("bad PNM dimensions: " + file.string());
    if (hdr.maxval != 255) throw data_error("unsupported PNM maxval: " + file.string());
    in.get(); // single whitespace byte before raster data
    hdr.data_offset = static_cast<std::uint64_t>(in.tellg());
    return hdr;
}

void write_ppm(const std::filesystem::path& file, const ImageRGB& img) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write raster: " + file.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw data_error("short write: " + file.string());
}

ImageRGB read_ppm(const std::filesystem::path& file) {
    PnmHeader hdr = read_pnm_header(file);
    if (hdr.channels != 3) throw data_error("expected P6: " + file.string());
    return read_ppm_region(file, hdr, 0, 0, hdr.width, hdr.height);
}

ImageRGB read_ppm_region(const std::filesystem::path& file, const PnmHeader& hdr, int x, int y, int w,
                         int h) {
    if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > hdr.width || y + h > hdr.height)
        throw data_error("region out of bounds: " + file.string());
    std::ifstream in(file, std::ios::binary);
    if (!in) throw data_error("cannot open raster: " + file.string());
    ImageRGB img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
    for (int row = 0; row < h; ++row) {
        std::uint64_t off =
            hdr.data_offset + 3ull * (static_cast<std::uint64_t>(y + row) * hdr.width + x);
        in.seekg(static_cast<std::streamoff>(off));
        in.read(reinterpret_cast<char*>(img.pixels.data() + row_bytes * row),
                static_cast<std::streamsize>(row_bytes));
        if (!in) throw data_error("short read: " + file.string());
    }
    return img;
}

void write_pgm(const std::filesystem::path& file, const ImageGray& img) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write raster: " + file.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw data_error("short write: " + file.string());
}

ImageGray read_pgm(const std::filesystem::path& file) {
    PnmHeader hdr = read_pnm_header(file);
    if (hdr.channels != 1) throw data_error("expected P5: " + file.string());
    std::ifstream in(file, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(hdr.data_offset));
    ImageGray img = ImageGray::zeros(hdr.width, hdr.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw data_error("short read: " + file.string());
    return img;
}

ImageRGB bilinear_resize(const ImageRGB& src, int new_w, int new_h) {
    if (src.empty() || new_w <= 0 || new_h <= 0) throw data_error("bilinear_resize: empty image");
    ImageRGB dst;
    dst.width = new_w;
    dst.height = new_h;
    dst.pixels.resize(static_cast<std::size_t>(new_w) * new_h * 3);
    const double sx = static_cast<double>(src.width) / new_w;
    const double sy = static_cast<double>(src.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = std::min(y0 + 1, src.height - 1);
        y0 = std::clamp(y0, 0, src.height - 1);
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = std::min(x0 + 1, src.width - 1);
            x0 = std::clamp(x0, 0, src.width - 1);
            const std::uint8_t* p00 = src.px(x0, y0);
            const std::uint8_t* p10 = src.px(x1, y0);
            const std::uint8_t* p01 = src.px(x0, y1);
            const std::uint8_t* p11 = src.px(x1, y1);
            std::uint8_t* o = dst.px(x, y);
            for (int c = 0; c < 3; ++c) {
                double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                           wy * ((1 - wx) * p01[c] + wx * p11[c]);
                o[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

} // namespace wsimil
