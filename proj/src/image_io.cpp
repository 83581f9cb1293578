#include "halfface/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace halfface {

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

uint8_t quantize(double v) {
    // round-half-up after clamping
    const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
    return static_cast<uint8_t>(std::min(255.0, std::floor(scaled + 0.5)));
}

// Skips PNM whitespace and comments, then reads one unsigned integer.
int read_pnm_int(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c))
        throw Error(ErrorCode::corrupt_header, "expected integer in PNM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 24)
            throw Error(ErrorCode::corrupt_header, "PNM header value too large");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return value;
}

GrayImage load_pgm(std::ifstream& in, bool binary) {
    const int w = read_pnm_int(in);
    const int h = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw Error(ErrorCode::corrupt_header, "bad PGM dimensions or maxval");

    GrayImage img(w, h);
    const size_t n = img.size();
    if (binary) {
        in.get(); // single whitespace byte after maxval
        std::vector<uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw Error(ErrorCode::corrupt_payload, "truncated P5 payload");
        for (size_t i = 0; i < n; ++i)
            img.data[i] = buf[i] / static_cast<double>(maxval);
    } else {
        for (size_t i = 0; i < n; ++i) {
            int v;
            try {
                v = read_pnm_int(in);
            } catch (const Error&) {
                throw Error(ErrorCode::corrupt_payload, "truncated P2 payload");
            }
            if (v > maxval)
                throw Error(ErrorCode::corrupt_payload, "P2 sample exceeds maxval");
            img.data[i] = v / static_cast<double>(maxval);
        }
    }
    return img;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

GrayImage load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp)
        throw Error(ErrorCode::io_failure, "cannot open " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png)
        throw Error(ErrorCode::io_failure, "png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info)
        throw Error(ErrorCode::io_failure, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw Error(ErrorCode::corrupt_payload, "libpng failed to decode " + path);

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    if (depth == 16) png_set_strip_16(ctx.png);
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    const int color = png_get_color_type(ctx.png, ctx.info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int channels = png_get_channels(ctx.png, ctx.info);
    if (channels != 1 && channels != 3)
        throw Error(ErrorCode::unsupported_format, "PNG with unsupported channel layout");

    std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        png_read_row(ctx.png, row.data(), nullptr);
        for (int x = 0; x < w; ++x) {
            if (channels == 1) {
                img.at(x, y) = row[x] / 255.0;
            } else {
                // BT.601 luminance
                const uint8_t* p = &row[static_cast<size_t>(x) * 3];
                img.at(x, y) = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
            }
        }
    }
    png_read_end(ctx.png, nullptr);
    return img;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void save_png(const GrayImage& img, const std::string& path) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp)
        throw Error(ErrorCode::io_failure, "cannot open " + path + " for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png)
        throw Error(ErrorCode::io_failure, "png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info)
        throw Error(ErrorCode::io_failure, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw Error(ErrorCode::io_failure, "libpng failed to encode " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            row[x] = quantize(img.at(x, y));
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::io_failure, "cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> buf(img.size());
    for (size_t i = 0; i < img.size(); ++i)
        buf[i] = quantize(img.data[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw Error(ErrorCode::io_failure, "write failed for " + path);
}

} // namespace

GrayImage load_image(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::missing_file, path);

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_failure, "cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() == 2) {
        if (magic[0] == 'P' && magic[1] == '5') return load_pgm(in, true);
        if (magic[0] == 'P' && magic[1] == '2') return load_pgm(in, false);
        if (static_cast<uint8_t>(magic[0]) == 0x89 && magic[1] == 'P') {
            in.close();
            return load_png(path);
        }
    }
    throw Error(ErrorCode::unsupported_format, path + " is neither PGM nor PNG");
}

void save_image(const GrayImage& img, const std::string& path) {
    if (img.width < 1 || img.height < 1)
        throw Error(ErrorCode::bad_argument, "empty image");
    if (lower_ext(path) == ".png")
        save_png(img, path);
    else
        save_pgm(img, path);
}

} // namespace halfface
