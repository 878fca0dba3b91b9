#include "hazediff/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace hazediff {

namespace {

std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

unsigned char to_byte(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

// ---- PNM (binary PGM P5 / PPM P6) ----

int pnm_next_int(std::istream& in) {
    // Skips whitespace and '#' comments between header tokens.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw std::runtime_error("pnm: truncated header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("pnm: malformed header");
    return value;
}

PixelImage read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    int channels;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else throw std::runtime_error(path + ": not a binary PGM/PPM file");

    int w = pnm_next_int(in);
    int h = pnm_next_int(in);
    int maxval = pnm_next_int(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw std::runtime_error(path + ": unsupported PNM header");
    // Exactly one whitespace byte separates the header from the raster;
    // pnm_next_int has already consumed it.

    std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw std::runtime_error(path + ": truncated PNM data");

    PixelImage img(h, w, channels);
    double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < n; ++i) img.data[i] = raw[i] * scale;
    return img;
}

void write_pnm(const std::string& path, const PixelImage& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_pnm: 1 or 3 channels required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) raw[i] = to_byte(img.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- PNG via libpng ----

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

PixelImage read_png(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path + ": PNG decode error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path + ": unsupported PNG channel layout");
    }

    std::vector<png_byte> raw(static_cast<std::size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    PixelImage img(static_cast<int>(h), static_cast<int>(w), channels);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

void write_png(const std::string& path, const PixelImage& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: 1 or 3 channels required");
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(path + ": PNG encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> raw(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) raw[i] = to_byte(img.data[i]);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

PixelImage read_image(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "png") return read_png(path);
    if (ext == "ppm" || ext == "pgm") return read_pnm(path);
    throw std::runtime_error(path + ": unsupported image extension (png/ppm/pgm)");
}

void write_image(const std::string& path, const PixelImage& img) {
    std::string ext = lower_ext(path);
    if (ext == "png") write_png(path, img);
    else if (ext == "ppm" || ext == "pgm") write_pnm(path, img);
    else throw std::runtime_error(path + ": unsupported image extension (png/ppm/pgm)");
}

void write_image(const std::string& path, const FieldImage& img) {
    write_image(path, clamp01(img));
}

TransmissionMap read_tmap_pgm(const std::string& path) {
    PixelImage img = read_pnm(path);
    if (img.channels != 1)
        throw std::runtime_error(path + ": transmission map must be single-channel");
    TransmissionMap map(img.height, img.width);
    map.values = img.data;
    return map;
}

void write_tmap_pgm(const std::string& path, const TransmissionMap& map) {
    PixelImage img(map.height, map.width, 1);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        double v = map.values[i];
        img.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    write_pnm(path, img);
}

}  // namespace hazediff
