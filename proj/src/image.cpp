#include "ata/image.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <sstream>

namespace ata {

namespace {

// 3x5 glyphs for 0-9, one row per 3-bit nibble (MSB = left column).
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits = {{
    {7, 5, 5, 5, 7},  // 0
    {2, 6, 2, 2, 7},  // 1
    {7, 1, 7, 4, 7},  // 2
    {7, 1, 7, 1, 7},  // 3
    {5, 5, 7, 1, 1},  // 4
    {7, 4, 7, 1, 7},  // 5
    {7, 4, 7, 5, 7},  // 6
    {7, 1, 1, 1, 1},  // 7
    {7, 5, 7, 5, 7},  // 8
    {7, 5, 7, 1, 7},  // 9
}};

struct PngReadState {
    std::string_view data;
    std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->data.size()) png_error(png, "truncated PNG");
    std::memcpy(out, st->data.data() + st->pos, len);
    st->pos += len;
}

void png_write_cb(png_structp png, png_bytep in, png_size_t len) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(in), len);
}

void png_flush_cb(png_structp) {}

void png_error_cb(png_structp, png_const_charp msg) { throw Error(fmt::format("png: {}", msg)); }

void png_warn_cb(png_structp, png_const_charp) {}

Image decode_png(std::string_view bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
    if (!png) throw Error("png: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    PngReadState st{bytes, 0};
    png_set_read_fn(png, &st, png_read_cb);
    png_read_info(png, info);
    auto w = static_cast<int>(png_get_image_width(png, info));
    auto h = static_cast<int>(png_get_image_height(png, info));
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) throw Error("png: unsupported pixel layout");

    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());

    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto* p = rows[y] + x * 3;
            img.set(x, y, {p[0], p[1], p[2]});
        }
    return img;
}

Image decode_ppm(std::string_view bytes) {
    std::istringstream in{std::string(bytes)};
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw Error("ppm: unsupported header");
    in.get();
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            char px[3];
            if (!in.read(px, 3)) throw Error("ppm: truncated pixel data");
            img.set(x, y, {static_cast<std::uint8_t>(px[0]), static_cast<std::uint8_t>(px[1]),
                           static_cast<std::uint8_t>(px[2])});
        }
    return img;
}

}  // namespace

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw Error("negative image size");
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
}

void Image::fill_rect(const BoundingBox& box, Rgb c) {
    int x0 = std::max(0, box.x), y0 = std::max(0, box.y);
    int x1 = std::min(width_, box.x + box.width), y1 = std::min(height_, box.y + box.height);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
}

void Image::stroke_rect(const BoundingBox& box, Rgb c, int thickness) {
    fill_rect({box.x, box.y, box.width, thickness}, c);
    fill_rect({box.x, box.y + box.height - thickness, box.width, thickness}, c);
    fill_rect({box.x, box.y, thickness, box.height}, c);
    fill_rect({box.x + box.width - thickness, box.y, thickness, box.height}, c);
}

void Image::draw_number(int x, int y, int value, Rgb c, int scale) {
    auto digits = std::to_string(value);
    int cx = x;
    for (char d : digits) {
        if (d < '0' || d > '9') continue;
        const auto& glyph = kDigits[d - '0'];
        for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 3; ++col)
                if (glyph[row] & (4 >> col)) fill_rect({cx + col * scale, y + row * scale, scale, scale}, c);
        cx += 4 * scale;
    }
}

BoundingBox number_extent(int value, int scale) {
    auto n = static_cast<int>(std::to_string(value).size());
    return {0, 0, n * 4 * scale - scale, 5 * scale};
}

Image decode_image(std::string_view bytes) {
    static constexpr unsigned char kPngSig[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes);
    if (bytes.starts_with("P6")) return decode_ppm(bytes);
    throw Error("unrecognised image encoding");
}

std::string encode_png(const Image& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
    if (!png) throw Error("png: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    std::string out;
    png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            auto c = img.at(x, y);
            row[x * 3] = c.r;
            row[x * 3 + 1] = c.g;
            row[x * 3 + 2] = c.b;
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    return out;
}

std::string encode_ppm(const Image& img) {
    std::string out = fmt::format("P6\n{} {}\n255\n", img.width(), img.height());
    out.reserve(out.size() + static_cast<std::size_t>(img.width()) * img.height() * 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            auto c = img.at(x, y);
            out.push_back(static_cast<char>(c.r));
            out.push_back(static_cast<char>(c.g));
            out.push_back(static_cast<char>(c.b));
        }
    return out;
}

}  // namespace ata
