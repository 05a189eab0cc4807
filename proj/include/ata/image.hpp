#pragma once

// Minimal RGB raster used for Set-of-Marks overlays on real screenshots.

#include "ata/browser.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    Rgb at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, Rgb c);

    void fill_rect(const BoundingBox& box, Rgb c);
    void stroke_rect(const BoundingBox& box, Rgb c, int thickness = 2);
    /// Draws decimal digits with a built-in 3x5 font scaled by `scale`.
    void draw_number(int x, int y, int value, Rgb c, int scale = 2);

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

/// Pixel size of draw_number's output for `value` at `scale`.
BoundingBox number_extent(int value, int scale = 2);

/// Decodes PNG or binary PPM (P6) bytes.
Image decode_image(std::string_view bytes);
std::string encode_png(const Image& img);
std::string encode_ppm(const Image& img);

}  // namespace ata
