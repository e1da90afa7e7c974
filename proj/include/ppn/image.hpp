// Copyright 2026 The PPN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PPN_IMAGE_HPP_
#define PPN_IMAGE_HPP_

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ppn/common.hpp"

namespace ppn {

struct Color {
    uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kBlack{0, 0, 0};

// Continuous image coordinates put (0,0) at the top-left corner and
// (w,h) at the bottom-right; pixel (px,py) covers [px,px+1) x [py,py+1).
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> px;  // 3 bytes per pixel, row-major

    ImageRGB() = default;
    ImageRGB(int w, int h, Color fill = kWhite) : width(w), height(h), px(static_cast<size_t>(w) * h * 3) {
        for (size_t i = 0; i < px.size(); i += 3) {
            px[i] = fill.r;
            px[i + 1] = fill.g;
            px[i + 2] = fill.b;
        }
    }

    uint8_t* at(int x, int y) { return &px[(static_cast<size_t>(y) * width + x) * 3]; }
    const uint8_t* at(int x, int y) const { return &px[(static_cast<size_t>(y) * width + x) * 3]; }

    void set(int x, int y, Color c) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        uint8_t* p = at(x, y);
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }
};

// Pixel span [first,last) covered by the continuous interval [a,b).
inline std::pair<int, int> pixel_span(double a, double b, int limit) {
    int first = static_cast<int>(std::ceil(a - 0.5));
    int last = static_cast<int>(std::ceil(b - 0.5));
    return {std::clamp(first, 0, limit), std::clamp(last, 0, limit)};
}

inline void fill_rect(ImageRGB& img, double x0, double y0, double x1, double y1, Color c) {
    auto [xa, xb] = pixel_span(x0, x1, img.width);
    auto [ya, yb] = pixel_span(y0, y1, img.height);
    for (int y = ya; y < yb; ++y)
        for (int x = xa; x < xb; ++x) img.set(x, y, c);
}

// Axis-aligned rectangle outline of the given stroke width (pixels).
inline void stroke_rect(ImageRGB& img, double x0, double y0, double x1, double y1, double t, Color c) {
    fill_rect(img, x0, y0, x1, y0 + t, c);
    fill_rect(img, x0, y1 - t, x1, y1, c);
    fill_rect(img, x0, y0, x0 + t, y1, c);
    fill_rect(img, x1 - t, y0, x1, y1, c);
}

// Thick line segment, drawn by stamping squares along the segment.
inline void draw_line(ImageRGB& img, double x0, double y0, double x1, double y1, double t, Color c) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    const double h = t / 2.0;
    for (int i = 0; i <= steps; ++i) {
        const double u = static_cast<double>(i) / steps;
        const double x = x0 + u * (x1 - x0);
        const double y = y0 + u * (y1 - y0);
        fill_rect(img, x - h, y - h, x + h, y + h, c);
    }
}

inline void fill_circle(ImageRGB& img, double cx, double cy, double r, Color c) {
    auto [xa, xb] = pixel_span(cx - r, cx + r, img.width);
    auto [ya, yb] = pixel_span(cy - r, cy + r, img.height);
    for (int y = ya; y < yb; ++y)
        for (int x = xa; x < xb; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r) img.set(x, y, c);
        }
}

// Filled circular sector between math-convention angles a0 and a1 (radians,
// counter-clockwise, a1 > a0). Screen y grows downward, so the y component
// is negated.
inline void fill_wedge(ImageRGB& img, double cx, double cy, double r, double a0, double a1, Color c) {
    auto [xa, xb] = pixel_span(cx - r, cx + r, img.width);
    auto [ya, yb] = pixel_span(cy - r, cy + r, img.height);
    const double span = a1 - a0;
    const double two_pi = 2.0 * M_PI;
    for (int y = ya; y < yb; ++y)
        for (int x = xa; x < xb; ++x) {
            const double dx = x + 0.5 - cx, dy = cy - (y + 0.5);
            if (dx * dx + dy * dy > r * r) continue;
            double ang = std::atan2(dy, dx) - a0;
            ang -= two_pi * std::floor(ang / two_pi);
            if (ang <= span) img.set(x, y, c);
        }
}

namespace detail {

// Separable running min/max filter with a square (2r+1) structuring element,
// applied per channel.
template <typename Cmp>
inline void square_filter(ImageRGB& img, int r, Cmp better) {
    if (r <= 0) return;
    ImageRGB tmp = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int xa = std::max(0, x - r), xb = std::min(img.width - 1, x + r);
            uint8_t best[3] = {img.at(xa, y)[0], img.at(xa, y)[1], img.at(xa, y)[2]};
            for (int xi = xa + 1; xi <= xb; ++xi)
                for (int ch = 0; ch < 3; ++ch)
                    if (better(img.at(xi, y)[ch], best[ch])) best[ch] = img.at(xi, y)[ch];
            std::memcpy(tmp.at(x, y), best, 3);
        }
    for (int x = 0; x < img.width; ++x)
        for (int y = 0; y < img.height; ++y) {
            const int ya = std::max(0, y - r), yb = std::min(img.height - 1, y + r);
            uint8_t best[3] = {tmp.at(x, ya)[0], tmp.at(x, ya)[1], tmp.at(x, ya)[2]};
            for (int yi = ya + 1; yi <= yb; ++yi)
                for (int ch = 0; ch < 3; ++ch)
                    if (better(tmp.at(x, yi)[ch], best[ch])) best[ch] = tmp.at(x, yi)[ch];
            std::memcpy(img.at(x, y), best, 3);
        }
}

}  // namespace detail

// Morphological erosion in the image sense (channelwise minimum): dark ink
// strokes grow by r pixels.
inline void erode(ImageRGB& img, int r) {
    detail::square_filter(img, r, [](uint8_t a, uint8_t b) { return a < b; });
}

// Morphological dilation (channelwise maximum): dark ink strokes thin.
inline void dilate(ImageRGB& img, int r) {
    detail::square_filter(img, r, [](uint8_t a, uint8_t b) { return a > b; });
}

inline ImageRGB resize_bilinear(const ImageRGB& src, int w, int h) {
    ImageRGB dst(w, h);
    const double sx = static_cast<double>(src.width) / w;
    const double sy = static_cast<double>(src.height) / h;
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = src.at(x0, y0)[ch] * (1 - wx) + src.at(x1, y0)[ch] * wx;
                const double bot = src.at(x0, y1)[ch] * (1 - wx) + src.at(x1, y1)[ch] * wx;
                dst.at(x, y)[ch] = static_cast<uint8_t>(std::lround(top * (1 - wy) + bot * wy));
            }
        }
    }
    return dst;
}

// Box (area) resampling; the right choice when shrinking by large factors,
// where bilinear would drop thin strokes entirely.
inline ImageRGB resize_area(const ImageRGB& src, int w, int h) {
    ImageRGB dst(w, h);
    const double sx = static_cast<double>(src.width) / w;
    const double sy = static_cast<double>(src.height) / h;
    for (int y = 0; y < h; ++y) {
        const double ya = y * sy, yb = (y + 1) * sy;
        for (int x = 0; x < w; ++x) {
            const double xa = x * sx, xb = (x + 1) * sx;
            double acc[3] = {0, 0, 0};
            double area = 0;
            for (int yi = static_cast<int>(ya); yi < static_cast<int>(std::ceil(yb)); ++yi) {
                const double cy = std::min<double>(yi + 1, yb) - std::max<double>(yi, ya);
                for (int xi = static_cast<int>(xa); xi < static_cast<int>(std::ceil(xb)); ++xi) {
                    const double cx = std::min<double>(xi + 1, xb) - std::max<double>(xi, xa);
                    const double cw = cx * cy;
                    const uint8_t* p = src.at(std::min(xi, src.width - 1), std::min(yi, src.height - 1));
                    for (int ch = 0; ch < 3; ++ch) acc[ch] += cw * p[ch];
                    area += cw;
                }
            }
            for (int ch = 0; ch < 3; ++ch)
                dst.at(x, y)[ch] = static_cast<uint8_t>(std::lround(acc[ch] / area));
        }
    }
    return dst;
}

inline ImageRGB resize(const ImageRGB& src, int w, int h) {
    if (w < src.width / 2 || h < src.height / 2) return resize_area(src, w, h);
    return resize_bilinear(src, w, h);
}

inline void write_png(const ImageRGB& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IOError("cannot open for writing: " + path);
    png_structp pngp = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop infop = pngp ? png_create_info_struct(pngp) : nullptr;
    if (!pngp || !infop || setjmp(png_jmpbuf(pngp))) {
        if (pngp) png_destroy_write_struct(&pngp, &infop);
        std::fclose(fp);
        throw IOError("png encode failed: " + path);
    }
    png_init_io(pngp, fp);
    png_set_IHDR(pngp, infop, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(pngp, infop);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(img.at(0, y));
    png_write_image(pngp, rows.data());
    png_write_end(pngp, nullptr);
    png_destroy_write_struct(&pngp, &infop);
    std::fclose(fp);
}

inline ImageRGB read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IOError("cannot open: " + path);
    png_structp pngp = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop infop = pngp ? png_create_info_struct(pngp) : nullptr;
    if (!pngp || !infop || setjmp(png_jmpbuf(pngp))) {
        if (pngp) png_destroy_read_struct(&pngp, &infop, nullptr);
        std::fclose(fp);
        throw IOError("png decode failed: " + path);
    }
    png_init_io(pngp, fp);
    png_read_info(pngp, infop);
    png_set_expand(pngp);
    png_set_strip_16(pngp);
    png_set_strip_alpha(pngp);
    if (png_get_color_type(pngp, infop) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(pngp, infop) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(pngp);
    png_read_update_info(pngp, infop);
    ImageRGB img(static_cast<int>(png_get_image_width(pngp, infop)),
                 static_cast<int>(png_get_image_height(pngp, infop)));
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.at(0, y);
    png_read_image(pngp, rows.data());
    png_destroy_read_struct(&pngp, &infop, nullptr);
    std::fclose(fp);
    return img;
}

}  // namespace ppn

#endif  // PPN_IMAGE_HPP_
