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

#ifndef PPN_CHARTGEN_HPP_
#define PPN_CHARTGEN_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ppn/common.hpp"
#include "ppn/core.hpp"
#include "ppn/image.hpp"
#include "ppn/manifest.hpp"
#include "ppn/rng.hpp"

namespace ppn {

// ---------------------------------------------------------------------------
// Palette

namespace detail {

// The 148 CSS4 colors, packed as hex triplets (alphabetical by name; the
// name aliases like gray/grey keep their duplicate values).
inline constexpr const char* kCss4Hex =
    "f0f8fffaebd700ffff7fffd4f0fffff5f5dcffe4c4000000ffebcd0000ff8a2be2a52a2a"
    "deb8875f9ea07fff00d2691eff7f506495edfff8dcdc143c00ffff00008b008b8bb8860b"
    "a9a9a9006400a9a9a9bdb76b8b008b556b2fff8c009932cc8b0000e9967a8fbc8f483d8b"
    "2f4f4f2f4f4f00ced19400d3ff149300bfff6969696969691e90ffb22222fffaf0228b22"
    "ff00ffdcdcdcf8f8ffffd700daa520808080008000adff2f808080f0fff0ff69b4cd5c5c"
    "4b0082fffff0f0e68ce6e6fafff0f57cfc00fffacdadd8e6f08080e0fffffafad2d3d3d3"
    "90ee90d3d3d3ffb6c1ffa07a20b2aa87cefa778899778899b0c4deffffe000ff0032cd32"
    "faf0e6ff00ff80000066cdaa0000cdba55d39370db3cb3717b68ee00fa9a48d1ccc71585"
    "191970f5fffaffe4e1ffe4b5ffdead000080fdf5e68080006b8e23ffa500ff4500da70d6"
    "eee8aa98fb98afeeeedb7093ffefd5ffdab9cd853fffc0cbdda0ddb0e0e6800080663399"
    "ff0000bc8f8f4169e18b4513fa8072f4a4602e8b57fff5eea0522dc0c0c087ceeb6a5acd"
    "708090708090fffafa00ff7f4682b4d2b48c008080d8bfd8ff634740e0d0ee82eef5deb3"
    "fffffff5f5f5ffff009acd32";

inline double luminance(Color c) {
    return (0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b) / 255.0;
}

}  // namespace detail

// 123 bar colors: the CSS4 space with the 25 lightest entries dropped.
inline const std::vector<Color>& chart_palette() {
    static const std::vector<Color> palette = [] {
        std::vector<Color> all;
        const std::string hex = detail::kCss4Hex;
        for (size_t i = 0; i + 6 <= hex.size(); i += 6) {
            auto byte = [&](size_t k) {
                return static_cast<uint8_t>(std::stoi(hex.substr(i + k, 2), nullptr, 16));
            };
            all.push_back(Color{byte(0), byte(2), byte(4)});
        }
        std::vector<size_t> order(all.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return detail::luminance(all[a]) < detail::luminance(all[b]);
        });
        order.resize(123);  // drop the 25 lightest
        std::sort(order.begin(), order.end());
        std::vector<Color> kept;
        for (size_t idx : order) kept.push_back(all[idx]);
        return kept;
    }();
    return palette;
}

// ---------------------------------------------------------------------------
// Chart specs

struct BarChartSpec {
    int n_bars = 0;
    double bar_width = 0.0;      // fraction of the per-bar slot, [0.1, 0.9]
    int bar_color = 0;           // palette index, [0, 123)
    std::vector<double> values;  // one per bar, (0, axis_max]
    int n_ticks = 0;             // value-axis ticks, origin included
    double axis_max = 1.0;
    uint64_t seed = 0;           // style jitter seed

    void validate() const {
        if (n_bars < 2 || n_bars > 10) throw RenderError("n_bars must be in [2,10]");
        if (bar_width < 0.1 || bar_width > 0.9) throw RenderError("bar_width must be in [0.1,0.9]");
        if (bar_color < 0 || bar_color >= 123) throw RenderError("bar_color must be in [0,123)");
        if (static_cast<int>(values.size()) != n_bars) throw RenderError("need one value per bar");
        if (n_ticks < 2) throw RenderError("n_ticks must be >= 2");
        if (!(axis_max > 0)) throw RenderError("axis_max must be positive");
        for (double v : values)
            if (!(v > 0) || v > axis_max) throw RenderError("values must lie in (0, axis_max]");
    }
};

struct PieChartSpec {
    int n_wedges = 0;
    std::vector<double> fractions;  // positive, sum to 1
    double start_angle = 0.0;       // degrees, counter-clockwise from +x
    double radius_fraction = 0.35;  // of the canvas side, (0, 0.5]
    uint64_t seed = 0;

    void validate() const {
        if (n_wedges < 2 || static_cast<int>(fractions.size()) != n_wedges)
            throw RenderError("need n_wedges >= 2 fractions");
        double sum = 0;
        for (double f : fractions) {
            if (!(f > 0)) throw RenderError("fractions must be positive");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw RenderError("fractions must sum to 1");
        if (!(radius_fraction > 0) || radius_fraction > 0.5)
            throw RenderError("radius_fraction must be in (0, 0.5]");
    }
};

struct AugmentConfig {
    double max_pad = 0.5;      // per-side padding, fraction of the source dim
    int erosion_max = 4;       // pixels; image-sense erosion thickens ink
    int dilation_max = 1;      // pixels
    double rescale_max = 0.5;  // per-dimension rescale amplitude
    std::string crop_bank;     // directory of real-document edge crops; empty = no pasting
    double paste_margin = 0.05;  // keep-out margin around the annotation hull

    void validate() const {
        if (max_pad < 0 || erosion_max < 0 || dilation_max < 0 || rescale_max < 0 || paste_margin < 0)
            throw ConfigError("augment maxima must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Rendered sample: image plus labeled points in continuous pixel coordinates.

struct PixelPoint {
    std::string cls;
    double x = 0.0;
    double y = 0.0;
};

struct ChartSample {
    ImageRGB image;
    std::vector<PixelPoint> points;

    ManifestEntry to_manifest_entry(const std::string& image_path) const {
        ManifestEntry e;
        e.image = image_path;
        e.width = image.width;
        e.height = image.height;
        for (const auto& p : points)
            e.points.push_back({p.cls, p.x / image.width, p.y / image.height});
        return e;
    }
};

// Net pixel-space mapping applied by an augmentation; lets callers verify
// annotation/pixel consistency independently.
struct AffineTransform {
    double scale_x = 1.0, scale_y = 1.0;
    double offset_x = 0.0, offset_y = 0.0;

    PixelPoint apply(const PixelPoint& p) const {
        return {p.cls, p.x * scale_x + offset_x, p.y * scale_y + offset_y};
    }
    AffineTransform then(const AffineTransform& next) const {
        return {scale_x * next.scale_x, scale_y * next.scale_y,
                offset_x * next.scale_x + next.offset_x, offset_y * next.scale_y + next.offset_y};
    }
};

// ---------------------------------------------------------------------------
// Spec sampling

inline BarChartSpec sample_bar_spec(Rng& rng) {
    BarChartSpec spec;
    spec.n_bars = static_cast<int>(rng.uniform_int(2, 10));
    spec.bar_width = rng.uniform(0.1, 0.9);
    spec.bar_color = static_cast<int>(rng.uniform_int(0, 122));
    spec.n_ticks = static_cast<int>(rng.uniform_int(3, 10));
    spec.axis_max = std::exp(rng.uniform(0.0, std::log(1e4)));
    spec.values.resize(static_cast<size_t>(spec.n_bars));
    for (double& v : spec.values) v = rng.uniform(0.05, 1.0) * spec.axis_max;
    spec.seed = rng.next_u64();
    return spec;
}

inline PieChartSpec sample_pie_spec(Rng& rng) {
    PieChartSpec spec;
    spec.n_wedges = static_cast<int>(rng.uniform_int(2, 9));
    for (int attempt = 0; attempt < 64; ++attempt) {
        spec.fractions.assign(static_cast<size_t>(spec.n_wedges), 0.0);
        double sum = 0;
        for (double& f : spec.fractions) {
            f = -std::log(1.0 - rng.uniform());  // Exp(1) => Dirichlet(1,..,1) after normalizing
            sum += f;
        }
        double mn = 1.0;
        for (double& f : spec.fractions) {
            f /= sum;
            mn = std::min(mn, f);
        }
        if (mn >= 0.02) break;
    }
    spec.start_angle = rng.uniform(0.0, 360.0);
    spec.radius_fraction = rng.uniform(0.25, 0.45);
    spec.seed = rng.next_u64();
    return spec;
}

// ---------------------------------------------------------------------------
// Rendering

// Vertical bar chart: value axis on the left with n_ticks evenly spaced tick
// marks (the chart origin is the k=0 tick), category axis at the bottom, and
// n_bars filled rectangles. Annotated points: each bar's top center and each
// tick's intersection with the value axis. Deterministic in the spec; style
// jitter (margins, stroke widths) derives from spec.seed.
inline ChartSample render_bar_chart(const BarChartSpec& spec, int render_size = 448) {
    spec.validate();
    Rng style(spec.seed);
    const double R = render_size;
    ChartSample out;
    out.image = ImageRGB(render_size, render_size, kWhite);

    const double x_left = R * style.uniform(0.10, 0.17);
    const double x_right = R * (1.0 - style.uniform(0.03, 0.10));
    const double y_top = R * style.uniform(0.05, 0.13);
    const double y_bottom = R * (1.0 - style.uniform(0.08, 0.16));
    const double stroke = std::max(1.0, std::round(R * style.uniform(0.0022, 0.0065)));
    const double tick_len = std::max(2.0, R * style.uniform(0.012, 0.026));
    const bool outline_bars = style.bernoulli(0.5);

    auto y_of = [&](double v) { return y_bottom - (v / spec.axis_max) * (y_bottom - y_top); };

    // bars first, axis ink on top
    const double slot = (x_right - x_left) / spec.n_bars;
    const Color fill = chart_palette()[static_cast<size_t>(spec.bar_color)];
    for (int i = 0; i < spec.n_bars; ++i) {
        const double xc = x_left + (i + 0.5) * slot;
        const double w = spec.bar_width * slot;
        const double yt = y_of(spec.values[static_cast<size_t>(i)]);
        fill_rect(out.image, xc - w / 2, yt, xc + w / 2, y_bottom, fill);
        if (outline_bars)
            stroke_rect(out.image, xc - w / 2, yt, xc + w / 2, y_bottom, std::max(1.0, stroke), kBlack);
        out.points.push_back({"bar", xc, yt});
    }

    fill_rect(out.image, x_left - stroke / 2, y_top, x_left + stroke / 2, y_bottom + stroke / 2, kBlack);
    fill_rect(out.image, x_left - stroke / 2, y_bottom - stroke / 2, x_right, y_bottom + stroke / 2, kBlack);
    for (int k = 0; k < spec.n_ticks; ++k) {
        const double v = spec.axis_max * k / (spec.n_ticks - 1);
        const double y = y_of(v);
        fill_rect(out.image, x_left - tick_len, y - stroke / 2, x_left, y + stroke / 2, kBlack);
        out.points.push_back({"tick", x_left, y});
    }
    return out;
}

// Pie chart: filled wedges at cumulative-fraction angles (counter-clockwise
// from start_angle), thin separator lines, a centroid point and one
// wedge_boundary point per wedge on the circle.
inline ChartSample render_pie_chart(const PieChartSpec& spec, int render_size = 448) {
    spec.validate();
    Rng style(spec.seed);
    const double R = render_size;
    ChartSample out;
    out.image = ImageRGB(render_size, render_size, kWhite);

    const double cx = R * (0.5 + style.uniform(-0.06, 0.06));
    const double cy = R * (0.5 + style.uniform(-0.06, 0.06));
    const double radius = spec.radius_fraction * R;
    const double stroke = std::max(1.0, std::round(R * style.uniform(0.0022, 0.005)));

    for (double f : spec.fractions)
        if (f * 2.0 * M_PI * radius < 1.0) throw RenderError("wedge arc below one rendered pixel");

    const double start = spec.start_angle * M_PI / 180.0;
    std::vector<double> bounds(static_cast<size_t>(spec.n_wedges) + 1, start);
    for (int k = 0; k < spec.n_wedges; ++k)
        bounds[static_cast<size_t>(k) + 1] =
            bounds[static_cast<size_t>(k)] + spec.fractions[static_cast<size_t>(k)] * 2.0 * M_PI;

    const auto& palette = chart_palette();
    const size_t color0 = static_cast<size_t>(style.uniform_int(0, 122));
    const size_t color_step = static_cast<size_t>(style.uniform_int(7, 48));
    for (int k = 0; k < spec.n_wedges; ++k) {
        const Color c = palette[(color0 + static_cast<size_t>(k) * color_step) % palette.size()];
        fill_wedge(out.image, cx, cy, radius, bounds[static_cast<size_t>(k)],
                   bounds[static_cast<size_t>(k) + 1], c);
    }
    out.points.push_back({"centroid", cx, cy});
    for (int k = 0; k < spec.n_wedges; ++k) {
        const double a = bounds[static_cast<size_t>(k)];
        const double bx = cx + radius * std::cos(a);
        const double by = cy - radius * std::sin(a);
        draw_line(out.image, cx, cy, bx, by, stroke, kBlack);
        out.points.push_back({"wedge_boundary", bx, by});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Augmentations

namespace detail {

// Pads by the given per-side pixel amounts (white), then crops to the given
// rectangle of the padded canvas. The crop must contain the source image.
inline AffineTransform pad_crop_apply(ChartSample& sample, int pad_l, int pad_t, int pad_r, int pad_b,
                                      int crop_x0, int crop_y0, int crop_x1, int crop_y1) {
    const ImageRGB& src = sample.image;
    ImageRGB padded(src.width + pad_l + pad_r, src.height + pad_t + pad_b, kWhite);
    for (int y = 0; y < src.height; ++y)
        std::memcpy(padded.at(pad_l, y + pad_t), src.at(0, y), static_cast<size_t>(src.width) * 3);
    ImageRGB cropped(crop_x1 - crop_x0, crop_y1 - crop_y0);
    for (int y = crop_y0; y < crop_y1; ++y)
        std::memcpy(cropped.at(0, y - crop_y0), padded.at(crop_x0, y),
                    static_cast<size_t>(cropped.width) * 3);
    AffineTransform t{1.0, 1.0, static_cast<double>(pad_l - crop_x0), static_cast<double>(pad_t - crop_y0)};
    for (auto& p : sample.points) p = t.apply(p);
    sample.image = std::move(cropped);
    return t;
}

inline AffineTransform rescale_apply(ChartSample& sample, double sx, double sy) {
    const int w2 = std::max(8, static_cast<int>(std::lround(sample.image.width * sx)));
    const int h2 = std::max(8, static_cast<int>(std::lround(sample.image.height * sy)));
    AffineTransform t{static_cast<double>(w2) / sample.image.width,
                      static_cast<double>(h2) / sample.image.height, 0.0, 0.0};
    if (w2 != sample.image.width || h2 != sample.image.height) {
        sample.image = resize_bilinear(sample.image, w2, h2);
        for (auto& p : sample.points) p = t.apply(p);
    }
    return t;
}

struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool intersects(const Box& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
};

inline Box annotation_hull(const ChartSample& sample, double margin_frac) {
    Box b{1e30, 1e30, -1e30, -1e30};
    for (const auto& p : sample.points) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    const double mx = margin_frac * (b.x1 - b.x0 + 1);
    const double my = margin_frac * (b.y1 - b.y0 + 1);
    return Box{b.x0 - mx, b.y0 - my, b.x1 + mx, b.y1 + my};
}

}  // namespace detail

// Random padding (up to max_pad per side) followed by a random crop that
// keeps the whole source chart in frame.
inline AffineTransform pad_crop_augment(ChartSample& sample, Rng& rng, const AugmentConfig& cfg) {
    cfg.validate();
    const int w = sample.image.width, h = sample.image.height;
    const int pad_l = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * w);
    const int pad_r = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * w);
    const int pad_t = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * h);
    const int pad_b = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * h);
    const int crop_x0 = static_cast<int>(rng.uniform(0.0, 1.0) * pad_l);
    const int crop_y0 = static_cast<int>(rng.uniform(0.0, 1.0) * pad_t);
    const int crop_x1 = w + pad_l + static_cast<int>(rng.uniform(0.0, 1.0) * pad_r);
    const int crop_y1 = h + pad_t + static_cast<int>(rng.uniform(0.0, 1.0) * pad_b);
    return detail::pad_crop_apply(sample, pad_l, pad_t, pad_r, pad_b, crop_x0, crop_y0, crop_x1, crop_y1);
}

// The real-augmentation chain: morphological jitter of the chart ink, pad,
// paste real-document fragments into the padded surroundings (never over
// the annotation hull), crop keeping the chart, then anisotropic rescale.
inline AffineTransform real_crop_augment(ChartSample& sample, Rng& rng, const AugmentConfig& cfg) {
    cfg.validate();
    if (cfg.erosion_max > 0 && rng.bernoulli(0.5))
        erode(sample.image, static_cast<int>(rng.uniform_int(1, cfg.erosion_max)));
    if (cfg.dilation_max > 0 && rng.bernoulli(0.5))
        dilate(sample.image, static_cast<int>(rng.uniform_int(1, cfg.dilation_max)));

    const int w = sample.image.width, h = sample.image.height;
    const int pad_l = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * w);
    const int pad_r = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * w);
    const int pad_t = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * h);
    const int pad_b = static_cast<int>(rng.uniform(0.0, cfg.max_pad) * h);
    AffineTransform t = detail::pad_crop_apply(sample, pad_l, pad_t, pad_r, pad_b, 0, 0,
                                               w + pad_l + pad_r, h + pad_t + pad_b);

    if (!cfg.crop_bank.empty()) {
        std::vector<std::string> bank;
        std::error_code ec;
        for (const auto& entry : std::filesystem::directory_iterator(cfg.crop_bank, ec))
            if (entry.path().extension() == ".png") bank.push_back(entry.path().string());
        if (ec || bank.empty()) throw AugmentError("crop bank unreadable or empty: " + cfg.crop_bank);
        std::sort(bank.begin(), bank.end());

        // chart region in padded coordinates: the un-padded source rect
        // united with the annotation hull plus margin
        detail::Box chart{static_cast<double>(pad_l), static_cast<double>(pad_t),
                          static_cast<double>(pad_l + w), static_cast<double>(pad_t + h)};
        detail::Box hull = detail::annotation_hull(sample, cfg.paste_margin);
        chart.x0 = std::min(chart.x0, hull.x0);
        chart.y0 = std::min(chart.y0, hull.y0);
        chart.x1 = std::max(chart.x1, hull.x1);
        chart.y1 = std::max(chart.y1, hull.y1);

        const int n_frag = static_cast<int>(rng.uniform_int(2, 8));
        for (int f = 0; f < n_frag; ++f) {
            ImageRGB frag = read_png(bank[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(bank.size()) - 1))]);
            const int max_side = std::max(16, sample.image.width * 2 / 5);
            if (frag.width > max_side || frag.height > max_side) {
                const double s = static_cast<double>(max_side) / std::max(frag.width, frag.height);
                frag = resize(frag, std::max(1, static_cast<int>(frag.width * s)),
                              std::max(1, static_cast<int>(frag.height * s)));
            }
            for (int attempt = 0; attempt < 20; ++attempt) {
                const int px = static_cast<int>(rng.uniform_int(0, std::max(0, sample.image.width - frag.width)));
                const int py = static_cast<int>(rng.uniform_int(0, std::max(0, sample.image.height - frag.height)));
                detail::Box fb{static_cast<double>(px), static_cast<double>(py),
                               static_cast<double>(px + frag.width), static_cast<double>(py + frag.height)};
                if (fb.intersects(chart)) continue;
                for (int y = 0; y < frag.height && py + y < sample.image.height; ++y)
                    std::memcpy(sample.image.at(px, py + y), frag.at(0, y),
                                static_cast<size_t>(std::min(frag.width, sample.image.width - px)) * 3);
                break;
            }
        }
    }

    // crop keeping the chart in frame, then per-dimension rescale
    const int cw = sample.image.width, ch = sample.image.height;
    const int crop_x0 = static_cast<int>(rng.uniform(0.0, 1.0) * pad_l);
    const int crop_y0 = static_cast<int>(rng.uniform(0.0, 1.0) * pad_t);
    const int crop_x1 = cw - static_cast<int>(rng.uniform(0.0, 1.0) * pad_r);
    const int crop_y1 = ch - static_cast<int>(rng.uniform(0.0, 1.0) * pad_b);
    t = t.then(detail::pad_crop_apply(sample, 0, 0, 0, 0, crop_x0, crop_y0, crop_x1, crop_y1));

    const double sx = std::max(0.25, 1.0 + rng.uniform(-cfg.rescale_max, cfg.rescale_max));
    const double sy = std::max(0.25, 1.0 + rng.uniform(-cfg.rescale_max, cfg.rescale_max));
    return t.then(detail::rescale_apply(sample, sx, sy));
}

// ---------------------------------------------------------------------------
// Dataset generation

enum class ChartKind { bar, bar_augmented, pie };

inline ChartKind chart_kind_from_string(const std::string& s) {
    if (s == "bar") return ChartKind::bar;
    if (s == "bar-augmented") return ChartKind::bar_augmented;
    if (s == "pie") return ChartKind::pie;
    throw ConfigError("unknown chart kind '" + s + "' (bar | bar-augmented | pie)");
}

inline ClassSet classes_for_kind(ChartKind kind) {
    return kind == ChartKind::pie ? ClassSet::pie_chart() : ClassSet::bar_chart();
}

struct GenerateOptions {
    int render_size = 448;
    int grid_size = kDefaultGridSize;  // collision-free guarantee is checked at this grid
    AugmentConfig augment;
    int workers = 1;
};

namespace detail {

inline bool grid_collision_free(const ManifestEntry& e, int grid_size, const ClassSet& classes) {
    std::set<std::tuple<int, int, int>> cells;
    for (const auto& p : e.points) {
        const double gx = std::min(std::clamp(p.x, 0.0, 1.0) * grid_size, grid_size - 1e-9);
        const double gy = std::min(std::clamp(p.y, 0.0, 1.0) * grid_size, grid_size - 1e-9);
        auto key = std::make_tuple(classes.index_of(p.cls), static_cast<int>(gy), static_cast<int>(gx));
        if (!cells.insert(key).second) return false;
    }
    return true;
}

inline ChartSample generate_sample(ChartKind kind, Rng& rng, const GenerateOptions& opts) {
    switch (kind) {
        case ChartKind::bar: {
            ChartSample s = render_bar_chart(sample_bar_spec(rng), opts.render_size);
            pad_crop_augment(s, rng, opts.augment);
            return s;
        }
        case ChartKind::bar_augmented: {
            ChartSample s = render_bar_chart(sample_bar_spec(rng), opts.render_size);
            real_crop_augment(s, rng, opts.augment);
            return s;
        }
        case ChartKind::pie: {
            for (int attempt = 0;; ++attempt) {
                try {
                    ChartSample s = render_pie_chart(sample_pie_spec(rng), opts.render_size);
                    pad_crop_augment(s, rng, opts.augment);
                    return s;
                } catch (const RenderError&) {
                    if (attempt >= 63) throw;
                }
            }
        }
    }
    throw ConfigError("unreachable chart kind");
}

}  // namespace detail

// Writes n seeded synthetic charts with annotations: PNGs under
// <out_dir>/images/, a JSON-lines manifest, an 80:20 train/val split file
// and a dataset description. Fully reproducible from (kind, n, seed);
// per-image child seeds keep the output independent of worker count.
inline std::string generate_dataset(ChartKind kind, int n, uint64_t seed, const std::string& out_dir,
                                    const GenerateOptions& opts = {}) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw IOError("cannot create output directory: " + out_dir);

    const ClassSet classes = classes_for_kind(kind);
    const Rng root(seed);
    std::vector<ManifestEntry> entries(static_cast<size_t>(n));

    auto make_one = [&](int i) {
        Rng rng = root.child(static_cast<uint64_t>(i));
        char name[64];
        std::snprintf(name, sizeof(name), "images/%06d.png", i);
        for (int attempt = 0; attempt < 128; ++attempt) {
            ChartSample sample = detail::generate_sample(kind, rng, opts);
            ManifestEntry e = sample.to_manifest_entry(name);
            if (!detail::grid_collision_free(e, opts.grid_size, classes)) continue;
            write_png(sample.image, (fs::path(out_dir) / name).string());
            entries[static_cast<size_t>(i)] = std::move(e);
            return;
        }
        throw RenderError("could not draw a collision-free chart for index " + std::to_string(i));
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) make_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) make_one(i);
                } catch (...) {
                    errors[static_cast<size_t>(t)] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    write_manifest(entries, manifest_path);

    std::vector<std::string> ids;
    for (const auto& e : entries) ids.push_back(e.image);
    Rng split_rng(seed ^ 0x5eedf11eULL);
    split_rng.shuffle(ids);
    SplitFile split;
    const size_t n_train = static_cast<size_t>(n) * 4 / 5;
    split.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
    split.val.assign(ids.begin() + static_cast<long>(n_train), ids.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    write_split(split, (fs::path(out_dir) / "split.json").string());

    nlohmann::ordered_json meta;
    meta["kind"] = kind == ChartKind::bar ? "bar" : (kind == ChartKind::pie ? "pie" : "bar-augmented");
    meta["n"] = n;
    meta["seed"] = seed;
    meta["render_size"] = opts.render_size;
    meta["grid_size"] = opts.grid_size;
    meta["classes"] = classes.names;
    std::ofstream meta_out(fs::path(out_dir) / "dataset.json");
    meta_out << meta.dump(2) << "\n";

    return manifest_path;
}

}  // namespace ppn

#endif  // PPN_CHARTGEN_HPP_
