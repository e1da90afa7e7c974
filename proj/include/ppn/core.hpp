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

#ifndef PPN_CORE_HPP_
#define PPN_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ppn/common.hpp"

namespace ppn {

inline constexpr int kDefaultGridSize = 56;
inline constexpr int kBackgroundClass = 0;

// Per-dataset point class configuration. Index 0 is always background;
// foreground classes follow in a fixed order.
struct ClassSet {
    std::vector<std::string> names;

    ClassSet() : names{"background"} {}
    explicit ClassSet(std::vector<std::string> n) : names(std::move(n)) {
        if (names.size() < 2 || names[0] != "background")
            throw ConfigError("class set needs background at index 0 plus >=1 foreground class");
    }

    static ClassSet bar_chart() { return ClassSet({"background", "bar", "tick"}); }
    static ClassSet pie_chart() { return ClassSet({"background", "wedge_boundary", "centroid"}); }

    int size() const { return static_cast<int>(names.size()); }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw DataError("unknown point class '" + name + "'");
    }
};

// A class-labeled point on the S x S output lattice. Coordinates are in
// grid units with the origin at the image top-left, x right, y down.
struct Point {
    int cls = kBackgroundClass;
    double x = 0.0;
    double y = 0.0;
};

struct Detection {
    Point point;
    double confidence = 0.0;  // in [0,1]
};

inline double euclidean_distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Anisotropic metric used by NMS: horizontal differences are compressed by
// x_stretch before the norm, giving a threshold ellipse that reaches
// x_stretch times further horizontally. Equals the Euclidean distance at
// x_stretch = 1.
inline double elliptical_distance(const Point& a, const Point& b, double x_stretch) {
    return std::hypot((a.x - b.x) / x_stretch, a.y - b.y);
}

// Matching/suppression radius plus the per-class horizontal stretch
// (bar points get a 5x wider reach; everything else stays circular).
struct MatchConfig {
    double threshold = 1.5;                 // grid units
    std::vector<double> x_stretch;          // per class index; empty = all 1

    double stretch_for(int cls) const {
        if (cls >= 0 && static_cast<size_t>(cls) < x_stretch.size()) return x_stretch[static_cast<size_t>(cls)];
        return 1.0;
    }

    static MatchConfig for_classes(const ClassSet& classes, double threshold = 1.5) {
        MatchConfig cfg;
        cfg.threshold = threshold;
        cfg.x_stretch.assign(static_cast<size_t>(classes.size()), 1.0);
        for (int c = 0; c < classes.size(); ++c)
            if (classes.names[static_cast<size_t>(c)] == "bar") cfg.x_stretch[static_cast<size_t>(c)] = 5.0;
        return cfg;
    }
};

// Ground-truth points of one image, in grid units. Construction enforces
// the one-point-per-cell-per-class rule that makes map encoding lossless.
struct AnnotationSet {
    std::string image_id;
    int image_width = 0;
    int image_height = 0;
    std::vector<Point> points;

    static AnnotationSet validated(std::string image_id, int width, int height,
                                   std::vector<Point> pts, int grid_size) {
        AnnotationSet a;
        a.image_id = std::move(image_id);
        a.image_width = width;
        a.image_height = height;
        a.points = std::move(pts);
        std::set<std::tuple<int, int, int>> cells;
        for (const Point& p : a.points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 ||
                p.x > grid_size || p.y > grid_size)
                throw DataError("point outside [0," + std::to_string(grid_size) + "] in " + a.image_id);
            auto key = std::make_tuple(p.cls, cell_index(p.y, grid_size), cell_index(p.x, grid_size));
            if (!cells.insert(key).second)
                throw DataError("same-class points share a grid cell in " + a.image_id);
        }
        return a;
    }

    static int cell_index(double coord, int grid_size) {
        int c = static_cast<int>(std::floor(coord));
        return std::min(std::max(c, 0), grid_size - 1);
    }
};

}  // namespace ppn

#endif  // PPN_CORE_HPP_
