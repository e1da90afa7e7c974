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

#ifndef PPN_CODEC_HPP_
#define PPN_CODEC_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppn/core.hpp"
#include "ppn/tensor.hpp"

namespace ppn {

// Paired per-cell class scores (C x S x S) and sub-cell offsets (2 x S x S,
// channel order dx,dy, measured from the cell center, each in [-0.5,0.5)).
// Class scores are one-hot when used as a target and a per-cell probability
// distribution when produced by the model.
template <typename T = float>
struct GridMaps {
    Tensor<T> class_map;
    Tensor<T> reg_map;

    GridMaps() = default;
    GridMaps(int n_classes, int grid_size)
        : class_map(n_classes, grid_size, grid_size), reg_map(2, grid_size, grid_size) {}

    int n_classes() const { return class_map.dim(1); }
    int grid_size() const { return class_map.dim(2); }
};

struct DecodeConfig {
    double bg_thresh = 0.95;   // keep cells whose background score is below this
    double cls_thresh = 0.75;  // and whose best foreground score is above this
    MatchConfig nms;           // radius 1.5, bar x_stretch 5

    void validate() const {
        if (bg_thresh <= 0 || bg_thresh >= 1 || cls_thresh <= 0 || cls_thresh >= 1)
            throw ConfigError("decode thresholds must lie in (0,1)");
        if (nms.threshold <= 0) throw ConfigError("nms radius must be positive");
    }
};

template <typename T>
inline T clamp_offset(T v) {
    return std::min(std::max(v, T(-0.5)), T(0.5) - T(1e-6));
}

// Rasterizes a point list into one-hot class and offset maps. The cell
// containing each point gets its class and the offset from the cell center;
// everything else is background with zero offsets.
template <typename T = float>
inline GridMaps<T> encode_targets(const AnnotationSet& anns, int grid_size, int n_classes) {
    GridMaps<T> maps(n_classes, grid_size);
    for (int i = 0; i < grid_size; ++i)
        for (int j = 0; j < grid_size; ++j) maps.class_map.at(kBackgroundClass, i, j) = T(1);
    for (const Point& p : anns.points) {
        if (p.cls <= 0 || p.cls >= n_classes)
            throw EncodeError("point class out of range in " + anns.image_id);
        if (!(p.x >= 0 && p.x <= grid_size && p.y >= 0 && p.y <= grid_size))
            throw EncodeError("point coordinates outside the grid in " + anns.image_id);
        const int j = AnnotationSet::cell_index(p.x, grid_size);
        const int i = AnnotationSet::cell_index(p.y, grid_size);
        if (maps.class_map.at(kBackgroundClass, i, j) == T(0))
            throw EncodeError("two points fell into one cell in " + anns.image_id);
        maps.class_map.at(kBackgroundClass, i, j) = T(0);
        maps.class_map.at(p.cls, i, j) = T(1);
        maps.reg_map.at(0, i, j) = clamp_offset(static_cast<T>(p.x - (j + 0.5)));
        maps.reg_map.at(1, i, j) = clamp_offset(static_cast<T>(p.y - (i + 0.5)));
    }
    return maps;
}

// A decoded detection plus the cell that produced it; the cell indices let
// the training loop route point-loss gradients back into the offset maps.
struct CellDetection {
    Detection det;
    int cell_i = 0;
    int cell_j = 0;
};

namespace detail {

inline bool detection_before(const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.point.y != b.point.y) return a.point.y < b.point.y;
    return a.point.x < b.point.x;
}

}  // namespace detail

// Greedy per-class suppression: keep the highest-confidence point, drop all
// later same-class points within the elliptical radius, repeat. Confidence
// ties break by (y,x) so decoding stays deterministic.
inline std::vector<size_t> nms_keep_indices(const std::vector<Detection>& dets, const MatchConfig& cfg) {
    std::vector<size_t> order(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return detail::detection_before(dets[a], dets[b]);
    });
    std::vector<size_t> kept;
    for (size_t idx : order) {
        const Detection& cand = dets[idx];
        const double stretch = cfg.stretch_for(cand.point.cls);
        bool suppressed = false;
        for (size_t k : kept) {
            if (dets[k].point.cls != cand.point.cls) continue;
            if (elliptical_distance(dets[k].point, cand.point, stretch) < cfg.threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

inline std::vector<Detection> nms(const std::vector<Detection>& dets, const MatchConfig& cfg) {
    std::vector<Detection> out;
    for (size_t idx : nms_keep_indices(dets, cfg)) out.push_back(dets[idx]);
    return out;
}

// Full decode with cell provenance. class_map must hold probabilities.
template <typename T>
inline std::vector<CellDetection> decode_cells(const GridMaps<T>& maps, const DecodeConfig& cfg) {
    cfg.validate();
    const int S = maps.grid_size();
    const int C = maps.n_classes();
    std::vector<Detection> cands;
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            if (static_cast<double>(maps.class_map.at(kBackgroundClass, i, j)) >= cfg.bg_thresh) continue;
            int best = -1;
            double best_score = cfg.cls_thresh;
            for (int c = 1; c < C; ++c) {
                const double s = static_cast<double>(maps.class_map.at(c, i, j));
                if (s > best_score) {
                    best_score = s;
                    best = c;
                }
            }
            if (best < 0) continue;
            const double dx = static_cast<double>(clamp_offset(maps.reg_map.at(0, i, j)));
            const double dy = static_cast<double>(clamp_offset(maps.reg_map.at(1, i, j)));
            Detection d;
            d.point = Point{best, j + 0.5 + dx, i + 0.5 + dy};
            d.confidence = best_score;
            cands.push_back(d);
            cells.emplace_back(i, j);
        }
    std::vector<CellDetection> out;
    for (size_t idx : nms_keep_indices(cands, cfg.nms))
        out.push_back(CellDetection{cands[idx], cells[idx].first, cells[idx].second});
    std::sort(out.begin(), out.end(), [](const CellDetection& a, const CellDetection& b) {
        return detail::detection_before(a.det, b.det);
    });
    return out;
}

// Decodes class/offset maps into final detections: background masking,
// foreground thresholding, offset application, then anisotropic NMS.
// Output is sorted by descending confidence.
template <typename T>
inline std::vector<Detection> decode_points(const GridMaps<T>& maps, const DecodeConfig& cfg) {
    std::vector<Detection> out;
    for (const CellDetection& cd : decode_cells(maps, cfg)) out.push_back(cd.det);
    return out;
}

// In-place softmax over the class channel of a logit map, yielding the
// probability view used for decoding.
template <typename T>
inline GridMaps<T> softmax_maps(const GridMaps<T>& logits) {
    GridMaps<T> probs = logits;
    const int S = logits.grid_size();
    const int C = logits.n_classes();
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            T mx = probs.class_map.at(0, i, j);
            for (int c = 1; c < C; ++c) mx = std::max(mx, probs.class_map.at(c, i, j));
            T sum = 0;
            for (int c = 0; c < C; ++c) {
                const T e = std::exp(probs.class_map.at(c, i, j) - mx);
                probs.class_map.at(c, i, j) = e;
                sum += e;
            }
            for (int c = 0; c < C; ++c) probs.class_map.at(c, i, j) /= sum;
        }
    return probs;
}

}  // namespace ppn

#endif  // PPN_CODEC_HPP_
