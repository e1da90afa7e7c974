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

#ifndef PPN_LOSSES_HPP_
#define PPN_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppn/codec.hpp"
#include "ppn/core.hpp"
#include "ppn/tensor.hpp"

namespace ppn {

struct LossWeights {
    double lambda1 = 1.0;    // class map
    double lambda2 = 1.0;    // offset regression
    double lambda3 = 0.0;    // points list; 0.1 once enabled
    double lambda4 = 0.0;    // tick alignment; 0.001 once enabled

    void validate() const {
        if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0)
            throw ConfigError("loss weights must be >= 0");
    }
};

struct LossBreakdown {
    double total = 0, cls = 0, reg = 0, pts = 0, align = 0;
};

namespace detail {

template <typename T>
inline int argmax_class(const Tensor<T>& logits, int n, int i, int j) {
    const int C = logits.dim(1);
    int best = 0;
    T best_v = logits.at(n, 0, i, j);
    for (int c = 1; c < C; ++c)
        if (logits.at(n, c, i, j) > best_v) {
            best_v = logits.at(n, c, i, j);
            best = c;
        }
    return best;
}

template <typename T>
inline int target_class(const Tensor<T>& target_cls, int n, int i, int j) {
    const int C = target_cls.dim(1);
    for (int c = 0; c < C; ++c)
        if (target_cls.at(n, c, i, j) > T(0.5)) return c;
    return kBackgroundClass;
}

}  // namespace detail

// Mean per-cell cross-entropy between class logits and one-hot targets,
// averaged over every cell of the batch. Optionally writes the gradient
// w.r.t. the logits (softmax minus one-hot, scaled by the cell count).
template <typename T>
inline double cls_loss_batch(const Tensor<T>& logits, const Tensor<T>& target_cls,
                             Tensor<T>* d_logits = nullptr) {
    if (!logits.same_shape(target_cls)) throw ShapeError("cls_loss: shape mismatch");
    const int N = logits.dim(0), C = logits.dim(1), S = logits.dim(2);
    const double denom = static_cast<double>(N) * S * S;
    double loss = 0;
    std::vector<double> prob(static_cast<size_t>(C));
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                double mx = -1e300;
                for (int c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(logits.at(n, c, i, j)));
                double sum = 0;
                for (int c = 0; c < C; ++c) {
                    prob[static_cast<size_t>(c)] = std::exp(static_cast<double>(logits.at(n, c, i, j)) - mx);
                    sum += prob[static_cast<size_t>(c)];
                }
                const int tc = detail::target_class(target_cls, n, i, j);
                loss += -(std::log(prob[static_cast<size_t>(tc)]) - std::log(sum));
                if (d_logits)
                    for (int c = 0; c < C; ++c) {
                        const double p = prob[static_cast<size_t>(c)] / sum;
                        d_logits->at(n, c, i, j) +=
                            static_cast<T>((p - (c == tc ? 1.0 : 0.0)) / denom);
                    }
            }
    return loss / denom;
}

// Masked mean squared offset error: only cells whose PREDICTED class is
// foreground count, each image normalized by its own masked-cell count,
// then averaged over the batch.
template <typename T>
inline double reg_loss_batch(const Tensor<T>& reg, const Tensor<T>& logits, const Tensor<T>& target_reg,
                             Tensor<T>* d_reg = nullptr) {
    if (!reg.same_shape(target_reg)) throw ShapeError("reg_loss: shape mismatch");
    if (logits.dim(0) != reg.dim(0) || logits.dim(2) != reg.dim(2) || logits.dim(3) != reg.dim(3))
        throw ShapeError("reg_loss: class/offset map shape mismatch");
    const int N = reg.dim(0), S = reg.dim(2);
    double loss = 0;
    for (int n = 0; n < N; ++n) {
        double img_loss = 0;
        int masked = 0;
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                if (detail::argmax_class(logits, n, i, j) == kBackgroundClass) continue;
                ++masked;
                for (int ch = 0; ch < 2; ++ch) {
                    const double d = static_cast<double>(reg.at(n, ch, i, j)) -
                                     static_cast<double>(target_reg.at(n, ch, i, j));
                    img_loss += d * d;
                }
            }
        const double denom = std::max(1, masked);
        loss += img_loss / denom;
        if (d_reg && masked > 0)
            for (int i = 0; i < S; ++i)
                for (int j = 0; j < S; ++j) {
                    if (detail::argmax_class(logits, n, i, j) == kBackgroundClass) continue;
                    for (int ch = 0; ch < 2; ++ch) {
                        const double d = static_cast<double>(reg.at(n, ch, i, j)) -
                                         static_cast<double>(target_reg.at(n, ch, i, j));
                        d_reg->at(n, ch, i, j) += static_cast<T>(2.0 * d / denom / N);
                    }
                }
    }
    return loss / N;
}

// Single-image views matching the map pair layout.
template <typename T>
inline double cls_loss(const GridMaps<T>& pred_logits, const GridMaps<T>& target) {
    return cls_loss_batch<T>(pred_logits.class_map, target.class_map);
}

template <typename T>
inline double reg_loss(const GridMaps<T>& pred, const GridMaps<T>& target) {
    return reg_loss_batch<T>(pred.reg_map, pred.class_map, target.reg_map);
}

struct PtsMatch {
    size_t pred_idx = 0;
    size_t gt_idx = 0;
    double dist = 0;
};

// Points-list loss: greedy one-to-one matching of ground truth points to
// same-class predictions in ascending distance order; each pair closer than
// t_det contributes its Euclidean distance.
inline double pts_loss(const std::vector<Detection>& pred, const std::vector<Point>& gt, double t_det,
                       std::vector<PtsMatch>* matches = nullptr) {
    struct Cand {
        double dist;
        size_t g, p;
    };
    std::vector<Cand> cands;
    for (size_t g = 0; g < gt.size(); ++g)
        for (size_t p = 0; p < pred.size(); ++p) {
            if (pred[p].point.cls != gt[g].cls) continue;
            const double d = euclidean_distance(pred[p].point, gt[g]);
            if (d < t_det) cands.push_back({d, g, p});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.g != b.g) return a.g < b.g;
        return a.p < b.p;
    });
    std::vector<bool> g_used(gt.size(), false), p_used(pred.size(), false);
    double loss = 0;
    for (const Cand& c : cands) {
        if (g_used[c.g] || p_used[c.p]) continue;
        g_used[c.g] = true;
        p_used[c.p] = true;
        loss += c.dist;
        if (matches) matches->push_back({c.p, c.g, c.dist});
    }
    return loss;
}

// Tick alignment loss: sum of absolute deviations of predicted tick x
// coordinates from their mean; zero for fewer than two ticks.
inline double align_loss(const std::vector<Detection>& pred_ticks) {
    if (pred_ticks.size() < 2) return 0.0;
    double mean = 0;
    for (const auto& d : pred_ticks) mean += d.point.x;
    mean /= static_cast<double>(pred_ticks.size());
    double loss = 0;
    for (const auto& d : pred_ticks) loss += std::abs(d.point.x - mean);
    return loss;
}

// Subgradient of align_loss w.r.t. each tick x (the mean is a function of
// the same coordinates, so every coordinate also receives the averaged
// sign correction).
inline std::vector<double> align_loss_grad(const std::vector<double>& xs) {
    std::vector<double> grad(xs.size(), 0.0);
    if (xs.size() < 2) return grad;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double sign_sum = 0;
    for (double x : xs) sign_sum += (x > mean) - (x < mean);
    const double correction = sign_sum / static_cast<double>(xs.size());
    for (size_t k = 0; k < xs.size(); ++k)
        grad[k] = static_cast<double>((xs[k] > mean) - (xs[k] < mean)) - correction;
    return grad;
}

// Weighted composition of the four terms for one image. Zero-weight terms
// are still evaluated and reported.
template <typename T>
inline LossBreakdown total_loss(const GridMaps<T>& pred_logits, const GridMaps<T>& targets,
                                const std::vector<Detection>& pred_points,
                                const std::vector<Point>& gt_points, const LossWeights& w,
                                int tick_class = -1, double t_det = 1.5) {
    w.validate();
    LossBreakdown b;
    b.cls = cls_loss(pred_logits, targets);
    b.reg = reg_loss(pred_logits, targets);
    b.pts = pts_loss(pred_points, gt_points, t_det);
    std::vector<Detection> ticks;
    for (const auto& d : pred_points)
        if (d.point.cls == tick_class) ticks.push_back(d);
    b.align = align_loss(ticks);
    b.total = w.lambda1 * b.cls + w.lambda2 * b.reg + w.lambda3 * b.pts + w.lambda4 * b.align;
    return b;
}

// Gradient-producing form of the two decoded-point losses for one image of
// a batch. Offsets of surviving detections are the only gradient path;
// detections whose stored offset sits at the clamp boundary pass nothing.
template <typename T>
inline std::pair<double, double> point_losses_with_grad(const std::vector<CellDetection>& dets,
                                                        const std::vector<Point>& gt, double t_det,
                                                        int tick_class, const Tensor<T>& reg, int n,
                                                        double w_pts, double w_align,
                                                        Tensor<T>* d_reg) {
    auto pass_through = [&](int ch, int i, int j) {
        const double raw = static_cast<double>(reg.at(n, ch, i, j));
        return raw > -0.5 && raw < 0.5 - 1e-6;
    };

    std::vector<Detection> flat;
    for (const auto& cd : dets) flat.push_back(cd.det);
    std::vector<PtsMatch> matches;
    const double pts = pts_loss(flat, gt, t_det, &matches);
    if (d_reg && w_pts != 0)
        for (const PtsMatch& m : matches) {
            if (m.dist < 1e-9) continue;
            const CellDetection& cd = dets[m.pred_idx];
            const Point& q = gt[m.gt_idx];
            const double gx = (cd.det.point.x - q.x) / m.dist;
            const double gy = (cd.det.point.y - q.y) / m.dist;
            if (pass_through(0, cd.cell_i, cd.cell_j))
                d_reg->at(n, 0, cd.cell_i, cd.cell_j) += static_cast<T>(w_pts * gx);
            if (pass_through(1, cd.cell_i, cd.cell_j))
                d_reg->at(n, 1, cd.cell_i, cd.cell_j) += static_cast<T>(w_pts * gy);
        }

    std::vector<const CellDetection*> ticks;
    for (const auto& cd : dets)
        if (cd.det.point.cls == tick_class) ticks.push_back(&cd);
    std::vector<Detection> tick_dets;
    std::vector<double> xs;
    for (const auto* cd : ticks) {
        tick_dets.push_back(cd->det);
        xs.push_back(cd->det.point.x);
    }
    const double align = align_loss(tick_dets);
    if (d_reg && w_align != 0 && xs.size() >= 2) {
        const std::vector<double> grad = align_loss_grad(xs);
        for (size_t k = 0; k < ticks.size(); ++k)
            if (pass_through(0, ticks[k]->cell_i, ticks[k]->cell_j))
                d_reg->at(n, 0, ticks[k]->cell_i, ticks[k]->cell_j) +=
                    static_cast<T>(w_align * grad[k]);
    }
    return {pts, align};
}

}  // namespace ppn

#endif  // PPN_LOSSES_HPP_
