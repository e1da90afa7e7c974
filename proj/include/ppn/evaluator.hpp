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

#ifndef PPN_EVALUATOR_HPP_
#define PPN_EVALUATOR_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppn/codec.hpp"
#include "ppn/core.hpp"
#include "ppn/manifest.hpp"
#include "ppn/model.hpp"

namespace ppn {

// One-to-one assignment between predictions and ground truth.
struct Matching {
    std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
    std::vector<int> unmatched_pred;
    std::vector<int> unmatched_gt;
};

namespace detail {

// Min-cost maximum-cardinality matching by successive shortest augmenting
// paths. Rows are predictions, columns ground truth; edges exist where
// cost[r][c] is finite. Instance sizes here are a handful of points, so a
// Bellman-Ford search per augmentation is plenty.
inline std::vector<int> min_cost_max_matching(const std::vector<std::vector<double>>& cost) {
    const int R = static_cast<int>(cost.size());
    const int C = R ? static_cast<int>(cost[0].size()) : 0;
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<int> col_match(static_cast<size_t>(C), -1);
    std::vector<int> row_match(static_cast<size_t>(R), -1);

    for (;;) {
        std::vector<double> dist_r(static_cast<size_t>(R), INF), dist_c(static_cast<size_t>(C), INF);
        std::vector<int> parent_c(static_cast<size_t>(C), -1);
        for (int r = 0; r < R; ++r)
            if (row_match[static_cast<size_t>(r)] < 0) dist_r[static_cast<size_t>(r)] = 0;
        // relax alternating-path edges until settled
        for (int iter = 0; iter <= R + C; ++iter) {
            bool changed = false;
            for (int r = 0; r < R; ++r) {
                if (dist_r[static_cast<size_t>(r)] == INF) continue;
                for (int c = 0; c < C; ++c) {
                    if (!std::isfinite(cost[static_cast<size_t>(r)][static_cast<size_t>(c)])) continue;
                    if (col_match[static_cast<size_t>(c)] == r) continue;
                    const double nd = dist_r[static_cast<size_t>(r)] +
                                      cost[static_cast<size_t>(r)][static_cast<size_t>(c)];
                    if (nd + 1e-12 < dist_c[static_cast<size_t>(c)]) {
                        dist_c[static_cast<size_t>(c)] = nd;
                        parent_c[static_cast<size_t>(c)] = r;
                        changed = true;
                        const int rm = col_match[static_cast<size_t>(c)];
                        if (rm >= 0) {
                            const double back = nd - cost[static_cast<size_t>(rm)][static_cast<size_t>(c)];
                            if (back + 1e-12 < dist_r[static_cast<size_t>(rm)]) {
                                dist_r[static_cast<size_t>(rm)] = back;
                            }
                        }
                    }
                }
            }
            if (!changed) break;
        }
        int best_c = -1;
        for (int c = 0; c < C; ++c)
            if (col_match[static_cast<size_t>(c)] < 0 && std::isfinite(dist_c[static_cast<size_t>(c)]))
                if (best_c < 0 || dist_c[static_cast<size_t>(c)] < dist_c[static_cast<size_t>(best_c)])
                    best_c = c;
        if (best_c < 0) break;
        // augment along parent pointers
        int c = best_c;
        while (c >= 0) {
            const int r = parent_c[static_cast<size_t>(c)];
            const int next_c = row_match[static_cast<size_t>(r)];
            row_match[static_cast<size_t>(r)] = c;
            col_match[static_cast<size_t>(c)] = r;
            c = next_c;
        }
    }
    return row_match;
}

}  // namespace detail

// Maximum-cardinality one-to-one matching of same-class (pred, gt) pairs
// within the distance threshold; among maximum matchings the total distance
// is minimal, so the metric does not depend on iteration order.
inline Matching match_points(const std::vector<Detection>& pred, const std::vector<Point>& gt,
                             double threshold) {
    Matching m;
    std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
    std::vector<int> classes;
    for (const auto& d : pred) classes.push_back(d.point.cls);
    for (const auto& g : gt) classes.push_back(g.cls);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    for (int cls : classes) {
        std::vector<int> p_idx, g_idx;
        for (size_t i = 0; i < pred.size(); ++i)
            if (pred[i].point.cls == cls) p_idx.push_back(static_cast<int>(i));
        for (size_t i = 0; i < gt.size(); ++i)
            if (gt[i].cls == cls) g_idx.push_back(static_cast<int>(i));
        if (p_idx.empty() || g_idx.empty()) continue;
        std::vector<std::vector<double>> cost(p_idx.size(),
                                              std::vector<double>(g_idx.size(),
                                                                  std::numeric_limits<double>::infinity()));
        for (size_t r = 0; r < p_idx.size(); ++r)
            for (size_t c = 0; c < g_idx.size(); ++c) {
                const double d = euclidean_distance(pred[static_cast<size_t>(p_idx[r])].point,
                                                    gt[static_cast<size_t>(g_idx[c])]);
                if (d < threshold) cost[r][c] = d;
            }
        const std::vector<int> row_match = detail::min_cost_max_matching(cost);
        for (size_t r = 0; r < p_idx.size(); ++r)
            if (row_match[r] >= 0) {
                m.pairs.emplace_back(p_idx[r], g_idx[static_cast<size_t>(row_match[r])]);
                pred_used[static_cast<size_t>(p_idx[r])] = true;
                gt_used[static_cast<size_t>(g_idx[static_cast<size_t>(row_match[r])])] = true;
            }
    }
    std::sort(m.pairs.begin(), m.pairs.end());
    for (size_t i = 0; i < pred.size(); ++i)
        if (!pred_used[i]) m.unmatched_pred.push_back(static_cast<int>(i));
    for (size_t i = 0; i < gt.size(); ++i)
        if (!gt_used[i]) m.unmatched_gt.push_back(static_cast<int>(i));
    return m;
}

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

inline Prf prf_from_counts(int tp, int fp, int fn) {
    if (tp == 0 && fp == 0 && fn == 0) return {1, 1, 1};  // nothing to find, nothing found
    if (tp == 0 && (fp == 0 || fn == 0)) return {0, 0, 0};
    Prf r;
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0;
    r.f1 = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0;
    return r;
}

// Per-image precision/recall/F1 at the given grid-unit threshold. Empty
// cases follow the averaging-friendly convention: both sides empty counts
// as perfect, exactly one side empty as zero.
inline Prf image_f1(const std::vector<Detection>& pred, const std::vector<Point>& gt, double threshold) {
    if (pred.empty() && gt.empty()) return {1, 1, 1};
    if (pred.empty() || gt.empty()) return {0, 0, 0};
    const Matching m = match_points(pred, gt, threshold);
    return prf_from_counts(static_cast<int>(m.pairs.size()), static_cast<int>(m.unmatched_pred.size()),
                           static_cast<int>(m.unmatched_gt.size()));
}

// Decoded detections and ground truth for one image; the reusable input to
// metric aggregation and threshold sweeps.
struct EvalItem {
    std::string image_id;
    std::vector<Detection> detections;
    std::vector<Point> gt;
};

struct ImageEval {
    std::string image_id;
    Prf overall;
    std::vector<Prf> per_class;  // index 0 (background) unused
    int tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    double threshold = 1.5;
    double mean_f1 = 0;              // per-image F1 averaged over images (headline metric)
    double pooled_f1 = 0;            // diagnostic: counts pooled across the whole set
    double mean_f1_class_averaged = 0;  // alternative reading: average per-class F1 per image
    std::vector<std::string> class_names;
    std::vector<ImageEval> per_image;

    nlohmann::ordered_json to_json(bool include_per_image = true) const {
        nlohmann::ordered_json j;
        j["threshold"] = threshold;
        j["mean_f1"] = mean_f1;
        j["pooled_f1"] = pooled_f1;
        j["mean_f1_class_averaged"] = mean_f1_class_averaged;
        j["classes"] = class_names;
        if (include_per_image) {
            j["per_image"] = nlohmann::ordered_json::array();
            for (const auto& im : per_image) {
                nlohmann::ordered_json ij;
                ij["image"] = im.image_id;
                ij["precision"] = im.overall.precision;
                ij["recall"] = im.overall.recall;
                ij["f1"] = im.overall.f1;
                for (size_t c = 1; c < im.per_class.size(); ++c)
                    ij[class_names.size() > c ? class_names[c] : "class" + std::to_string(c)] =
                        im.per_class[c].f1;
                j["per_image"].push_back(ij);
            }
        }
        return j;
    }
};

// Aggregates detections vs ground truth into the per-image-averaged report.
inline EvalReport evaluate_detections(const std::vector<EvalItem>& items, double threshold,
                                      const ClassSet& classes) {
    EvalReport report;
    report.threshold = threshold;
    report.class_names = classes.names;
    long pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
    double mean_f1 = 0, mean_cls_f1 = 0;
    for (const auto& item : items) {
        ImageEval im;
        im.image_id = item.image_id;
        const Matching m = match_points(item.detections, item.gt, threshold);
        im.tp = static_cast<int>(m.pairs.size());
        im.fp = static_cast<int>(m.unmatched_pred.size());
        im.fn = static_cast<int>(m.unmatched_gt.size());
        im.overall = prf_from_counts(im.tp, im.fp, im.fn);
        pooled_tp += im.tp;
        pooled_fp += im.fp;
        pooled_fn += im.fn;
        double cls_f1_sum = 0;
        int cls_count = 0;
        im.per_class.resize(static_cast<size_t>(classes.size()));
        for (int c = 1; c < classes.size(); ++c) {
            int tp = 0, fp = 0, fn = 0;
            for (const auto& pr : m.pairs)
                if (item.detections[static_cast<size_t>(pr.first)].point.cls == c) ++tp;
            for (int up : m.unmatched_pred)
                if (item.detections[static_cast<size_t>(up)].point.cls == c) ++fp;
            for (int ug : m.unmatched_gt)
                if (item.gt[static_cast<size_t>(ug)].cls == c) ++fn;
            im.per_class[static_cast<size_t>(c)] = prf_from_counts(tp, fp, fn);
            cls_f1_sum += im.per_class[static_cast<size_t>(c)].f1;
            ++cls_count;
        }
        mean_f1 += im.overall.f1;
        mean_cls_f1 += cls_count > 0 ? cls_f1_sum / cls_count : 1.0;
        report.per_image.push_back(std::move(im));
    }
    const double n = std::max<size_t>(1, items.size());
    report.mean_f1 = mean_f1 / n;
    report.mean_f1_class_averaged = mean_cls_f1 / n;
    report.pooled_f1 = prf_from_counts(static_cast<int>(pooled_tp), static_cast<int>(pooled_fp),
                                       static_cast<int>(pooled_fn))
                           .f1;
    return report;
}

// Runs the model over every manifest image (optionally restricted to a
// subset of ids) and decodes detections once; presence in `ids` is chosen
// by exact image-path match.
template <typename T>
inline std::vector<EvalItem> collect_detections(PpnModel<T>& model, const std::string& manifest_path,
                                                const std::vector<std::string>* ids,
                                                const ClassSet& classes, const DecodeConfig& decode,
                                                int batch_size = 8) {
    const auto entries = read_manifest(manifest_path);
    const std::filesystem::path root = std::filesystem::path(manifest_path).parent_path();
    std::vector<const ManifestEntry*> selected;
    for (const auto& e : entries) {
        if (ids && std::find(ids->begin(), ids->end(), e.image) == ids->end()) continue;
        selected.push_back(&e);
    }
    if (ids && selected.size() != ids->size())
        throw DataError("split references images missing from the manifest");

    const int S = model.config().grid_size;
    const int in_sz = model.config().input_size;
    std::vector<EvalItem> items;
    for (size_t start = 0; start < selected.size(); start += static_cast<size_t>(batch_size)) {
        const int n = static_cast<int>(std::min<size_t>(batch_size, selected.size() - start));
        Tensor<T> batch(n, 3, in_sz, in_sz);
        for (int k = 0; k < n; ++k) {
            const auto& e = *selected[start + static_cast<size_t>(k)];
            const std::string img_path = (root / e.image).string();
            if (!std::filesystem::exists(img_path)) throw DataError("missing image: " + img_path);
            image_to_input(read_png(img_path), in_sz, batch, k);
        }
        MapsBatch<T> out = model.forward(batch, false);
        for (int k = 0; k < n; ++k) {
            const auto& e = *selected[start + static_cast<size_t>(k)];
            EvalItem item;
            item.image_id = e.image;
            GridMaps<T> maps = softmax_maps(out.image_logits(k));
            item.detections = decode_points(maps, decode);
            item.gt = to_annotation_set(e, S, classes).points;
            items.push_back(std::move(item));
        }
    }
    return items;
}

// Forward + decode + per-image F1 over a manifest.
template <typename T>
inline EvalReport dataset_eval(PpnModel<T>& model, const std::string& manifest_path,
                               const std::vector<std::string>* ids, const ClassSet& classes,
                               const DecodeConfig& decode, double threshold) {
    return evaluate_detections(collect_detections(model, manifest_path, ids, classes, decode),
                               threshold, classes);
}

// Matching repeated at each threshold over fixed detections.
inline std::vector<EvalReport> threshold_sweep(const std::vector<EvalItem>& items,
                                               const std::vector<double>& thresholds,
                                               const ClassSet& classes) {
    std::vector<EvalReport> curve;
    for (double t : thresholds) curve.push_back(evaluate_detections(items, t, classes));
    return curve;
}

// Linear-axis value reconstruction: fit value = a*y + b over the known tick
// (y, value) pairs by least squares, then evaluate each bar detection,
// ordered left to right.
inline std::vector<double> reconstruct_bar_values(const std::vector<Detection>& dets,
                                                  const std::vector<std::pair<double, double>>& tick_values,
                                                  int bar_class = 1) {
    if (tick_values.size() < 2) throw DegenerateAxisError("need at least two tick values");
    double mean_y = 0, mean_v = 0;
    for (const auto& [y, v] : tick_values) {
        mean_y += y;
        mean_v += v;
    }
    mean_y /= static_cast<double>(tick_values.size());
    mean_v /= static_cast<double>(tick_values.size());
    double syy = 0, syv = 0, spread = 0;
    for (const auto& [y, v] : tick_values) {
        syy += (y - mean_y) * (y - mean_y);
        syv += (y - mean_y) * (v - mean_v);
        spread = std::max(spread, std::abs(y - mean_y));
    }
    if (spread < 1e-6) throw DegenerateAxisError("tick y positions are collinear in y");
    const double a = syv / syy;
    const double b = mean_v - a * mean_y;

    std::vector<const Detection*> bars;
    for (const auto& d : dets)
        if (d.point.cls == bar_class) bars.push_back(&d);
    std::sort(bars.begin(), bars.end(), [](const Detection* l, const Detection* r) {
        return l->point.x < r->point.x;
    });
    std::vector<double> values;
    for (const auto* d : bars) values.push_back(a * d->point.y + b);
    return values;
}

}  // namespace ppn

#endif  // PPN_EVALUATOR_HPP_
