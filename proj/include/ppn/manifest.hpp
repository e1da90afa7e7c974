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

#ifndef PPN_MANIFEST_HPP_
#define PPN_MANIFEST_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ppn/core.hpp"

namespace ppn {

// One manifest line: annotations for one image, with point coordinates
// normalized to [0,1] as stored on disk.
struct ManifestEntry {
    std::string image;  // path relative to the manifest file
    int width = 0;
    int height = 0;
    struct NormPoint {
        std::string cls;
        double x = 0.0;
        double y = 0.0;
    };
    std::vector<NormPoint> points;
};

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
    nlohmann::ordered_json j;
    j["image"] = e.image;
    j["width"] = e.width;
    j["height"] = e.height;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : e.points)
        j["points"].push_back({{"cls", p.cls}, {"x", p.x}, {"y", p.y}});
    return j;
}

inline void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write manifest: " + path);
    for (const auto& e : entries) out << to_json(e).dump() << "\n";
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot read manifest: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        e.image = j.at("image").get<std::string>();
        e.width = j.at("width").get<int>();
        e.height = j.at("height").get<int>();
        for (const auto& pj : j.at("points")) {
            ManifestEntry::NormPoint p;
            p.cls = pj.at("cls").get<std::string>();
            p.x = pj.at("x").get<double>();
            p.y = pj.at("y").get<double>();
            e.points.push_back(p);
        }
        entries.push_back(e);
    }
    return entries;
}

// Converts a manifest entry's normalized points to grid units. Points of a
// class that collide in a cell keep only the first occurrence (later ones
// are dropped with a warning): the model can represent at most one point
// per cell per class.
inline AnnotationSet to_annotation_set(const ManifestEntry& e, int grid_size, const ClassSet& classes,
                                       bool warn = true) {
    std::vector<Point> pts;
    std::set<std::tuple<int, int, int>> cells;
    int dropped = 0;
    for (const auto& np : e.points) {
        Point p;
        p.cls = classes.index_of(np.cls);
        p.x = std::clamp(np.x, 0.0, 1.0) * grid_size;
        p.y = std::clamp(np.y, 0.0, 1.0) * grid_size;
        p.x = std::min(p.x, grid_size - 1e-6);
        p.y = std::min(p.y, grid_size - 1e-6);
        auto key = std::make_tuple(p.cls, AnnotationSet::cell_index(p.y, grid_size),
                                   AnnotationSet::cell_index(p.x, grid_size));
        if (!cells.insert(key).second) {
            ++dropped;
            continue;
        }
        pts.push_back(p);
    }
    if (dropped > 0 && warn)
        std::cerr << "warning: " << e.image << ": dropped " << dropped
                  << " point(s) colliding at grid size " << grid_size << "\n";
    return AnnotationSet::validated(e.image, e.width, e.height, std::move(pts), grid_size);
}

struct SplitFile {
    std::vector<std::string> train;
    std::vector<std::string> val;
};

inline void write_split(const SplitFile& split, const std::string& path) {
    nlohmann::ordered_json j;
    j["train"] = split.train;
    j["val"] = split.val;
    std::ofstream out(path);
    if (!out) throw IOError("cannot write split file: " + path);
    out << j.dump(2) << "\n";
}

inline SplitFile read_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot read split file: " + path);
    nlohmann::json j;
    in >> j;
    SplitFile s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    return s;
}

}  // namespace ppn

#endif  // PPN_MANIFEST_HPP_
