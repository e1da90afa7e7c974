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

#ifndef PPN_TESTS_TEST_UTIL_HPP_
#define PPN_TESTS_TEST_UTIL_HPP_

#include <string>
#include <vector>

#include "ppn/core.hpp"
#include "ppn/rng.hpp"

namespace ppn_test {

// Random annotation set that is collision-free and, when `separation` is
// given, keeps same-class points at elliptical distance >= its threshold so
// that every point survives NMS (needed for exact encode/decode round-trips).
inline ppn::AnnotationSet random_annotations(ppn::Rng& rng, int grid_size, int n_classes,
                                             int max_points, const ppn::MatchConfig* separation) {
    std::vector<ppn::Point> pts;
    const int target = static_cast<int>(rng.uniform_int(0, max_points));
    for (int attempts = 0; static_cast<int>(pts.size()) < target && attempts < 400; ++attempts) {
        ppn::Point p;
        p.cls = static_cast<int>(rng.uniform_int(1, n_classes - 1));
        p.x = rng.uniform(0.0, grid_size - 1e-4);
        p.y = rng.uniform(0.0, grid_size - 1e-4);
        bool ok = true;
        for (const ppn::Point& q : pts) {
            if (q.cls != p.cls) continue;
            if (static_cast<int>(q.x) == static_cast<int>(p.x) &&
                static_cast<int>(q.y) == static_cast<int>(p.y)) {
                ok = false;
                break;
            }
            if (separation &&
                ppn::elliptical_distance(p, q, separation->stretch_for(p.cls)) <
                    separation->threshold + 1e-6) {
                ok = false;
                break;
            }
        }
        if (ok) pts.push_back(p);
    }
    return ppn::AnnotationSet::validated("random", 448, 448, std::move(pts), grid_size);
}

}  // namespace ppn_test

#endif  // PPN_TESTS_TEST_UTIL_HPP_
