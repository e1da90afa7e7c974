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

#include <catch2/catch_amalgamated.hpp>

#include "ppn/codec.hpp"
#include "test_util.hpp"

using namespace ppn;

namespace {

DecodeConfig bar_decode_config(double bg = 0.95) {
    DecodeConfig cfg;
    cfg.bg_thresh = bg;
    cfg.nms = MatchConfig::for_classes(ClassSet::bar_chart());
    return cfg;
}

}  // namespace

TEST_CASE("encode_targets places one-hot cells and centered offsets", "[codec]") {
    SECTION("empty annotations give all-background maps") {
        auto maps = encode_targets(AnnotationSet::validated("e", 448, 448, {}, 56), 56, 3);
        for (int i = 0; i < 56; ++i)
            for (int j = 0; j < 56; ++j) {
                CHECK(maps.class_map.at(0, i, j) == 1.0f);
                CHECK(maps.reg_map.at(0, i, j) == 0.0f);
                CHECK(maps.reg_map.at(1, i, j) == 0.0f);
            }
    }
    SECTION("cell-center point has zero offset") {
        auto anns = AnnotationSet::validated("c", 448, 448, {{1, 10.5, 20.5}}, 56);
        auto maps = encode_targets(anns, 56, 3);
        CHECK(maps.class_map.at(1, 20, 10) == 1.0f);
        CHECK(maps.class_map.at(0, 20, 10) == 0.0f);
        CHECK(maps.reg_map.at(0, 20, 10) == 0.0f);
        CHECK(maps.reg_map.at(1, 20, 10) == 0.0f);
    }
    SECTION("off-center point stores offsets from the cell center") {
        auto anns = AnnotationSet::validated("o", 448, 448, {{2, 10.9, 20.1}}, 56);
        auto maps = encode_targets(anns, 56, 3);
        CHECK(maps.class_map.at(2, 20, 10) == 1.0f);
        CHECK(maps.reg_map.at(0, 20, 10) == Catch::Approx(0.4).margin(1e-6));
        CHECK(maps.reg_map.at(1, 20, 10) == Catch::Approx(-0.4).margin(1e-6));
    }
    SECTION("out-of-range point raises EncodeError") {
        AnnotationSet bad;
        bad.points.push_back({1, 60.0, 3.0});
        CHECK_THROWS_AS(encode_targets(bad, 56, 3), EncodeError);
    }
}

TEST_CASE("decode_points applies thresholds and offsets", "[codec]") {
    SECTION("all-background map decodes to nothing") {
        GridMaps<float> maps(3, 56);
        for (int i = 0; i < 56; ++i)
            for (int j = 0; j < 56; ++j) maps.class_map.at(0, i, j) = 1.0f;
        CHECK(decode_points(maps, bar_decode_config()).empty());
    }
    SECTION("foreground score at or below cls_thresh is excluded") {
        GridMaps<float> maps(3, 56);
        for (int i = 0; i < 56; ++i)
            for (int j = 0; j < 56; ++j) maps.class_map.at(0, i, j) = 1.0f;
        maps.class_map.at(0, 5, 5) = 0.3f;
        maps.class_map.at(1, 5, 5) = 0.5f;  // below 0.75
        maps.class_map.at(2, 5, 5) = 0.2f;
        CHECK(decode_points(maps, bar_decode_config()).empty());
        maps.class_map.at(1, 5, 5) = 0.76f;
        maps.class_map.at(2, 5, 5) = 0.0f;
        auto dets = decode_points(maps, bar_decode_config());
        REQUIRE(dets.size() == 1);
        CHECK(dets[0].point.cls == 1);
        CHECK(dets[0].confidence == Catch::Approx(0.76));
    }
}

TEST_CASE("encode/decode round-trip on random separated annotation sets", "[codec]") {
    Rng rng(20260810);
    const DecodeConfig cfg = bar_decode_config();
    for (int trial = 0; trial < 300; ++trial) {
        const auto anns = ppn_test::random_annotations(rng, 56, 3, 20, &cfg.nms);
        const auto maps = encode_targets(anns, 56, 3);
        DecodeConfig trial_cfg = cfg;
        trial_cfg.bg_thresh = rng.uniform(0.9, 0.99);
        auto dets = decode_points(maps, trial_cfg);
        REQUIRE(dets.size() == anns.points.size());
        // match each ground-truth point to the closest decoded one
        for (const Point& gt : anns.points) {
            double best = 1e18;
            int best_cls = -1;
            for (const Detection& d : dets) {
                const double dist = euclidean_distance(d.point, gt);
                if (dist < best) {
                    best = dist;
                    best_cls = d.point.cls;
                }
            }
            CHECK(best < 1e-6);
            CHECK(best_cls == gt.cls);
        }
    }
}

TEST_CASE("nms keeps the strongest point within the radius", "[codec]") {
    const MatchConfig cfg = MatchConfig::for_classes(ClassSet::bar_chart());
    const int bar = 1, tick = 2;

    SECTION("near duplicates collapse to the higher confidence") {
        std::vector<Detection> dets{{{bar, 10.0, 10.0}, 0.9}, {{bar, 10.5, 10.0}, 0.8}};
        auto kept = nms(dets, cfg);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].confidence == 0.9);
    }
    SECTION("bars four cells apart are suppressed by the 5x stretch") {
        std::vector<Detection> dets{{{bar, 10.0, 10.0}, 0.9}, {{bar, 14.0, 10.0}, 0.8}};
        CHECK(elliptical_distance(dets[0].point, dets[1].point, 5.0) == Catch::Approx(0.8));
        CHECK(nms(dets, cfg).size() == 1);
    }
    SECTION("ticks four cells apart both survive") {
        std::vector<Detection> dets{{{tick, 10.0, 10.0}, 0.9}, {{tick, 14.0, 10.0}, 0.8}};
        CHECK(nms(dets, cfg).size() == 2);
    }
    SECTION("confidence ties break deterministically by (y,x)") {
        std::vector<Detection> dets{{{tick, 9.0, 12.0}, 0.8}, {{tick, 9.0, 11.0}, 0.8}};
        auto kept = nms(dets, cfg);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].point.x == 11.0);
    }
}

TEST_CASE("nms properties on random detection sets", "[codec]") {
    Rng rng(99);
    const MatchConfig cfg = MatchConfig::for_classes(ClassSet::bar_chart());
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Detection> dets;
        const int n = static_cast<int>(rng.uniform_int(0, 24));
        for (int i = 0; i < n; ++i)
            dets.push_back({{static_cast<int>(rng.uniform_int(1, 2)), rng.uniform(0, 56), rng.uniform(0, 56)},
                            rng.uniform(0.0, 1.0)});
        auto once = nms(dets, cfg);
        auto twice = nms(once, cfg);
        REQUIRE(once.size() == twice.size());  // idempotence
        for (size_t i = 0; i < once.size(); ++i) {
            CHECK(once[i].point.x == twice[i].point.x);
            CHECK(once[i].confidence == twice[i].confidence);
        }
        // minimum separation within each class
        for (size_t a = 0; a < once.size(); ++a)
            for (size_t b = a + 1; b < once.size(); ++b) {
                if (once[a].point.cls != once[b].point.cls) continue;
                CHECK(elliptical_distance(once[a].point, once[b].point,
                                          cfg.stretch_for(once[a].point.cls)) >= cfg.threshold);
            }
        // the top-confidence detection of each class always survives
        for (int cls = 1; cls <= 2; ++cls) {
            const Detection* top = nullptr;
            for (const auto& d : dets)
                if (d.point.cls == cls && (!top || d.confidence > top->confidence)) top = &d;
            if (!top) continue;
            bool found = false;
            for (const auto& d : once)
                if (d.point.cls == cls && d.confidence == top->confidence) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("softmax view sums to one per cell", "[codec]") {
    Rng rng(5);
    GridMaps<float> logits(3, 8);
    for (size_t i = 0; i < logits.class_map.size(); ++i)
        logits.class_map[i] = static_cast<float>(rng.uniform(-4.0, 4.0));
    auto probs = softmax_maps(logits);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            float sum = 0;
            for (int c = 0; c < 3; ++c) sum += probs.class_map.at(c, i, j);
            CHECK(sum == Catch::Approx(1.0f).margin(1e-5));
        }
}
