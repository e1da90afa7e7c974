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

#include "ppn/core.hpp"
#include "ppn/rng.hpp"

using namespace ppn;

TEST_CASE("euclidean distance basics", "[core]") {
    CHECK(euclidean_distance({1, 0, 0}, {1, 0, 0}) == 0.0);
    CHECK(euclidean_distance({1, 0, 0}, {1, 3, 4}) == Catch::Approx(5.0));
    CHECK(euclidean_distance({1, 1.5, 2.0}, {1, 2.5, 2.0}) == Catch::Approx(1.0));
}

TEST_CASE("elliptical distance basics", "[core]") {
    CHECK(elliptical_distance({1, 0, 0}, {1, 4, 0}, 5.0) == Catch::Approx(0.8));
    CHECK(elliptical_distance({1, 0, 0}, {1, 0, 2}, 5.0) == Catch::Approx(2.0));
    CHECK(elliptical_distance({1, 0, 0}, {1, 3, 4}, 1.0) == Catch::Approx(5.0));
}

TEST_CASE("distance metric properties on random pairs", "[core]") {
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        Point a{1, rng.uniform(0, 56), rng.uniform(0, 56)};
        Point b{1, rng.uniform(0, 56), rng.uniform(0, 56)};
        const double s = rng.uniform(1.0, 8.0);
        CHECK(elliptical_distance(a, b, 1.0) == Catch::Approx(euclidean_distance(a, b)).margin(1e-12));
        CHECK(elliptical_distance(a, b, s) == Catch::Approx(elliptical_distance(b, a, s)).margin(1e-12));
        CHECK(elliptical_distance(a, b, s) <= euclidean_distance(a, b) + 1e-12);
        if (a.x != b.x || a.y != b.y) {
            CHECK(euclidean_distance(a, b) > 0.0);
        }
    }
    Point p{2, 13.25, 41.5};
    CHECK(elliptical_distance(p, p, 3.0) == 0.0);
}

TEST_CASE("annotation sets reject same-cell same-class points", "[core]") {
    std::vector<Point> pts{{1, 10.2, 20.3}, {1, 10.8, 20.9}};  // both in cell (20,10)
    CHECK_THROWS_AS(AnnotationSet::validated("img", 448, 448, pts, 56), DataError);

    // same cell, different class is fine
    std::vector<Point> ok{{1, 10.2, 20.3}, {2, 10.8, 20.9}};
    CHECK_NOTHROW(AnnotationSet::validated("img", 448, 448, ok, 56));

    // out-of-range coordinates are rejected
    std::vector<Point> oob{{1, -0.5, 3.0}};
    CHECK_THROWS_AS(AnnotationSet::validated("img", 448, 448, oob, 56), DataError);
}

TEST_CASE("match config applies bar stretch", "[core]") {
    const MatchConfig cfg = MatchConfig::for_classes(ClassSet::bar_chart());
    CHECK(cfg.threshold == 1.5);
    CHECK(cfg.stretch_for(ClassSet::bar_chart().index_of("bar")) == 5.0);
    CHECK(cfg.stretch_for(ClassSet::bar_chart().index_of("tick")) == 1.0);

    const MatchConfig pie = MatchConfig::for_classes(ClassSet::pie_chart());
    CHECK(pie.stretch_for(1) == 1.0);
    CHECK(pie.stretch_for(2) == 1.0);
}

TEST_CASE("rng reproducibility and state round-trip", "[core]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto st = a.state();
    std::vector<double> want;
    for (int i = 0; i < 16; ++i) want.push_back(a.uniform());
    b.set_state(st);
    for (int i = 0; i < 16; ++i) CHECK(b.uniform() == want[static_cast<size_t>(i)]);

    // child streams differ from the parent and from each other
    Rng root(3);
    CHECK(root.child(0).next_u64() != root.child(1).next_u64());
}

TEST_CASE("rng uniform_int covers the inclusive range", "[core]") {
    Rng rng(11);
    std::vector<int> seen(9, 0);
    for (int i = 0; i < 20000; ++i) seen[static_cast<size_t>(rng.uniform_int(2, 10) - 2)]++;
    for (int count : seen) CHECK(count > 0);
}
