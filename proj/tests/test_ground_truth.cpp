#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "eventlab/ground_truth.hpp"
#include "eventlab/random.hpp"
#include "test_util.hpp"

using namespace eventlab;

namespace {

PlaceIndex timed_index(const std::vector<std::uint64_t>& t_centers) {
    PlaceIndex idx;
    for (std::size_t i = 0; i < t_centers.size(); ++i)
        idx.items.push_back({i, t_centers[i], {}, {}});
    return idx;
}

PlaceIndex planar_index(const std::vector<std::pair<double, double>>& points,
                        std::uint64_t spacing_us = 1000000) {
    PlaceIndex idx;
    idx.coord_kind = CoordKind::planar;
    for (std::size_t i = 0; i < points.size(); ++i) {
        PlaceItem item;
        item.frame_index = i;
        item.t_center_us = (i + 1) * spacing_us;
        item.position = points[i];
        idx.items.push_back(item);
    }
    return idx;
}

}  // namespace

TEST_CASE("time ground truth basics", "[ground_truth]") {
    SECTION("identical timestamps with zero tolerance form the identity matrix") {
        PlaceIndex idx = timed_index({100, 200, 300, 400});
        GroundTruthMatrix gt = build_gt_time(idx, idx, 0);
        for (std::size_t q = 0; q < 4; ++q)
            for (std::size_t r = 0; r < 4; ++r) CHECK(gt.at(q, r) == (q == r ? 1 : 0));
    }
    SECTION("1000 ms place spacing with the 300 ms tolerance stays diagonal") {
        std::vector<std::uint64_t> t;
        for (std::uint64_t i = 0; i < 20; ++i) t.push_back(i * 1000000);
        PlaceIndex idx = timed_index(t);
        GroundTruthMatrix gt = build_gt_time(idx, idx, 300000);
        for (std::size_t q = 0; q < 20; ++q)
            for (std::size_t r = 0; r < 20; ++r) CHECK(gt.at(q, r) == (q == r ? 1 : 0));
    }
    SECTION("random jittered queries match an exhaustive pairwise oracle") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            Rng rng(seed);
            std::vector<std::uint64_t> ref_t, qry_t;
            std::uint64_t t = 0;
            for (int i = 0; i < 60; ++i) ref_t.push_back(t += 1 + rng.below(50000));
            t = 500;
            for (int i = 0; i < 40; ++i) qry_t.push_back(t += 1 + rng.below(70000));
            const std::uint64_t tol = 40000;
            GroundTruthMatrix gt = build_gt_time(timed_index(ref_t), timed_index(qry_t), tol);
            for (std::size_t q = 0; q < qry_t.size(); ++q)
                for (std::size_t r = 0; r < ref_t.size(); ++r) {
                    const std::uint64_t dt = qry_t[q] > ref_t[r] ? qry_t[q] - ref_t[r]
                                                                 : ref_t[r] - qry_t[q];
                    CHECK(gt.at(q, r) == (dt <= tol ? 1 : 0));
                }
        }
    }
}

TEST_CASE("time ground truth symmetry and monotonicity", "[ground_truth]") {
    Rng rng(77);
    std::vector<std::uint64_t> a_t, b_t;
    std::uint64_t t = 0;
    for (int i = 0; i < 30; ++i) a_t.push_back(t += 1 + rng.below(9000));
    t = 100;
    for (int i = 0; i < 25; ++i) b_t.push_back(t += 1 + rng.below(11000));
    PlaceIndex a = timed_index(a_t), b = timed_index(b_t);

    SECTION("build_gt_time(A,B) is the transpose of build_gt_time(B,A)") {
        GroundTruthMatrix ab = build_gt_time(a, b, 5000);
        GroundTruthMatrix ba = build_gt_time(b, a, 5000);
        REQUIRE(ab.queries == ba.references);
        for (std::size_t q = 0; q < ab.queries; ++q)
            for (std::size_t r = 0; r < ab.references; ++r)
                CHECK(ab.at(q, r) == ba.at(r, q));
    }
    SECTION("enlarging the tolerance never clears an entry") {
        GroundTruthMatrix small = build_gt_time(a, b, 3000);
        GroundTruthMatrix big = build_gt_time(a, b, 9000);
        for (std::size_t i = 0; i < small.m.size(); ++i)
            CHECK(big.m[i] >= small.m[i]);
    }
}

TEST_CASE("position ground truth", "[ground_truth]") {
    SECTION("coincident points, 10 m tolerance, no filters: all ones") {
        PlaceIndex idx = planar_index({{5, 5}, {5, 5}, {5, 5}});
        GroundTruthMatrix gt = build_gt_position(idx, idx, 10.0, {});
        for (std::uint8_t v : gt.m) CHECK(v == 1);
    }
    SECTION("opposing headings with the reverse filter: all zeros") {
        PlaceIndex ref = planar_index({{0, 0}, {10, 0}, {20, 0}});  // heading east
        PlaceIndex qry = planar_index({{20, 0}, {10, 0}, {0, 0}});  // heading west
        GtFilters filters;
        filters.reverse_direction = true;
        GroundTruthMatrix gt = build_gt_position(ref, qry, 50.0, filters);
        for (std::uint8_t v : gt.m) CHECK(v == 0);
        GroundTruthMatrix unfiltered = build_gt_position(ref, qry, 50.0, {});
        CHECK(unfiltered.gtp() == 3);
    }
    SECTION("random planar points against an exhaustive distance oracle") {
        for (std::uint64_t seed = 10; seed < 13; ++seed) {
            Rng rng(seed);
            std::vector<std::pair<double, double>> ref_pts, qry_pts;
            for (int i = 0; i < 50; ++i)
                ref_pts.push_back({rng.unit() * 200.0, rng.unit() * 200.0});
            for (int i = 0; i < 50; ++i)
                qry_pts.push_back({rng.unit() * 200.0, rng.unit() * 200.0});
            GroundTruthMatrix gt =
                build_gt_position(planar_index(ref_pts), planar_index(qry_pts), 25.0, {});
            for (std::size_t q = 0; q < 50; ++q)
                for (std::size_t r = 0; r < 50; ++r) {
                    const double dx = qry_pts[q].first - ref_pts[r].first;
                    const double dy = qry_pts[q].second - ref_pts[r].second;
                    CHECK(gt.at(q, r) == (std::hypot(dx, dy) <= 25.0 ? 1 : 0));
                }
        }
    }
    SECTION("endpoint overlap filter clears start-vs-end matches only") {
        // closed loop: the traverse ends where it started
        std::vector<std::pair<double, double>> loop;
        const double radius = 40.0 / (2.0 * 3.141592653589793);
        for (int i = 0; i < 40; ++i) {
            const double a = 2.0 * 3.141592653589793 * i / 40.0;
            loop.push_back({radius * std::cos(a), radius * std::sin(a)});
        }
        GtFilters filters;
        filters.endpoint_overlap = true;
        GroundTruthMatrix filtered =
            build_gt_position(planar_index(loop), planar_index(loop), 1.5, filters);
        GroundTruthMatrix raw = build_gt_position(planar_index(loop), planar_index(loop), 1.5, {});
        std::size_t cleared = 0;
        for (std::size_t i = 0; i < raw.m.size(); ++i) {
            CHECK(filtered.m[i] <= raw.m[i]);  // filters only clear
            cleared += raw.m[i] - filtered.m[i];
        }
        CHECK(cleared > 0);
        // the 5% zones are 2 places wide here: loop closure q=39 vs r=0
        CHECK(raw.at(39, 0) == 1);
        CHECK(filtered.at(39, 0) == 0);
        CHECK(raw.at(39, 38) == 1);
        CHECK(filtered.at(39, 38) == 1);  // tail-vs-tail stays
    }
    SECTION("mixed coordinate conventions are rejected") {
        PlaceIndex planar = planar_index({{0, 0}, {1, 0}, {2, 0}});
        PlaceIndex latlon = planar_index({{0, 0}, {1, 0}, {2, 0}});
        latlon.coord_kind = CoordKind::latlon;
        REQUIRE_THROWS_WITH(build_gt_position(planar, latlon, 10.0, {}),
                            Catch::Matchers::ContainsSubstring("mixed coordinate"));
    }
}

TEST_CASE("haversine distance sanity", "[ground_truth]") {
    // 1 degree of latitude on the 6371 km sphere
    const double one_deg = haversine_m(0.0, 0.0, 1.0, 0.0);
    CHECK(one_deg == Catch::Approx(6371000.0 * 3.141592653589793 / 180.0).epsilon(1e-9));
    CHECK(haversine_m(10.0, 20.0, 10.0, 20.0) == 0.0);

    PlaceIndex a = planar_index({{0.0, 0.0}, {0.001, 0.0}, {0.002, 0.0}});
    a.coord_kind = CoordKind::latlon;
    GroundTruthMatrix gt = build_gt_position(a, a, 120.0, {});  // ~111 m spacing
    CHECK(gt.at(0, 1) == 1);
    CHECK(gt.at(0, 2) == 0);
}

TEST_CASE("tolerance in places", "[ground_truth]") {
    CHECK(gt_tolerance_in_places(3, 1000000) == 3000000);
    CHECK(gt_tolerance_in_places(0, 123456) == 0);
    CHECK(gt_tolerance_in_places(5, 100000) == 500000);
}

TEST_CASE("GTP and empty-row reporting", "[ground_truth]") {
    PlaceIndex ref = timed_index({1000, 2000});
    PlaceIndex qry = timed_index({1000, 2000, 900000});
    GroundTruthMatrix gt = build_gt_time(ref, qry, 100);
    CHECK(gt.gtp() == 2);
    auto rows = gt.rows_without_positive();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == 2);
}

TEST_CASE("ground truth bitmap round trip", "[ground_truth]") {
    TempDir dir("eventlab_gt");
    Rng rng(99);
    std::vector<std::uint64_t> ref_t, qry_t;
    std::uint64_t t = 0;
    for (int i = 0; i < 37; ++i) ref_t.push_back(t += 1 + rng.below(5000));
    t = 17;
    for (int i = 0; i < 21; ++i) qry_t.push_back(t += 1 + rng.below(5000));
    PlaceIndex ref = timed_index(ref_t), qry = timed_index(qry_t);
    GroundTruthMatrix gt = build_gt_time(ref, qry, 4000);
    save_gt(gt, dir / "gt.bin", ref, qry);
    GroundTruthMatrix back = load_gt(dir / "gt.bin");
    CHECK(back.queries == gt.queries);
    CHECK(back.references == gt.references);
    CHECK(back.m == gt.m);

    const std::string sidecar = read_file((dir / "gt.bin").string() + ".json");
    CHECK(sidecar.find("tolerance_us") != std::string::npos);
    CHECK(sidecar.find("query_t_center_us") != std::string::npos);
}

TEST_CASE("position track ingestion", "[ground_truth]") {
    TempDir dir("eventlab_track");
    SECTION("planar track attaches by nearest timestamp") {
        write_file(dir / "track.csv",
                   "t_seconds,x_m,y_m\n0.0,0,0\n1.0,10,0\n2.0,20,0\n3.0,30,0\n");
        PositionTrack track = load_track_csv(dir / "track.csv");
        CHECK(track.kind == CoordKind::planar);
        REQUIRE(track.points.size() == 4);
        PlaceIndex idx = timed_index({400000, 1400000, 2600000});
        attach_positions(idx, track);
        CHECK(idx.items[0].position->first == 0.0);    // 0.4 s -> nearest 0 s
        CHECK(idx.items[1].position->first == 10.0);   // 1.4 s -> nearest 1 s
        CHECK(idx.items[2].position->first == 30.0);   // 2.6 s -> nearest 3 s
    }
    SECTION("lat/lon header selects great-circle coordinates") {
        write_file(dir / "gps.csv", "t_seconds,lat,lon\n0.0,-27.5,153.0\n1.0,-27.6,153.1\n");
        PositionTrack track = load_track_csv(dir / "gps.csv");
        CHECK(track.kind == CoordKind::latlon);
    }
    SECTION("unknown header is rejected") {
        write_file(dir / "bad.csv", "time,x,y\n0,0,0\n");
        REQUIRE_THROWS_WITH(load_track_csv(dir / "bad.csv"),
                            Catch::Matchers::ContainsSubstring("header"));
    }
}

TEST_CASE("derived headings", "[ground_truth]") {
    PlaceIndex idx = planar_index({{0, 0}, {10, 0}, {10, 10}});
    derive_headings(idx);
    REQUIRE(idx.items[0].heading_deg.has_value());
    CHECK(*idx.items[1].heading_deg == Catch::Approx(0.0));       // east
    CHECK(*idx.items[2].heading_deg == Catch::Approx(90.0));      // north
    CHECK(*idx.items[0].heading_deg == Catch::Approx(0.0));       // inherits second's
}
