#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "eventlab/random.hpp"
#include "eventlab/wta.hpp"

using namespace eventlab;

namespace {

WtaInput random_input(std::uint64_t seed, std::size_t bins, std::size_t ratio,
                      double threshold, double p_small, double p_large) {
    Rng rng(seed);
    WtaInput input;
    input.ratio = ratio;
    input.threshold = threshold;
    input.correct_small.resize(bins * ratio);
    input.correct_large.resize(bins);
    for (auto& v : input.correct_small) v = rng.unit() < p_small ? 1 : 0;
    for (auto& v : input.correct_large) v = rng.unit() < p_large ? 1 : 0;
    return input;
}

// Direct per-bin oracle.
std::vector<std::uint8_t> oracle_adjust(const WtaInput& input, std::size_t bins) {
    std::vector<std::uint8_t> out(input.correct_small.begin(),
                                  input.correct_small.begin() + bins * input.ratio);
    for (std::size_t b = 0; b < bins; ++b) {
        double sum = 0;
        for (std::size_t i = 0; i < input.ratio; ++i) sum += out[b * input.ratio + i];
        if (sum / double(input.ratio) >= input.threshold && input.correct_large[b])
            for (std::size_t i = 0; i < input.ratio; ++i) out[b * input.ratio + i] = 1;
    }
    return out;
}

}  // namespace

TEST_CASE("the worked 50% example upgrades the whole bin", "[wta]") {
    WtaInput input;
    input.correct_small = {1, 0, 1, 0};  // 2 of 4 correct
    input.correct_large = {1};
    input.ratio = 4;
    input.threshold = 0.5;
    WtaResult r = wta_adjust(input);
    CHECK(r.adjusted_correct_small == std::vector<std::uint8_t>{1, 1, 1, 1});
    CHECK(r.raw_recall1 == 0.5);
    CHECK(r.adjusted_recall1 == 1.0);
    CHECK(r.bins_upgraded == 1);

    SECTION("the upgrade needs the large match too") {
        input.correct_large = {0};
        WtaResult held = wta_adjust(input);
        CHECK(held.adjusted_correct_small == input.correct_small);
        CHECK(held.bins_upgraded == 0);
    }
    SECTION("just below the threshold does not fire") {
        input.correct_small = {1, 0, 0, 0};
        input.correct_large = {1};
        WtaResult held = wta_adjust(input);
        CHECK(held.adjusted_recall1 == 0.25);
    }
}

TEST_CASE("threshold 1.0 is a fixed point", "[wta]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        WtaInput input = random_input(seed, 25, 4, 1.0, 0.6, 0.8);
        WtaResult r = wta_adjust(input);
        CHECK(r.adjusted_correct_small == input.correct_small);
        CHECK(r.adjusted_recall1 == r.raw_recall1);
    }
}

TEST_CASE("random bins match the per-bin oracle across thresholds", "[wta]") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        for (double threshold : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            WtaInput input = random_input(seed * 31 + 1, 200, 4, threshold, 0.5, 0.6);
            WtaResult r = wta_adjust(input);
            CHECK(r.bins == 200);
            CHECK(r.adjusted_correct_small == oracle_adjust(input, 200));
        }
    }
}

TEST_CASE("wta invariants", "[wta]") {
    SECTION("upgrade-only: adjusted >= raw pointwise and in recall") {
        for (std::uint64_t seed = 100; seed < 140; ++seed) {
            Rng rng(seed);
            WtaInput input = random_input(seed, 10 + rng.below(100), 1 + rng.below(8),
                                          rng.unit(), rng.unit(), rng.unit());
            WtaResult r = wta_adjust(input);
            for (std::size_t i = 0; i < r.adjusted_correct_small.size(); ++i)
                REQUIRE(r.adjusted_correct_small[i] >= input.correct_small[i]);
            CHECK(r.adjusted_recall1 >= r.raw_recall1);
        }
    }
    SECTION("adjusted recall is non-increasing in threshold") {
        for (std::uint64_t seed = 200; seed < 220; ++seed) {
            WtaInput input = random_input(seed, 60, 4, 0.0, 0.5, 0.7);
            double prev = 2.0;
            for (double threshold : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                input.threshold = threshold;
                WtaResult r = wta_adjust(input);
                CHECK(r.adjusted_recall1 <= prev);
                prev = r.adjusted_recall1;
            }
        }
    }
    SECTION("permuting entries within one bin leaves its outcome unchanged") {
        WtaInput input = random_input(321, 30, 5, 0.4, 0.5, 0.7);
        WtaResult base = wta_adjust(input);
        WtaInput permuted = input;
        std::rotate(permuted.correct_small.begin() + 10, permuted.correct_small.begin() + 12,
                    permuted.correct_small.begin() + 15);  // permute bin 2
        WtaResult r = wta_adjust(permuted);
        CHECK(r.adjusted_recall1 == base.adjusted_recall1);
        CHECK(r.bins_upgraded == base.bins_upgraded);
    }
    SECTION("trailing partial bin is dropped and counted") {
        WtaInput input;
        input.correct_small = {1, 0, 0, 1, 1, 0};  // 1.5 bins at ratio 4
        input.correct_large = {1, 1};
        input.ratio = 4;
        input.threshold = 0.0;
        WtaResult r = wta_adjust(input);
        CHECK(r.bins == 1);
        CHECK(r.dropped_small == 2);
        CHECK(r.adjusted_correct_small.size() == 4);
    }
    SECTION("argument validation") {
        WtaInput input;
        input.correct_small = {1, 1};
        input.correct_large = {1};
        input.ratio = 0;
        REQUIRE_THROWS(wta_adjust(input));
        input.ratio = 2;
        input.threshold = 1.5;
        REQUIRE_THROWS(wta_adjust(input));
        input.threshold = 0.5;
        input.correct_small = {1};
        input.correct_large = {1, 1, 1};
        REQUIRE_THROWS(wta_adjust(input));
    }
}

namespace {

DistanceMatrix diag_distances(std::size_t n, const std::vector<std::size_t>& best) {
    DistanceMatrix d;
    d.queries = n;
    d.references = n;
    d.d.assign(n * n, 1.0);
    for (std::size_t q = 0; q < n; ++q) d.at(q, best[q]) = 0.0;
    return d;
}

GroundTruthMatrix identity_gt(std::size_t n) {
    GroundTruthMatrix gt;
    gt.queries = gt.references = n;
    gt.m.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) gt.set(i, i, true);
    return gt;
}

}  // namespace

TEST_CASE("wta_sweep composes top-1 logic with the adjustment", "[wta]") {
    // 8 small queries (2 bins of 4), 2 large queries; bin0 2/4, bin1 1/4 correct
    std::vector<std::size_t> small_best{0, 1, 5, 6, 4, 6, 5, 2};
    std::vector<std::size_t> large_best{0, 1};
    DistanceMatrix d_small = diag_distances(8, small_best);
    DistanceMatrix d_large = diag_distances(2, large_best);
    GroundTruthMatrix gt_small = identity_gt(8);
    GroundTruthMatrix gt_large = identity_gt(2);

    const double thresholds[] = {0.0, 0.25, 0.5, 0.75};
    auto rows = wta_sweep(d_small, gt_small, d_large, gt_large, 4, thresholds);
    REQUIRE(rows.size() == 4);

    // manual composition oracle
    auto correct_small = top1_correctness(d_small, gt_small);
    auto correct_large = top1_correctness(d_large, gt_large);
    CHECK(correct_small == std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0, 0, 0});
    CHECK(correct_large == std::vector<std::uint8_t>{1, 1});
    for (std::size_t i = 0; i < 4; ++i) {
        WtaInput input{correct_small, correct_large, 4, thresholds[i]};
        WtaResult expected = wta_adjust(input);
        CHECK(rows[i].raw_recall1 == expected.raw_recall1);
        CHECK(rows[i].adjusted_recall1 == expected.adjusted_recall1);
        CHECK(rows[i].bins_upgraded == expected.bins_upgraded);
        CHECK(rows[i].large_recall1 == 1.0);
    }
    // bin0 fires at thresholds <= 0.5, bin1 at thresholds <= 0.25
    CHECK(rows[0].adjusted_recall1 == 1.0);
    CHECK(rows[1].adjusted_recall1 == 1.0);
    CHECK(rows[2].adjusted_recall1 == 0.625);
    CHECK(rows[3].adjusted_recall1 == 0.375);

    SECTION("threshold zero with all large correct upgrades everything") {
        CHECK(rows[0].adjusted_recall1 == 1.0);
    }
    SECTION("ascending thresholds give non-increasing adjusted recall") {
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(rows[i].adjusted_recall1 <= rows[i - 1].adjusted_recall1);
    }
}

TEST_CASE("time-keyed bin assignment for variable-length frames", "[wta]") {
    std::vector<Frame> large(3);
    large[0] = {0, 100, {}};
    large[1] = {100, 250, {}};
    large[2] = {400, 500, {}};
    std::vector<std::uint64_t> small_begin{0, 50, 120, 240, 260, 410, 499, 600};
    auto bins = assign_bins_by_time(small_begin, large);
    CHECK(bins == std::vector<std::size_t>{0, 0, 1, 1, std::size_t(-1), 2, 2, std::size_t(-1)});
}
