#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/metrics.hpp"

namespace eventlab {

// Winner-takes-all inputs: per-query top-1 correctness at a small collection
// window and at a large window covering `ratio` consecutive small ones.
struct WtaInput {
    std::vector<std::uint8_t> correct_small;
    std::vector<std::uint8_t> correct_large;
    std::size_t ratio = 1;
    double threshold = 0.5;
};

struct WtaResult {
    std::vector<std::uint8_t> adjusted_correct_small;  // binned region only
    double adjusted_recall1 = 0.0;
    double raw_recall1 = 0.0;
    std::size_t bins = 0;
    std::size_t bins_upgraded = 0;     // bins where the rule fired and flipped an entry
    std::size_t dropped_small = 0;     // trailing small queries not covered by a full bin
};

// For each fully covered bin b (small indices [b*ratio, (b+1)*ratio)): if the
// fraction of correct small matches is >= threshold AND the large match b is
// correct, every small entry of the bin is marked correct. Upgrade-only;
// recalls are means over the binned entries.
inline WtaResult wta_adjust(const WtaInput& input) {
    require(input.ratio >= 1, "wta ratio must be >= 1");
    require(input.threshold >= 0.0 && input.threshold <= 1.0,
            "wta threshold must lie in [0, 1], got ", input.threshold);
    const std::size_t s = input.correct_small.size();
    const std::size_t l = input.correct_large.size();
    require(l >= 1, "wta needs at least one large-window query");
    require(s + input.ratio >= input.ratio * l + 1,
            "small sequence too short: ", s, " entries cannot cover ", l,
            " large windows at ratio ", input.ratio);

    WtaResult result;
    result.bins = std::min(l, s / input.ratio);
    const std::size_t binned = result.bins * input.ratio;
    result.dropped_small = s - binned;
    result.adjusted_correct_small.assign(input.correct_small.begin(),
                                         input.correct_small.begin() + binned);

    std::size_t raw_correct = 0;
    for (std::size_t i = 0; i < binned; ++i) raw_correct += input.correct_small[i];

    for (std::size_t b = 0; b < result.bins; ++b) {
        std::size_t bin_correct = 0;
        for (std::size_t i = 0; i < input.ratio; ++i)
            bin_correct += input.correct_small[b * input.ratio + i];
        const double frac = static_cast<double>(bin_correct) / static_cast<double>(input.ratio);
        if (frac >= input.threshold && input.correct_large[b]) {
            if (bin_correct < input.ratio) ++result.bins_upgraded;
            for (std::size_t i = 0; i < input.ratio; ++i)
                result.adjusted_correct_small[b * input.ratio + i] = 1;
        }
    }

    std::size_t adjusted_correct = 0;
    for (std::uint8_t v : result.adjusted_correct_small) adjusted_correct += v;
    result.raw_recall1 = static_cast<double>(raw_correct) / static_cast<double>(binned);
    result.adjusted_recall1 =
        static_cast<double>(adjusted_correct) / static_cast<double>(binned);
    return result;
}

// Per-query top-1 correctness: 1 iff the minimum-distance reference (tie ->
// lowest index) is a ground-truth positive. Computed over all queries so the
// positional bin alignment is preserved; queries without any positive can
// never be correct.
inline std::vector<std::uint8_t> top1_correctness(const DistanceMatrix& d,
                                                  const GroundTruthMatrix& gt) {
    detail::check_dims(d, gt);
    std::vector<std::uint8_t> out(d.queries, 0);
    for (std::size_t q = 0; q < d.queries; ++q)
        out[q] = gt.at(q, detail::best_reference(d, q));
    return out;
}

// Alternative bin assignment for variable-length fixed-count frames: small
// frame k belongs to the large frame whose [t_begin, t_end) contains its
// t_begin, or npos when none does.
inline std::vector<std::size_t> assign_bins_by_time(std::span<const std::uint64_t> small_t_begin,
                                                    std::span<const Frame> large_frames) {
    std::vector<std::size_t> bins(small_t_begin.size(), std::size_t(-1));
    std::size_t b = 0;
    for (std::size_t k = 0; k < small_t_begin.size(); ++k) {
        while (b < large_frames.size() && large_frames[b].t_end <= small_t_begin[k]) ++b;
        if (b < large_frames.size() && large_frames[b].t_begin <= small_t_begin[k])
            bins[k] = b;
    }
    return bins;
}

struct WtaSweepRow {
    double threshold = 0.0;
    double raw_recall1 = 0.0;
    double adjusted_recall1 = 0.0;
    double large_recall1 = 0.0;
    std::size_t bins_upgraded = 0;
};

// Runs the top-1 logic at both scales, then wta_adjust per threshold.
// large_recall1 is reported over the binned large queries for comparison.
inline std::vector<WtaSweepRow> wta_sweep(const DistanceMatrix& d_small,
                                          const GroundTruthMatrix& gt_small,
                                          const DistanceMatrix& d_large,
                                          const GroundTruthMatrix& gt_large, std::size_t ratio,
                                          std::span<const double> thresholds) {
    WtaInput input;
    input.correct_small = top1_correctness(d_small, gt_small);
    input.correct_large = top1_correctness(d_large, gt_large);
    input.ratio = ratio;
    std::vector<WtaSweepRow> rows;
    rows.reserve(thresholds.size());
    for (double threshold : thresholds) {
        input.threshold = threshold;
        const WtaResult r = wta_adjust(input);
        WtaSweepRow row;
        row.threshold = threshold;
        row.raw_recall1 = r.raw_recall1;
        row.adjusted_recall1 = r.adjusted_recall1;
        std::size_t large_correct = 0;
        for (std::size_t b = 0; b < r.bins; ++b) large_correct += input.correct_large[b];
        row.large_recall1 = static_cast<double>(large_correct) / static_cast<double>(r.bins);
        row.bins_upgraded = r.bins_upgraded;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace eventlab
