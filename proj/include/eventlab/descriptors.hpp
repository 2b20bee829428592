#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/frames.hpp"

namespace eventlab {

struct DescriptorProvenance {
    std::string baseline;
    std::size_t frame_index = 0;
    std::string params;
};

struct Descriptor {
    std::vector<double> values;
    DescriptorProvenance provenance;
};

// SAD-ready dense descriptor: the summed-polarity frame, block-mean pooled by
// `downsample` and flattened row-major. Trailing partial blocks are averaged
// over their actual size.
inline std::vector<Descriptor> describe_dense(const FrameStack& st, std::uint32_t downsample) {
    require(downsample >= 1, "downsample must be >= 1");
    require(!st.frames.empty(), "describe_dense: empty frame stack");
    const std::uint32_t bx = (st.width + downsample - 1) / downsample;
    const std::uint32_t by = (st.height + downsample - 1) / downsample;
    std::vector<Descriptor> out;
    out.reserve(st.frames.size());
    for (std::size_t k = 0; k < st.frames.size(); ++k) {
        const Frame& f = st.frames[k];
        Descriptor d;
        d.provenance = {"dense_sad", k, "downsample=" + std::to_string(downsample)};
        d.values.resize(std::size_t(bx) * by);
        for (std::uint32_t j = 0; j < by; ++j) {
            const std::uint32_t y0 = j * downsample;
            const std::uint32_t y1 = std::min(st.height, y0 + downsample);
            for (std::uint32_t i = 0; i < bx; ++i) {
                const std::uint32_t x0 = i * downsample;
                const std::uint32_t x1 = std::min(st.width, x0 + downsample);
                double sum = 0.0;
                for (std::uint32_t y = y0; y < y1; ++y)
                    for (std::uint32_t x = x0; x < x1; ++x)
                        sum += st.summed_at(f, std::size_t(y) * st.width + x);
                d.values[std::size_t(j) * bx + i] =
                    sum / (double(y1 - y0) * double(x1 - x0));
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

// The k pixels whose summed-polarity count varies most across frames
// (population variance; ties broken by ascending row-major index). Returned
// sorted ascending, the gather order describe_sparse uses.
inline std::vector<std::uint32_t> select_active_pixels(const FrameStack& st, std::size_t k) {
    require(st.frames.size() >= 2,
            "select_active_pixels needs at least 2 frames to estimate variance, got ",
            st.frames.size());
    const std::size_t pixels = st.pixels();
    require(k >= 1 && k <= pixels, "pixel count k=", k, " outside [1, ", pixels, "]");
    std::vector<double> sum(pixels, 0.0), sum_sq(pixels, 0.0);
    for (const Frame& f : st.frames) {
        for (std::size_t i = 0; i < pixels; ++i) {
            const double v = st.summed_at(f, i);
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    const double n = static_cast<double>(st.frames.size());
    std::vector<std::uint32_t> order(pixels);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> variance(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        variance[i] = sum_sq[i] / n - (sum[i] / n) * (sum[i] / n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (variance[a] != variance[b]) return variance[a] > variance[b];
                          return a < b;
                      });
    std::vector<std::uint32_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(selected.begin(), selected.end());
    return selected;
}

// Sparse descriptor: summed-polarity counts gathered at the given pixels in
// ascending index order. The pixel set must come from the reference stack and
// be reused verbatim for the query.
inline std::vector<Descriptor> describe_sparse(const FrameStack& st,
                                               std::span<const std::uint32_t> pixels) {
    require(!pixels.empty(), "describe_sparse: empty pixel set");
    const std::size_t total = st.pixels();
    for (std::uint32_t p : pixels)
        require(p < total, "pixel index ", p, " out of range for ", st.width, "x", st.height);
    std::vector<std::uint32_t> ordered(pixels.begin(), pixels.end());
    std::sort(ordered.begin(), ordered.end());
    std::vector<Descriptor> out;
    out.reserve(st.frames.size());
    for (std::size_t k = 0; k < st.frames.size(); ++k) {
        Descriptor d;
        d.provenance = {"sparse_event", k, "pixels=" + std::to_string(ordered.size())};
        d.values.reserve(ordered.size());
        for (std::uint32_t p : ordered) d.values.push_back(st.summed_at(st.frames[k], p));
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace eventlab
