#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event.hpp"

namespace eventlab {

enum class AccumulatorMode { fixed_window, fixed_count };
enum class PolarityMode { two_channel, summed };

inline const char* to_string(AccumulatorMode m) {
    return m == AccumulatorMode::fixed_window ? "fixed_window" : "fixed_count";
}
inline const char* to_string(PolarityMode m) {
    return m == PolarityMode::two_channel ? "two_channel" : "summed";
}

constexpr std::uint16_t kCountSaturation = std::numeric_limits<std::uint16_t>::max();

inline std::uint16_t saturating_add(std::uint16_t a, std::uint32_t b) {
    std::uint32_t v = a + b;
    return v > kCountSaturation ? kCountSaturation : static_cast<std::uint16_t>(v);
}

// One event-count image. counts is channel-major: channel 0 = positive
// polarity (or the single summed channel), channel 1 = negative polarity.
// Counts saturate at 65535, never wrap.
struct Frame {
    std::uint64_t t_begin = 0;
    std::uint64_t t_end = 0;
    std::vector<std::uint16_t> counts;
};

struct FrameStack {
    std::vector<Frame> frames;
    AccumulatorMode mode = AccumulatorMode::fixed_window;
    std::uint64_t parameter = 0;  // window_us or n_events
    PolarityMode polarity_mode = PolarityMode::summed;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    StreamSource source;
    std::uint64_t stream_t_start = 0;
    std::uint64_t stream_duration = 0;
    std::uint32_t aggregate_factor = 1;       // 1 = untouched
    std::uint64_t subsample_period_us = 0;    // 0 = untouched

    std::uint32_t channels() const { return polarity_mode == PolarityMode::two_channel ? 2 : 1; }
    std::size_t pixels() const { return std::size_t(width) * height; }

    // Channel-clamped sum at pixel i, valid in both polarity modes.
    std::uint16_t summed_at(const Frame& f, std::size_t i) const {
        if (polarity_mode == PolarityMode::summed) return f.counts[i];
        return saturating_add(f.counts[i], f.counts[pixels() + i]);
    }
};

namespace detail {

inline Frame blank_frame(std::uint64_t t_begin, std::uint64_t t_end, std::size_t pixels,
                         std::uint32_t channels) {
    Frame f;
    f.t_begin = t_begin;
    f.t_end = t_end;
    f.counts.assign(pixels * channels, 0);
    return f;
}

inline void deposit(Frame& f, const Event& e, std::uint32_t width, std::size_t pixels,
                    PolarityMode mode) {
    std::size_t i = std::size_t(e.y) * width + e.x;
    if (mode == PolarityMode::two_channel && e.polarity < 0) i += pixels;
    f.counts[i] = saturating_add(f.counts[i], 1);
}

inline FrameStack stack_shell(const EventStream& s, AccumulatorMode mode,
                              std::uint64_t parameter, PolarityMode polarity) {
    FrameStack st;
    st.mode = mode;
    st.parameter = parameter;
    st.polarity_mode = polarity;
    st.width = s.width;
    st.height = s.height;
    st.source = s.source;
    st.stream_t_start = s.t_start_us;
    st.stream_duration = s.duration_us;
    return st;
}

}  // namespace detail

// Tiles [0, duration) with half-open windows [k*W, (k+1)*W). A boundary event
// belongs to the later frame; the trailing partial window is dropped. Empty
// windows still produce (all-zero) frames.
inline FrameStack generate_fixed_window(const EventStream& s, std::uint64_t window_us,
                                        PolarityMode polarity) {
    require(window_us >= 1, "window_us must be >= 1");
    FrameStack st = detail::stack_shell(s, AccumulatorMode::fixed_window, window_us, polarity);
    const std::uint64_t num_frames = s.duration_us / window_us;
    st.frames.reserve(num_frames);
    for (std::uint64_t k = 0; k < num_frames; ++k)
        st.frames.push_back(
            detail::blank_frame(k * window_us, (k + 1) * window_us, st.pixels(), st.channels()));
    for (const Event& e : s.events) {
        const std::uint64_t k = e.t / window_us;
        if (k >= num_frames) continue;
        detail::deposit(st.frames[k], e, st.width, st.pixels(), polarity);
    }
    return st;
}

// Consecutive runs of exactly n_events form frames; t_begin is the first
// event's timestamp, t_end the last event's + 1us. The trailing short run is
// dropped.
inline FrameStack generate_fixed_count(const EventStream& s, std::uint64_t n_events,
                                       PolarityMode polarity) {
    require(n_events >= 1, "n_events must be >= 1");
    FrameStack st = detail::stack_shell(s, AccumulatorMode::fixed_count, n_events, polarity);
    const std::uint64_t num_frames = s.events.size() / n_events;
    st.frames.reserve(num_frames);
    for (std::uint64_t k = 0; k < num_frames; ++k) {
        const std::size_t begin = k * n_events;
        const std::size_t end = begin + n_events;
        Frame f = detail::blank_frame(s.events[begin].t, s.events[end - 1].t + 1, st.pixels(),
                                      st.channels());
        for (std::size_t i = begin; i < end; ++i)
            detail::deposit(f, s.events[i], st.width, st.pixels(), polarity);
        st.frames.push_back(std::move(f));
    }
    return st;
}

// Fixed-count generation with a shared n_events so reference and query frames
// carry equal event mass regardless of traverse speed. No cross-trimming: the
// two stacks keep their own frame counts.
inline std::pair<FrameStack, FrameStack> generate_matched(const EventStream& reference,
                                                          const EventStream& query,
                                                          std::uint64_t n_events,
                                                          PolarityMode polarity) {
    FrameStack ref = generate_fixed_count(reference, n_events, polarity);
    FrameStack qry = generate_fixed_count(query, n_events, polarity);
    require(!ref.frames.empty() && !qry.frames.empty(),
            "generate_matched: a stream yields zero frames at n_events=", n_events,
            " (reference ", ref.frames.size(), ", query ", qry.frames.size(), ")");
    return {std::move(ref), std::move(qry)};
}

// Replaces consecutive groups of `factor` frames by their element-wise mean
// (round-half-up); the group's time extent spans first t_begin to last t_end.
// Trailing partial group dropped.
inline FrameStack aggregate_mean(const FrameStack& st, std::uint32_t factor) {
    require(factor >= 1, "aggregate factor must be >= 1");
    if (factor == 1) return st;
    FrameStack out = st;
    out.frames.clear();
    out.aggregate_factor = st.aggregate_factor * factor;
    const std::size_t groups = st.frames.size() / factor;
    const std::size_t values = st.pixels() * st.channels();
    out.frames.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const Frame& first = st.frames[g * factor];
        const Frame& last = st.frames[g * factor + factor - 1];
        Frame f = detail::blank_frame(first.t_begin, last.t_end, st.pixels(), st.channels());
        for (std::size_t i = 0; i < values; ++i) {
            std::uint64_t sum = 0;
            for (std::uint32_t j = 0; j < factor; ++j)
                sum += st.frames[g * factor + j].counts[i];
            f.counts[i] = static_cast<std::uint16_t>((2 * sum + factor) / (2ull * factor));
        }
        out.frames.push_back(std::move(f));
    }
    return out;
}

// Keeps the first frame whose t_begin falls in each successive bucket
// [k*period, (k+1)*period); order preserved.
inline FrameStack subsample_by_time(const FrameStack& st, std::uint64_t period_us) {
    require(period_us >= 1, "subsample period must be >= 1");
    FrameStack out = st;
    out.frames.clear();
    out.subsample_period_us = period_us;
    bool have_last = false;
    std::uint64_t last_bucket = 0;
    for (const Frame& f : st.frames) {
        const std::uint64_t bucket = f.t_begin / period_us;
        if (!have_last || bucket != last_bucket) {
            out.frames.push_back(f);
            last_bucket = bucket;
            have_last = true;
        }
    }
    return out;
}

}  // namespace eventlab
