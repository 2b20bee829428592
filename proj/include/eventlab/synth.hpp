#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event.hpp"
#include "eventlab/random.hpp"

namespace eventlab {

// Procedural world texture for synthetic traverses: an infinite strip of
// hashed cells. Cell weight controls how likely that cell is to fire and the
// cell's hash also fixes its polarity, so the same place always looks the
// same.
struct SceneSpec {
    std::uint64_t texture_seed = 0;
    double route_length_px = 500.0;  // total camera displacement over the traverse
    int contrast = 3;                // weight = u^contrast, u uniform per cell
};

// Piecewise-constant speed multipliers over equal fractions of the duration.
// The profile is normalized so the full route is always covered: it changes
// *when* each place is visited, not *which* places are visited.
struct SpeedProfile {
    std::vector<double> multipliers{1.0};
};

struct SynthSpec {
    std::uint64_t seed = 0;
    std::uint64_t duration_us = 0;
    double mean_rate_hz = 0.0;  // expected events per second, averaged over the traverse
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    SceneSpec scene;
    SpeedProfile speed;
};

namespace detail {

inline double cell_weight(std::int64_t u, std::int64_t y, const SceneSpec& scene) {
    std::uint64_t h = hash_combine(scene.texture_seed,
                                   hash_combine(static_cast<std::uint64_t>(u),
                                                static_cast<std::uint64_t>(y) ^ 0x5bd1e995ull));
    double v = u64_to_unit(h);
    double w = 1.0;
    for (int i = 0; i < scene.contrast; ++i) w *= v;
    return w;
}

inline std::int8_t cell_polarity(std::int64_t u, std::int64_t y, const SceneSpec& scene) {
    std::uint64_t h = hash_combine(scene.texture_seed ^ 0x3c6ef372fe94f82bull,
                                   hash_combine(static_cast<std::uint64_t>(u),
                                                static_cast<std::uint64_t>(y)));
    return (h & 1) ? std::int8_t(1) : std::int8_t(-1);
}

// Normalized cumulative speed fractions at segment boundaries: F[0]=0, F[K]=1.
inline std::vector<double> speed_prefix(const SpeedProfile& profile) {
    std::vector<double> mult = profile.multipliers;
    if (mult.empty()) mult.push_back(1.0);
    double total = 0.0;
    for (double m : mult) {
        require(m >= 0.0, "speed profile multipliers must be non-negative");
        total += m;
    }
    require(total > 0.0, "speed profile must have positive total speed");
    std::vector<double> prefix(mult.size() + 1, 0.0);
    for (std::size_t i = 0; i < mult.size(); ++i) prefix[i + 1] = prefix[i] + mult[i] / total;
    prefix.back() = 1.0;
    return prefix;
}

}  // namespace detail

// Camera displacement (in pixels along the route) at time t.
inline double synth_position_px(const SynthSpec& spec, std::uint64_t t_us) {
    if (spec.duration_us == 0) return 0.0;
    auto prefix = detail::speed_prefix(spec.speed);
    const std::size_t segments = prefix.size() - 1;
    double tf = std::min(1.0, static_cast<double>(t_us) / static_cast<double>(spec.duration_us));
    double seg_f = tf * static_cast<double>(segments);
    std::size_t seg = std::min(segments - 1, static_cast<std::size_t>(seg_f));
    double within = seg_f - static_cast<double>(seg);
    double frac = prefix[seg] + (prefix[seg + 1] - prefix[seg]) * within;
    return frac * spec.scene.route_length_px;
}

// Deterministic Poisson-process traverse over the scene strip. Events are
// uniform per unit of distance traveled (event rate tracks camera speed, as
// for a real sensor watching a static scene), so traverses that share a scene
// and seed but differ in speed profile see identical places with identical
// event mass, just at different times.
inline EventStream synth_traverse(const SynthSpec& spec) {
    require(spec.width >= 1 && spec.height >= 1, "synth traverse needs a non-empty resolution");
    require(spec.mean_rate_hz >= 0.0, "mean_rate_hz must be non-negative");

    auto prefix = detail::speed_prefix(spec.speed);
    const std::size_t segments = prefix.size() - 1;

    EventStream s;
    s.width = spec.width;
    s.height = spec.height;
    s.duration_us = spec.duration_us;

    Rng rng(hash_combine(spec.seed, 0xeb1ab0c0ull));
    const double lambda = spec.mean_rate_hz * static_cast<double>(spec.duration_us) * 1e-6;
    const std::uint64_t count = rng.poisson(lambda);
    s.events.reserve(count);

    const double seg_dur_us =
        static_cast<double>(spec.duration_us) / static_cast<double>(segments);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double route_frac = rng.unit();
        // invert the cumulative speed profile: route fraction -> time
        std::size_t seg = segments - 1;
        for (std::size_t k = 0; k < segments; ++k) {
            if (route_frac < prefix[k + 1]) {
                seg = k;
                break;
            }
        }
        const double span = prefix[seg + 1] - prefix[seg];
        const double within = span > 0.0 ? (route_frac - prefix[seg]) / span : 0.0;
        const double t_f = (static_cast<double>(seg) + within) * seg_dur_us;
        Event e;
        e.t = std::min<std::uint64_t>(
            spec.duration_us, static_cast<std::uint64_t>(std::llround(t_f)));

        const double pos = route_frac * spec.scene.route_length_px;
        const auto window_start = static_cast<std::int64_t>(std::floor(pos));
        // rejection-sample a cell of the visible window by texture weight
        for (;;) {
            const auto dx = static_cast<std::uint16_t>(rng.below(spec.width));
            const auto y = static_cast<std::uint16_t>(rng.below(spec.height));
            const std::int64_t u = window_start + dx;
            if (rng.unit() < detail::cell_weight(u, y, spec.scene)) {
                e.x = dx;
                e.y = y;
                e.polarity = detail::cell_polarity(u, y, spec.scene);
                break;
            }
        }
        s.events.push_back(e);
    }
    sort_events_stable(s.events);
    validate(s);
    return s;
}

}  // namespace eventlab
