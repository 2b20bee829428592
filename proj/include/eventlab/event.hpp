#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "eventlab/errors.hpp"

namespace eventlab {

// One DVS brightness-change record. Timestamps are integer microseconds
// since stream start; polarity is +1 (brighter) or -1 (darker).
struct Event {
    std::uint64_t t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t polarity = 1;
};

inline bool operator==(const Event& a, const Event& b) {
    return a.t == b.t && a.x == b.x && a.y == b.y && a.polarity == b.polarity;
}

struct StreamSource {
    std::string dataset;
    std::string sequence;
};

struct Resolution {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

// Immutable-by-convention event sequence with sensor metadata. Events are
// ordered by t (ties keep ingest order); every timestamp lies in
// [0, duration_us]. t_start_us records the original recording start and is
// metadata only.
struct EventStream {
    std::vector<Event> events;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint64_t t_start_us = 0;
    std::uint64_t duration_us = 0;
    StreamSource source;
};

inline void sort_events_stable(std::vector<Event>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
}

inline void validate(const EventStream& s) {
    require(s.width >= 1 && s.height >= 1, "event stream has zero-area resolution (",
            s.width, "x", s.height, ")");
    require(s.width <= 65536 && s.height <= 65536, "resolution exceeds 16-bit pixel coordinates");
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const Event& e = s.events[i];
        require(e.t >= prev, "events out of order at index ", i);
        require(e.t <= s.duration_us, "event at index ", i, " has t=", e.t,
                "us beyond stream duration ", s.duration_us, "us");
        require(e.x < s.width && e.y < s.height, "event at index ", i, " at (", e.x, ",", e.y,
                ") outside resolution ", s.width, "x", s.height);
        require(e.polarity == 1 || e.polarity == -1, "event at index ", i,
                " has polarity ", int(e.polarity), ", expected +1 or -1");
        prev = e.t;
    }
}

// Assembles a stream from parts: stable-sorts by t, infers duration from the
// last event when not supplied, and validates the result.
inline EventStream make_stream(std::vector<Event> events, std::uint32_t width,
                               std::uint32_t height, std::uint64_t duration_us = 0,
                               StreamSource source = {}) {
    sort_events_stable(events);
    EventStream s;
    s.events = std::move(events);
    s.width = width;
    s.height = height;
    s.duration_us = duration_us;
    if (!s.events.empty() && s.events.back().t > s.duration_us)
        s.duration_us = s.events.back().t;
    s.source = std::move(source);
    validate(s);
    return s;
}

}  // namespace eventlab
