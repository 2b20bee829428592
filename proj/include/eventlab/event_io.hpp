#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event.hpp"
#include "eventlab/hdf5_io.hpp"

namespace eventlab {

enum class EventFormat { text, evb, hdf5 };

inline const char* to_string(EventFormat f) {
    switch (f) {
        case EventFormat::text: return "text";
        case EventFormat::evb: return "evb";
        case EventFormat::hdf5: return "hdf5";
    }
    return "?";
}

inline EventFormat event_format_from_string(std::string_view s) {
    if (s == "text" || s == "txt") return EventFormat::text;
    if (s == "evb") return EventFormat::evb;
    if (s == "hdf5" || s == "h5") return EventFormat::hdf5;
    fail("unknown event format '", std::string(s), "' (expected text, evb, or hdf5)");
}

namespace detail {

// Decimal seconds -> integer microseconds, round-half-up on the 6th decimal.
// String arithmetic so that half-microsecond inputs round exactly.
inline std::uint64_t parse_seconds_to_us(std::string_view text, std::size_t line_no) {
    auto malformed = [&]() -> std::uint64_t {
        fail("malformed timestamp '", std::string(text), "' at line ", line_no);
    };
    if (text.empty()) return malformed();
    std::size_t dot = text.find('.');
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = dot == std::string_view::npos ? std::string_view{}
                                                               : text.substr(dot + 1);
    std::uint64_t seconds = 0;
    if (!int_part.empty()) {
        auto [p, ec] = std::from_chars(int_part.begin(), int_part.end(), seconds);
        if (ec != std::errc() || p != int_part.end()) return malformed();
    } else if (frac_part.empty()) {
        return malformed();
    }
    std::uint64_t micros = 0;
    std::size_t i = 0;
    for (; i < 6; ++i) {
        char c = i < frac_part.size() ? frac_part[i] : '0';
        if (!std::isdigit(static_cast<unsigned char>(c))) return malformed();
        micros = micros * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (i < frac_part.size()) {
        char c = frac_part[i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return malformed();
        if (c >= '5') ++micros;
        for (++i; i < frac_part.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(frac_part[i]))) return malformed();
    }
    return seconds * 1000000ull + micros;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename Int>
Int parse_int_field(std::string_view text, const char* what, std::size_t line_no) {
    Int value{};
    auto [p, ec] = std::from_chars(text.begin(), text.end(), value);
    if (ec != std::errc() || p != text.end())
        fail("malformed ", what, " '", std::string(text), "' at line ", line_no);
    return value;
}

inline void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const unsigned char* p, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

// ---- text format -----------------------------------------------------------
// One event per line: "<t_seconds> <x> <y> <p>", p in {0,1} (0 maps to -1).
// Optional first line "# width height".

inline EventStream load_events_text(const std::filesystem::path& path,
                                    std::optional<Resolution> resolution = {}) {
    std::ifstream in(path);
    require(in.good(), "cannot open text event file ", path.string());
    EventStream s;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (first && !line.empty() && line[0] == '#') {
            auto fields = detail::split_fields(std::string_view(line).substr(1));
            require(fields.size() == 2, "malformed resolution header at line 1 in ",
                    path.string());
            s.width = detail::parse_int_field<std::uint32_t>(fields[0], "width", 1);
            s.height = detail::parse_int_field<std::uint32_t>(fields[1], "height", 1);
            first = false;
            continue;
        }
        first = false;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        require(fields.size() == 4, "malformed event record at line ", line_no, " in ",
                path.string(), " (expected 4 fields, got ", fields.size(), ")");
        Event e;
        e.t = detail::parse_seconds_to_us(fields[0], line_no);
        e.x = detail::parse_int_field<std::uint16_t>(fields[1], "x coordinate", line_no);
        e.y = detail::parse_int_field<std::uint16_t>(fields[2], "y coordinate", line_no);
        int p = detail::parse_int_field<int>(fields[3], "polarity", line_no);
        require(p == 0 || p == 1 || p == -1, "polarity out of range at line ", line_no,
                " in ", path.string());
        e.polarity = p == 0 ? std::int8_t(-1) : static_cast<std::int8_t>(p);
        s.events.push_back(e);
    }
    if (s.width == 0) {
        require(resolution.has_value(),
                "text file ", path.string(),
                " carries no resolution header and no override was supplied");
        s.width = resolution->width;
        s.height = resolution->height;
    }
    sort_events_stable(s.events);
    if (!s.events.empty()) s.duration_us = s.events.back().t;
    validate(s);
    return s;
}

inline void save_events_text(const EventStream& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot write text event file ", path.string());
    out << "# " << s.width << " " << s.height << "\n";
    char buf[64];
    for (const Event& e : s.events) {
        std::snprintf(buf, sizeof(buf), "%llu.%06llu %u %u %d\n",
                      static_cast<unsigned long long>(e.t / 1000000ull),
                      static_cast<unsigned long long>(e.t % 1000000ull), unsigned(e.x),
                      unsigned(e.y), e.polarity > 0 ? 1 : 0);
        out << buf;
    }
    require(out.good(), "write failed for ", path.string());
}

// ---- evb format -------------------------------------------------------------
// Little-endian binary cache format. 20-byte header: magic "EVB1", width u32,
// height u32, event count u64. Then 16 bytes per event: t u64, x u16, y u16,
// p i8, 3 pad bytes. Round-trips are bit-exact.

inline void save_events_evb(const EventStream& s, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(20 + 16 * s.events.size());
    buf.append("EVB1", 4);
    detail::put_u32(buf, s.width);
    detail::put_u32(buf, s.height);
    detail::put_u64(buf, static_cast<std::uint64_t>(s.events.size()));
    for (const Event& e : s.events) {
        detail::put_u64(buf, e.t);
        detail::put_u16(buf, e.x);
        detail::put_u16(buf, e.y);
        buf.push_back(static_cast<char>(e.polarity));
        buf.append(3, '\0');
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write evb file ", path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(out.good(), "write failed for ", path.string());
}

inline EventStream load_events_evb(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open evb file ", path.string());
    std::array<unsigned char, 20> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    require(in.gcount() == 20, "truncated evb header in ", path.string());
    require(std::memcmp(header.data(), "EVB1", 4) == 0, "bad evb magic in ", path.string());
    EventStream s;
    s.width = static_cast<std::uint32_t>(detail::get_le(header.data() + 4, 4));
    s.height = static_cast<std::uint32_t>(detail::get_le(header.data() + 8, 4));
    std::uint64_t count = detail::get_le(header.data() + 12, 8);
    s.events.resize(count);
    std::vector<unsigned char> rec(16);
    for (std::uint64_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(rec.data()), 16);
        require(in.gcount() == 16, "truncated evb record at offset ",
                20 + 16 * i, " in ", path.string());
        Event& e = s.events[i];
        e.t = detail::get_le(rec.data(), 8);
        e.x = static_cast<std::uint16_t>(detail::get_le(rec.data() + 8, 2));
        e.y = static_cast<std::uint16_t>(detail::get_le(rec.data() + 10, 2));
        e.polarity = static_cast<std::int8_t>(rec[12]);
    }
    sort_events_stable(s.events);
    if (!s.events.empty()) s.duration_us = s.events.back().t;
    validate(s);
    return s;
}

// ---- front-ends -------------------------------------------------------------

inline EventStream load_events(const std::filesystem::path& path, EventFormat format,
                               std::optional<Resolution> resolution = {},
                               std::string_view hdf5_group = {}) {
    require(std::filesystem::exists(path), "event file does not exist: ", path.string());
    switch (format) {
        case EventFormat::text: return load_events_text(path, resolution);
        case EventFormat::evb: return load_events_evb(path);
        case EventFormat::hdf5: return load_events_hdf5(path, resolution, hdf5_group);
    }
    fail("unhandled event format");
}

inline void save_events(const EventStream& s, const std::filesystem::path& path,
                        EventFormat format) {
    switch (format) {
        case EventFormat::text: return save_events_text(s, path);
        case EventFormat::evb: return save_events_evb(s, path);
        case EventFormat::hdf5: fail("save_events supports text and evb only");
    }
    fail("unhandled event format");
}

}  // namespace eventlab
