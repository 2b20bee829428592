#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event_io.hpp"
#include "eventlab/frames.hpp"

namespace eventlab {

enum class CoordKind { latlon, planar };

// One reference or query place: a generated frame with its center timestamp
// and, when a position track is attached, a location and travel heading.
struct PlaceItem {
    std::size_t frame_index = 0;
    std::uint64_t t_center_us = 0;
    std::optional<std::pair<double, double>> position;  // (lat,lon) deg or (x,y) m
    std::optional<double> heading_deg;
};

struct PlaceIndex {
    std::vector<PlaceItem> items;
    std::optional<CoordKind> coord_kind;
};

inline void validate(const PlaceIndex& idx) {
    bool any_pos = false, all_pos = true;
    for (std::size_t i = 0; i < idx.items.size(); ++i) {
        if (i > 0)
            require(idx.items[i].t_center_us > idx.items[i - 1].t_center_us,
                    "place index timestamps must be strictly increasing (item ", i, ")");
        if (idx.items[i].position)
            any_pos = true;
        else
            all_pos = false;
    }
    require(!any_pos || all_pos, "positions must be present for all places or none");
    require(!any_pos || idx.coord_kind.has_value(),
            "positioned place index must declare its coordinate kind");
}

// Place centers from a frame stack; clock_offset shifts t_center onto the
// shared traverse clock for unsynchronized recordings.
inline PlaceIndex place_index_from_stack(const FrameStack& st, std::int64_t clock_offset_us = 0) {
    PlaceIndex idx;
    idx.items.reserve(st.frames.size());
    for (std::size_t i = 0; i < st.frames.size(); ++i) {
        PlaceItem item;
        item.frame_index = i;
        const std::uint64_t center = st.frames[i].t_begin / 2 + st.frames[i].t_end / 2 +
                                     (st.frames[i].t_begin % 2 + st.frames[i].t_end % 2) / 2;
        item.t_center_us = static_cast<std::uint64_t>(
            std::max<std::int64_t>(0, static_cast<std::int64_t>(center) + clock_offset_us));
        idx.items.push_back(item);
    }
    validate(idx);
    return idx;
}

struct GtFilters {
    bool reverse_direction = false;
    bool endpoint_overlap = false;
    double max_heading_diff_deg = 90.0;
    double overlap_fraction = 0.05;
};

struct ToleranceTimeUs {
    std::uint64_t value = 0;
};
struct ToleranceMeters {
    double value = 0.0;
};
using GtTolerance = std::variant<ToleranceTimeUs, ToleranceMeters>;

// Binary query x reference match matrix. Rows are queries.
struct GroundTruthMatrix {
    std::size_t queries = 0;
    std::size_t references = 0;
    std::vector<std::uint8_t> m;
    GtTolerance tolerance;
    GtFilters filters;

    std::uint8_t at(std::size_t q, std::size_t r) const { return m[q * references + r]; }
    void set(std::size_t q, std::size_t r, bool v) { m[q * references + r] = v ? 1 : 0; }

    // Number of queries with at least one positive.
    std::size_t gtp() const {
        std::size_t n = 0;
        for (std::size_t q = 0; q < queries; ++q)
            for (std::size_t r = 0; r < references; ++r)
                if (at(q, r)) {
                    ++n;
                    break;
                }
        return n;
    }

    std::vector<std::size_t> rows_without_positive() const {
        std::vector<std::size_t> rows;
        for (std::size_t q = 0; q < queries; ++q) {
            bool any = false;
            for (std::size_t r = 0; r < references && !any; ++r) any = at(q, r);
            if (!any) rows.push_back(q);
        }
        return rows;
    }
};

inline std::uint64_t gt_tolerance_in_places(std::uint64_t tolerance_places,
                                            std::uint64_t place_spacing_us) {
    return tolerance_places * place_spacing_us;
}

// entry (q,r) = 1 iff |t_center(q) - t_center(r)| <= tolerance_us.
inline GroundTruthMatrix build_gt_time(const PlaceIndex& reference, const PlaceIndex& query,
                                       std::uint64_t tolerance_us) {
    require(!reference.items.empty() && !query.items.empty(),
            "ground truth needs non-empty reference and query place indexes");
    validate(reference);
    validate(query);
    GroundTruthMatrix gt;
    gt.queries = query.items.size();
    gt.references = reference.items.size();
    gt.m.assign(gt.queries * gt.references, 0);
    gt.tolerance = ToleranceTimeUs{tolerance_us};
    for (std::size_t q = 0; q < gt.queries; ++q) {
        const std::uint64_t tq = query.items[q].t_center_us;
        // reference timestamps are sorted; scan only the in-tolerance band
        const std::uint64_t lo = tq > tolerance_us ? tq - tolerance_us : 0;
        auto first = std::lower_bound(
            reference.items.begin(), reference.items.end(), lo,
            [](const PlaceItem& it, std::uint64_t v) { return it.t_center_us < v; });
        for (auto it = first; it != reference.items.end(); ++it) {
            if (it->t_center_us > tq && it->t_center_us - tq > tolerance_us) break;
            gt.set(q, static_cast<std::size_t>(it - reference.items.begin()), true);
        }
    }
    return gt;
}

inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusM = 6371000.0;
    constexpr double kDegToRad = 3.141592653589793238462643383279502884 / 180.0;
    const double phi1 = lat1 * kDegToRad, phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad, dlambda = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) *
                         std::sin(dlambda / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace detail {

constexpr double kDegToRad = 3.141592653589793238462643383279502884 / 180.0;

inline double position_distance_m(const PlaceItem& a, const PlaceItem& b, CoordKind kind) {
    const auto& [ax, ay] = *a.position;
    const auto& [bx, by] = *b.position;
    if (kind == CoordKind::latlon) return haversine_m(ax, ay, bx, by);
    return std::hypot(ax - bx, ay - by);
}

inline double bearing_deg(const PlaceItem& from, const PlaceItem& to, CoordKind kind) {
    const auto& [ax, ay] = *from.position;
    const auto& [bx, by] = *to.position;
    double deg;
    if (kind == CoordKind::latlon) {
        const double phi1 = ax * kDegToRad, phi2 = bx * kDegToRad;
        const double dl = (by - ay) * kDegToRad;
        const double y = std::sin(dl) * std::cos(phi2);
        const double x = std::cos(phi1) * std::sin(phi2) -
                         std::sin(phi1) * std::cos(phi2) * std::cos(dl);
        deg = std::atan2(y, x) / kDegToRad;
    } else {
        deg = std::atan2(by - ay, bx - ax) / kDegToRad;
    }
    return deg < 0 ? deg + 360.0 : deg;
}

inline double heading_diff_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace detail

// Heading of the segment ending at each place; the first place inherits the
// second's heading. No-op for items that already carry headings.
inline void derive_headings(PlaceIndex& idx) {
    validate(idx);
    if (idx.items.size() < 2) return;
    for (std::size_t i = 1; i < idx.items.size(); ++i) {
        if (!idx.items[i].heading_deg)
            idx.items[i].heading_deg =
                detail::bearing_deg(idx.items[i - 1], idx.items[i], *idx.coord_kind);
    }
    if (!idx.items[0].heading_deg) idx.items[0].heading_deg = idx.items[1].heading_deg;
}

// Positional ground truth: distance within tolerance, optionally filtered by
// travel direction (heading difference above the threshold clears the entry)
// and by endpoint overlap (start-of-one vs end-of-other zones never match).
inline GroundTruthMatrix build_gt_position(const PlaceIndex& reference, const PlaceIndex& query,
                                           double tolerance_m, const GtFilters& filters) {
    require(!reference.items.empty() && !query.items.empty(),
            "ground truth needs non-empty reference and query place indexes");
    require(reference.coord_kind && query.coord_kind,
            "positional ground truth needs positioned place indexes");
    require(*reference.coord_kind == *query.coord_kind,
            "mixed coordinate conventions: reference is ",
            *reference.coord_kind == CoordKind::latlon ? "lat/lon" : "planar", ", query is ",
            *query.coord_kind == CoordKind::latlon ? "lat/lon" : "planar");
    for (const auto& idx : {&reference, &query}) validate(*idx);

    PlaceIndex ref = reference, qry = query;
    if (filters.reverse_direction) {
        derive_headings(ref);
        derive_headings(qry);
    }

    GroundTruthMatrix gt;
    gt.queries = qry.items.size();
    gt.references = ref.items.size();
    gt.m.assign(gt.queries * gt.references, 0);
    gt.tolerance = ToleranceMeters{tolerance_m};
    gt.filters = filters;

    const auto zone = [&](std::size_t n) {
        return static_cast<std::size_t>(std::ceil(filters.overlap_fraction * double(n)));
    };
    const std::size_t q_zone = zone(gt.queries), r_zone = zone(gt.references);

    for (std::size_t q = 0; q < gt.queries; ++q) {
        for (std::size_t r = 0; r < gt.references; ++r) {
            if (detail::position_distance_m(qry.items[q], ref.items[r], *ref.coord_kind) >
                tolerance_m)
                continue;
            if (filters.reverse_direction) {
                const double diff = detail::heading_diff_deg(*qry.items[q].heading_deg,
                                                             *ref.items[r].heading_deg);
                if (diff > filters.max_heading_diff_deg) continue;
            }
            if (filters.endpoint_overlap) {
                const bool q_last = q + q_zone >= gt.queries;
                const bool q_first = q < q_zone;
                const bool r_last = r + r_zone >= gt.references;
                const bool r_first = r < r_zone;
                if ((q_last && r_first) || (q_first && r_last)) continue;
            }
            gt.set(q, r, true);
        }
    }
    return gt;
}

// ---- persistence ------------------------------------------------------------
// Compact bitmap (magic "GTB1", u32 rows, u32 cols, row-major bits padded to
// whole bytes per row) with a JSON sidecar at <path>.json.

inline void save_gt(const GroundTruthMatrix& gt, const std::filesystem::path& path,
                    const PlaceIndex& reference, const PlaceIndex& query) {
    std::string buf;
    buf.append("GTB1", 4);
    detail::put_u32(buf, static_cast<std::uint32_t>(gt.queries));
    detail::put_u32(buf, static_cast<std::uint32_t>(gt.references));
    const std::size_t row_bytes = (gt.references + 7) / 8;
    for (std::size_t q = 0; q < gt.queries; ++q) {
        std::string row(row_bytes, '\0');
        for (std::size_t r = 0; r < gt.references; ++r)
            if (gt.at(q, r)) row[r / 8] |= static_cast<char>(1u << (r % 8));
        buf += row;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write ground-truth bitmap ", path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

    nlohmann::json side;
    side["queries"] = gt.queries;
    side["references"] = gt.references;
    if (std::holds_alternative<ToleranceTimeUs>(gt.tolerance))
        side["tolerance_us"] = std::get<ToleranceTimeUs>(gt.tolerance).value;
    else
        side["tolerance_m"] = std::get<ToleranceMeters>(gt.tolerance).value;
    nlohmann::json filters = nlohmann::json::array();
    if (gt.filters.reverse_direction) filters.push_back("reverse_direction");
    if (gt.filters.endpoint_overlap) filters.push_back("endpoint_overlap");
    side["filters"] = filters;
    side["gtp"] = gt.gtp();
    auto times = [](const PlaceIndex& idx) {
        std::vector<std::uint64_t> t;
        t.reserve(idx.items.size());
        for (const auto& item : idx.items) t.push_back(item.t_center_us);
        return t;
    };
    side["reference_t_center_us"] = times(reference);
    side["query_t_center_us"] = times(query);
    std::ofstream sout(path.string() + ".json", std::ios::trunc);
    require(sout.good(), "cannot write ground-truth sidecar for ", path.string());
    sout << side.dump(2) << "\n";
}

inline GroundTruthMatrix load_gt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open ground-truth bitmap ", path.string());
    char header[12];
    in.read(header, sizeof(header));
    require(in.gcount() == sizeof(header) && std::memcmp(header, "GTB1", 4) == 0,
            "bad ground-truth bitmap header in ", path.string());
    GroundTruthMatrix gt;
    gt.queries = static_cast<std::size_t>(
        detail::get_le(reinterpret_cast<unsigned char*>(header) + 4, 4));
    gt.references = static_cast<std::size_t>(
        detail::get_le(reinterpret_cast<unsigned char*>(header) + 8, 4));
    gt.m.assign(gt.queries * gt.references, 0);
    const std::size_t row_bytes = (gt.references + 7) / 8;
    std::vector<char> row(row_bytes);
    for (std::size_t q = 0; q < gt.queries; ++q) {
        in.read(row.data(), static_cast<std::streamsize>(row_bytes));
        require(in.gcount() == static_cast<std::streamsize>(row_bytes),
                "truncated ground-truth bitmap ", path.string());
        for (std::size_t r = 0; r < gt.references; ++r)
            if (row[r / 8] & (1u << (r % 8))) gt.set(q, r, true);
    }
    return gt;
}

// ---- position tracks --------------------------------------------------------
// CSV with header "t_seconds,lat,lon" or "t_seconds,x_m,y_m".

struct TrackPoint {
    std::uint64_t t_us = 0;
    double a = 0.0, b = 0.0;
};

struct PositionTrack {
    std::vector<TrackPoint> points;
    CoordKind kind = CoordKind::planar;
};

inline PositionTrack load_track_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open position track ", path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty position track ", path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    PositionTrack track;
    if (line == "t_seconds,lat,lon")
        track.kind = CoordKind::latlon;
    else if (line == "t_seconds,x_m,y_m")
        track.kind = CoordKind::planar;
    else
        fail("position track ", path.string(),
             " must start with header 't_seconds,lat,lon' or 't_seconds,x_m,y_m', got '", line,
             "'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 3> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                require(field < 3, "too many fields at line ", line_no, " in ", path.string());
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        require(field == 3, "expected 3 fields at line ", line_no, " in ", path.string());
        TrackPoint p;
        p.t_us = detail::parse_seconds_to_us(fields[0], line_no);
        try {
            p.a = std::stod(fields[1]);
            p.b = std::stod(fields[2]);
        } catch (const std::exception&) {
            fail("malformed coordinate at line ", line_no, " in ", path.string());
        }
        track.points.push_back(p);
    }
    std::sort(track.points.begin(), track.points.end(),
              [](const TrackPoint& a, const TrackPoint& b) { return a.t_us < b.t_us; });
    return track;
}

// Nearest-timestamp association of track points to places.
inline void attach_positions(PlaceIndex& idx, const PositionTrack& track) {
    require(!track.points.empty(), "cannot attach positions from an empty track");
    idx.coord_kind = track.kind;
    for (PlaceItem& item : idx.items) {
        auto it = std::lower_bound(track.points.begin(), track.points.end(), item.t_center_us,
                                   [](const TrackPoint& p, std::uint64_t t) { return p.t_us < t; });
        if (it == track.points.end())
            --it;
        else if (it != track.points.begin()) {
            auto prev = std::prev(it);
            if (item.t_center_us - prev->t_us <= it->t_us - item.t_center_us) it = prev;
        }
        item.position = {it->a, it->b};
    }
}

}  // namespace eventlab
