#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "eventlab/errors.hpp"
#include "eventlab/metrics.hpp"

namespace eventlab {

// Distance matrix as an 8-bit PGM (rows = queries) with a JSON sidecar, for
// external plotting. Values are min-max rescaled; the sidecar records the
// original range so the image stays interpretable.
inline void save_distance_matrix(const DistanceMatrix& d, const std::filesystem::path& path) {
    require(d.queries > 0 && d.references > 0, "cannot dump an empty distance matrix");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : d.d) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write distance image ", path.string());
    out << "P5\n" << d.references << " " << d.queries << "\n255\n";
    for (double v : d.d)
        out.put(static_cast<char>(static_cast<unsigned char>((v - lo) / span * 255.0 + 0.5)));
    require(out.good(), "write failed for ", path.string());

    nlohmann::json side;
    side["queries"] = d.queries;
    side["references"] = d.references;
    side["metric"] = d.metric;
    side["min_distance"] = lo;
    side["max_distance"] = hi;
    side["encoding"] = "row_major_min_max_to_255";
    std::ofstream sout(path.string() + ".json", std::ios::trunc);
    require(sout.good(), "cannot write distance sidecar for ", path.string());
    sout << side.dump(2) << "\n";
}

}  // namespace eventlab
