#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eventlab/descriptors.hpp"
#include "eventlab/errors.hpp"
#include "eventlab/ground_truth.hpp"

namespace eventlab {

enum class Metric { sad, l2, cosine };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::sad: return "sad";
        case Metric::l2: return "l2";
        case Metric::cosine: return "cosine";
    }
    return "?";
}

inline Metric metric_from_string(std::string_view s) {
    if (s == "sad") return Metric::sad;
    if (s == "l2") return Metric::l2;
    if (s == "cosine") return Metric::cosine;
    fail("unknown metric '", std::string(s), "' (expected sad, l2, or cosine)");
}

// Pairwise query x reference distances, row-major by query.
struct DistanceMatrix {
    std::size_t queries = 0;
    std::size_t references = 0;
    std::vector<double> d;
    std::string metric;

    double at(std::size_t q, std::size_t r) const { return d[q * references + r]; }
    double& at(std::size_t q, std::size_t r) { return d[q * references + r]; }
};

inline DistanceMatrix distance_matrix(std::span<const Descriptor> reference,
                                      std::span<const Descriptor> query, Metric metric) {
    require(!reference.empty() && !query.empty(), "distance_matrix: empty descriptor set");
    const std::size_t dim = reference[0].values.size();
    for (const auto& set : {reference, query})
        for (const Descriptor& d : set)
            require(d.values.size() == dim, "descriptor length mismatch: expected ", dim,
                    ", got ", d.values.size());
    DistanceMatrix dm;
    dm.queries = query.size();
    dm.references = reference.size();
    dm.metric = to_string(metric);
    dm.d.resize(dm.queries * dm.references);
    for (std::size_t q = 0; q < dm.queries; ++q) {
        const double* a = query[q].values.data();
        for (std::size_t r = 0; r < dm.references; ++r) {
            const double* b = reference[r].values.data();
            double acc = 0.0;
            switch (metric) {
                case Metric::sad:
                    for (std::size_t i = 0; i < dim; ++i) acc += std::abs(a[i] - b[i]);
                    break;
                case Metric::l2:
                    for (std::size_t i = 0; i < dim; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
                    acc = std::sqrt(acc);
                    break;
                case Metric::cosine: {
                    double dot = 0.0, na = 0.0, nb = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) {
                        dot += a[i] * b[i];
                        na += a[i] * a[i];
                        nb += b[i] * b[i];
                    }
                    // all-zero vectors are at distance 1 from everything
                    acc = (na == 0.0 || nb == 0.0)
                              ? 1.0
                              : std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
                    break;
                }
            }
            dm.at(q, r) = acc;
        }
    }
    return dm;
}

namespace detail {

// Smallest-distance reference for one query row, ties to the lowest index.
inline std::size_t best_reference(const DistanceMatrix& d, std::size_t q) {
    std::size_t best = 0;
    double best_d = d.at(q, 0);
    for (std::size_t r = 1; r < d.references; ++r) {
        if (d.at(q, r) < best_d) {
            best_d = d.at(q, r);
            best = r;
        }
    }
    return best;
}

inline void check_dims(const DistanceMatrix& d, const GroundTruthMatrix& gt) {
    require(d.queries == gt.queries && d.references == gt.references,
            "distance matrix is ", d.queries, "x", d.references, " but ground truth is ",
            gt.queries, "x", gt.references);
}

}  // namespace detail

// Fraction of queries having >=1 ground-truth positive whose k smallest
// distances (ties by ascending reference index) include a positive. Queries
// without any positive are excluded from the denominator.
inline double recall_at_k(const DistanceMatrix& d, const GroundTruthMatrix& gt, std::size_t k) {
    detail::check_dims(d, gt);
    require(k >= 1, "k must be >= 1");
    std::size_t eligible = 0, hits = 0;
    std::vector<std::uint32_t> order(d.references);
    const std::size_t top = std::min(k, d.references);
    for (std::size_t q = 0; q < d.queries; ++q) {
        bool has_positive = false;
        for (std::size_t r = 0; r < d.references && !has_positive; ++r) has_positive = gt.at(q, r);
        if (!has_positive) continue;
        ++eligible;
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top),
                          order.end(), [&](std::uint32_t a, std::uint32_t b) {
                              if (d.at(q, a) != d.at(q, b)) return d.at(q, a) < d.at(q, b);
                              return a < b;
                          });
        for (std::size_t i = 0; i < top; ++i) {
            if (gt.at(q, order[i])) {
                ++hits;
                break;
            }
        }
    }
    require(eligible > 0, "recall undefined: no query has a ground-truth positive");
    return static_cast<double>(hits) / static_cast<double>(eligible);
}

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 1.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
};

struct PrCurve {
    std::vector<PrPoint> points;  // starts at the (recall 0, precision 1) anchor
    std::size_t gtp = 0;
};

// Single-best-match precision/recall sweep: each eligible query contributes
// its minimum-distance reference (tie -> lowest index) scored by that
// distance; the acceptance threshold sweeps the sorted distinct scores.
inline PrCurve pr_curve(const DistanceMatrix& d, const GroundTruthMatrix& gt) {
    detail::check_dims(d, gt);
    struct Match {
        double score;
        bool correct;
    };
    std::vector<Match> matches;
    matches.reserve(d.queries);
    for (std::size_t q = 0; q < d.queries; ++q) {
        bool has_positive = false;
        for (std::size_t r = 0; r < d.references && !has_positive; ++r) has_positive = gt.at(q, r);
        if (!has_positive) continue;
        const std::size_t best = detail::best_reference(d, q);
        matches.push_back({d.at(q, best), gt.at(q, best) != 0});
    }
    require(!matches.empty(), "precision-recall undefined: no query has a ground-truth positive");
    std::sort(matches.begin(), matches.end(),
              [](const Match& a, const Match& b) { return a.score < b.score; });

    PrCurve curve;
    curve.gtp = matches.size();
    curve.points.push_back(PrPoint{-std::numeric_limits<double>::infinity(), 0.0, 1.0, 0, 0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        matches[i].correct ? ++tp : ++fp;
        const bool last_of_score =
            i + 1 == matches.size() || matches[i + 1].score != matches[i].score;
        if (!last_of_score) continue;
        PrPoint p;
        p.threshold = matches[i].score;
        p.tp = tp;
        p.fp = fp;
        p.recall = static_cast<double>(tp) / static_cast<double>(curve.gtp);
        p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        curve.points.push_back(p);
    }
    return curve;
}

// Trapezoidal area over recall, stable-sorted ascending; the domain is
// [0, max recall] with no extrapolation.
inline double pr_auc(std::span<const PrPoint> points) {
    require(!points.empty(), "pr_auc of an empty curve");
    std::vector<PrPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
    double area = 0.0;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        area += (sorted[i].recall - sorted[i - 1].recall) *
                (sorted[i].precision + sorted[i - 1].precision) * 0.5;
    return area;
}

struct EvalReport {
    std::map<int, double> recall_at;
    PrCurve curve;
    double auc = 0.0;
    std::size_t gtp = 0;
    std::size_t queries_total = 0;
    std::size_t queries_without_gt = 0;
};

inline EvalReport evaluate(const DistanceMatrix& d, const GroundTruthMatrix& gt,
                           std::span<const int> ks = std::array<int, 3>{1, 5, 10}) {
    EvalReport report;
    for (int k : ks) report.recall_at[k] = recall_at_k(d, gt, static_cast<std::size_t>(k));
    report.curve = pr_curve(d, gt);
    report.auc = pr_auc(report.curve.points);
    report.gtp = report.curve.gtp;
    report.queries_total = d.queries;
    report.queries_without_gt = d.queries - report.gtp;
    return report;
}

}  // namespace eventlab
