#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/trajectory.hpp"

namespace eventlab {

struct AssociatedPairs {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (est index, gt index)
    std::size_t dropped_est = 0;
    std::size_t dropped_gt = 0;
};

// Greedy nearest-in-time association: candidate (est, gt) pairs within
// max_dt_us are accepted in ascending |dt| (ties by est then gt index), each
// pose used at most once. Result ordered by est index.
inline AssociatedPairs associate(const Trajectory& est, const Trajectory& gt,
                                 std::uint64_t max_dt_us) {
    require(!est.poses.empty() && !gt.poses.empty(),
            "associate needs non-empty trajectories");
    struct Candidate {
        std::uint64_t dt;
        std::size_t e, g;
    };
    std::vector<Candidate> candidates;
    for (std::size_t e = 0; e < est.poses.size(); ++e) {
        const std::uint64_t t = est.poses[e].t_us;
        const std::uint64_t lo = t > max_dt_us ? t - max_dt_us : 0;
        auto first = std::lower_bound(gt.poses.begin(), gt.poses.end(), lo,
                                      [](const Pose& p, std::uint64_t v) { return p.t_us < v; });
        for (auto it = first; it != gt.poses.end(); ++it) {
            if (it->t_us > t && it->t_us - t > max_dt_us) break;
            const std::uint64_t dt = it->t_us > t ? it->t_us - t : t - it->t_us;
            candidates.push_back({dt, e, static_cast<std::size_t>(it - gt.poses.begin())});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dt != b.dt) return a.dt < b.dt;
        if (a.e != b.e) return a.e < b.e;
        return a.g < b.g;
    });
    std::vector<std::uint8_t> est_used(est.poses.size(), 0), gt_used(gt.poses.size(), 0);
    AssociatedPairs out;
    for (const Candidate& c : candidates) {
        if (est_used[c.e] || gt_used[c.g]) continue;
        est_used[c.e] = gt_used[c.g] = 1;
        out.pairs.emplace_back(c.e, c.g);
    }
    require(!out.pairs.empty(), "association produced zero pairs within ", max_dt_us, "us");
    std::sort(out.pairs.begin(), out.pairs.end());
    out.dropped_est = est.poses.size() - out.pairs.size();
    out.dropped_gt = gt.poses.size() - out.pairs.size();
    return out;
}

struct Se3 {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

// Closed-form least-squares rigid alignment (no scale) minimizing
// sum ||gt_i - (R * est_i + t)||^2: SVD of the centered cross-covariance with
// the determinant sign correction, so the result is always a proper rotation
// even for reflection-prone noisy inputs.
inline Se3 align_se3(std::span<const Eigen::Vector3d> est_points,
                     std::span<const Eigen::Vector3d> gt_points) {
    require(est_points.size() == gt_points.size(), "alignment point sets differ in size");
    const std::size_t n = est_points.size();
    require(n >= 3, "alignment needs at least 3 associated pairs, got ", n);

    Eigen::Vector3d est_centroid = Eigen::Vector3d::Zero(), gt_centroid = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        est_centroid += est_points[i];
        gt_centroid += gt_points[i];
    }
    est_centroid /= double(n);
    gt_centroid /= double(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i)
        cov += (gt_points[i] - gt_centroid) * (est_points[i] - est_centroid).transpose();

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    require(sv(1) > 1e-12 * std::max(1.0, sv(0)),
            "degenerate alignment: associated points are collinear or coincident "
            "(cross-covariance rank < 2)");

    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Vector3d signs(1.0, 1.0, (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0);
    Se3 result;
    result.rotation = u * signs.asDiagonal() * v.transpose();
    result.translation = gt_centroid - result.rotation * est_centroid;
    return result;
}

// sqrt(mean squared residual) in centimeters.
inline double rmse_ate_cm(std::span<const Eigen::Vector3d> est_points,
                          std::span<const Eigen::Vector3d> gt_points, const Se3& alignment) {
    require(est_points.size() == gt_points.size() && !est_points.empty(),
            "rmse_ate needs matched non-empty point sets");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < est_points.size(); ++i)
        sum_sq += (gt_points[i] - alignment.apply(est_points[i])).squaredNorm();
    return std::sqrt(sum_sq / double(est_points.size())) * 100.0;
}

inline double accuracy_inv_cm(double rmse_cm) {
    require(rmse_cm > 0.0,
            "accuracy undefined at zero RMSE-ATE (perfect trajectory; report separately)");
    return 1.0 / rmse_cm;
}

// A trajectory is reported as perfect (accuracy unset) when the residual is
// below 1e-9 m, the same cutoff the alignment recovery tests use; inverting
// pure floating-point residue would print meaningless 1e13 cm^-1 accuracies.
constexpr double kPerfectRmseCm = 1e-7;  // 1e-9 m

struct TrajectoryEval {
    Se3 alignment;
    double rmse_cm = 0.0;
    std::optional<double> accuracy;  // unset for perfect trajectories
    std::size_t pairs = 0;
};

inline TrajectoryEval evaluate_trajectory(const Trajectory& est, const Trajectory& gt,
                                          std::uint64_t max_dt_us) {
    const AssociatedPairs assoc = associate(est, gt, max_dt_us);
    std::vector<Eigen::Vector3d> est_pts, gt_pts;
    est_pts.reserve(assoc.pairs.size());
    gt_pts.reserve(assoc.pairs.size());
    for (const auto& [e, g] : assoc.pairs) {
        est_pts.emplace_back(est.poses[e].position[0], est.poses[e].position[1],
                             est.poses[e].position[2]);
        gt_pts.emplace_back(gt.poses[g].position[0], gt.poses[g].position[1],
                            gt.poses[g].position[2]);
    }
    TrajectoryEval eval;
    eval.alignment = align_se3(est_pts, gt_pts);
    eval.rmse_cm = rmse_ate_cm(est_pts, gt_pts, eval.alignment);
    if (eval.rmse_cm > kPerfectRmseCm) eval.accuracy = accuracy_inv_cm(eval.rmse_cm);
    eval.pairs = assoc.pairs.size();
    return eval;
}

struct TrialSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Box-plot statistics over per-trial RMSE values; quartiles use linear
// interpolation over the sorted sample.
inline TrialSummary summarize_trials(std::span<const double> rmse_values) {
    require(!rmse_values.empty(), "summary of zero trials");
    std::vector<double> sorted(rmse_values.begin(), rmse_values.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double idx = p * double(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = idx - double(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    return {sorted.front(), quantile(0.25), quantile(0.5), quantile(0.75), sorted.back()};
}

struct TrialsResult {
    std::vector<TrajectoryEval> trials;
    TrialSummary summary;
};

inline TrialsResult eval_trials(std::span<const Trajectory> trials, const Trajectory& gt,
                                std::uint64_t max_dt_us) {
    require(!trials.empty(), "eval_trials needs at least one trial");
    TrialsResult result;
    std::vector<double> rmse;
    for (const Trajectory& est : trials) {
        result.trials.push_back(evaluate_trajectory(est, gt, max_dt_us));
        rmse.push_back(result.trials.back().rmse_cm);
    }
    result.summary = summarize_trials(rmse);
    return result;
}

}  // namespace eventlab
