#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "eventlab/random.hpp"
#include "eventlab/slam_eval.hpp"
#include "eventlab/trajectory.hpp"
#include "test_util.hpp"

using namespace eventlab;

namespace {

Trajectory make_traj(const std::vector<std::uint64_t>& times,
                     const std::vector<Eigen::Vector3d>& points) {
    Trajectory t;
    for (std::size_t i = 0; i < times.size(); ++i) {
        Pose p;
        p.t_us = times[i];
        p.position = {points[i].x(), points[i].y(), points[i].z()};
        t.poses.push_back(p);
    }
    return t;
}

std::vector<Eigen::Vector3d> random_points(std::uint64_t seed, std::size_t n, double scale) {
    Rng rng(seed);
    std::vector<Eigen::Vector3d> pts(n);
    for (auto& p : pts)
        p = Eigen::Vector3d(rng.unit() * scale, rng.unit() * scale, rng.unit() * scale);
    return pts;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    const double angle = rng.unit() * 2.0 * 3.141592653589793;
    Eigen::Vector3d axis(rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5);
    if (axis.norm() < 1e-9) axis = Eigen::Vector3d::UnitX();
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace

TEST_CASE("associate", "[slam_eval]") {
    SECTION("identical timestamp lists pair identically") {
        auto pts = random_points(1, 6, 1.0);
        Trajectory a = make_traj({0, 10, 20, 30, 40, 50}, pts);
        AssociatedPairs pairs = associate(a, a, 5);
        REQUIRE(pairs.pairs.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(pairs.pairs[i].first == i);
            CHECK(pairs.pairs[i].second == i);
        }
    }
    SECTION("nearest within tolerance, unmatched dropped") {
        Trajectory est = make_traj({0, 100000}, random_points(2, 2, 1.0));
        Trajectory gt = make_traj({49000}, random_points(3, 1, 1.0));
        AssociatedPairs pairs = associate(est, gt, 50000);
        REQUIRE(pairs.pairs.size() == 1);
        CHECK(pairs.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
        CHECK(pairs.dropped_est == 1);
    }
    SECTION("random jitter matches the exhaustive greedy oracle") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            std::vector<std::uint64_t> est_t, gt_t;
            std::uint64_t t = 0;
            for (int i = 0; i < 40; ++i) est_t.push_back(t += 1 + rng.below(3000));
            t = rng.below(2000);
            for (int i = 0; i < 35; ++i) gt_t.push_back(t += 1 + rng.below(3500));
            Trajectory est = make_traj(est_t, random_points(seed + 50, 40, 1.0));
            Trajectory gt = make_traj(gt_t, random_points(seed + 90, 35, 1.0));
            const std::uint64_t max_dt = 1500;

            // oracle: all candidate pairs sorted by (dt, est, gt), greedy accept
            struct Cand {
                std::uint64_t dt;
                std::size_t e, g;
            };
            std::vector<Cand> cands;
            for (std::size_t e = 0; e < est_t.size(); ++e)
                for (std::size_t g = 0; g < gt_t.size(); ++g) {
                    std::uint64_t dt =
                        est_t[e] > gt_t[g] ? est_t[e] - gt_t[g] : gt_t[g] - est_t[e];
                    if (dt <= max_dt) cands.push_back({dt, e, g});
                }
            std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
                if (a.dt != b.dt) return a.dt < b.dt;
                if (a.e != b.e) return a.e < b.e;
                return a.g < b.g;
            });
            std::vector<bool> eu(est_t.size()), gu(gt_t.size());
            std::vector<std::pair<std::size_t, std::size_t>> expected;
            for (const Cand& c : cands) {
                if (eu[c.e] || gu[c.g]) continue;
                eu[c.e] = gu[c.g] = true;
                expected.emplace_back(c.e, c.g);
            }
            std::sort(expected.begin(), expected.end());

            AssociatedPairs pairs = associate(est, gt, max_dt);
            CHECK(pairs.pairs == expected);
        }
    }
    SECTION("zero pairs is an error") {
        Trajectory a = make_traj({0}, random_points(4, 1, 1.0));
        Trajectory b = make_traj({1000000}, random_points(5, 1, 1.0));
        REQUIRE_THROWS_WITH(associate(a, b, 10),
                            Catch::Matchers::ContainsSubstring("zero pairs"));
    }
}

TEST_CASE("align_se3", "[slam_eval]") {
    SECTION("identical point sets give the identity transform") {
        auto pts = random_points(10, 20, 5.0);
        Se3 se3 = align_se3(pts, pts);
        CHECK((se3.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        CHECK(se3.translation.norm() < 1e-12);
    }
    SECTION("a known rigid transform is recovered to 1e-9") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng rng(seed);
            auto est = random_points(seed + 1000, 12, 3.0);
            const Eigen::Matrix3d rot = random_rotation(rng);
            const Eigen::Vector3d trans(rng.unit() * 4 - 2, rng.unit() * 4 - 2, rng.unit() * 4 - 2);
            std::vector<Eigen::Vector3d> gt;
            for (const auto& p : est) gt.push_back(rot * p + trans);
            Se3 se3 = align_se3(est, gt);
            CHECK((se3.rotation - rot).norm() < 1e-9);
            CHECK((se3.translation - trans).norm() < 1e-9);
            CHECK(rmse_ate_cm(est, gt, se3) < 1e-7);  // 1e-9 m in cm
            CHECK(std::abs(se3.rotation.determinant() - 1.0) < 1e-9);
        }
    }
    SECTION("planar square rotated 90 degrees about z") {
        std::vector<Eigen::Vector3d> est{{1, 1, 0}, {-1, 1, 0}, {-1, -1, 0}, {1, -1, 0}};
        std::vector<Eigen::Vector3d> gt{{-1, 1, 0}, {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}};
        Se3 se3 = align_se3(est, gt);
        Eigen::Matrix3d expected;
        expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
        CHECK((se3.rotation - expected).norm() < 1e-12);
        CHECK(se3.translation.norm() < 1e-12);
    }
    SECTION("degenerate collinear input names the degeneracy") {
        std::vector<Eigen::Vector3d> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
        REQUIRE_THROWS_WITH(align_se3(line, line),
                            Catch::Matchers::ContainsSubstring("collinear"));
    }
    SECTION("fewer than three pairs is an error") {
        std::vector<Eigen::Vector3d> two{{0, 0, 0}, {1, 1, 1}};
        REQUIRE_THROWS(align_se3(two, two));
    }
}

TEST_CASE("rmse_ate arithmetic", "[slam_eval]") {
    SECTION("perfect trajectory scores zero") {
        auto pts = random_points(30, 10, 2.0);
        Se3 identity;
        CHECK(rmse_ate_cm(pts, pts, identity) == 0.0);
    }
    SECTION("two residuals of 3 cm and 4 cm") {
        std::vector<Eigen::Vector3d> est{{0, 0, 0}, {10, 0, 0}};
        std::vector<Eigen::Vector3d> gt{{0.03, 0, 0}, {10, 0.04, 0}};
        Se3 identity;
        CHECK(rmse_ate_cm(est, gt, identity) ==
              Catch::Approx(std::sqrt((9.0 + 16.0) / 2.0)).epsilon(1e-12));
    }
    SECTION("noisy trajectory matches an explicit residual loop to 1e-12 relative") {
        Rng rng(31);
        auto est = random_points(32, 1000, 5.0);
        std::vector<Eigen::Vector3d> gt = est;
        for (auto& p : gt)
            p += Eigen::Vector3d(rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5) * 0.02;
        Se3 se3 = align_se3(est, gt);
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < est.size(); ++i)
            sum_sq += (gt[i] - (se3.rotation * est[i] + se3.translation)).squaredNorm();
        const double expected = std::sqrt(sum_sq / double(est.size())) * 100.0;
        CHECK(rmse_ate_cm(est, gt, se3) == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("accuracy is the reciprocal of RMSE-ATE", "[slam_eval]") {
    CHECK(accuracy_inv_cm(2.0) == 0.5);
    CHECK(accuracy_inv_cm(0.5) == 2.0);
    CHECK(accuracy_inv_cm(std::sqrt(12.5)) == Catch::Approx(0.2828427).epsilon(1e-6));
    REQUIRE_THROWS_WITH(accuracy_inv_cm(0.0), Catch::Matchers::ContainsSubstring("zero"));
}

TEST_CASE("alignment optimality and invariance", "[slam_eval]") {
    SECTION("no random perturbation beats the closed-form alignment") {
        Rng rng(40);
        auto est = random_points(41, 30, 4.0);
        std::vector<Eigen::Vector3d> gt = est;
        for (auto& p : gt)
            p += Eigen::Vector3d(rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5) * 0.1;
        Se3 best = align_se3(est, gt);
        auto cost = [&](const Se3& s) {
            double sum = 0.0;
            for (std::size_t i = 0; i < est.size(); ++i)
                sum += (gt[i] - s.apply(est[i])).squaredNorm();
            return sum;
        };
        const double best_cost = cost(best);
        for (int i = 0; i < 1000; ++i) {
            Se3 perturbed = best;
            const double angle = (rng.unit() - 0.5) * 0.02;
            Eigen::Vector3d axis(rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5);
            perturbed.rotation =
                Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix() * best.rotation;
            perturbed.translation += Eigen::Vector3d(rng.unit() - 0.5, rng.unit() - 0.5,
                                                     rng.unit() - 0.5) *
                                     0.01;
            CHECK(cost(perturbed) >= best_cost);
        }
    }
    SECTION("RMSE-ATE is invariant to rigid transforms of the estimate") {
        Rng rng(50);
        auto est = random_points(51, 25, 4.0);
        std::vector<Eigen::Vector3d> gt = est;
        for (auto& p : gt)
            p += Eigen::Vector3d(rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5) * 0.05;
        const double base = rmse_ate_cm(est, gt, align_se3(est, gt));
        for (int i = 0; i < 20; ++i) {
            const Eigen::Matrix3d rot = random_rotation(rng);
            const Eigen::Vector3d trans(rng.unit() * 10, rng.unit() * 10, rng.unit() * 10);
            std::vector<Eigen::Vector3d> moved;
            for (const auto& p : est) moved.push_back(rot * p + trans);
            const double rmse = rmse_ate_cm(moved, gt, align_se3(moved, gt));
            CHECK(rmse == Catch::Approx(base).margin(1e-9));
        }
    }
    SECTION("noisy near-planar sets still yield proper rotations") {
        Rng rng(60);
        for (int i = 0; i < 100; ++i) {
            std::vector<Eigen::Vector3d> est, gt;
            const Eigen::Matrix3d rot = random_rotation(rng);
            for (int k = 0; k < 12; ++k) {
                Eigen::Vector3d p(rng.unit() * 4, rng.unit() * 4, rng.unit() * 1e-6);
                est.push_back(p);
                gt.push_back(rot * p + Eigen::Vector3d(1, 2, 3) +
                             Eigen::Vector3d(rng.unit(), rng.unit(), rng.unit()) * 1e-3);
            }
            Se3 se3 = align_se3(est, gt);
            CHECK(std::abs(se3.rotation.determinant() - 1.0) < 1e-9);
            CHECK((se3.rotation * se3.rotation.transpose() - Eigen::Matrix3d::Identity())
                      .norm() < 1e-9);
        }
    }
}

TEST_CASE("eval_trials summary statistics", "[slam_eval]") {
    auto pts = random_points(70, 20, 3.0);
    std::vector<std::uint64_t> times;
    for (std::size_t i = 0; i < 20; ++i) times.push_back(i * 5000);
    Trajectory gt = make_traj(times, pts);

    SECTION("five perfect trials give a degenerate box at zero") {
        std::vector<Trajectory> trials(5, gt);
        TrialsResult result = eval_trials(trials, gt, 1000);
        for (const auto& t : result.trials) {
            CHECK(t.rmse_cm <= kPerfectRmseCm);
            CHECK_FALSE(t.accuracy.has_value());
        }
        CHECK(result.summary.min <= kPerfectRmseCm);
        CHECK(result.summary.max <= kPerfectRmseCm);
        CHECK(result.summary.median <= kPerfectRmseCm);
        CHECK(result.summary.max == result.summary.min);  // degenerate box
    }
    SECTION("a single trial equals every summary statistic") {
        Rng rng(71);
        Trajectory est = gt;
        for (auto& p : est.poses) p.position[0] += (rng.unit() - 0.5) * 0.1;
        TrialsResult result = eval_trials(std::vector<Trajectory>{est}, gt, 1000);
        const double v = result.trials[0].rmse_cm;
        CHECK(result.summary.min == v);
        CHECK(result.summary.q1 == v);
        CHECK(result.summary.median == v);
        CHECK(result.summary.q3 == v);
        CHECK(result.summary.max == v);
    }
    SECTION("five noisy trials match independently computed order statistics") {
        Rng rng(72);
        std::vector<Trajectory> trials;
        for (int i = 0; i < 5; ++i) {
            Trajectory est = gt;
            for (auto& p : est.poses)
                for (double& c : p.position) c += (rng.unit() - 0.5) * 0.05 * (i + 1);
            trials.push_back(est);
        }
        TrialsResult result = eval_trials(trials, gt, 1000);
        std::vector<double> rmse;
        for (const auto& t : result.trials) rmse.push_back(t.rmse_cm);
        std::sort(rmse.begin(), rmse.end());
        CHECK(result.summary.min == rmse[0]);
        CHECK(result.summary.max == rmse[4]);
        CHECK(result.summary.median == rmse[2]);
        CHECK(result.summary.q1 == rmse[1]);  // (n-1)*0.25 = 1 exactly for n=5
        CHECK(result.summary.q3 == rmse[3]);
    }
}

TEST_CASE("trajectory csv round trip and validation", "[slam_eval]") {
    TempDir dir("eventlab_traj");
    SECTION("round trip") {
        Trajectory t;
        Rng rng(80);
        for (int i = 0; i < 10; ++i) {
            Pose p;
            p.t_us = i * 10000 + rng.below(500);
            p.position = {rng.unit(), rng.unit(), rng.unit()};
            Eigen::Quaterniond q(rng.unit() + 0.2, rng.unit(), rng.unit(), rng.unit());
            q.normalize();
            p.quaternion = {q.x(), q.y(), q.z(), q.w()};
            t.poses.push_back(p);
        }
        save_trajectory_csv(t, dir / "t.csv");
        Trajectory back = load_trajectory_csv(dir / "t.csv");
        REQUIRE(back.poses.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(back.poses[i].t_us == t.poses[i].t_us);
            for (int c = 0; c < 3; ++c)
                CHECK(back.poses[i].position[c] ==
                      Catch::Approx(t.poses[i].position[c]).margin(1e-8));
        }
    }
    SECTION("comments are skipped, bad quaternions rejected") {
        write_file(dir / "c.csv", "# comment\n0.5,1,2,3,0,0,0,1\n");
        CHECK(load_trajectory_csv(dir / "c.csv").poses.size() == 1);
        write_file(dir / "q.csv", "0.5,1,2,3,0,0,0,2\n");
        REQUIRE_THROWS_WITH(load_trajectory_csv(dir / "q.csv"),
                            Catch::Matchers::ContainsSubstring("unit norm"));
    }
    SECTION("non-increasing timestamps rejected") {
        write_file(dir / "o.csv", "1.0,0,0,0,0,0,0,1\n0.5,0,0,0,0,0,0,1\n");
        REQUIRE_THROWS_WITH(load_trajectory_csv(dir / "o.csv"),
                            Catch::Matchers::ContainsSubstring("strictly increasing"));
    }
}
