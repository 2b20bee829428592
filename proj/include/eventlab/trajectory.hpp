#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event_io.hpp"

namespace eventlab {

// Timestamped 6-DoF pose; orientation is a unit quaternion (x, y, z, w).
struct Pose {
    std::uint64_t t_us = 0;
    std::array<double, 3> position{};
    std::array<double, 4> quaternion{0, 0, 0, 1};
};

struct Trajectory {
    std::vector<Pose> poses;
};

inline void validate(const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.poses.size(); ++i) {
        if (i > 0)
            require(traj.poses[i].t_us > traj.poses[i - 1].t_us,
                    "trajectory timestamps must be strictly increasing (pose ", i, ")");
        const auto& q = traj.poses[i].quaternion;
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        require(std::abs(norm - 1.0) <= 1e-9, "pose ", i, " has non-unit quaternion (norm ",
                norm, ")");
    }
}

// TUM-style CSV: t_seconds,px,py,pz,qx,qy,qz,qw. Lines starting with '#' are
// skipped. File quaternions are renormalized (they are usually printed with
// few decimals); anything further than 1e-3 from unit norm is rejected.
inline Trajectory load_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open trajectory file ", path.string());
    Trajectory traj;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::array<std::string, 8> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                require(field < 8, "too many fields at line ", line_no, " in ", path.string());
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        require(field == 8, "expected 8 comma-separated fields at line ", line_no, " in ",
                path.string(), ", got ", field);
        Pose pose;
        pose.t_us = detail::parse_seconds_to_us(fields[0], line_no);
        try {
            for (int i = 0; i < 3; ++i) pose.position[i] = std::stod(fields[1 + i]);
            for (int i = 0; i < 4; ++i) pose.quaternion[i] = std::stod(fields[4 + i]);
        } catch (const std::exception&) {
            fail("malformed pose at line ", line_no, " in ", path.string());
        }
        auto& q = pose.quaternion;
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        require(std::abs(norm - 1.0) <= 1e-3, "quaternion at line ", line_no, " in ",
                path.string(), " is far from unit norm (", norm, ")");
        for (double& v : q) v /= norm;
        traj.poses.push_back(pose);
    }
    validate(traj);
    return traj;
}

inline void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot write trajectory file ", path.string());
    char buf[256];
    for (const Pose& p : traj.poses) {
        std::snprintf(buf, sizeof(buf), "%llu.%06llu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n",
                      static_cast<unsigned long long>(p.t_us / 1000000ull),
                      static_cast<unsigned long long>(p.t_us % 1000000ull), p.position[0],
                      p.position[1], p.position[2], p.quaternion[0], p.quaternion[1],
                      p.quaternion[2], p.quaternion[3]);
        out << buf;
    }
    require(out.good(), "write failed for ", path.string());
}

}  // namespace eventlab
