#pragma once

// HDF5 ingestion: one group per sequence holding four equal-length 1-D
// datasets (t, x, y, p) plus width/height attributes on the group. Timestamps
// are microseconds since stream start. Polarity stored as {0,1} or {-1,+1};
// zeros map to -1 on ingest.

#include <hdf5.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event.hpp"

namespace eventlab {

namespace detail {

struct H5Handle {
    hid_t id = -1;
    herr_t (*closer)(hid_t) = nullptr;
    H5Handle(hid_t i, herr_t (*c)(hid_t)) : id(i), closer(c) {}
    ~H5Handle() {
        if (id >= 0 && closer) closer(id);
    }
    H5Handle(const H5Handle&) = delete;
    H5Handle& operator=(const H5Handle&) = delete;
    bool ok() const { return id >= 0; }
};

inline std::string first_group_name(hid_t file) {
    H5G_info_t info{};
    if (H5Gget_info(file, &info) < 0) return {};
    for (hsize_t i = 0; i < info.nlinks; ++i) {
        H5O_info_t oinfo{};
        if (H5Oget_info_by_idx(file, ".", H5_INDEX_NAME, H5_ITER_NATIVE, i, &oinfo,
                               H5P_DEFAULT) < 0)
            continue;
        if (oinfo.type != H5O_TYPE_GROUP) continue;
        ssize_t len = H5Lget_name_by_idx(file, ".", H5_INDEX_NAME, H5_ITER_NATIVE, i, nullptr,
                                         0, H5P_DEFAULT);
        if (len <= 0) continue;
        std::string name(static_cast<std::size_t>(len), '\0');
        H5Lget_name_by_idx(file, ".", H5_INDEX_NAME, H5_ITER_NATIVE, i, name.data(),
                           name.size() + 1, H5P_DEFAULT);
        return name;
    }
    return {};
}

template <typename T>
std::vector<T> read_1d(hid_t loc, const char* name, hid_t mem_type,
                       const std::filesystem::path& path) {
    H5Handle dset(H5Dopen2(loc, name, H5P_DEFAULT), H5Dclose);
    require(dset.ok(), "hdf5 file ", path.string(), " is missing dataset '", name, "'");
    H5Handle space(H5Dget_space(dset.id), H5Sclose);
    require(space.ok() && H5Sget_simple_extent_ndims(space.id) == 1, "hdf5 dataset '", name,
            "' in ", path.string(), " is not one-dimensional");
    hsize_t n = 0;
    H5Sget_simple_extent_dims(space.id, &n, nullptr);
    std::vector<T> out(n);
    if (n > 0)
        require(H5Dread(dset.id, mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.data()) >= 0,
                "failed to read hdf5 dataset '", name, "' from ", path.string());
    return out;
}

inline std::optional<std::uint32_t> read_u32_attr(hid_t loc, const char* name) {
    if (H5Aexists(loc, name) <= 0) return {};
    H5Handle attr(H5Aopen(loc, name, H5P_DEFAULT), H5Aclose);
    if (!attr.ok()) return {};
    std::uint32_t v = 0;
    if (H5Aread(attr.id, H5T_NATIVE_UINT32, &v) < 0) return {};
    return v;
}

}  // namespace detail

inline EventStream load_events_hdf5(const std::filesystem::path& path,
                                    std::optional<Resolution> resolution,
                                    std::string_view group) {
    detail::H5Handle file(H5Fopen(path.string().c_str(), H5F_ACC_RDONLY, H5P_DEFAULT),
                          H5Fclose);
    require(file.ok(), "cannot open hdf5 file ", path.string());

    std::string group_name(group);
    if (group_name.empty()) group_name = detail::first_group_name(file.id);
    hid_t loc = file.id;
    std::optional<detail::H5Handle> grp;
    if (!group_name.empty()) {
        grp.emplace(H5Gopen2(file.id, group_name.c_str(), H5P_DEFAULT), H5Gclose);
        require(grp->ok(), "hdf5 file ", path.string(), " has no group '", group_name, "'");
        loc = grp->id;
    }

    auto t = detail::read_1d<std::uint64_t>(loc, "t", H5T_NATIVE_UINT64, path);
    auto x = detail::read_1d<std::uint16_t>(loc, "x", H5T_NATIVE_UINT16, path);
    auto y = detail::read_1d<std::uint16_t>(loc, "y", H5T_NATIVE_UINT16, path);
    auto p = detail::read_1d<std::int8_t>(loc, "p", H5T_NATIVE_INT8, path);
    require(t.size() == x.size() && t.size() == y.size() && t.size() == p.size(),
            "hdf5 datasets t/x/y/p have mismatched lengths in ", path.string());

    EventStream s;
    auto width = detail::read_u32_attr(loc, "width");
    auto height = detail::read_u32_attr(loc, "height");
    if (width && height) {
        s.width = *width;
        s.height = *height;
    } else {
        require(resolution.has_value(), "hdf5 file ", path.string(),
                " carries no width/height attributes and no override was supplied");
        s.width = resolution->width;
        s.height = resolution->height;
    }

    s.events.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        Event& e = s.events[i];
        e.t = t[i];
        e.x = x[i];
        e.y = y[i];
        require(p[i] == 0 || p[i] == 1 || p[i] == -1, "hdf5 polarity out of range at record ",
                i, " in ", path.string());
        e.polarity = p[i] == 0 ? std::int8_t(-1) : p[i];
    }
    sort_events_stable(s.events);
    if (!s.events.empty()) s.duration_us = s.events.back().t;
    if (!group_name.empty()) s.source.sequence = group_name;
    validate(s);
    return s;
}

// Conversion helper (not part of the save_events format set): writes the
// group/dataset layout that load_events_hdf5 reads back.
inline void save_events_hdf5(const EventStream& s, const std::filesystem::path& path,
                             const std::string& group_name) {
    detail::H5Handle file(
        H5Fcreate(path.string().c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose);
    require(file.ok(), "cannot create hdf5 file ", path.string());
    detail::H5Handle grp(
        H5Gcreate2(file.id, group_name.c_str(), H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT),
        H5Gclose);
    require(grp.ok(), "cannot create hdf5 group '", group_name, "' in ", path.string());

    const hsize_t n = s.events.size();
    detail::H5Handle space(H5Screate_simple(1, &n, nullptr), H5Sclose);

    std::vector<std::uint64_t> t(n);
    std::vector<std::uint16_t> x(n), y(n);
    std::vector<std::int8_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = s.events[i].t;
        x[i] = s.events[i].x;
        y[i] = s.events[i].y;
        p[i] = s.events[i].polarity > 0 ? 1 : 0;
    }

    auto write = [&](const char* name, hid_t file_type, hid_t mem_type, const void* data) {
        detail::H5Handle dset(H5Dcreate2(grp.id, name, file_type, space.id, H5P_DEFAULT,
                                         H5P_DEFAULT, H5P_DEFAULT),
                              H5Dclose);
        require(dset.ok(), "cannot create hdf5 dataset '", name, "' in ", path.string());
        if (n > 0)
            require(H5Dwrite(dset.id, mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, data) >= 0,
                    "failed to write hdf5 dataset '", name, "' to ", path.string());
    };
    write("t", H5T_STD_U64LE, H5T_NATIVE_UINT64, t.data());
    write("x", H5T_STD_U16LE, H5T_NATIVE_UINT16, x.data());
    write("y", H5T_STD_U16LE, H5T_NATIVE_UINT16, y.data());
    write("p", H5T_STD_I8LE, H5T_NATIVE_INT8, p.data());

    detail::H5Handle attr_space(H5Screate(H5S_SCALAR), H5Sclose);
    auto write_attr = [&](const char* name, std::uint32_t value) {
        detail::H5Handle attr(H5Acreate2(grp.id, name, H5T_STD_U32LE, attr_space.id,
                                         H5P_DEFAULT, H5P_DEFAULT),
                              H5Aclose);
        require(attr.ok(), "cannot create hdf5 attribute '", name, "'");
        require(H5Awrite(attr.id, H5T_NATIVE_UINT32, &value) >= 0,
                "failed to write hdf5 attribute '", name, "'");
    };
    write_attr("width", s.width);
    write_attr("height", s.height);
}

}  // namespace eventlab
