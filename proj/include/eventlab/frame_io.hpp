#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/frames.hpp"

namespace eventlab {

namespace detail {

inline std::string frame_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu.pgm", index);
    return buf;
}

inline void write_pgm(const std::filesystem::path& path, std::uint32_t width,
                      std::uint32_t height, const std::vector<std::uint8_t>& pixels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write image ", path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    require(out.good(), "write failed for ", path.string());
}

inline std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path,
                                          std::uint32_t& width, std::uint32_t& height) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open image ", path.string());
    std::string magic;
    in >> magic;
    require(magic == "P5", "not a binary PGM: ", path.string());
    auto next_token = [&]() -> long {
        // tokens may be separated by whitespace and '#' comment lines
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return std::stol(tok);
        }
        fail("truncated PGM header in ", path.string());
    };
    long w = next_token(), h = next_token(), maxval = next_token();
    require(w > 0 && h > 0 && maxval == 255, "unsupported PGM geometry in ", path.string());
    in.get();  // single whitespace after maxval
    width = static_cast<std::uint32_t>(w);
    height = static_cast<std::uint32_t>(h);
    std::vector<std::uint8_t> pixels(std::size_t(w) * h);
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    require(in.gcount() == static_cast<std::streamsize>(pixels.size()),
            "truncated PGM payload in ", path.string());
    return pixels;
}

}  // namespace detail

// Writes frames/NNNNNN.pgm (8-bit, per-frame max rescaled to 255; all-zero
// frames stay all-zero) plus metadata.json. The metadata is the contract for
// external reconstructors: any tool that rewrites the images in place (same
// sizes, same count) produces a directory import_frames() accepts.
inline void export_frames(const FrameStack& st, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "frames");
    const std::size_t pixels = st.pixels();
    std::vector<std::uint8_t> img(pixels);
    nlohmann::json meta;
    meta["dataset"] = st.source.dataset;
    meta["sequence"] = st.source.sequence;
    meta["mode"] = to_string(st.mode);
    meta["parameter"] = st.parameter;
    meta["polarity_mode"] = to_string(st.polarity_mode);
    meta["width"] = st.width;
    meta["height"] = st.height;
    meta["stream_t_start_us"] = st.stream_t_start;
    meta["stream_duration_us"] = st.stream_duration;
    meta["timestamp_unit"] = "microseconds_since_stream_start";
    meta["rescale"] = "per_frame_max_to_255";
    auto& times = meta["frames"] = nlohmann::json::array();
    for (std::size_t k = 0; k < st.frames.size(); ++k) {
        const Frame& f = st.frames[k];
        std::uint32_t max_count = 0;
        for (std::size_t i = 0; i < pixels; ++i)
            max_count = std::max<std::uint32_t>(max_count, st.summed_at(f, i));
        for (std::size_t i = 0; i < pixels; ++i) {
            const std::uint32_t c = st.summed_at(f, i);
            img[i] = max_count == 0
                         ? 0
                         : static_cast<std::uint8_t>((2ull * c * 255 + max_count) /
                                                     (2ull * max_count));
        }
        detail::write_pgm(dir / "frames" / detail::frame_file_name(k), st.width, st.height, img);
        times.push_back({f.t_begin, f.t_end});
    }
    std::ofstream out(dir / "metadata.json", std::ios::trunc);
    require(out.good(), "cannot write ", (dir / "metadata.json").string());
    out << meta.dump(2) << "\n";
}

// Reads any directory obeying the export layout, including externally
// reconstructed images. The result is a summed-mode stack whose counts are
// the 8-bit pixel values.
inline FrameStack import_frames(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path meta_path = dir / "metadata.json";
    require(fs::exists(meta_path), "missing metadata file ", meta_path.string());
    std::ifstream in(meta_path);
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const std::exception& e) {
        fail("unparsable metadata ", meta_path.string(), ": ", e.what());
    }
    FrameStack st;
    try {
        st.source.dataset = meta.at("dataset").get<std::string>();
        st.source.sequence = meta.at("sequence").get<std::string>();
        st.mode = meta.at("mode").get<std::string>() == "fixed_count"
                      ? AccumulatorMode::fixed_count
                      : AccumulatorMode::fixed_window;
        st.parameter = meta.at("parameter").get<std::uint64_t>();
        st.width = meta.at("width").get<std::uint32_t>();
        st.height = meta.at("height").get<std::uint32_t>();
        st.stream_t_start = meta.at("stream_t_start_us").get<std::uint64_t>();
        st.stream_duration = meta.at("stream_duration_us").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail("inconsistent metadata in ", meta_path.string(), ": ", e.what());
    }
    st.polarity_mode = PolarityMode::summed;
    const auto& times = meta.at("frames");
    st.frames.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const fs::path img_path = dir / "frames" / detail::frame_file_name(k);
        std::uint32_t w = 0, h = 0;
        std::vector<std::uint8_t> pixels = detail::read_pgm(img_path, w, h);
        require(w == st.width && h == st.height, "image ", img_path.string(), " is ", w, "x",
                h, " but metadata declares ", st.width, "x", st.height);
        Frame f;
        f.t_begin = times[k].at(0).get<std::uint64_t>();
        f.t_end = times[k].at(1).get<std::uint64_t>();
        f.counts.assign(pixels.begin(), pixels.end());
        st.frames.push_back(std::move(f));
    }
    return st;
}

}  // namespace eventlab
