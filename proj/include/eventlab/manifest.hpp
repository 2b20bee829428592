#pragma once

#include <openssl/evp.h>
#include <unistd.h>
#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/event_io.hpp"
#include "eventlab/ground_truth.hpp"
#include "eventlab/synth.hpp"

namespace eventlab {

enum class GtSource { time, gps, odometry };

inline const char* to_string(GtSource s) {
    switch (s) {
        case GtSource::time: return "time";
        case GtSource::gps: return "gps";
        case GtSource::odometry: return "odometry";
    }
    return "?";
}

// One named recording: either a file (text/evb/hdf5, optionally checksummed)
// or a deterministic synthetic traverse.
struct SequenceSpec {
    std::string path;  // relative paths resolve against the manifest directory
    EventFormat format = EventFormat::text;
    std::string checksum_sha256;
    std::optional<Resolution> resolution;
    std::string hdf5_group;
    std::string position_track;
    std::int64_t clock_offset_us = 0;
    std::optional<SynthSpec> synth;
};

struct DatasetManifest {
    std::string name;
    std::filesystem::path base_dir;
    GtSource gt_source = GtSource::time;
    std::optional<std::uint64_t> tolerance_places;
    std::optional<std::uint64_t> tolerance_ms;
    std::optional<double> tolerance_m;
    GtFilters filters;
    std::map<std::string, SequenceSpec> sequences;

    const SequenceSpec& sequence(const std::string& name) const {
        auto it = sequences.find(name);
        if (it == sequences.end())
            fail("dataset '", this->name, "' has no sequence '", name, "'");
        return it->second;
    }
};

inline std::string sha256_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open ", path.string(), " for checksumming");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, "cannot create digest context");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace detail {

inline void check_known_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                             const std::string& where) {
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        require(allowed.count(key), "unknown key '", key, "' in ", where);
    }
}

inline SynthSpec parse_synth(const YAML::Node& node, const std::string& where) {
    check_known_keys(node,
                     {"seed", "duration_s", "mean_rate", "width", "height", "texture_seed",
                      "route_px", "speed_profile", "contrast"},
                     where);
    SynthSpec spec;
    spec.seed = node["seed"] ? node["seed"].as<std::uint64_t>() : 0;
    require(node["duration_s"] && node["mean_rate"] && node["width"] && node["height"],
            where, " needs duration_s, mean_rate, width, height");
    spec.duration_us = static_cast<std::uint64_t>(node["duration_s"].as<double>() * 1e6);
    spec.mean_rate_hz = node["mean_rate"].as<double>();
    spec.width = node["width"].as<std::uint32_t>();
    spec.height = node["height"].as<std::uint32_t>();
    if (node["texture_seed"]) spec.scene.texture_seed = node["texture_seed"].as<std::uint64_t>();
    if (node["route_px"]) spec.scene.route_length_px = node["route_px"].as<double>();
    if (node["contrast"]) spec.scene.contrast = node["contrast"].as<int>();
    if (node["speed_profile"])
        spec.speed.multipliers = node["speed_profile"].as<std::vector<double>>();
    return spec;
}

}  // namespace detail

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), "dataset manifest not found: ", path.string());
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        fail("cannot parse manifest ", path.string(), ": ", e.what());
    }
    detail::check_known_keys(root,
                             {"name", "gt_source", "ground_truth_tolerance", "tolerance_ms",
                              "tolerance_m", "filters", "sequences"},
                             "manifest " + path.string());
    DatasetManifest m;
    m.base_dir = path.parent_path();
    m.name = root["name"] ? root["name"].as<std::string>() : path.stem().string();
    if (root["gt_source"]) {
        const std::string s = root["gt_source"].as<std::string>();
        if (s == "time")
            m.gt_source = GtSource::time;
        else if (s == "gps")
            m.gt_source = GtSource::gps;
        else if (s == "odometry")
            m.gt_source = GtSource::odometry;
        else
            fail("manifest ", path.string(), ": unknown gt_source '", s, "'");
    }
    if (root["ground_truth_tolerance"])
        m.tolerance_places = root["ground_truth_tolerance"].as<std::uint64_t>();
    if (root["tolerance_ms"]) m.tolerance_ms = root["tolerance_ms"].as<std::uint64_t>();
    if (root["tolerance_m"]) m.tolerance_m = root["tolerance_m"].as<double>();
    if (root["filters"]) {
        for (const auto& f : root["filters"]) {
            const std::string name = f.as<std::string>();
            if (name == "reverse_direction")
                m.filters.reverse_direction = true;
            else if (name == "endpoint_overlap")
                m.filters.endpoint_overlap = true;
            else
                fail("manifest ", path.string(), ": unknown filter '", name, "'");
        }
    }
    require(root["sequences"] && root["sequences"].IsMap(), "manifest ", path.string(),
            " declares no sequences");
    for (const auto& kv : root["sequences"]) {
        const std::string seq_name = kv.first.as<std::string>();
        const YAML::Node& node = kv.second;
        const std::string where = "sequence '" + seq_name + "' in " + path.string();
        detail::check_known_keys(node,
                                 {"path", "url", "format", "checksum", "resolution",
                                  "hdf5_group", "position_track", "clock_offset_us", "synth"},
                                 where);
        SequenceSpec seq;
        if (node["synth"]) {
            seq.synth = detail::parse_synth(node["synth"], where);
        } else {
            require(node["path"] || node["url"], where, " needs a path, url, or synth block");
            seq.path = node["path"] ? node["path"].as<std::string>()
                                    : node["url"].as<std::string>();
            seq.format = node["format"]
                             ? event_format_from_string(node["format"].as<std::string>())
                             : EventFormat::text;
        }
        if (node["checksum"]) seq.checksum_sha256 = node["checksum"].as<std::string>();
        if (node["resolution"]) {
            auto r = node["resolution"].as<std::vector<std::uint32_t>>();
            require(r.size() == 2, where, ": resolution must be [width, height]");
            seq.resolution = Resolution{r[0], r[1]};
        }
        if (node["hdf5_group"]) seq.hdf5_group = node["hdf5_group"].as<std::string>();
        if (node["position_track"]) seq.position_track = node["position_track"].as<std::string>();
        if (node["clock_offset_us"]) seq.clock_offset_us = node["clock_offset_us"].as<std::int64_t>();
        m.sequences[seq_name] = std::move(seq);
    }
    return m;
}

// Desk-scale synthetic dataset that ships with the harness: seqA/seqB share a
// scene at a high event rate and differ only in event noise; tvA/tvB are the
// speed-varied traverses at a sparser rate where short windows genuinely
// struggle. Time ground truth, +-300 ms tolerance.
inline DatasetManifest builtin_synth_fixture() {
    DatasetManifest m;
    m.name = "synth_fixture";
    m.gt_source = GtSource::time;
    m.tolerance_ms = 300;
    auto seq = [](std::uint64_t seed, double rate_hz, std::uint64_t duration_us,
                  std::vector<double> profile) {
        SequenceSpec s;
        SynthSpec spec;
        spec.seed = seed;
        spec.duration_us = duration_us;
        spec.mean_rate_hz = rate_hz;
        spec.width = 128;
        spec.height = 96;
        spec.scene.texture_seed = 7;
        spec.scene.route_length_px = 600.0;
        spec.speed.multipliers = std::move(profile);
        s.synth = spec;
        return s;
    };
    m.sequences["seqA"] = seq(101, 250000.0, 8000000, {1.0});
    m.sequences["seqB"] = seq(202, 250000.0, 8000000, {1.0});
    m.sequences["tvA"] = seq(1000, 60000.0, 6000000, {0.5, 1.25, 0.75, 1.75, 1.0, 0.75});
    m.sequences["tvB"] = seq(2000, 60000.0, 6000000, {0.5, 1.25, 0.75, 1.75, 1.0, 0.75});
    return m;
}

inline std::filesystem::path cache_root() {
    if (const char* env = std::getenv("EVENTLAB_CACHE")) return env;
    if (const char* home = std::getenv("HOME"))
        return std::filesystem::path(home) / ".cache" / "eventlab";
    return ".eventlab-cache";
}

inline bool offline_mode() {
    const char* env = std::getenv("EVENTLAB_OFFLINE");
    return env && *env && std::string_view(env) != "0";
}

namespace detail {

// Fingerprint of everything that determines the stream, so editing a manifest
// invalidates the cache entry instead of silently serving stale events.
inline std::string sequence_fingerprint(const SequenceSpec& spec) {
    std::uint64_t h = 0x9d2c5680u;
    auto mix_str = [&](const std::string& s) {
        for (char c : s) h = hash_combine(h, static_cast<unsigned char>(c));
        h = hash_combine(h, s.size());
    };
    if (spec.synth) {
        const SynthSpec& sy = *spec.synth;
        for (std::uint64_t v :
             {sy.seed, sy.duration_us, static_cast<std::uint64_t>(sy.width),
              static_cast<std::uint64_t>(sy.height), sy.scene.texture_seed,
              static_cast<std::uint64_t>(sy.scene.contrast)})
            h = hash_combine(h, v);
        auto mix_double = [&](double d) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof(bits));
            h = hash_combine(h, bits);
        };
        mix_double(sy.mean_rate_hz);
        mix_double(sy.scene.route_length_px);
        for (double m : sy.speed.multipliers) mix_double(m);
    } else {
        mix_str(spec.path);
        mix_str(spec.checksum_sha256);
        mix_str(spec.hdf5_group);
        h = hash_combine(h, static_cast<std::uint64_t>(spec.format));
        if (spec.resolution)
            h = hash_combine(h, (std::uint64_t(spec.resolution->width) << 32) |
                                    spec.resolution->height);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

// Fetches (or generates) a sequence, verifies its checksum, converts it to
// the canonical evb cache, and returns the stream. Later calls read only the
// cache.
inline EventStream resolve_dataset(const DatasetManifest& manifest, const std::string& sequence,
                                   const std::filesystem::path& cache = cache_root()) {
    const SequenceSpec& spec = manifest.sequence(sequence);
    const std::filesystem::path cache_file =
        cache / manifest.name / (sequence + "-" + detail::sequence_fingerprint(spec) + ".evb");
    EventStream stream;
    if (std::filesystem::exists(cache_file)) {
        stream = load_events_evb(cache_file);
    } else {
        if (spec.synth) {
            stream = synth_traverse(*spec.synth);
        } else {
            require(spec.path.rfind("http://", 0) != 0 && spec.path.rfind("https://", 0) != 0,
                    "sequence '", sequence, "' points at ", spec.path,
                    offline_mode() ? " but EVENTLAB_OFFLINE is set"
                                   : " ; server downloads are not bundled - fetch the file "
                                     "and point the manifest at the local copy");
            std::filesystem::path src = spec.path;
            if (src.is_relative()) src = manifest.base_dir / src;
            require(std::filesystem::exists(src), "sequence '", sequence,
                    "' source file missing: ", src.string());
            if (!spec.checksum_sha256.empty()) {
                const std::string actual = sha256_hex(src);
                require(actual == spec.checksum_sha256, "checksum mismatch for ", src.string(),
                        ": manifest says ", spec.checksum_sha256, ", file is ", actual);
            }
            stream = load_events(src, spec.format, spec.resolution, spec.hdf5_group);
        }
        std::filesystem::create_directories(cache_file.parent_path());
        // unique temp name + atomic rename: concurrent resolvers may race but
        // each publishes a complete identical file
        const std::filesystem::path tmp =
            cache_file.string() + ".tmp." +
            std::to_string(::getpid()) + "." +
            std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xffff);
        save_events_evb(stream, tmp);
        std::filesystem::rename(tmp, cache_file);
    }
    stream.source.dataset = manifest.name;
    stream.source.sequence = sequence;
    if (spec.synth) stream.duration_us = std::max(stream.duration_us, spec.synth->duration_us);
    return stream;
}

// Manifest lookup: built-in datasets first, then <datasets_dir>/<name>.yaml.
// get() is safe to call from concurrent batch workers; loaded manifests are
// stable for the store's lifetime.
class ManifestStore {
public:
    explicit ManifestStore(std::filesystem::path datasets_dir = "datasets")
        : datasets_dir_(std::move(datasets_dir)) {
        const DatasetManifest builtin = builtin_synth_fixture();
        loaded_[builtin.name] = std::make_unique<DatasetManifest>(builtin);
    }

    ManifestStore(ManifestStore&&) = default;
    ManifestStore& operator=(ManifestStore&&) = default;

    bool has(const std::string& name) const {
        {
            std::lock_guard<std::mutex> lock(*mutex_);
            if (loaded_.count(name)) return true;
        }
        return std::filesystem::exists(datasets_dir_ / (name + ".yaml"));
    }

    const DatasetManifest& get(const std::string& name) {
        std::lock_guard<std::mutex> lock(*mutex_);
        auto it = loaded_.find(name);
        if (it != loaded_.end()) return *it->second;
        const auto path = datasets_dir_ / (name + ".yaml");
        require(std::filesystem::exists(path), "unknown dataset '", name,
                "': no built-in of that name and no manifest at ", path.string());
        auto [pos, _] =
            loaded_.emplace(name, std::make_unique<DatasetManifest>(load_manifest(path)));
        return *pos->second;
    }

private:
    std::filesystem::path datasets_dir_;
    std::map<std::string, std::unique_ptr<DatasetManifest>> loaded_;
    std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

}  // namespace eventlab
