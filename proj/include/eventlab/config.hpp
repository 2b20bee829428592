#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eventlab/errors.hpp"
#include "eventlab/frames.hpp"
#include "eventlab/metrics.hpp"

namespace eventlab {

enum class GeneratorKind { frames, reconstruction_import };

inline const char* to_string(GeneratorKind g) {
    return g == GeneratorKind::frames ? "frames" : "reconstruction-import";
}

inline GeneratorKind generator_from_string(std::string_view s) {
    if (s == "frames") return GeneratorKind::frames;
    if (s == "reconstruction-import" || s == "reconstruction")
        return GeneratorKind::reconstruction_import;
    fail("unknown generator '", std::string(s), "' (expected frames or reconstruction-import)");
}

inline AccumulatorMode accumulator_from_string(std::string_view s) {
    if (s == "eventcount") return AccumulatorMode::fixed_count;
    if (s == "timewindow") return AccumulatorMode::fixed_window;
    fail("unknown frame_accumulator '", std::string(s),
         "' (expected eventcount or timewindow)");
}

inline const char* accumulator_name(AccumulatorMode m) {
    return m == AccumulatorMode::fixed_count ? "eventcount" : "timewindow";
}

inline PolarityMode polarity_from_string(std::string_view s) {
    if (s == "summed") return PolarityMode::summed;
    if (s == "two_channel") return PolarityMode::two_channel;
    fail("unknown polarity mode '", std::string(s), "' (expected summed or two_channel)");
}

// Harness-wide defaults, overridable per run.
struct RunDefaults {
    GeneratorKind generator = GeneratorKind::frames;
    std::string reconstruction_model = "e2vid";
    AccumulatorMode accumulator = AccumulatorMode::fixed_count;
    std::vector<std::uint64_t> timewindows_ms = {250, 500, 750, 1000};
    std::vector<std::uint64_t> num_events = {25000, 50000, 75000, 100000};
    std::uint64_t filter_time_sec = 0;  // 0 = keep every frame
    std::optional<std::uint64_t> ground_truth_tolerance_places;
    PolarityMode polarity = PolarityMode::summed;
    std::uint32_t downsample = 4;
    std::size_t sparse_pixels = 512;
    Metric metric = Metric::sad;
    std::string out_dir = "results";
    std::string datasets_dir = "datasets";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

// One fully resolved experiment.
struct RunSpec {
    std::string baseline;
    std::string dataset;
    std::string reference;
    std::string query;
    GeneratorKind generator = GeneratorKind::frames;
    AccumulatorMode accumulator = AccumulatorMode::fixed_count;
    std::uint64_t parameter = 25000;  // events, or window in microseconds
    PolarityMode polarity = PolarityMode::summed;
    std::uint32_t downsample = 4;
    std::size_t sparse_pixels = 512;
    Metric metric = Metric::sad;
    std::uint64_t filter_time_us = 0;
    std::optional<std::uint64_t> tolerance_places;
    std::uint64_t seed = 0;
    bool export_frames = false;
    bool dump_distances = false;
};

struct WtaJob {
    std::string dataset;
    std::string reference;
    std::string query;
    std::string baseline = "dense_sad";
    AccumulatorMode accumulator = AccumulatorMode::fixed_window;
    std::uint64_t small_parameter = 30;   // ms or events
    std::uint64_t large_parameter = 120;  // ms or events
    std::vector<double> thresholds = {0.0, 0.25, 0.5, 0.75};
};

struct Config {
    RunDefaults defaults;
    std::vector<RunSpec> batch;
    std::optional<WtaJob> wta;
};

// Name-existence hooks so parsing stays decoupled from the registry and
// manifest store.
struct ConfigValidators {
    std::function<bool(const std::string&)> baseline_known;
    std::function<bool(const std::string&)> dataset_known;
};

namespace detail {

inline void check_config_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                              const std::string& where) {
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        require(allowed.count(key), "unknown key '", key, "' in ", where,
                " (strict config parsing)");
    }
}

inline std::vector<std::uint64_t> positive_list(const YAML::Node& node, const char* what) {
    std::vector<std::uint64_t> out;
    for (const auto& v : node) {
        const std::int64_t value = v.as<std::int64_t>();
        require(value > 0, what, " entries must be positive, got ", value);
        out.push_back(static_cast<std::uint64_t>(value));
    }
    return out;
}

inline RunSpec spec_from_defaults(const RunDefaults& d) {
    RunSpec spec;
    spec.generator = d.generator;
    spec.accumulator = d.accumulator;
    spec.polarity = d.polarity;
    spec.downsample = d.downsample;
    spec.sparse_pixels = d.sparse_pixels;
    spec.metric = d.metric;
    spec.filter_time_us = d.filter_time_sec * 1000000ull;
    spec.tolerance_places = d.ground_truth_tolerance_places;
    spec.seed = d.seed;
    return spec;
}

}  // namespace detail

// Parses the YAML config: global defaults plus the batch_experiments block.
// Each batch entry expands to the cartesian product queries x parameters x
// baselines, ordered (entry, query, parameter, baseline).
inline Config parse_config(const std::filesystem::path& path, const ConfigValidators& validators) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        fail("cannot parse config ", path.string(), ": ", e.what());
    }
    detail::check_config_keys(
        root,
        {"frame_generator", "reconstruction_model", "frame_accumulator", "timewindows",
         "num_events", "filter_time_sec", "ground_truth_tolerance", "polarity", "downsample",
         "sparse_pixels", "metric", "out_dir", "datasets_dir", "seed", "jobs",
         "batch_experiments", "wta"},
        "config " + path.string());

    Config config;
    RunDefaults& d = config.defaults;
    if (root["frame_generator"])
        d.generator = generator_from_string(root["frame_generator"].as<std::string>());
    if (root["reconstruction_model"])
        d.reconstruction_model = root["reconstruction_model"].as<std::string>();
    if (root["frame_accumulator"])
        d.accumulator = accumulator_from_string(root["frame_accumulator"].as<std::string>());
    if (root["timewindows"]) d.timewindows_ms = detail::positive_list(root["timewindows"], "timewindows");
    if (root["num_events"]) d.num_events = detail::positive_list(root["num_events"], "num_events");
    if (root["filter_time_sec"]) d.filter_time_sec = root["filter_time_sec"].as<std::uint64_t>();
    if (root["ground_truth_tolerance"])
        d.ground_truth_tolerance_places = root["ground_truth_tolerance"].as<std::uint64_t>();
    if (root["polarity"]) d.polarity = polarity_from_string(root["polarity"].as<std::string>());
    if (root["downsample"]) {
        d.downsample = root["downsample"].as<std::uint32_t>();
        require(d.downsample >= 1, "downsample must be >= 1");
    }
    if (root["sparse_pixels"]) {
        d.sparse_pixels = root["sparse_pixels"].as<std::size_t>();
        require(d.sparse_pixels >= 1, "sparse_pixels must be >= 1");
    }
    if (root["metric"]) d.metric = metric_from_string(root["metric"].as<std::string>());
    if (root["out_dir"]) d.out_dir = root["out_dir"].as<std::string>();
    if (root["datasets_dir"]) d.datasets_dir = root["datasets_dir"].as<std::string>();
    if (root["seed"]) d.seed = root["seed"].as<std::uint64_t>();
    if (root["jobs"]) {
        d.jobs = root["jobs"].as<unsigned>();
        require(d.jobs >= 1, "jobs must be >= 1");
    }

    if (root["batch_experiments"]) {
        require(root["batch_experiments"].IsSequence(), "batch_experiments must be a list");
        std::size_t entry_no = 0;
        for (const auto& entry : root["batch_experiments"]) {
            ++entry_no;
            const std::string where =
                "batch_experiments entry " + std::to_string(entry_no) + " of " + path.string();
            detail::check_config_keys(entry,
                                      {"dataset", "reference", "queries", "num_events",
                                       "timewindows", "frame_generator", "frame_accumulator",
                                       "baselines"},
                                      where);
            require(entry["dataset"] && entry["reference"] && entry["queries"] &&
                        entry["baselines"],
                    where, " needs dataset, reference, queries, baselines");
            const std::string dataset = entry["dataset"].as<std::string>();
            require(validators.dataset_known(dataset), where, ": unknown dataset '", dataset,
                    "'");
            const std::string reference = entry["reference"].as<std::string>();
            const auto queries = entry["queries"].as<std::vector<std::string>>();
            const auto baselines = entry["baselines"].as<std::vector<std::string>>();
            for (const std::string& b : baselines)
                require(validators.baseline_known(b), where, ": unknown baseline '", b, "'");

            const GeneratorKind generator =
                entry["frame_generator"]
                    ? generator_from_string(entry["frame_generator"].as<std::string>())
                    : d.generator;
            const AccumulatorMode accumulator =
                entry["frame_accumulator"]
                    ? accumulator_from_string(entry["frame_accumulator"].as<std::string>())
                    : d.accumulator;
            std::vector<std::uint64_t> parameters;
            if (accumulator == AccumulatorMode::fixed_count)
                parameters = entry["num_events"]
                                 ? detail::positive_list(entry["num_events"], "num_events")
                                 : d.num_events;
            else
                parameters = entry["timewindows"]
                                 ? detail::positive_list(entry["timewindows"], "timewindows")
                                 : d.timewindows_ms;
            require(!queries.empty() && !parameters.empty() && !baselines.empty(), where,
                    " expands to zero runs");

            for (const std::string& query : queries) {
                for (std::uint64_t parameter : parameters) {
                    for (const std::string& baseline : baselines) {
                        RunSpec spec = detail::spec_from_defaults(d);
                        spec.baseline = baseline;
                        spec.dataset = dataset;
                        spec.reference = reference;
                        spec.query = query;
                        spec.generator = generator;
                        spec.accumulator = accumulator;
                        spec.parameter = accumulator == AccumulatorMode::fixed_window
                                             ? parameter * 1000  // ms -> us
                                             : parameter;
                        config.batch.push_back(std::move(spec));
                    }
                }
            }
        }
    }

    if (root["wta"]) {
        const YAML::Node& node = root["wta"];
        detail::check_config_keys(node,
                                  {"dataset", "reference", "query", "baseline",
                                   "frame_accumulator", "small", "large", "thresholds"},
                                  "wta block of " + path.string());
        require(node["dataset"] && node["reference"] && node["query"],
                "wta block needs dataset, reference, query");
        WtaJob job;
        job.dataset = node["dataset"].as<std::string>();
        require(validators.dataset_known(job.dataset), "wta block: unknown dataset '",
                job.dataset, "'");
        job.reference = node["reference"].as<std::string>();
        job.query = node["query"].as<std::string>();
        if (node["baseline"]) job.baseline = node["baseline"].as<std::string>();
        require(validators.baseline_known(job.baseline), "wta block: unknown baseline '",
                job.baseline, "'");
        if (node["frame_accumulator"])
            job.accumulator = accumulator_from_string(node["frame_accumulator"].as<std::string>());
        if (node["small"]) job.small_parameter = node["small"].as<std::uint64_t>();
        if (node["large"]) job.large_parameter = node["large"].as<std::uint64_t>();
        require(job.small_parameter >= 1 && job.large_parameter > job.small_parameter,
                "wta block needs small >= 1 and large > small");
        require(job.large_parameter % job.small_parameter == 0,
                "wta bin ratio must be an integer: large ", job.large_parameter,
                " is not a multiple of small ", job.small_parameter);
        if (node["thresholds"]) {
            job.thresholds = node["thresholds"].as<std::vector<double>>();
            for (double t : job.thresholds)
                require(t >= 0.0 && t <= 1.0, "wta thresholds must lie in [0, 1]");
        }
        config.wta = std::move(job);
    }
    return config;
}

}  // namespace eventlab
