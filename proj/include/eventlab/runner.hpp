#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "eventlab/baselines.hpp"
#include "eventlab/config.hpp"
#include "eventlab/csv.hpp"
#include "eventlab/frame_io.hpp"
#include "eventlab/frames.hpp"
#include "eventlab/ground_truth.hpp"
#include "eventlab/manifest.hpp"
#include "eventlab/metrics.hpp"
#include "eventlab/viz.hpp"
#include "eventlab/wta.hpp"

namespace eventlab {

struct RunContext {
    ManifestStore manifests;
    BaselineRegistry registry = BaselineRegistry::with_builtins();
    std::filesystem::path out_dir = "results";
    std::filesystem::path cache = cache_root();

    explicit RunContext(const RunDefaults& defaults)
        : manifests(defaults.datasets_dir), out_dir(defaults.out_dir) {}
    RunContext() : manifests("datasets") {}
};

struct RunOutcome {
    RunSpec spec;
    std::optional<EvalReport> report;
    std::string error;  // empty on success; stage-tagged otherwise
    double runtime_ms = 0.0;
};

inline const std::string kResultsCsvHeader =
    "baseline,dataset,reference,query,generator,accumulator,parameter,recall_at_1,"
    "recall_at_5,recall_at_10,pr_auc,gtp,queries_total,runtime_ms,seed";

namespace detail {

template <typename Fn>
decltype(auto) stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        fail("[", name, "] ", e.what());
    }
}

inline std::filesystem::path frames_dir(const std::filesystem::path& out_dir,
                                        const RunSpec& spec, const std::string& sequence) {
    return out_dir / "frames" / spec.dataset / sequence /
           (std::string(accumulator_name(spec.accumulator)) + "_" +
            std::to_string(spec.parameter));
}

// Median gap between consecutive place centers; the spacing unit behind
// tolerances given in places.
inline std::uint64_t place_spacing_us(const PlaceIndex& idx, const FrameStack& st) {
    if (idx.items.size() < 2) {
        const Frame& f = st.frames.at(idx.items.at(0).frame_index);
        return std::max<std::uint64_t>(1, f.t_end - f.t_begin);
    }
    std::vector<std::uint64_t> gaps;
    gaps.reserve(idx.items.size() - 1);
    for (std::size_t i = 1; i < idx.items.size(); ++i)
        gaps.push_back(idx.items[i].t_center_us - idx.items[i - 1].t_center_us);
    std::sort(gaps.begin(), gaps.end());
    return gaps[gaps.size() / 2];
}

inline PositionTrack synth_track(const SynthSpec& spec) {
    PositionTrack track;
    track.kind = CoordKind::planar;
    const std::uint64_t step = std::max<std::uint64_t>(1, spec.duration_us / 400);
    for (std::uint64_t t = 0; t <= spec.duration_us; t += step)
        track.points.push_back({t, synth_position_px(spec, t), 0.0});
    return track;
}

inline GroundTruthMatrix build_ground_truth(const DatasetManifest& manifest, const RunSpec& spec,
                                            const FrameStack& ref_stack,
                                            const FrameStack& qry_stack) {
    const std::int64_t ref_offset = manifest.sequence(spec.reference).clock_offset_us;
    const std::int64_t qry_offset = manifest.sequence(spec.query).clock_offset_us;
    PlaceIndex ref = place_index_from_stack(ref_stack, ref_offset);
    PlaceIndex qry = place_index_from_stack(qry_stack, qry_offset);

    if (manifest.gt_source == GtSource::time) {
        std::uint64_t tolerance_us = 0;
        if (spec.tolerance_places) {
            tolerance_us =
                gt_tolerance_in_places(*spec.tolerance_places, place_spacing_us(ref, ref_stack));
        } else if (manifest.tolerance_ms) {
            tolerance_us = *manifest.tolerance_ms * 1000;
        } else if (manifest.tolerance_places) {
            tolerance_us = gt_tolerance_in_places(*manifest.tolerance_places,
                                                  place_spacing_us(ref, ref_stack));
        } else {
            fail("dataset '", manifest.name,
                 "' declares no time tolerance and the config gives none");
        }
        return build_gt_time(ref, qry, tolerance_us);
    }

    // gps / odometry: positions attached from tracks (or the synth route)
    auto attach = [&](PlaceIndex& idx, const std::string& sequence) {
        const SequenceSpec& seq = manifest.sequence(sequence);
        if (!seq.position_track.empty()) {
            std::filesystem::path p = seq.position_track;
            if (p.is_relative()) p = manifest.base_dir / p;
            attach_positions(idx, load_track_csv(p));
        } else if (seq.synth) {
            attach_positions(idx, synth_track(*seq.synth));
        } else {
            fail("sequence '", sequence, "' has no position track for ",
                 to_string(manifest.gt_source), " ground truth");
        }
    };
    attach(ref, spec.reference);
    attach(qry, spec.query);
    require(manifest.tolerance_m.has_value(), "dataset '", manifest.name,
            "' needs tolerance_m for positional ground truth");
    return build_gt_position(ref, qry, *manifest.tolerance_m, manifest.filters);
}

inline std::pair<FrameStack, FrameStack> make_stacks(const DatasetManifest& manifest,
                                                     const RunSpec& spec,
                                                     const RunContext& ctx) {
    if (spec.generator == GeneratorKind::reconstruction_import) {
        return stage("import", [&] {
            const auto ref_dir = frames_dir(ctx.out_dir, spec, spec.reference);
            const auto qry_dir = frames_dir(ctx.out_dir, spec, spec.query);
            return std::make_pair(import_frames(ref_dir), import_frames(qry_dir));
        });
    }
    EventStream ref_stream, qry_stream;
    stage("resolve", [&] {
        ref_stream = resolve_dataset(manifest, spec.reference, ctx.cache);
        qry_stream = resolve_dataset(manifest, spec.query, ctx.cache);
        return 0;
    });
    return stage("frames", [&] {
        if (spec.accumulator == AccumulatorMode::fixed_count)
            return generate_matched(ref_stream, qry_stream, spec.parameter, spec.polarity);
        return std::make_pair(generate_fixed_window(ref_stream, spec.parameter, spec.polarity),
                              generate_fixed_window(qry_stream, spec.parameter, spec.polarity));
    });
}

}  // namespace detail

// JSON report with deterministic bytes: object keys are sorted and no timing
// or host information is included.
inline nlohmann::json report_json(const RunOutcome& outcome) {
    const RunSpec& spec = outcome.spec;
    nlohmann::json j;
    j["baseline"] = spec.baseline;
    j["dataset"] = spec.dataset;
    j["reference"] = spec.reference;
    j["query"] = spec.query;
    j["generator"] = to_string(spec.generator);
    j["accumulator"] = accumulator_name(spec.accumulator);
    j["parameter"] = spec.parameter;
    j["polarity_mode"] = to_string(spec.polarity);
    j["metric"] = to_string(spec.metric);
    j["downsample"] = spec.downsample;
    j["sparse_pixels"] = spec.sparse_pixels;
    j["filter_time_us"] = spec.filter_time_us;
    j["seed"] = spec.seed;
    if (!outcome.error.empty()) {
        j["status"] = "failed";
        j["error"] = outcome.error;
        return j;
    }
    const EvalReport& report = *outcome.report;
    j["status"] = "ok";
    nlohmann::json recall;
    for (const auto& [k, v] : report.recall_at) recall["recall_at_" + std::to_string(k)] = v;
    j["recall"] = recall;
    j["pr_auc"] = report.auc;
    j["gtp"] = report.gtp;
    j["queries_total"] = report.queries_total;
    j["queries_without_gt"] = report.queries_without_gt;
    nlohmann::json curve = nlohmann::json::array();
    for (const PrPoint& p : report.curve.points) {
        nlohmann::json point;
        point["threshold"] =
            std::isfinite(p.threshold) ? nlohmann::json(p.threshold) : nlohmann::json();
        point["recall"] = p.recall;
        point["precision"] = p.precision;
        point["tp"] = p.tp;
        point["fp"] = p.fp;
        curve.push_back(point);
    }
    j["pr_curve"] = curve;
    return j;
}

inline std::string report_file_name(const RunSpec& spec) {
    return spec.baseline + "_" + spec.dataset + "_" + spec.reference + "_" + spec.query + "_" +
           accumulator_name(spec.accumulator) + std::to_string(spec.parameter) + "_seed" +
           std::to_string(spec.seed) + ".json";
}

inline std::vector<std::string> csv_row(const RunOutcome& outcome) {
    const RunSpec& spec = outcome.spec;
    std::vector<std::string> row{spec.baseline,
                                 spec.dataset,
                                 spec.reference,
                                 spec.query,
                                 to_string(spec.generator),
                                 accumulator_name(spec.accumulator),
                                 std::to_string(spec.parameter)};
    if (outcome.report) {
        const EvalReport& r = *outcome.report;
        row.push_back(format_double(r.recall_at.at(1)));
        row.push_back(format_double(r.recall_at.at(5)));
        row.push_back(format_double(r.recall_at.at(10)));
        row.push_back(format_double(r.auc));
        row.push_back(std::to_string(r.gtp));
        row.push_back(std::to_string(r.queries_total));
    } else {
        for (int i = 0; i < 6; ++i) row.emplace_back();
    }
    row.push_back(format_double(outcome.runtime_ms));
    row.push_back(std::to_string(spec.seed));
    return row;
}

// Executes one run end to end: resolve -> frames -> ground truth -> describe
// -> distance -> metrics. Throws on failure with a stage-tagged message.
inline RunOutcome run_single_or_throw(const RunSpec& spec, RunContext& ctx) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome outcome;
    outcome.spec = spec;

    const DatasetManifest& manifest =
        detail::stage("resolve", [&]() -> const DatasetManifest& {
            require(ctx.registry.contains(spec.baseline), "unknown baseline '", spec.baseline,
                    "'");
            return ctx.manifests.get(spec.dataset);
        });

    auto [ref_stack, qry_stack] = detail::make_stacks(manifest, spec, ctx);

    if (spec.filter_time_us > 0) {
        ref_stack = subsample_by_time(ref_stack, spec.filter_time_us);
        qry_stack = subsample_by_time(qry_stack, spec.filter_time_us);
    }
    require(!ref_stack.frames.empty() && !qry_stack.frames.empty(),
            "[frames] no frames to evaluate (reference ", ref_stack.frames.size(), ", query ",
            qry_stack.frames.size(), ")");

    if (spec.export_frames && spec.generator == GeneratorKind::frames) {
        detail::stage("export", [&] {
            export_frames(ref_stack, detail::frames_dir(ctx.out_dir, spec, spec.reference));
            export_frames(qry_stack, detail::frames_dir(ctx.out_dir, spec, spec.query));
            return 0;
        });
    }

    GroundTruthMatrix gt = detail::stage(
        "ground-truth", [&] { return detail::build_ground_truth(manifest, spec, ref_stack, qry_stack); });
    detail::stage("ground-truth", [&] {
        // persisted next to the results so every run's matches are auditable
        std::filesystem::create_directories(ctx.out_dir / "gt");
        const std::string base = report_file_name(spec);
        save_gt(gt, ctx.out_dir / "gt" / (base.substr(0, base.size() - 5) + ".gtb"),
                place_index_from_stack(ref_stack), place_index_from_stack(qry_stack));
        return 0;
    });

    BaselineParams params{spec.downsample, spec.sparse_pixels, spec.seed};
    std::vector<Descriptor> ref_desc, qry_desc;
    detail::stage("describe", [&] {
        Describer describer = ctx.registry.make(spec.baseline, ref_stack, params);
        ref_desc = describer(ref_stack);
        qry_desc = describer(qry_stack);
        return 0;
    });

    DistanceMatrix d = detail::stage(
        "distance", [&] { return distance_matrix(ref_desc, qry_desc, spec.metric); });
    if (spec.dump_distances) {
        detail::stage("distance", [&] {
            std::filesystem::create_directories(ctx.out_dir / "distances");
            save_distance_matrix(d, ctx.out_dir / "distances" /
                                        (report_file_name(spec).substr(
                                             0, report_file_name(spec).size() - 5) +
                                         ".pgm"));
            return 0;
        });
    }
    outcome.report = detail::stage("metrics", [&] { return evaluate(d, gt); });

    outcome.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return outcome;
}

// Non-throwing wrapper: failures land in outcome.error (stage-tagged).
inline RunOutcome run_single(const RunSpec& spec, RunContext& ctx) {
    try {
        return run_single_or_throw(spec, ctx);
    } catch (const std::exception& e) {
        RunOutcome outcome;
        outcome.spec = spec;
        outcome.error = e.what();
        return outcome;
    }
}

// Appends the combined-CSV row and writes the JSON report; returns the
// report path.
inline std::filesystem::path record_outcome(const RunOutcome& outcome, const RunContext& ctx) {
    std::filesystem::create_directories(ctx.out_dir / "reports");
    append_csv_row(ctx.out_dir / "results.csv", kResultsCsvHeader, csv_row(outcome));
    const auto path = ctx.out_dir / "reports" / report_file_name(outcome.spec);
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    require(out.good(), "cannot write report ", path.string());
    out << report_json(outcome).dump(2) << "\n";
    return path;
}

struct BatchResult {
    std::vector<RunOutcome> outcomes;  // in RunSpec order
    std::size_t failures = 0;
};

// Runs every spec (optionally across worker threads), appends CSV rows and
// reports as runs finish, then writes the per-(baseline, dataset) summary
// with mean Recall@K / PR-AUC across parameters.
inline BatchResult run_batch(const std::vector<RunSpec>& specs, RunContext& ctx,
                             unsigned jobs = 1) {
    std::filesystem::create_directories(ctx.out_dir);
    // an empty batch still leaves a header-only results file
    ensure_csv_header(ctx.out_dir / "results.csv", kResultsCsvHeader);
    BatchResult result;
    result.outcomes.resize(specs.size());

    std::atomic<std::size_t> next{0};
    std::mutex record_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            RunOutcome outcome = run_single(specs[i], ctx);
            {
                std::lock_guard<std::mutex> lock(record_mutex);
                record_outcome(outcome, ctx);
            }
            result.outcomes[i] = std::move(outcome);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // summary grouped by (baseline, dataset)
    struct Group {
        std::size_t runs = 0;
        double r1 = 0, r5 = 0, r10 = 0, auc = 0;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;
    for (const RunOutcome& o : result.outcomes) {
        if (!o.report) {
            ++result.failures;
            continue;
        }
        Group& g = groups[{o.spec.baseline, o.spec.dataset}];
        ++g.runs;
        g.r1 += o.report->recall_at.at(1);
        g.r5 += o.report->recall_at.at(5);
        g.r10 += o.report->recall_at.at(10);
        g.auc += o.report->auc;
    }
    std::ofstream summary(ctx.out_dir / "summary.csv", std::ios::trunc);
    require(summary.good(), "cannot write ", (ctx.out_dir / "summary.csv").string());
    summary << "baseline,dataset,runs,mean_recall_at_1,mean_recall_at_5,mean_recall_at_10,"
               "mean_pr_auc\n";
    for (const auto& [key, g] : groups) {
        summary << key.first << "," << key.second << "," << g.runs << ","
                << format_double(g.r1 / double(g.runs)) << ","
                << format_double(g.r5 / double(g.runs)) << ","
                << format_double(g.r10 / double(g.runs)) << ","
                << format_double(g.auc / double(g.runs)) << "\n";
    }
    return result;
}

inline const std::string kWtaCsvHeader =
    "threshold,raw_recall1,adjusted_recall1,large_recall1,bins_upgraded";

// The cross-window equivalence pipeline: frames at the small and large scale,
// ground truth and top-1 correctness at each, then the winner-takes-all sweep.
inline std::vector<WtaSweepRow> run_wta(const WtaJob& job, const RunDefaults& defaults,
                                        RunContext& ctx) {
    const DatasetManifest& manifest = ctx.manifests.get(job.dataset);
    EventStream ref = resolve_dataset(manifest, job.reference, ctx.cache);
    EventStream qry = resolve_dataset(manifest, job.query, ctx.cache);
    const std::size_t ratio = job.large_parameter / job.small_parameter;

    auto stacks_at = [&](std::uint64_t parameter) {
        if (job.accumulator == AccumulatorMode::fixed_window) {
            const std::uint64_t window_us = parameter * 1000;
            return std::make_pair(generate_fixed_window(ref, window_us, defaults.polarity),
                                  generate_fixed_window(qry, window_us, defaults.polarity));
        }
        return generate_matched(ref, qry, parameter, defaults.polarity);
    };
    auto [ref_small, qry_small] = stacks_at(job.small_parameter);
    auto [ref_large, qry_large] = stacks_at(job.large_parameter);

    RunSpec gt_spec;  // tolerance resolution reuses the single-run rules
    gt_spec.reference = job.reference;
    gt_spec.query = job.query;
    gt_spec.tolerance_places = defaults.ground_truth_tolerance_places;
    GroundTruthMatrix gt_small =
        detail::build_ground_truth(manifest, gt_spec, ref_small, qry_small);
    GroundTruthMatrix gt_large =
        detail::build_ground_truth(manifest, gt_spec, ref_large, qry_large);

    BaselineParams params{defaults.downsample, defaults.sparse_pixels, defaults.seed};
    auto distances = [&](const FrameStack& r, const FrameStack& q) {
        Describer describer = ctx.registry.make(job.baseline, r, params);
        return distance_matrix(describer(r), describer(q), defaults.metric);
    };
    DistanceMatrix d_small = distances(ref_small, qry_small);
    DistanceMatrix d_large = distances(ref_large, qry_large);

    auto rows = wta_sweep(d_small, gt_small, d_large, gt_large, ratio, job.thresholds);

    std::filesystem::create_directories(ctx.out_dir);
    std::ofstream out(ctx.out_dir / "wta_sweep.csv", std::ios::trunc);
    require(out.good(), "cannot write ", (ctx.out_dir / "wta_sweep.csv").string());
    out << kWtaCsvHeader << "\n";
    for (const WtaSweepRow& row : rows)
        out << format_double(row.threshold) << "," << format_double(row.raw_recall1) << ","
            << format_double(row.adjusted_recall1) << "," << format_double(row.large_recall1)
            << "," << row.bins_upgraded << "\n";
    return rows;
}

}  // namespace eventlab
