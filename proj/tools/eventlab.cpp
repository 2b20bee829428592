// eventlab: event-camera localization benchmark harness.
//
//   eventlab <baseline> <dataset> <reference> <query> [options]   single run
//   eventlab batch --config config.yaml                           batch runs
//   eventlab wta --config config.yaml                             cross-window analysis
//   eventlab slam-eval --gt gt.csv --est t1.csv [--est t2.csv...] trajectory scoring
//   eventlab synth --out seq.txt [...]                            fixture generator

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "eventlab/config.hpp"
#include "eventlab/csv.hpp"
#include "eventlab/event_io.hpp"
#include "eventlab/manifest.hpp"
#include "eventlab/runner.hpp"
#include "eventlab/slam_eval.hpp"
#include "eventlab/synth.hpp"
#include "eventlab/trajectory.hpp"

using namespace eventlab;

namespace {

Config load_config_or_defaults(const std::string& path, const BaselineRegistry& registry,
                               const std::string& datasets_dir_override) {
    Config config;
    if (!path.empty()) {
        // validate names against the datasets directory the run will use
        ManifestStore probe(datasets_dir_override.empty() ? "datasets" : datasets_dir_override);
        ConfigValidators validators{
            [&registry](const std::string& n) { return registry.contains(n); },
            [&probe](const std::string& n) { return probe.has(n); }};
        config = parse_config(path, validators);
    }
    if (!datasets_dir_override.empty()) config.defaults.datasets_dir = datasets_dir_override;
    return config;
}

void print_outcome(const RunOutcome& outcome) {
    if (!outcome.error.empty()) {
        std::cerr << "run failed: " << outcome.error << "\n";
        return;
    }
    const EvalReport& r = *outcome.report;
    std::printf("%s %s %s->%s %s=%llu\n", outcome.spec.baseline.c_str(),
                outcome.spec.dataset.c_str(), outcome.spec.reference.c_str(),
                outcome.spec.query.c_str(), accumulator_name(outcome.spec.accumulator),
                static_cast<unsigned long long>(outcome.spec.parameter));
    for (const auto& [k, v] : r.recall_at) std::printf("  recall@%-2d = %.4f\n", k, v);
    std::printf("  pr-auc    = %.4f\n", r.auc);
    std::printf("  gtp       = %zu / %zu queries", r.gtp, r.queries_total);
    if (r.queries_without_gt > 0)
        std::printf("  (%zu without ground truth)", r.queries_without_gt);
    std::printf("\n  runtime   = %.0f ms\n", outcome.runtime_ms);
}

int run_single_command(const std::string& baseline, const std::string& dataset,
                       const std::string& reference, const std::string& query,
                       const Config& config, std::optional<std::uint64_t> num_events,
                       std::optional<std::uint64_t> timewindow_ms, const RunSpec& overrides,
                       bool export_frames, const std::string& out_dir) {
    const RunDefaults& d = config.defaults;
    RunSpec spec = detail::spec_from_defaults(d);
    spec.baseline = baseline;
    spec.dataset = dataset;
    spec.reference = reference;
    spec.query = query;
    spec.generator = overrides.generator;
    spec.polarity = overrides.polarity;
    spec.downsample = overrides.downsample;
    spec.sparse_pixels = overrides.sparse_pixels;
    spec.metric = overrides.metric;
    spec.seed = overrides.seed;
    if (overrides.filter_time_us > 0) spec.filter_time_us = overrides.filter_time_us;
    if (overrides.tolerance_places) spec.tolerance_places = overrides.tolerance_places;
    spec.export_frames = export_frames;
    spec.dump_distances = overrides.dump_distances;
    if (num_events) {
        spec.accumulator = AccumulatorMode::fixed_count;
        spec.parameter = *num_events;
    } else if (timewindow_ms) {
        spec.accumulator = AccumulatorMode::fixed_window;
        spec.parameter = *timewindow_ms * 1000;
    } else {
        spec.accumulator = d.accumulator;
        spec.parameter = d.accumulator == AccumulatorMode::fixed_count
                             ? d.num_events.at(0)
                             : d.timewindows_ms.at(0) * 1000;
    }

    RunContext ctx(d);
    if (!out_dir.empty()) ctx.out_dir = out_dir;
    RunOutcome outcome = run_single(spec, ctx);
    const auto report_path = record_outcome(outcome, ctx);
    print_outcome(outcome);
    if (outcome.error.empty()) std::printf("  report    = %s\n", report_path.c_str());
    return outcome.error.empty() ? 0 : 1;
}

int run_batch_command(const Config& config, const std::string& out_dir, unsigned jobs) {
    RunContext ctx(config.defaults);
    if (!out_dir.empty()) ctx.out_dir = out_dir;
    const unsigned workers = jobs > 0 ? jobs : config.defaults.jobs;
    BatchResult result = run_batch(config.batch, ctx, workers);
    std::printf("batch: %zu runs, %zu failed\n", result.outcomes.size(), result.failures);
    std::printf("results: %s\n", (ctx.out_dir / "results.csv").c_str());
    std::printf("summary: %s\n", (ctx.out_dir / "summary.csv").c_str());
    for (const RunOutcome& o : result.outcomes)
        if (!o.error.empty())
            std::fprintf(stderr, "failed: %s %s %s->%s: %s\n", o.spec.baseline.c_str(),
                         o.spec.dataset.c_str(), o.spec.reference.c_str(), o.spec.query.c_str(),
                         o.error.c_str());
    return result.failures == 0 ? 0 : 1;
}

int run_wta_command(const Config& config, const std::string& out_dir) {
    require(config.wta.has_value(), "the config file has no wta block");
    RunContext ctx(config.defaults);
    if (!out_dir.empty()) ctx.out_dir = out_dir;
    auto rows = run_wta(*config.wta, config.defaults, ctx);
    std::printf("%s\n", kWtaCsvHeader.c_str());
    for (const WtaSweepRow& row : rows)
        std::printf("%.2f,%.4f,%.4f,%.4f,%zu\n", row.threshold, row.raw_recall1,
                    row.adjusted_recall1, row.large_recall1, row.bins_upgraded);
    std::printf("table: %s\n", (ctx.out_dir / "wta_sweep.csv").c_str());
    return 0;
}

int run_slam_eval(const std::string& gt_path, const std::vector<std::string>& est_paths,
                  std::uint64_t max_dt_ms, const std::string& scene, const std::string& method,
                  const std::string& out_file) {
    Trajectory gt = load_trajectory_csv(gt_path);
    std::vector<Trajectory> trials;
    for (const auto& p : est_paths) trials.push_back(load_trajectory_csv(p));
    TrialsResult result = eval_trials(trials, gt, max_dt_ms * 1000);

    const std::string header = "scene,method,trial,rmse_ate_cm,accuracy_inv_cm,pairs";
    std::printf("%s\n", header.c_str());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        const TrajectoryEval& t = result.trials[i];
        rows.push_back({scene, method, std::to_string(i + 1), format_double(t.rmse_cm),
                        t.accuracy ? format_double(*t.accuracy) : "perfect",
                        std::to_string(t.pairs)});
        std::printf("%s,%s,%zu,%.4f,%s,%zu\n", scene.c_str(), method.c_str(), i + 1, t.rmse_cm,
                    t.accuracy ? format_double(*t.accuracy).c_str() : "perfect", t.pairs);
    }
    const TrialSummary& s = result.summary;
    std::printf("summary: min=%.4f q1=%.4f median=%.4f q3=%.4f max=%.4f (cm)\n", s.min, s.q1,
                s.median, s.q3, s.max);
    rows.push_back({scene, method, "summary", format_double(s.median),
                    s.median > kPerfectRmseCm ? format_double(1.0 / s.median) : "perfect",
                    std::to_string(result.trials.size())});
    if (!out_file.empty())
        for (const auto& row : rows) append_csv_row(out_file, header, row);
    return 0;
}

int run_synth_command(const std::string& out, const std::string& format, const SynthSpec& spec) {
    EventStream stream = synth_traverse(spec);
    save_events(stream, out, event_format_from_string(format));
    std::printf("wrote %zu events to %s (%ux%u, %.2f s)\n", stream.events.size(), out.c_str(),
                spec.width, spec.height, spec.duration_us / 1e6);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-camera localization benchmark harness"};
    app.require_subcommand(0, 1);

    std::string baseline, dataset, reference, query;
    app.add_option("baseline", baseline, "Baseline method (dense_sad, sparse_event, ...)");
    app.add_option("dataset", dataset, "Dataset name (built-in or datasets/<name>.yaml)");
    app.add_option("reference", reference, "Reference sequence");
    app.add_option("query", query, "Query sequence");

    std::string config_path, out_dir, datasets_dir;
    std::optional<std::uint64_t> num_events, timewindow_ms;
    RunSpec overrides;
    std::string generator = "frames", polarity = "summed", metric = "sad";
    std::uint64_t filter_time_sec = 0, gt_tolerance_places = 0;
    bool export_frames = false, dump_distances = false;
    unsigned jobs = 0;
    app.add_option("--config", config_path, "YAML config with defaults");
    auto* num_events_opt =
        app.add_option("--num-events", num_events, "Events per frame (eventcount accumulator)");
    app.add_option("--timewindow", timewindow_ms, "Window length in ms (timewindow accumulator)")
        ->excludes(num_events_opt);
    app.add_option("--generator", generator, "frames | reconstruction-import");
    app.add_option("--polarity", polarity, "summed | two_channel");
    app.add_option("--downsample", overrides.downsample, "Dense descriptor pooling factor");
    app.add_option("--sparse-pixels", overrides.sparse_pixels, "Sparse baseline pixel count");
    app.add_option("--metric", metric, "sad | l2 | cosine");
    app.add_option("--filter-time-sec", filter_time_sec, "Keep one frame per period");
    app.add_option("--gt-tolerance", gt_tolerance_places, "Ground-truth tolerance in places");
    app.add_option("--out", out_dir, "Output directory (default: results)");
    app.add_option("--seed", overrides.seed, "Run seed, recorded in outputs");
    app.add_option("--jobs", jobs, "Parallel runs for batches");
    app.add_option("--datasets", datasets_dir, "Dataset manifest directory (default: datasets)");
    app.add_flag("--export-frames", export_frames, "Write frame directories next to results");
    app.add_flag("--dump-distances", dump_distances,
                 "Write the distance matrix as a PGM image with a JSON sidecar");

    CLI::App* batch_cmd = app.add_subcommand("batch", "Run every experiment in the config");
    batch_cmd->fallthrough();
    std::string batch_config;
    batch_cmd->add_option("--config", batch_config, "YAML config with batch_experiments")
        ->required();

    CLI::App* wta_cmd = app.add_subcommand("wta", "Winner-takes-all cross-window analysis");
    wta_cmd->fallthrough();
    std::string wta_config;
    wta_cmd->add_option("--config", wta_config, "YAML config with a wta block")->required();

    CLI::App* slam_cmd = app.add_subcommand("slam-eval", "Score SLAM trajectories (RMSE-ATE)");
    slam_cmd->fallthrough();
    std::string slam_gt, slam_scene = "scene", slam_method = "method", slam_out;
    std::vector<std::string> slam_est;
    std::uint64_t max_dt_ms = 10;
    slam_cmd->add_option("--gt", slam_gt, "Ground-truth trajectory CSV")->required();
    slam_cmd->add_option("--est", slam_est, "Estimated trajectory CSV (repeat per trial)")
        ->required();
    slam_cmd->add_option("--max-dt-ms", max_dt_ms, "Association tolerance (default 10 ms)");
    slam_cmd->add_option("--scene", slam_scene, "Scene label for the output rows");
    slam_cmd->add_option("--method", slam_method, "Method label for the output rows");
    slam_cmd->add_option("--out", slam_out, "Append rows to this CSV");

    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic traverse fixture");
    synth_cmd->fallthrough();
    std::string synth_out, synth_format = "text", synth_speed;
    SynthSpec synth_spec;
    synth_spec.duration_us = 4000000;
    synth_spec.mean_rate_hz = 100000;
    synth_spec.width = 128;
    synth_spec.height = 96;
    double synth_duration_s = 4.0;
    synth_cmd->add_option("--out", synth_out, "Output event file")->required();
    synth_cmd->add_option("--format", synth_format, "text | evb");
    synth_cmd->add_option("--seed", synth_spec.seed, "Event noise seed");
    synth_cmd->add_option("--duration-s", synth_duration_s, "Traverse duration in seconds");
    synth_cmd->add_option("--rate", synth_spec.mean_rate_hz, "Mean events per second");
    synth_cmd->add_option("--width", synth_spec.width, "Sensor width");
    synth_cmd->add_option("--height", synth_spec.height, "Sensor height");
    synth_cmd->add_option("--texture-seed", synth_spec.scene.texture_seed, "Scene texture seed");
    synth_cmd->add_option("--route-px", synth_spec.scene.route_length_px,
                          "Route length in pixels");
    synth_cmd->add_option("--speed", synth_speed,
                          "Comma-separated speed multipliers (equal time segments)");

    CLI11_PARSE(app, argc, argv);

    try {
        BaselineRegistry registry = BaselineRegistry::with_builtins();
        if (batch_cmd->parsed()) {
            Config config = load_config_or_defaults(batch_config, registry, datasets_dir);
            return run_batch_command(config, out_dir, jobs);
        }
        if (wta_cmd->parsed()) {
            Config config = load_config_or_defaults(wta_config, registry, datasets_dir);
            return run_wta_command(config, out_dir);
        }
        if (slam_cmd->parsed())
            return run_slam_eval(slam_gt, slam_est, max_dt_ms, slam_scene, slam_method, slam_out);
        if (synth_cmd->parsed()) {
            synth_spec.duration_us = static_cast<std::uint64_t>(synth_duration_s * 1e6);
            if (!synth_speed.empty()) {
                synth_spec.speed.multipliers.clear();
                std::stringstream ss(synth_speed);
                std::string part;
                while (std::getline(ss, part, ','))
                    synth_spec.speed.multipliers.push_back(std::stod(part));
            }
            return run_synth_command(synth_out, synth_format, synth_spec);
        }

        if (baseline.empty() || dataset.empty() || reference.empty() || query.empty()) {
            std::cerr << "usage: eventlab <baseline> <dataset> <reference> <query> [options]\n"
                         "       eventlab batch|wta|slam-eval|synth --help\n";
            return 2;
        }
        Config config = load_config_or_defaults(config_path, registry, datasets_dir);
        overrides.generator = generator_from_string(generator);
        overrides.polarity = polarity_from_string(polarity);
        overrides.metric = metric_from_string(metric);
        overrides.filter_time_us = filter_time_sec * 1000000ull;
        if (gt_tolerance_places > 0) overrides.tolerance_places = gt_tolerance_places;
        overrides.dump_distances = dump_distances;
        return run_single_command(baseline, dataset, reference, query, config, num_events,
                                  timewindow_ms, overrides, export_frames, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
