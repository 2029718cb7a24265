// SPDX-License-Identifier: Apache-2.0
//
// beamlearn command-line front end. Angles on this boundary are degrees;
// everything behind it works in radians.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "beamlearn/errors.hpp"
#include "beamlearn/harness.hpp"

namespace {

using namespace beamlearn;

constexpr double kDegToRad = kPi / 180.0;

struct CommonOpts {
    std::string config_path;
    std::optional<std::size_t> array_size;
    std::optional<int> resolution_bits;
    std::optional<double> spacing;
    std::optional<double> sigma_position;
    std::optional<double> sigma_phase;
    std::optional<bool> impaired;
    std::optional<std::string> channel_file;
    std::optional<std::size_t> users;
    std::optional<std::size_t> paths;
    std::optional<std::vector<double>> aoa_sector_deg;
    std::optional<double> aoa_center_deg;
    std::optional<double> aoa_spread_deg;
    std::optional<double> dominant_fraction;
    std::optional<bool> normalize;
    std::optional<std::uint64_t> iterations;
    std::optional<std::uint64_t> geometry_seed, channel_seed, agent_seed;
    std::optional<std::string> output_dir;
    std::optional<double> stop_egc_fraction;
    std::optional<double> stop_min_gain;
    std::optional<std::size_t> steering_beams;
    std::optional<double> gamma;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> target_sync;
    std::optional<std::size_t> replay_capacity;
    std::optional<double> actor_lr;
    std::optional<double> critic_lr;
    std::optional<double> ou_theta;
    std::optional<double> ou_sigma_start;
    std::optional<double> ou_sigma_end;
    std::optional<double> ou_decay_fraction;
    std::optional<double> measurement_noise;
    std::optional<std::size_t> curve_stride;
};

void add_common_options(CLI::App* sub, CommonOpts& o) {
    sub->add_option("-c,--config", o.config_path, "experiment config JSON");
    sub->add_option("-m,--antennas", o.array_size, "number of antennas M");
    sub->add_option("-r,--resolution-bits", o.resolution_bits, "phase shifter bits");
    sub->add_option("--spacing", o.spacing, "nominal antenna spacing in wavelengths");
    sub->add_option("--sigma-position", o.sigma_position,
                    "antenna position std deviation in wavelengths");
    sub->add_option("--sigma-phase", o.sigma_phase, "phase mismatch std deviation in radians");
    sub->add_flag_callback("--impaired", [&o] { o.impaired = true; },
                           "sample an impaired geometry");
    sub->add_flag_callback("--ideal", [&o] { o.impaired = false; },
                           "force the ideal uniform geometry");
    sub->add_option("--channels", o.channel_file, "channel CSV to ingest instead of synthesizing");
    sub->add_option("--users", o.users, "number of synthetic users");
    sub->add_option("--paths", o.paths, "number of paths per user");
    sub->add_option("--aoa-sector-deg", o.aoa_sector_deg, "AoA sector [min max] in degrees")
        ->expected(2);
    sub->add_option("--aoa-center-deg", o.aoa_center_deg, "dominant-path AoA center in degrees");
    sub->add_option("--aoa-spread-deg", o.aoa_spread_deg,
                    "angular spread of the users around the center, degrees");
    sub->add_option("--dominant-fraction", o.dominant_fraction,
                    "power fraction of the dominant path (0 = iid path gains)");
    sub->add_flag_callback("--normalize", [&o] { o.normalize = true; },
                           "normalize channels to ||h||^2 = M");
    sub->add_option("-t,--iterations", o.iterations, "training iterations T");
    sub->add_option("--geometry-seed", o.geometry_seed, "geometry seed");
    sub->add_option("--channel-seed", o.channel_seed, "channel seed");
    sub->add_option("--agent-seed", o.agent_seed, "agent seed");
    sub->add_option("-o,--out", o.output_dir, "output directory");
    sub->add_option("--stop-egc-fraction", o.stop_egc_fraction,
                    "stop once best gain reaches this fraction of the EGC bound");
    sub->add_option("--stop-min-gain", o.stop_min_gain, "stop once best gain reaches this value");
    sub->add_option("--steering-beams", o.steering_beams, "beamsteering codebook size");
    sub->add_option("--gamma", o.gamma, "discount factor");
    sub->add_option("--batch-size", o.batch_size, "minibatch size B");
    sub->add_option("--target-sync", o.target_sync, "target network sync period C");
    sub->add_option("--replay-capacity", o.replay_capacity, "replay memory capacity");
    sub->add_option("--actor-lr", o.actor_lr, "actor learning rate");
    sub->add_option("--critic-lr", o.critic_lr, "critic learning rate");
    sub->add_option("--ou-theta", o.ou_theta, "OU mean-reversion rate");
    sub->add_option("--ou-sigma-start", o.ou_sigma_start, "initial OU volatility, radians");
    sub->add_option("--ou-sigma-end", o.ou_sigma_end, "final OU volatility, radians");
    sub->add_option("--ou-decay-fraction", o.ou_decay_fraction,
                    "fraction of T over which the OU volatility decays");
    sub->add_option("--measurement-noise", o.measurement_noise,
                    "std of additive Gaussian noise on the gain feedback");
    sub->add_option("--curve-stride", o.curve_stride, "curve.csv decimation stride");
}

ExperimentConfig make_config(const CommonOpts& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty())
        cfg = load_config(o.config_path);

    if (o.array_size)
        cfg.array.size = *o.array_size;
    if (o.resolution_bits)
        cfg.array.resolution_bits = *o.resolution_bits;
    if (o.spacing)
        cfg.array.spacing_wavelengths = *o.spacing;
    if (o.sigma_position)
        cfg.array.sigma_position_wavelengths = *o.sigma_position;
    if (o.sigma_phase)
        cfg.array.sigma_phase_rad = *o.sigma_phase;
    if (o.impaired)
        cfg.array.impaired = *o.impaired;
    if (o.channel_file)
        cfg.channel_file = *o.channel_file;
    if (o.users)
        cfg.channel.num_users = *o.users;
    if (o.paths)
        cfg.channel.num_paths = *o.paths;
    if (o.aoa_sector_deg) {
        cfg.channel.sector_min_rad = (*o.aoa_sector_deg)[0] * kDegToRad;
        cfg.channel.sector_max_rad = (*o.aoa_sector_deg)[1] * kDegToRad;
    }
    if (o.aoa_center_deg)
        cfg.channel.center_aoa_rad = *o.aoa_center_deg * kDegToRad;
    if (o.aoa_spread_deg)
        cfg.channel.angular_spread_rad = *o.aoa_spread_deg * kDegToRad;
    if (o.dominant_fraction)
        cfg.channel.dominant_power_fraction = *o.dominant_fraction;
    if (o.normalize)
        cfg.channel.normalize = *o.normalize;
    if (o.iterations)
        cfg.iterations = *o.iterations;
    if (o.geometry_seed)
        cfg.geometry_seed = *o.geometry_seed;
    if (o.channel_seed)
        cfg.channel_seed = *o.channel_seed;
    if (o.agent_seed)
        cfg.agent_seed = *o.agent_seed;
    if (o.output_dir)
        cfg.output_dir = *o.output_dir;
    if (o.stop_egc_fraction)
        cfg.stop.egc_fraction = *o.stop_egc_fraction;
    if (o.stop_min_gain)
        cfg.stop.min_gain = *o.stop_min_gain;
    if (o.steering_beams)
        cfg.steering_beams = *o.steering_beams;
    if (o.gamma)
        cfg.agent.gamma = *o.gamma;
    if (o.batch_size)
        cfg.agent.batch_size = *o.batch_size;
    if (o.target_sync)
        cfg.agent.target_sync_period = *o.target_sync;
    if (o.replay_capacity)
        cfg.agent.replay_capacity = *o.replay_capacity;
    if (o.actor_lr)
        cfg.agent.actor_learning_rate = *o.actor_lr;
    if (o.critic_lr)
        cfg.agent.critic_learning_rate = *o.critic_lr;
    if (o.ou_theta)
        cfg.agent.ou_theta = *o.ou_theta;
    if (o.ou_sigma_start)
        cfg.agent.ou_sigma_start = *o.ou_sigma_start;
    if (o.ou_sigma_end)
        cfg.agent.ou_sigma_end = *o.ou_sigma_end;
    if (o.ou_decay_fraction)
        cfg.agent.ou_decay_fraction = *o.ou_decay_fraction;
    if (o.measurement_noise)
        cfg.agent.measurement_noise_std = *o.measurement_noise;
    if (o.curve_stride)
        cfg.curve_stride = *o.curve_stride;

    cfg = resolve(std::move(cfg));
    validate(cfg);
    return cfg;
}

double to_db(double g) { return 10.0 * std::log10(std::max(g, 1e-30)); }

void print_baselines(const BaselineTable& b) {
    std::printf("EGC upper bound        %12.6g  (%6.2f dB)\n", b.egc_gain, to_db(b.egc_gain));
    std::printf("quantized EGC          %12.6g  (%6.2f dB, %.4f of EGC)\n",
                b.quantized_egc_gain, to_db(b.quantized_egc_gain),
                b.quantized_egc_gain / b.egc_gain);
    std::printf("best steering beam     %12.6g  (%6.2f dB, %.4f of EGC, beam %zu of %zu)\n",
                b.steering_best_gain, to_db(b.steering_best_gain),
                b.steering_best_gain / b.egc_gain, b.steering_best_index,
                b.steering_beam_count);
    if (b.exhaustive_gain)
        std::printf("exhaustive optimum     %12.6g  (%6.2f dB, %.4f of EGC)\n",
                    *b.exhaustive_gain, to_db(*b.exhaustive_gain),
                    *b.exhaustive_gain / b.egc_gain);
    else
        std::printf("exhaustive optimum     %12s\n", "(over budget)");
}

nlohmann::json baselines_to_json(const BaselineTable& b) {
    nlohmann::json j;
    j["egc_gain"] = b.egc_gain;
    j["quantized_egc_gain"] = b.quantized_egc_gain;
    j["steering_best_gain"] = b.steering_best_gain;
    j["steering_best_index"] = b.steering_best_index;
    j["steering_beam_count"] = b.steering_beam_count;
    if (b.exhaustive_gain)
        j["exhaustive_gain"] = *b.exhaustive_gain;
    else
        j["exhaustive_gain"] = nullptr;
    return j;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"beamlearn: learn quantized analog beam patterns from receive-power feedback"};
    app.require_subcommand(1);

    // gen-geometry
    auto* gen_geometry = app.add_subcommand("gen-geometry", "sample and save an array geometry");
    struct {
        std::size_t m = 32;
        double spacing = 0.5;
        double sigma_position = 0.0;
        double sigma_phase = 0.0;
        std::uint64_t seed = 1;
        std::string out;
    } gg;
    gen_geometry->add_option("-m,--antennas", gg.m, "number of antennas");
    gen_geometry->add_option("--spacing", gg.spacing, "nominal spacing in wavelengths");
    gen_geometry->add_option("--sigma-position", gg.sigma_position,
                             "position std deviation in wavelengths");
    gen_geometry->add_option("--sigma-phase", gg.sigma_phase,
                             "phase mismatch std deviation in radians");
    gen_geometry->add_option("--seed", gg.seed, "geometry seed");
    gen_geometry->add_option("-o,--out", gg.out, "output geometry JSON")->required();
    gen_geometry->callback([&gg] {
        const ArrayGeometry g =
            (gg.sigma_position > 0.0 || gg.sigma_phase > 0.0)
                ? sample_impaired_geometry(gg.m, gg.spacing, gg.sigma_position, gg.sigma_phase,
                                           gg.seed)
                : ideal_geometry(gg.m, gg.spacing);
        save_geometry(g, gg.out);
        std::printf("wrote %s (%zu antennas)\n", gg.out.c_str(), g.size());
    });

    // gen-channels
    auto* gen_channels = app.add_subcommand("gen-channels", "synthesize channels and save CSV");
    auto gc = std::make_shared<CommonOpts>();
    std::string gc_geometry_file;
    std::string gc_out;
    add_common_options(gen_channels, *gc);
    gen_channels->add_option("--geometry", gc_geometry_file, "geometry JSON to synthesize on");
    gen_channels->add_option("--csv-out", gc_out, "output channel CSV")->required();
    gen_channels->callback([gc, &gc_geometry_file, &gc_out] {
        const ExperimentConfig cfg = make_config(*gc);
        const ArrayGeometry geometry =
            gc_geometry_file.empty() ? build_geometry(cfg) : load_geometry(gc_geometry_file);
        const ChannelSet set = sample_user_channels(geometry, cfg.channel, cfg.channel_seed);
        save_channels(set, gc_out);
        std::printf("wrote %s (%zu channels, M=%zu)\n", gc_out.c_str(), set.size(),
                    set.dimension());
    });

    // train
    auto* train = app.add_subcommand("train", "run the learning loop");
    auto tr = std::make_shared<CommonOpts>();
    add_common_options(train, *tr);
    train->callback([tr] {
        const ExperimentConfig cfg = make_config(*tr);
        const RunResult result = run_training(cfg);
        std::printf("finished %llu iterations in %.1f s%s\n",
                    static_cast<unsigned long long>(result.iterations_run),
                    result.duration_seconds, result.stopped_early ? " (stopped early)" : "");
        std::printf("best gain              %12.6g  (%6.2f dB, %.4f of EGC)\n",
                    result.best_gain, to_db(result.best_gain),
                    result.best_gain / result.baselines.egc_gain);
        if (result.milestone_90)
            std::printf("0.90 EGC reached at    %12llu\n",
                        static_cast<unsigned long long>(*result.milestone_90));
        if (result.milestone_95)
            std::printf("0.95 EGC reached at    %12llu\n",
                        static_cast<unsigned long long>(*result.milestone_95));
        print_baselines(result.baselines);
        std::printf("outputs in %s\n", cfg.output_dir.c_str());
    });

    // baselines
    auto* baselines = app.add_subcommand("baselines", "evaluate the analytic baselines");
    auto bl = std::make_shared<CommonOpts>();
    std::string bl_json;
    add_common_options(baselines, *bl);
    baselines->add_option("--json", bl_json, "also write the table as JSON");
    baselines->callback([bl, &bl_json] {
        const ExperimentConfig cfg = make_config(*bl);
        const BaselineTable table = run_baselines(cfg);
        print_baselines(table);
        if (!bl_json.empty()) {
            std::ofstream out(bl_json);
            if (!out)
                throw IngestionError("cannot write " + bl_json);
            out << baselines_to_json(table).dump(2) << '\n';
        }
    });

    // eval-beam
    auto* eval = app.add_subcommand("eval-beam", "evaluate a saved beam on a channel set");
    auto ev = std::make_shared<CommonOpts>();
    std::string ev_beam;
    std::string ev_json;
    add_common_options(eval, *ev);
    eval->add_option("--beam", ev_beam, "beam JSON")->required();
    eval->add_option("--json", ev_json, "also write the report as JSON");
    eval->callback([ev, &ev_beam, &ev_json] {
        const ExperimentConfig cfg = make_config(*ev);
        const BeamFile beam = load_beam(ev_beam);
        const EvalReport report = evaluate_beam(beam.phases, cfg);
        std::printf("average gain           %12.6g\n", report.gains.average);
        std::printf("EGC upper bound        %12.6g\n", report.egc_gain);
        std::printf("ratio to EGC           %12.6f\n", report.egc_ratio);
        for (std::size_t u = 0; u < report.gains.per_user.size(); ++u)
            std::printf("  user %-3zu gain        %12.6g\n", u, report.gains.per_user[u]);
        if (!ev_json.empty()) {
            nlohmann::json j;
            j["average_gain"] = report.gains.average;
            j["per_user_gain"] = report.gains.per_user;
            j["egc_gain"] = report.egc_gain;
            j["egc_ratio"] = report.egc_ratio;
            std::ofstream out(ev_json);
            if (!out)
                throw IngestionError("cannot write " + ev_json);
            out << j.dump(2) << '\n';
        }
    });

    // beam-pattern
    auto* pattern = app.add_subcommand("beam-pattern", "sample a beam's gain over angle");
    struct {
        std::string beam;
        std::string geometry;
        double step_deg = 1.0;
        bool fourth_root = false;
        std::string out;
    } bp;
    auto bp_common = std::make_shared<CommonOpts>();
    add_common_options(pattern, *bp_common);
    pattern->add_option("--beam", bp.beam, "beam JSON")->required();
    pattern->add_option("--geometry", bp.geometry,
                        "geometry JSON (defaults to the config's geometry)");
    pattern->add_option("--step-deg", bp.step_deg, "angular step in degrees");
    pattern->add_flag("--fourth-root", bp.fourth_root, "emit a gain^(1/4) column");
    pattern->add_option("--csv-out", bp.out, "output pattern CSV")->required();
    pattern->callback([bp_common, &bp] {
        const BeamFile beam = load_beam(bp.beam);
        ArrayGeometry geometry;
        if (!bp.geometry.empty()) {
            geometry = load_geometry(bp.geometry);
        } else {
            const ExperimentConfig cfg = make_config(*bp_common);
            geometry = build_geometry(cfg);
        }
        if (bp.step_deg <= 0.0 || bp.step_deg >= 180.0)
            throw UsageError("--step-deg must lie in (0, 180)");
        std::vector<double> grid;
        for (double d = bp.step_deg; d < 180.0; d += bp.step_deg)
            grid.push_back(d);
        const auto rows = beam_pattern(beam_from_phases(beam.phases), geometry, grid);
        write_pattern_csv(rows, bp.out, bp.fourth_root);
        std::printf("wrote %s (%zu angles)\n", bp.out.c_str(), rows.size());
    });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a multi-seed batch");
    auto sw = std::make_shared<CommonOpts>();
    std::vector<std::uint64_t> sw_seeds;
    std::size_t sw_parallel = 0;
    add_common_options(sweep, *sw);
    sweep->add_option("--agent-seeds", sw_seeds, "agent seeds to run")->required();
    sweep->add_option("--parallel", sw_parallel, "max concurrent runs (0: hardware)");
    sweep->callback([sw, &sw_seeds, &sw_parallel] {
        const ExperimentConfig cfg = make_config(*sw);
        const auto results = run_sweep(cfg, sw_seeds, sw_parallel);
        for (std::size_t i = 0; i < results.size(); ++i)
            std::printf("seed %-6llu best %12.6g  (%.4f of EGC)%s\n",
                        static_cast<unsigned long long>(sw_seeds[i]), results[i].best_gain,
                        results[i].best_gain / results[i].baselines.egc_gain,
                        results[i].stopped_early ? "  [early]" : "");
        std::printf("summary in %s/summary.csv\n", cfg.output_dir.c_str());
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const beamlearn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const beamlearn::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 3;
    } catch (const beamlearn::IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << '\n';
        return 4;
    } catch (const beamlearn::GenerationError& e) {
        std::cerr << "generation error: " << e.what() << '\n';
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
