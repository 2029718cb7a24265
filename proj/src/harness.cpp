// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "beamlearn/errors.hpp"

namespace beamlearn {

namespace {

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin)
        throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                             ": cannot parse value '" + field + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
        fields.push_back(field);
    return fields;
}

nlohmann::json optional_to_json(const std::optional<double>& v) {
    if (v)
        return *v;
    return nullptr;
}

} // namespace

ExperimentConfig resolve(ExperimentConfig config) {
    config.agent.array_size = config.array.size;
    config.agent.resolution_bits = config.array.resolution_bits;
    config.agent = validate_agent_config(std::move(config.agent));
    if (config.steering_beams == 0)
        config.steering_beams = config.array.size;
    return config;
}

void validate(const ExperimentConfig& config) {
    if (config.array.size < 1)
        throw ConfigError("array size must be at least 1");
    if (config.array.resolution_bits < 1 || config.array.resolution_bits > 16)
        throw ConfigError("phase shifter resolution must be in [1, 16] bits");
    if (config.array.spacing_wavelengths <= 0.0)
        throw ConfigError("antenna spacing must be positive");
    if (config.array.sigma_position_wavelengths < 0.0 || config.array.sigma_phase_rad < 0.0)
        throw ConfigError("impairment standard deviations must be non-negative");
    if (config.iterations < 1)
        throw ConfigError("iterations must be at least 1");
    if (config.curve_stride < 1)
        throw ConfigError("curve stride must be at least 1");
    if (config.channel_file) {
        if (!std::filesystem::exists(*config.channel_file))
            throw ConfigError("channel file does not exist: " + *config.channel_file);
    } else {
        validate(config.channel);
    }
    if (config.stop.egc_fraction && *config.stop.egc_fraction <= 0.0)
        throw ConfigError("stop.egc_fraction must be positive");
    if (config.stop.min_gain && *config.stop.min_gain <= 0.0)
        throw ConfigError("stop.min_gain must be positive");
    validate_agent_config(config.agent);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["array"] = {{"size", c.array.size},
                  {"resolution_bits", c.array.resolution_bits},
                  {"impaired", c.array.impaired},
                  {"spacing_wavelengths", c.array.spacing_wavelengths},
                  {"sigma_position_wavelengths", c.array.sigma_position_wavelengths},
                  {"sigma_phase_rad", c.array.sigma_phase_rad}};
    nlohmann::json ch;
    ch["file"] = c.channel_file ? nlohmann::json(*c.channel_file) : nlohmann::json(nullptr);
    ch["users"] = c.channel.num_users;
    ch["paths"] = c.channel.num_paths;
    ch["aoa_sector_rad"] = {c.channel.sector_min_rad, c.channel.sector_max_rad};
    ch["aoa_center_rad"] = optional_to_json(c.channel.center_aoa_rad);
    ch["angular_spread_rad"] = c.channel.angular_spread_rad;
    ch["dominant_power_fraction"] = c.channel.dominant_power_fraction;
    ch["normalize"] = c.channel.normalize;
    j["channel"] = ch;
    j["agent"] = agent_config_to_json(c.agent);
    j["iterations"] = c.iterations;
    j["steering_beams"] = c.steering_beams;
    j["exhaustive_budget"] = c.exhaustive_budget;
    j["seeds"] = {{"geometry", c.geometry_seed},
                  {"channel", c.channel_seed},
                  {"agent", c.agent_seed}};
    j["output_dir"] = c.output_dir;
    j["stop"] = {{"egc_fraction", optional_to_json(c.stop.egc_fraction)},
                 {"min_gain", optional_to_json(c.stop.min_gain)}};
    j["curve_stride"] = c.curve_stride;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("array")) {
            const auto& a = j.at("array");
            c.array.size = a.value("size", c.array.size);
            c.array.resolution_bits = a.value("resolution_bits", c.array.resolution_bits);
            c.array.impaired = a.value("impaired", c.array.impaired);
            c.array.spacing_wavelengths =
                a.value("spacing_wavelengths", c.array.spacing_wavelengths);
            c.array.sigma_position_wavelengths =
                a.value("sigma_position_wavelengths", c.array.sigma_position_wavelengths);
            c.array.sigma_phase_rad = a.value("sigma_phase_rad", c.array.sigma_phase_rad);
        }
        if (j.contains("channel")) {
            const auto& ch = j.at("channel");
            if (ch.contains("file") && !ch.at("file").is_null())
                c.channel_file = ch.at("file").get<std::string>();
            c.channel.num_users = ch.value("users", c.channel.num_users);
            c.channel.num_paths = ch.value("paths", c.channel.num_paths);
            if (ch.contains("aoa_sector_rad")) {
                const auto sector = ch.at("aoa_sector_rad").get<std::vector<double>>();
                if (sector.size() != 2)
                    throw ConfigError("aoa_sector_rad must be [min, max]");
                c.channel.sector_min_rad = sector[0];
                c.channel.sector_max_rad = sector[1];
            }
            if (ch.contains("aoa_center_rad") && !ch.at("aoa_center_rad").is_null())
                c.channel.center_aoa_rad = ch.at("aoa_center_rad").get<double>();
            c.channel.angular_spread_rad =
                ch.value("angular_spread_rad", c.channel.angular_spread_rad);
            c.channel.dominant_power_fraction =
                ch.value("dominant_power_fraction", c.channel.dominant_power_fraction);
            c.channel.normalize = ch.value("normalize", c.channel.normalize);
        }
        if (j.contains("agent"))
            c.agent = agent_config_from_json(j.at("agent"));
        c.iterations = j.value("iterations", c.iterations);
        c.steering_beams = j.value("steering_beams", c.steering_beams);
        c.exhaustive_budget = j.value("exhaustive_budget", c.exhaustive_budget);
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            c.geometry_seed = s.value("geometry", c.geometry_seed);
            c.channel_seed = s.value("channel", c.channel_seed);
            c.agent_seed = s.value("agent", c.agent_seed);
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        if (j.contains("stop")) {
            const auto& s = j.at("stop");
            if (s.contains("egc_fraction") && !s.at("egc_fraction").is_null())
                c.stop.egc_fraction = s.at("egc_fraction").get<double>();
            if (s.contains("min_gain") && !s.at("min_gain").is_null())
                c.stop.min_gain = s.at("min_gain").get<double>();
        }
        c.curve_stride = j.value("curve_stride", c.curve_stride);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c = resolve(std::move(c));
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write config " + path.string());
    out << config_to_json(config).dump(2) << '\n';
}

ArrayGeometry build_geometry(const ExperimentConfig& config) {
    if (config.array.impaired)
        return sample_impaired_geometry(config.array.size, config.array.spacing_wavelengths,
                                        config.array.sigma_position_wavelengths,
                                        config.array.sigma_phase_rad, config.geometry_seed);
    return ideal_geometry(config.array.size, config.array.spacing_wavelengths);
}

ChannelSet build_channels(const ExperimentConfig& config, const ArrayGeometry& geometry) {
    if (config.channel_file) {
        ChannelSet set = load_channels(*config.channel_file);
        if (set.dimension() != config.array.size)
            throw ConfigError("channel file dimension " + std::to_string(set.dimension()) +
                              " does not match array size " + std::to_string(config.array.size));
        return set;
    }
    return sample_user_channels(geometry, config.channel, config.channel_seed);
}

BaselineTable compute_baselines(const ChannelSet& channels, const ExperimentConfig& config) {
    const PhaseCodebook codebook = build_codebook(config.array.resolution_bits);
    BaselineTable table;

    double egc_sum = 0.0;
    double best_projected = -1.0;
    for (const ChannelVector& h : channels.channels) {
        egc_sum += egc_beam(h).gain;
        const EgcResult projected = quantized_egc_beam(h, codebook);
        const double avg = average_gain(beam_from_phases(projected.phases), channels);
        if (avg > best_projected) {
            best_projected = avg;
            table.quantized_egc_phases = projected.phases;
        }
    }
    table.egc_gain = egc_sum / static_cast<double>(channels.size());
    table.quantized_egc_gain = best_projected;

    const ArrayGeometry nominal =
        ideal_geometry(config.array.size, config.array.spacing_wavelengths);
    const std::size_t num_beams =
        config.steering_beams > 0 ? config.steering_beams : config.array.size;
    const std::vector<PhaseVector> steering =
        beamsteering_codebook(nominal, num_beams, codebook);
    table.steering_beam_count = steering.size();
    double best_steer = -1.0;
    for (std::size_t i = 0; i < steering.size(); ++i) {
        const double g = average_gain(beam_from_phases(steering[i]), channels);
        if (g > best_steer) {
            best_steer = g;
            table.steering_best_index = i;
        }
    }
    table.steering_best_gain = best_steer;

    // Exhaustive optimum only when the discrete space fits the budget.
    const std::uint64_t k = codebook.size();
    std::uint64_t space = 1;
    bool feasible = true;
    for (std::size_t m = 0; m < config.array.size && feasible; ++m) {
        if (space > config.exhaustive_budget / k)
            feasible = false;
        else
            space *= k;
    }
    if (feasible) {
        const SearchResult opt =
            exhaustive_search(channels, config.array.size, codebook, config.exhaustive_budget);
        table.exhaustive_gain = opt.gain;
        table.exhaustive_phases = opt.phases;
    }
    return table;
}

BaselineTable run_baselines(const ExperimentConfig& raw) {
    const ExperimentConfig config = resolve(raw);
    validate(config);
    const ArrayGeometry geometry = build_geometry(config);
    const ChannelSet channels = build_channels(config, geometry);
    return compute_baselines(channels, config);
}

namespace {

void write_steps_header(std::ofstream& out) {
    out << "t,reward,gain,best_gain,beta,critic_loss,sigma_ou\n";
}

void write_steps_row(std::ofstream& out, const StepRecord& r) {
    out << r.t << ',' << r.reward << ',' << fmt_double(r.gain) << ',' << fmt_double(r.best_gain)
        << ',' << fmt_double(r.beta) << ',' << fmt_double(r.critic_loss) << ','
        << fmt_double(r.sigma) << '\n';
}

} // namespace

RunResult run_training(const ExperimentConfig& raw) {
    const ExperimentConfig config = resolve(raw);
    validate(config);

    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);

    const ArrayGeometry geometry = build_geometry(config);
    const ChannelSet channels = build_channels(config, geometry);

    save_config(config, out_dir / "config.json");
    save_geometry(geometry, out_dir / "geometry.json");
    if (!config.channel_file)
        save_channels(channels, out_dir / "channels.csv");

    RunResult result;
    result.baselines = compute_baselines(channels, config);
    const double egc = result.baselines.egc_gain;

    DdpgAgent agent(config.agent, config.agent_seed);

    std::ofstream steps(out_dir / "steps.csv");
    if (!steps)
        throw IngestionError("cannot write " + (out_dir / "steps.csv").string());
    write_steps_header(steps);

    const auto should_stop = [&](double best) {
        if (!config.stop.egc_fraction && !config.stop.min_gain)
            return false;
        if (config.stop.egc_fraction && best < *config.stop.egc_fraction * egc)
            return false;
        if (config.stop.min_gain && best < *config.stop.min_gain)
            return false;
        return true;
    };

    const auto finalize = [&](std::uint64_t iterations_run, bool stopped, bool aborted) {
        result.iterations_run = iterations_run;
        result.stopped_early = stopped;
        result.aborted = aborted;
        result.best_gain = agent.tracker.best_gain;
        result.best_phases = agent.tracker.best_phases.phases.empty() ? agent.state
                                                                      : agent.tracker.best_phases;
        result.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        steps.flush();
        write_curve_csv(result.curve, out_dir / "curve.csv");
        save_result(result, out_dir / "result.json");
        save_beam(result.best_phases, config.array.resolution_bits, out_dir / "beam.json");
        save_agent_checkpoint(agent, out_dir / "agent.json");
    };

    std::uint64_t t = 0;
    try {
        for (t = 1; t <= config.iterations; ++t) {
            const StepRecord rec = agent.step(channels, t, config.iterations);
            write_steps_row(steps, rec);
            if (t % config.curve_stride == 0 || t == config.iterations)
                result.curve.push_back(
                    {rec.t, rec.gain, rec.best_gain, rec.reward, rec.beta});
            if (!result.milestone_90 && rec.best_gain >= 0.90 * egc)
                result.milestone_90 = t;
            if (!result.milestone_95 && rec.best_gain >= 0.95 * egc)
                result.milestone_95 = t;
            if (should_stop(rec.best_gain)) {
                if (result.curve.empty() || result.curve.back().t != t)
                    result.curve.push_back(
                        {rec.t, rec.gain, rec.best_gain, rec.reward, rec.beta});
                finalize(t, true, false);
                return result;
            }
        }
    } catch (...) {
        // Keep the last valid state on disk before surfacing the failure.
        finalize(t > 0 ? t - 1 : 0, false, true);
        throw;
    }
    finalize(config.iterations, false, false);
    return result;
}

std::vector<RunResult> run_sweep(const ExperimentConfig& raw,
                                 const std::vector<std::uint64_t>& agent_seeds,
                                 std::size_t parallelism) {
    if (agent_seeds.empty())
        throw ConfigError("sweep needs at least one agent seed");
    const ExperimentConfig base = resolve(raw);
    validate(base);
    const std::filesystem::path out_dir(base.output_dir);
    std::filesystem::create_directories(out_dir);

    if (parallelism == 0)
        parallelism = std::max<std::size_t>(1, std::thread::hardware_concurrency());

    std::vector<RunResult> results(agent_seeds.size());
    std::size_t at = 0;
    while (at < agent_seeds.size()) {
        const std::size_t batch = std::min(parallelism, agent_seeds.size() - at);
        std::vector<std::future<RunResult>> futures;
        futures.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            ExperimentConfig cfg = base;
            cfg.agent_seed = agent_seeds[at + i];
            cfg.output_dir =
                (out_dir / ("seed_" + std::to_string(cfg.agent_seed))).string();
            futures.push_back(
                std::async(std::launch::async, [cfg] { return run_training(cfg); }));
        }
        for (std::size_t i = 0; i < batch; ++i)
            results[at + i] = futures[i].get();
        at += batch;
    }

    std::ofstream summary(out_dir / "summary.csv");
    summary << "agent_seed,best_gain,egc_gain,egc_ratio,steering_best_gain,milestone_90,"
               "milestone_95,iterations_run,stopped_early\n";
    for (std::size_t i = 0; i < agent_seeds.size(); ++i) {
        const RunResult& r = results[i];
        summary << agent_seeds[i] << ',' << fmt_double(r.best_gain) << ','
                << fmt_double(r.baselines.egc_gain) << ','
                << fmt_double(r.best_gain / r.baselines.egc_gain) << ','
                << fmt_double(r.baselines.steering_best_gain) << ',';
        if (r.milestone_90)
            summary << *r.milestone_90;
        summary << ',';
        if (r.milestone_95)
            summary << *r.milestone_95;
        summary << ',' << r.iterations_run << ',' << (r.stopped_early ? 1 : 0) << '\n';
    }
    return results;
}

EvalReport evaluate_beam(const PhaseVector& beam, const ExperimentConfig& raw) {
    const ExperimentConfig config = resolve(raw);
    validate(config);
    if (beam.size() != config.array.size)
        throw UsageError("beam dimension " + std::to_string(beam.size()) +
                         " does not match array size " + std::to_string(config.array.size));
    const ArrayGeometry geometry = build_geometry(config);
    const ChannelSet channels = build_channels(config, geometry);

    EvalReport report;
    report.gains = gain_report(beam_from_phases(beam), channels);
    double egc_sum = 0.0;
    for (const ChannelVector& h : channels.channels)
        egc_sum += egc_beam(h).gain;
    report.egc_gain = egc_sum / static_cast<double>(channels.size());
    report.egc_ratio = report.gains.average / report.egc_gain;
    return report;
}

std::vector<PatternRow> beam_pattern(const BeamVector& beam, const ArrayGeometry& geometry,
                                     const std::vector<double>& grid_deg) {
    if (grid_deg.empty())
        throw UsageError("beam pattern needs a non-empty angle grid");
    if (beam.size() != geometry.size())
        throw UsageError("beam dimension does not match the geometry");
    std::vector<PatternRow> rows;
    rows.reserve(grid_deg.size());
    for (double deg : grid_deg) {
        if (!(deg > 0.0 && deg < 180.0))
            throw UsageError("pattern angles must lie strictly inside (0, 180) degrees");
        const double phi = deg * kPi / 180.0;
        const double g = gain(beam, array_response(geometry, phi));
        rows.push_back({deg, g, 10.0 * std::log10(std::max(g, 1e-30))});
    }
    return rows;
}

std::vector<double> default_pattern_grid() {
    std::vector<double> grid;
    grid.reserve(179);
    for (int d = 1; d <= 179; ++d)
        grid.push_back(static_cast<double>(d));
    return grid;
}

void write_pattern_csv(const std::vector<PatternRow>& rows, const std::filesystem::path& path,
                       bool fourth_root_column) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write pattern file " + path.string());
    out << "phi_deg,gain,gain_db";
    if (fourth_root_column)
        out << ",gain_fourth_root";
    out << '\n';
    for (const PatternRow& r : rows) {
        out << fmt_double(r.phi_deg) << ',' << fmt_double(r.gain) << ',' << fmt_double(r.gain_db);
        if (fourth_root_column)
            out << ',' << fmt_double(std::pow(r.gain, 0.25));
        out << '\n';
    }
}

std::vector<PatternRow> read_pattern_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open pattern file " + path.string());
    std::vector<PatternRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty())
            continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3 && fields.size() != 4)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                                 ": expected 3 or 4 fields, got " +
                                 std::to_string(fields.size()));
        PatternRow r;
        r.phi_deg = parse_double(fields[0], path, line_no);
        r.gain = parse_double(fields[1], path, line_no);
        r.gain_db = parse_double(fields[2], path, line_no);
        rows.push_back(r);
    }
    return rows;
}

void save_beam(const PhaseVector& beam, int resolution_bits,
               const std::filesystem::path& path) {
    nlohmann::json j;
    j["phases_rad"] = beam.phases;
    j["resolution_bits"] = resolution_bits;
    j["quantized"] = beam.quantized;
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write beam file " + path.string());
    out << j.dump(2) << '\n';
}

BeamFile load_beam(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open beam file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("beam file " + path.string() + ": " + e.what());
    }
    BeamFile beam;
    try {
        beam.phases.phases = j.at("phases_rad").get<std::vector<double>>();
        beam.phases.quantized = j.value("quantized", false);
        beam.resolution_bits = j.at("resolution_bits").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("beam file " + path.string() + ": " + e.what());
    }
    if (beam.phases.phases.empty())
        throw IngestionError("beam file " + path.string() + " holds no phases");
    return beam;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write curve file " + path.string());
    out << "t,gain,best_gain,reward,beta\n";
    for (const CurvePoint& p : curve)
        out << p.t << ',' << fmt_double(p.gain) << ',' << fmt_double(p.best_gain) << ','
            << p.reward << ',' << fmt_double(p.beta) << '\n';
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open curve file " + path.string());
    std::vector<CurvePoint> curve;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty())
            continue; // header
        const auto fields = split_csv(line);
        if (fields.size() != 5)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                                 ": expected 5 fields, got " + std::to_string(fields.size()));
        CurvePoint p;
        p.t = static_cast<std::uint64_t>(parse_double(fields[0], path, line_no));
        p.gain = parse_double(fields[1], path, line_no);
        p.best_gain = parse_double(fields[2], path, line_no);
        p.reward = static_cast<int>(parse_double(fields[3], path, line_no));
        p.beta = parse_double(fields[4], path, line_no);
        curve.push_back(p);
    }
    return curve;
}

std::vector<StepRecord> read_steps_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open steps file " + path.string());
    std::vector<StepRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty())
            continue;
        const auto fields = split_csv(line);
        if (fields.size() != 7)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                                 ": expected 7 fields, got " + std::to_string(fields.size()));
        StepRecord r;
        r.t = static_cast<std::uint64_t>(parse_double(fields[0], path, line_no));
        r.reward = static_cast<int>(parse_double(fields[1], path, line_no));
        r.gain = parse_double(fields[2], path, line_no);
        r.best_gain = parse_double(fields[3], path, line_no);
        r.beta = parse_double(fields[4], path, line_no);
        r.critic_loss = parse_double(fields[5], path, line_no);
        r.sigma = parse_double(fields[6], path, line_no);
        r.updated = std::isfinite(r.critic_loss);
        records.push_back(r);
    }
    return records;
}

nlohmann::json result_to_json(const RunResult& r) {
    nlohmann::json j;
    j["best_gain"] = r.best_gain;
    j["best_phases_rad"] = r.best_phases.phases;
    j["milestone_90_iteration"] =
        r.milestone_90 ? nlohmann::json(*r.milestone_90) : nlohmann::json(nullptr);
    j["milestone_95_iteration"] =
        r.milestone_95 ? nlohmann::json(*r.milestone_95) : nlohmann::json(nullptr);
    j["iterations_run"] = r.iterations_run;
    j["stopped_early"] = r.stopped_early;
    j["aborted"] = r.aborted;
    j["duration_seconds"] = r.duration_seconds;
    nlohmann::json b;
    b["egc_gain"] = r.baselines.egc_gain;
    b["quantized_egc_gain"] = r.baselines.quantized_egc_gain;
    b["quantized_egc_phases_rad"] = r.baselines.quantized_egc_phases.phases;
    b["steering_best_gain"] = r.baselines.steering_best_gain;
    b["steering_best_index"] = r.baselines.steering_best_index;
    b["steering_beam_count"] = r.baselines.steering_beam_count;
    b["exhaustive_gain"] = optional_to_json(r.baselines.exhaustive_gain);
    if (r.baselines.exhaustive_phases)
        b["exhaustive_phases_rad"] = r.baselines.exhaustive_phases->phases;
    else
        b["exhaustive_phases_rad"] = nullptr;
    j["baselines"] = b;
    if (r.baselines.egc_gain > 0.0)
        j["egc_ratio_best"] = r.best_gain / r.baselines.egc_gain;
    return j;
}

RunResult result_from_json(const nlohmann::json& j) {
    RunResult r;
    try {
        r.best_gain = j.at("best_gain").get<double>();
        r.best_phases.phases = j.at("best_phases_rad").get<std::vector<double>>();
        r.best_phases.quantized = true;
        if (!j.at("milestone_90_iteration").is_null())
            r.milestone_90 = j.at("milestone_90_iteration").get<std::uint64_t>();
        if (!j.at("milestone_95_iteration").is_null())
            r.milestone_95 = j.at("milestone_95_iteration").get<std::uint64_t>();
        r.iterations_run = j.at("iterations_run").get<std::uint64_t>();
        r.stopped_early = j.at("stopped_early").get<bool>();
        r.aborted = j.at("aborted").get<bool>();
        r.duration_seconds = j.at("duration_seconds").get<double>();
        const nlohmann::json& b = j.at("baselines");
        r.baselines.egc_gain = b.at("egc_gain").get<double>();
        r.baselines.quantized_egc_gain = b.at("quantized_egc_gain").get<double>();
        r.baselines.quantized_egc_phases.phases =
            b.at("quantized_egc_phases_rad").get<std::vector<double>>();
        r.baselines.quantized_egc_phases.quantized = true;
        r.baselines.steering_best_gain = b.at("steering_best_gain").get<double>();
        r.baselines.steering_best_index = b.at("steering_best_index").get<std::size_t>();
        r.baselines.steering_beam_count = b.at("steering_beam_count").get<std::size_t>();
        if (!b.at("exhaustive_gain").is_null()) {
            r.baselines.exhaustive_gain = b.at("exhaustive_gain").get<double>();
            PhaseVector p;
            p.phases = b.at("exhaustive_phases_rad").get<std::vector<double>>();
            p.quantized = true;
            r.baselines.exhaustive_phases = std::move(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed result: ") + e.what());
    }
    return r;
}

void save_result(const RunResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write result file " + path.string());
    out << result_to_json(result).dump(2) << '\n';
}

RunResult load_result(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open result file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("result file " + path.string() + ": " + e.what());
    }
    return result_from_json(j);
}

} // namespace beamlearn
