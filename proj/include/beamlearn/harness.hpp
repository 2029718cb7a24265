// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: configuration with three independent seed
// streams (geometry, channel, agent), the T-iteration training loop,
// baseline evaluation, beam-pattern sampling, and result export.

#ifndef BEAMLEARN_HARNESS_HPP
#define BEAMLEARN_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beamlearn/agent.hpp"
#include "beamlearn/channel.hpp"
#include "beamlearn/codebook.hpp"
#include "beamlearn/metrics.hpp"

namespace beamlearn {

struct ArrayConfig {
    std::size_t size = 32;
    int resolution_bits = 3;
    bool impaired = false;
    double spacing_wavelengths = 0.5;
    double sigma_position_wavelengths = 0.0;
    double sigma_phase_rad = 0.0;
};

// Optional early termination: training stops once the best gain satisfies
// every configured threshold. Left empty, the run always executes all T
// iterations.
struct StopRule {
    std::optional<double> egc_fraction; // best >= fraction * EGC gain
    std::optional<double> min_gain;     // best >= this absolute gain
};

struct ExperimentConfig {
    ArrayConfig array;
    std::optional<std::string> channel_file; // ingest instead of synthesizing
    ChannelConfig channel;
    AgentConfig agent; // array_size/resolution_bits are synced from `array`
    std::uint64_t iterations = 40000;
    std::size_t steering_beams = 0; // 0: one beam per antenna
    std::uint64_t exhaustive_budget = 10000000;
    std::uint64_t geometry_seed = 1;
    std::uint64_t channel_seed = 2;
    std::uint64_t agent_seed = 3;
    std::string output_dir = "run";
    StopRule stop;
    std::size_t curve_stride = 100; // decimation of curve.csv
};

// Syncs the agent's array dimensions from the array config and resolves
// defaulted fields. Call before validate()/run_*.
ExperimentConfig resolve(ExperimentConfig config);

void validate(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

ArrayGeometry build_geometry(const ExperimentConfig& config);
ChannelSet build_channels(const ExperimentConfig& config, const ArrayGeometry& geometry);

// For a multi-user set the EGC bound is the mean of the per-user EGC gains
// (each per-user gain is individually bounded, hence so is the average), and
// the quantized-EGC baseline is the best single user's projected beam under
// the average-gain objective.
struct BaselineTable {
    double egc_gain = 0.0;
    double quantized_egc_gain = 0.0;
    PhaseVector quantized_egc_phases;
    double steering_best_gain = 0.0;
    std::size_t steering_best_index = 0;
    std::size_t steering_beam_count = 0;
    std::optional<double> exhaustive_gain; // when the space fits the budget
    std::optional<PhaseVector> exhaustive_phases;
};

BaselineTable compute_baselines(const ChannelSet& channels, const ExperimentConfig& config);
BaselineTable run_baselines(const ExperimentConfig& config);

struct CurvePoint {
    std::uint64_t t = 0;
    double gain = 0.0;
    double best_gain = 0.0;
    int reward = 0;
    double beta = 0.0;
};

struct RunResult {
    std::vector<CurvePoint> curve; // decimated; the full log is steps.csv
    PhaseVector best_phases;
    double best_gain = 0.0;
    BaselineTable baselines;
    std::optional<std::uint64_t> milestone_90; // first t with best >= 0.90 * EGC
    std::optional<std::uint64_t> milestone_95; // first t with best >= 0.95 * EGC
    std::uint64_t iterations_run = 0;
    bool stopped_early = false;
    bool aborted = false;
    double duration_seconds = 0.0;
};

// Executes the full training loop against the configured channel set and
// writes config.json, geometry.json, channels.csv (when synthetic),
// steps.csv, curve.csv, result.json, beam.json and agent.json into
// output_dir. Reproducible per seed triple. If the training state diverges
// the partial outputs are written with aborted=true before rethrowing.
RunResult run_training(const ExperimentConfig& config);

// Multi-seed batch: runs the config once per agent seed (others held fixed)
// into output_dir/seed_<s>/, plus a summary.csv. `parallelism` caps the
// number of concurrent runs; 0 picks the hardware concurrency.
std::vector<RunResult> run_sweep(const ExperimentConfig& config,
                                 const std::vector<std::uint64_t>& agent_seeds,
                                 std::size_t parallelism = 0);

struct EvalReport {
    GainReport gains;
    double egc_gain = 0.0;
    double egc_ratio = 0.0; // average gain / EGC gain
};

// Evaluates a beam on the channels and geometry the config describes.
EvalReport evaluate_beam(const PhaseVector& beam, const ExperimentConfig& config);

struct PatternRow {
    double phi_deg = 0.0;
    double gain = 0.0;
    double gain_db = 0.0;
};

// g(phi) = |w^H a(phi)|^2 on the given geometry; impaired patterns use the
// impaired response. Grid angles must lie strictly inside (0, 180) degrees.
std::vector<PatternRow> beam_pattern(const BeamVector& beam, const ArrayGeometry& geometry,
                                     const std::vector<double>& grid_deg);

std::vector<double> default_pattern_grid(); // 1..179 degrees, 1-degree steps

// pattern.csv: phi_deg, gain, gain_db and optionally gain^(1/4), which
// spreads the low-gain lobes when plotting.
void write_pattern_csv(const std::vector<PatternRow>& rows, const std::filesystem::path& path,
                       bool fourth_root_column = false);
std::vector<PatternRow> read_pattern_csv(const std::filesystem::path& path);

// beam.json: the phase vector plus the codebook it is quantized against.
struct BeamFile {
    PhaseVector phases;
    int resolution_bits = 0;
};

void save_beam(const PhaseVector& beam, int resolution_bits,
               const std::filesystem::path& path);
BeamFile load_beam(const std::filesystem::path& path);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

std::vector<StepRecord> read_steps_csv(const std::filesystem::path& path);

nlohmann::json result_to_json(const RunResult& result);
RunResult result_from_json(const nlohmann::json& j); // curve stays in curve.csv
void save_result(const RunResult& result, const std::filesystem::path& path);
RunResult load_result(const std::filesystem::path& path);

} // namespace beamlearn

#endif // BEAMLEARN_HARNESS_HPP
