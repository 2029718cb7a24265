// SPDX-License-Identifier: Apache-2.0
//
// Wolpertinger-variant DDPG agent over the quantized phase space: ternary
// reward against an adaptive threshold, Ornstein-Uhlenbeck exploration with a
// decaying volatility schedule, replay memory, and the actor/critic update
// rules. The action is the next state: both are phase vectors on the
// codebook, and the actor's continuous proposal is projected onto the
// codebook by nearest-neighbor quantization before execution.

#ifndef BEAMLEARN_AGENT_HPP
#define BEAMLEARN_AGENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beamlearn/channel.hpp"
#include "beamlearn/codebook.hpp"
#include "beamlearn/network.hpp"
#include "beamlearn/rng.hpp"

namespace beamlearn {

// Networks never see raw angles: each phase is fed as its (cos, sin) pair,
// which removes the +-pi discontinuity. `out` is resized to 2 * phases.size().
void encode_phases(std::span<const double> phases, std::vector<double>& out);

// Adaptive-threshold bookkeeping. The threshold is the best gain observed so
// far; both are the same quantity and only ever increase.
struct RewardTracker {
    double threshold = 0.0;
    double previous_gain = 0.0;
    double best_gain = 0.0;
    PhaseVector best_phases; // empty until the first threshold crossing
};

// Ternary reward: +1 when gain_value exceeds the threshold (which then moves
// up to gain_value and `beam` is recorded), 0 when it at least improves on
// the previous gain, -1 otherwise. previous_gain is updated on every call.
int compute_reward(double gain_value, const PhaseVector& beam, RewardTracker& tracker);

// Discrete Ornstein-Uhlenbeck process, unit time step:
//   X <- X + theta * (mean - X) + sigma * N(0, I).
struct OUProcess {
    double mean = 0.0;
    double theta = 0.15;
    double sigma = kPi;
    std::vector<double> state;

    void reset(std::size_t size) { state.assign(size, mean); }
};

// Advances the process one step and returns the new state.
const std::vector<double>& ou_step(OUProcess& process, Rng& rng);

// Exploration schedule: linear from sigma_start at t=1 down to sigma_end at
// t = decay_fraction * total_iterations, constant afterwards. sigma_start
// should reach any phase from any other (>= pi); sigma_end should reach only
// adjacent codebook phases (~ codebook spacing).
double decayed_sigma(double sigma_start, double sigma_end, double decay_fraction,
                     std::uint64_t t, std::uint64_t total_iterations);

struct Transition {
    std::vector<double> state;
    std::vector<double> action; // equal to next_state by construction
    int reward = 0;             // in {-1, 0, +1}
    std::vector<double> next_state;
};

// Bounded FIFO with uniform sampling (with replacement).
class ReplayMemory {
  public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Transition t);
    std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// Defaults were tuned on the desk-scale reproduction runs: gamma above ~0.7
// with hard target copies lets the bootstrap run away (the critic loss
// diverges), and the late-stage OU volatility must sit well below the
// codebook spacing or the stationary noise keeps kicking every element more
// than one step and the refinement stalls.
struct AgentConfig {
    std::size_t array_size = 32;
    int resolution_bits = 3;
    double gamma = 0.5;
    std::size_t batch_size = 64;
    std::size_t target_sync_period = 100; // hard target copies every C steps
    std::size_t replay_capacity = 100000;
    double actor_learning_rate = 1e-3;
    double critic_learning_rate = 1e-3;
    double ou_mean = 0.0;
    double ou_theta = 0.3;
    double ou_sigma_start = kPi;
    std::optional<double> ou_sigma_end; // default 0.2 rad, see above
    double ou_decay_fraction = 0.6;
    double measurement_noise_std = 0.0; // additive Gaussian on the average gain
};

nlohmann::json agent_config_to_json(const AgentConfig& config);
AgentConfig agent_config_from_json(const nlohmann::json& j);

// Checks ranges and resolves the OU sigma_end default; throws ConfigError.
AgentConfig validate_agent_config(AgentConfig config);

struct StepRecord {
    std::uint64_t t = 0;
    int reward = 0;
    double gain = 0.0;
    double best_gain = 0.0;
    double beta = 0.0;
    double critic_loss = 0.0; // NaN during warm-up (no update yet)
    double sigma = 0.0;
    bool updated = false;
};

// Actor: 2M -> 4M -> 4M -> M (relu, relu, pi*tanh), so proposed phases always
// land in (-pi, pi). Critic: 4M -> 4M -> 4M -> 1 (relu, relu, linear) on the
// concatenated (state, action) encoding. All randomness (initialization,
// exploration, replay sampling) comes from one seeded stream, so runs are
// bit-reproducible.
class DdpgAgent {
  public:
    DdpgAgent(AgentConfig config, std::uint64_t seed);

    // mu(state) + OU noise, wrapped and quantized onto the codebook.
    PhaseVector propose_action(const PhaseVector& state);

    // One full iteration: propose, execute against the channel set, reward,
    // store, update (once the replay holds a batch), and sync targets every
    // target_sync_period steps.
    StepRecord step(const ChannelSet& channels, std::uint64_t t,
                    std::uint64_t total_iterations);

    // y_b = r_b + gamma * Q'(s_{b+1}, mu'(s_{b+1})).
    std::vector<double> critic_targets(const std::vector<Transition>& batch);

    // One Adam step on the mean squared error against `targets`; returns the
    // pre-step loss.
    double update_critic(const std::vector<Transition>& batch,
                         const std::vector<double>& targets);

    // Ascends mean_b Q(s_b, mu(s_b)) by chaining the critic's action-input
    // gradient through the phase encoding into the actor; returns the
    // pre-step objective value.
    double update_actor(const std::vector<Transition>& batch);

    void sync_targets();

    AgentConfig config;
    PhaseCodebook codebook;
    Rng rng;
    ReplayMemory replay;
    DenseNetwork actor, critic, actor_target, critic_target;
    AdamState actor_opt, critic_opt;
    OUProcess noise;
    RewardTracker tracker;
    PhaseVector state;

  private:
    std::vector<double> enc_state_, enc_next_, critic_in_, actor_upstream_;
    ForwardCache actor_cache_, critic_cache_;
};

// Agent checkpoint: config, all four networks, both optimizer states, the
// reward tracker, the noise process, and the current state. The exploration
// RNG stream is not serialized; a reloaded agent continues from a fresh seed.
void save_agent_checkpoint(const DdpgAgent& agent, const std::filesystem::path& path);
DdpgAgent load_agent_checkpoint(const std::filesystem::path& path, std::uint64_t seed);

} // namespace beamlearn

#endif // BEAMLEARN_AGENT_HPP
