// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/agent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "beamlearn/errors.hpp"
#include "beamlearn/metrics.hpp"

namespace beamlearn {

void encode_phases(std::span<const double> phases, std::vector<double>& out) {
    out.resize(2 * phases.size());
    for (std::size_t m = 0; m < phases.size(); ++m) {
        out[2 * m] = std::cos(phases[m]);
        out[2 * m + 1] = std::sin(phases[m]);
    }
}

int compute_reward(double gain_value, const PhaseVector& beam, RewardTracker& tracker) {
    int reward;
    if (gain_value > tracker.threshold) {
        reward = +1;
        tracker.threshold = gain_value;
        tracker.best_gain = gain_value;
        tracker.best_phases = beam;
    } else if (gain_value > tracker.previous_gain) {
        reward = 0;
    } else {
        reward = -1;
    }
    tracker.previous_gain = gain_value;
    return reward;
}

const std::vector<double>& ou_step(OUProcess& process, Rng& rng) {
    for (double& x : process.state)
        x += process.theta * (process.mean - x) + process.sigma * rng.normal();
    return process.state;
}

double decayed_sigma(double sigma_start, double sigma_end, double decay_fraction,
                     std::uint64_t t, std::uint64_t total_iterations) {
    if (t < 1)
        t = 1;
    const double span = decay_fraction * static_cast<double>(total_iterations);
    double progress = 1.0;
    if (span > 1.0)
        progress = static_cast<double>(t - 1) / (span - 1.0);
    progress = std::clamp(progress, 0.0, 1.0);
    return sigma_start + progress * (sigma_end - sigma_start);
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1)
        throw ConfigError("replay capacity must be at least 1");
}

void ReplayMemory::push(Transition t) {
    if (data_.size() < capacity_)
        data_.push_back(std::move(t));
    else
        data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayMemory::sample(std::size_t batch_size, Rng& rng) const {
    if (data_.size() < batch_size)
        throw UsageError("replay memory holds " + std::to_string(data_.size()) +
                         " transitions, cannot sample a batch of " + std::to_string(batch_size));
    std::vector<Transition> batch;
    batch.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b)
        batch.push_back(data_[rng.index(data_.size())]);
    return batch;
}

nlohmann::json agent_config_to_json(const AgentConfig& c) {
    nlohmann::json j;
    j["gamma"] = c.gamma;
    j["batch_size"] = c.batch_size;
    j["target_sync_period"] = c.target_sync_period;
    j["replay_capacity"] = c.replay_capacity;
    j["actor_learning_rate"] = c.actor_learning_rate;
    j["critic_learning_rate"] = c.critic_learning_rate;
    j["ou_mean"] = c.ou_mean;
    j["ou_theta"] = c.ou_theta;
    j["ou_sigma_start"] = c.ou_sigma_start;
    if (c.ou_sigma_end)
        j["ou_sigma_end"] = *c.ou_sigma_end;
    else
        j["ou_sigma_end"] = nullptr;
    j["ou_decay_fraction"] = c.ou_decay_fraction;
    j["measurement_noise_std"] = c.measurement_noise_std;
    return j;
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig c;
    c.gamma = j.value("gamma", c.gamma);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.target_sync_period = j.value("target_sync_period", c.target_sync_period);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.actor_learning_rate = j.value("actor_learning_rate", c.actor_learning_rate);
    c.critic_learning_rate = j.value("critic_learning_rate", c.critic_learning_rate);
    c.ou_mean = j.value("ou_mean", c.ou_mean);
    c.ou_theta = j.value("ou_theta", c.ou_theta);
    c.ou_sigma_start = j.value("ou_sigma_start", c.ou_sigma_start);
    if (j.contains("ou_sigma_end") && !j.at("ou_sigma_end").is_null())
        c.ou_sigma_end = j.at("ou_sigma_end").get<double>();
    c.ou_decay_fraction = j.value("ou_decay_fraction", c.ou_decay_fraction);
    c.measurement_noise_std = j.value("measurement_noise_std", c.measurement_noise_std);
    return c;
}

AgentConfig validate_agent_config(AgentConfig c) {
    if (c.array_size < 1)
        throw ConfigError("agent array size must be at least 1");
    if (c.gamma < 0.0 || c.gamma >= 1.0)
        throw ConfigError("gamma must lie in [0, 1)");
    if (c.batch_size < 1)
        throw ConfigError("batch size must be at least 1");
    if (c.replay_capacity < c.batch_size)
        throw ConfigError("replay capacity must be at least the batch size");
    if (c.target_sync_period < 1)
        throw ConfigError("target sync period must be at least 1");
    if (c.actor_learning_rate <= 0.0 || c.critic_learning_rate <= 0.0)
        throw ConfigError("learning rates must be positive");
    if (c.ou_theta < 0.0 || c.ou_theta >= 2.0)
        throw ConfigError("OU theta must lie in [0, 2)");
    if (c.ou_sigma_start < 0.0 || (c.ou_sigma_end && *c.ou_sigma_end < 0.0))
        throw ConfigError("OU sigma must be non-negative");
    if (c.ou_decay_fraction < 0.0 || c.ou_decay_fraction > 1.0)
        throw ConfigError("OU decay fraction must lie in [0, 1]");
    if (c.measurement_noise_std < 0.0)
        throw ConfigError("measurement noise std must be non-negative");
    if (!c.ou_sigma_end)
        c.ou_sigma_end = 0.2;
    return c;
}

DdpgAgent::DdpgAgent(AgentConfig cfg, std::uint64_t seed)
    : config(validate_agent_config(std::move(cfg))),
      codebook(build_codebook(config.resolution_bits)),
      rng(seed),
      replay(config.replay_capacity) {
    const std::size_t m = config.array_size;
    actor = make_network({2 * m, 4 * m, 4 * m, m},
                         {Activation::Relu, Activation::Relu, Activation::PiTanh}, rng, 1e-3);
    critic = make_network({4 * m, 4 * m, 4 * m, 1},
                          {Activation::Relu, Activation::Relu, Activation::Linear}, rng);
    actor_target = actor;
    critic_target = critic;
    actor_opt = make_adam(actor, config.actor_learning_rate);
    critic_opt = make_adam(critic, config.critic_learning_rate);

    noise.mean = config.ou_mean;
    noise.theta = config.ou_theta;
    noise.sigma = config.ou_sigma_start;
    noise.reset(m);

    state.phases.resize(m);
    for (double& p : state.phases)
        p = codebook.values[rng.index(codebook.size())];
    state.quantized = true;
}

PhaseVector DdpgAgent::propose_action(const PhaseVector& s) {
    encode_phases(s.phases, enc_state_);
    forward(actor, enc_state_, actor_cache_);
    const std::vector<double>& n = ou_step(noise, rng);

    PhaseVector action;
    action.phases.resize(config.array_size);
    for (std::size_t m = 0; m < config.array_size; ++m)
        action.phases[m] = quantize_phase(actor_cache_.output[m] + n[m], codebook);
    action.quantized = true;
    return action;
}

std::vector<double> DdpgAgent::critic_targets(const std::vector<Transition>& batch) {
    const std::size_t m = config.array_size;
    std::vector<double> targets(batch.size());
    std::vector<double> enc_action;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        encode_phases(batch[b].next_state, enc_next_);
        forward(actor_target, enc_next_, actor_cache_);
        encode_phases(actor_cache_.output, enc_action);
        critic_in_.resize(4 * m);
        std::copy(enc_next_.begin(), enc_next_.end(), critic_in_.begin());
        std::copy(enc_action.begin(), enc_action.end(), critic_in_.begin() + 2 * m);
        forward(critic_target, critic_in_, critic_cache_);
        targets[b] = static_cast<double>(batch[b].reward) +
                     config.gamma * critic_cache_.output[0];
    }
    return targets;
}

double DdpgAgent::update_critic(const std::vector<Transition>& batch,
                                const std::vector<double>& targets) {
    if (batch.empty() || batch.size() != targets.size())
        throw UsageError("critic update needs a non-empty batch with matching targets");

    const std::size_t m = config.array_size;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Gradients grads = Gradients::zeros_like(critic);
    double loss = 0.0;
    std::vector<double> enc_action;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        encode_phases(batch[b].state, enc_state_);
        encode_phases(batch[b].action, enc_action);
        critic_in_.resize(4 * m);
        std::copy(enc_state_.begin(), enc_state_.end(), critic_in_.begin());
        std::copy(enc_action.begin(), enc_action.end(), critic_in_.begin() + 2 * m);
        forward(critic, critic_in_, critic_cache_);
        const double diff = critic_cache_.output[0] - targets[b];
        loss += diff * diff * inv_b;
        const std::array<double, 1> upstream{2.0 * diff * inv_b};
        backward_accumulate(critic, critic_cache_, upstream, grads);
    }
    if (!std::isfinite(loss))
        throw UsageError("critic loss is not finite; training state has diverged");
    apply_update(critic, grads, critic_opt);
    return loss;
}

double DdpgAgent::update_actor(const std::vector<Transition>& batch) {
    if (batch.empty())
        throw UsageError("actor update needs a non-empty batch");

    const std::size_t m = config.array_size;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Gradients grads = Gradients::zeros_like(actor);
    double objective = 0.0;
    static constexpr std::array<double, 1> kUnitUpstream{1.0};
    for (const Transition& tr : batch) {
        encode_phases(tr.state, enc_state_);
        forward(actor, enc_state_, actor_cache_);
        const std::vector<double>& proposed = actor_cache_.output;

        critic_in_.resize(4 * m);
        std::copy(enc_state_.begin(), enc_state_.end(), critic_in_.begin());
        for (std::size_t i = 0; i < m; ++i) {
            critic_in_[2 * m + 2 * i] = std::cos(proposed[i]);
            critic_in_[2 * m + 2 * i + 1] = std::sin(proposed[i]);
        }
        forward(critic, critic_in_, critic_cache_);
        objective += critic_cache_.output[0] * inv_b;

        const std::vector<double> input_grad =
            backward_input_only(critic, critic_cache_, kUnitUpstream);

        // dQ/d(theta_m) through the (cos, sin) encoding; negated because the
        // optimizer minimizes and we ascend Q.
        actor_upstream_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double c = critic_in_[2 * m + 2 * i];
            const double s = critic_in_[2 * m + 2 * i + 1];
            const double dq_dtheta = -s * input_grad[2 * m + 2 * i] + c * input_grad[2 * m + 2 * i + 1];
            actor_upstream_[i] = -dq_dtheta * inv_b;
        }
        backward_accumulate(actor, actor_cache_, actor_upstream_, grads);
    }
    if (!std::isfinite(objective))
        throw UsageError("actor objective is not finite; training state has diverged");
    apply_update(actor, grads, actor_opt);
    return objective;
}

void DdpgAgent::sync_targets() {
    copy_into_target(actor, actor_target);
    copy_into_target(critic, critic_target);
}

StepRecord DdpgAgent::step(const ChannelSet& channels, std::uint64_t t,
                           std::uint64_t total_iterations) {
    if (channels.dimension() != config.array_size)
        throw UsageError("channel dimension " + std::to_string(channels.dimension()) +
                         " does not match the agent's array size " +
                         std::to_string(config.array_size));

    noise.sigma = decayed_sigma(config.ou_sigma_start, *config.ou_sigma_end,
                                config.ou_decay_fraction, t, total_iterations);

    PhaseVector action = propose_action(state);
    double g = average_gain(beam_from_phases(action), channels);
    if (config.measurement_noise_std > 0.0)
        g = std::max(0.0, g + rng.normal(0.0, config.measurement_noise_std));

    const int reward = compute_reward(g, action, tracker);
    replay.push(Transition{state.phases, action.phases, reward, action.phases});

    StepRecord record;
    record.t = t;
    record.reward = reward;
    record.gain = g;
    record.critic_loss = std::numeric_limits<double>::quiet_NaN();
    if (replay.size() >= config.batch_size) {
        const std::vector<Transition> batch = replay.sample(config.batch_size, rng);
        const std::vector<double> targets = critic_targets(batch);
        record.critic_loss = update_critic(batch, targets);
        update_actor(batch);
        record.updated = true;
    }
    if (t % config.target_sync_period == 0)
        sync_targets();

    state = std::move(action);
    record.best_gain = tracker.best_gain;
    record.beta = tracker.threshold;
    record.sigma = noise.sigma;
    return record;
}

void save_agent_checkpoint(const DdpgAgent& agent, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = "beamlearn-agent-v1";
    nlohmann::json cfg = agent_config_to_json(agent.config);
    cfg["array_size"] = agent.config.array_size;
    cfg["resolution_bits"] = agent.config.resolution_bits;
    j["config"] = cfg;
    j["actor"] = network_to_json(agent.actor, &agent.actor_opt);
    j["critic"] = network_to_json(agent.critic, &agent.critic_opt);
    j["actor_target"] = network_to_json(agent.actor_target);
    j["critic_target"] = network_to_json(agent.critic_target);
    j["tracker"] = {{"threshold", agent.tracker.threshold},
                    {"previous_gain", agent.tracker.previous_gain},
                    {"best_gain", agent.tracker.best_gain},
                    {"best_phases_rad", agent.tracker.best_phases.phases}};
    j["noise"] = {{"sigma", agent.noise.sigma}, {"state", agent.noise.state}};
    j["state_phases_rad"] = agent.state.phases;

    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write agent checkpoint " + path.string());
    out << j.dump(2) << '\n';
}

DdpgAgent load_agent_checkpoint(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open agent checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("agent checkpoint " + path.string() + ": " + e.what());
    }

    try {
        if (j.value("format", "") != std::string("beamlearn-agent-v1"))
            throw IngestionError("unsupported agent checkpoint format in " + path.string());
        AgentConfig cfg = agent_config_from_json(j.at("config"));
        cfg.array_size = j.at("config").at("array_size").get<std::size_t>();
        cfg.resolution_bits = j.at("config").at("resolution_bits").get<int>();

        DdpgAgent agent(cfg, seed);
        AdamState actor_opt, critic_opt;
        DenseNetwork actor = network_from_json(j.at("actor"), &actor_opt);
        DenseNetwork critic = network_from_json(j.at("critic"), &critic_opt);
        DenseNetwork actor_target = network_from_json(j.at("actor_target"));
        DenseNetwork critic_target = network_from_json(j.at("critic_target"));
        if (!same_architecture(actor, agent.actor) || !same_architecture(critic, agent.critic) ||
            !same_architecture(actor_target, agent.actor_target) ||
            !same_architecture(critic_target, agent.critic_target))
            throw IngestionError("agent checkpoint architecture does not match its config");
        agent.actor = std::move(actor);
        agent.critic = std::move(critic);
        agent.actor_target = std::move(actor_target);
        agent.critic_target = std::move(critic_target);
        agent.actor_opt = std::move(actor_opt);
        agent.critic_opt = std::move(critic_opt);

        const nlohmann::json& tr = j.at("tracker");
        agent.tracker.threshold = tr.at("threshold").get<double>();
        agent.tracker.previous_gain = tr.at("previous_gain").get<double>();
        agent.tracker.best_gain = tr.at("best_gain").get<double>();
        agent.tracker.best_phases.phases = tr.at("best_phases_rad").get<std::vector<double>>();
        agent.tracker.best_phases.quantized = !agent.tracker.best_phases.phases.empty();

        agent.noise.sigma = j.at("noise").at("sigma").get<double>();
        agent.noise.state = j.at("noise").at("state").get<std::vector<double>>();
        agent.state.phases = j.at("state_phases_rad").get<std::vector<double>>();
        if (agent.noise.state.size() != cfg.array_size ||
            agent.state.phases.size() != cfg.array_size)
            throw IngestionError("agent checkpoint state size does not match its config");
        return agent;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("malformed agent checkpoint " + path.string() + ": " + e.what());
    }
}

} // namespace beamlearn
