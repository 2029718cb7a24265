// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense feed-forward networks with manual backpropagation and an
// adaptive-moment optimizer. Just enough machinery for a deterministic
// actor-critic pair; no autograd, no GPU.

#ifndef BEAMLEARN_NETWORK_HPP
#define BEAMLEARN_NETWORK_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beamlearn/rng.hpp"

namespace beamlearn {

enum class Activation { Linear, Relu, Tanh, PiTanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::Linear;
    std::vector<double> weights; // out x in, row-major
    std::vector<double> biases;  // out
};

struct DenseNetwork {
    std::vector<DenseLayer> layers;

    std::size_t input_size() const { return layers.front().in; }
    std::size_t output_size() const { return layers.back().out; }
    std::size_t parameter_count() const;
};

bool same_architecture(const DenseNetwork& a, const DenseNetwork& b);

// Uniform fan-in initialization, U(-1/sqrt(in), 1/sqrt(in)) per layer. When
// final_layer_bound > 0 the last layer uses U(-bound, bound) instead, which
// keeps a tanh output head away from saturation at the start.
DenseNetwork make_network(const std::vector<std::size_t>& layer_sizes,
                          const std::vector<Activation>& activations, Rng& rng,
                          double final_layer_bound = 0.0);

// Intermediates of one forward pass, reusable across calls to avoid
// reallocation. backward() validates the cache shape against the network.
struct ForwardCache {
    std::vector<std::vector<double>> inputs; // inputs[l]: input vector of layer l
    std::vector<std::vector<double>> pre;    // pre[l]: affine output of layer l
    std::vector<double> output;              // activation of the last layer
};

void forward(const DenseNetwork& net, std::span<const double> x, ForwardCache& cache);
std::vector<double> forward(const DenseNetwork& net, std::span<const double> x);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const DenseNetwork& net);
    void scale(double factor);
};

// Backpropagates d(loss)/d(output) through the cached pass. Parameter
// gradients are ADDED into `grads` (callers accumulate over a batch);
// returns d(loss)/d(input).
std::vector<double> backward_accumulate(const DenseNetwork& net, const ForwardCache& cache,
                                        std::span<const double> upstream, Gradients& grads);

struct BackwardResult {
    Gradients param_grads;
    std::vector<double> input_grad;
};

BackwardResult backward(const DenseNetwork& net, const ForwardCache& cache,
                        std::span<const double> upstream);

// Input gradient only; skips the parameter outer products. Used where a
// network is differentiated through rather than trained.
std::vector<double> backward_input_only(const DenseNetwork& net, const ForwardCache& cache,
                                        std::span<const double> upstream);

// Adam with bias correction.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
};

AdamState make_adam(const DenseNetwork& net, double learning_rate);

// One optimizer step. Rejects non-finite gradients (UsageError) and verifies
// the parameters stay finite afterwards.
void apply_update(DenseNetwork& net, const Gradients& grads, AdamState& opt);

// Hard copy of all parameters; architectures must match exactly.
void copy_into_target(const DenseNetwork& source, DenseNetwork& target);

// Checkpoints: JSON manifest (architecture, optimizer constants, step) with
// base64 blobs of the flat little-endian parameter/moment arrays.
nlohmann::json network_to_json(const DenseNetwork& net, const AdamState* opt = nullptr);
DenseNetwork network_from_json(const nlohmann::json& j, AdamState* opt = nullptr);

void save_checkpoint(const DenseNetwork& net, const AdamState* opt,
                     const std::filesystem::path& path);

struct Checkpoint {
    DenseNetwork network;
    std::optional<AdamState> optimizer;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace beamlearn

#endif // BEAMLEARN_NETWORK_HPP
