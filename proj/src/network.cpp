// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "beamlearn/codebook.hpp"
#include "beamlearn/errors.hpp"

namespace beamlearn {

namespace {

double activate(Activation a, double z) {
    switch (a) {
    case Activation::Linear: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::PiTanh: return kPi * std::tanh(z);
    }
    return z;
}

// Derivative d(activation)/dz, from the pre-activation z and the activation
// value y (whichever is cheaper for each kind).
double activate_derivative(Activation a, double z, double y) {
    switch (a) {
    case Activation::Linear: return 1.0;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::PiTanh: return kPi - y * y / kPi; // pi * (1 - tanh^2)
    }
    return 1.0;
}

void check_cache(const DenseNetwork& net, const ForwardCache& cache,
                 std::span<const double> upstream) {
    const std::size_t n = net.layers.size();
    if (cache.inputs.size() != n || cache.pre.size() != n)
        throw UsageError("forward cache does not match this network (stale cache?)");
    for (std::size_t l = 0; l < n; ++l)
        if (cache.inputs[l].size() != net.layers[l].in || cache.pre[l].size() != net.layers[l].out)
            throw UsageError("forward cache does not match this network (stale cache?)");
    if (cache.output.size() != net.output_size() || upstream.size() != net.output_size())
        throw UsageError("upstream gradient size does not match the network output");
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

void adam_step_span(std::vector<double>& params, const std::vector<double>& grads,
                    std::vector<double>& m, std::vector<double>& v, double lr_corrected,
                    double beta1, double beta2, double beta2_corr, double epsilon) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double vhat = v[i] / beta2_corr;
        params[i] -= lr_corrected * m[i] / (std::sqrt(vhat) + epsilon);
    }
}

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<double>& values) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
    const std::size_t n = values.size() * sizeof(double);
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        unsigned int chunk = static_cast<unsigned int>(bytes[i]) << 16;
        if (i + 1 < n)
            chunk |= static_cast<unsigned int>(bytes[i + 1]) << 8;
        if (i + 2 < n)
            chunk |= bytes[i + 2];
        out.push_back(kB64Alphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 0x3F]);
        out.push_back(i + 1 < n ? kB64Alphabet[(chunk >> 6) & 0x3F] : '=');
        out.push_back(i + 2 < n ? kB64Alphabet[chunk & 0x3F] : '=');
    }
    return out;
}

std::vector<double> base64_decode(const std::string& text, std::size_t expected_doubles) {
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    int accum = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r')
            continue;
        const char* pos = std::strchr(kB64Alphabet, c);
        if (pos == nullptr)
            throw IngestionError("invalid base64 character in checkpoint blob");
        accum = (accum << 6) | static_cast<int>(pos - kB64Alphabet);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            bytes.push_back(static_cast<unsigned char>((accum >> bits) & 0xFF));
        }
    }
    if (bytes.size() != expected_doubles * sizeof(double))
        throw IngestionError("checkpoint blob holds " + std::to_string(bytes.size()) +
                             " bytes, expected " +
                             std::to_string(expected_doubles * sizeof(double)));
    std::vector<double> values(expected_doubles);
    std::memcpy(values.data(), bytes.data(), bytes.size());
    return values;
}

std::vector<double> flatten_params(const std::vector<std::vector<double>>& w,
                                   const std::vector<std::vector<double>>& b) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < w.size(); ++l) {
        flat.insert(flat.end(), w[l].begin(), w[l].end());
        flat.insert(flat.end(), b[l].begin(), b[l].end());
    }
    return flat;
}

} // namespace

const char* to_string(Activation a) {
    switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::PiTanh: return "pi_tanh";
    }
    return "linear";
}

Activation activation_from_string(const std::string& name) {
    if (name == "linear")
        return Activation::Linear;
    if (name == "relu")
        return Activation::Relu;
    if (name == "tanh")
        return Activation::Tanh;
    if (name == "pi_tanh")
        return Activation::PiTanh;
    throw IngestionError("unknown activation '" + name + "'");
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers)
        n += l.weights.size() + l.biases.size();
    return n;
}

bool same_architecture(const DenseNetwork& a, const DenseNetwork& b) {
    if (a.layers.size() != b.layers.size())
        return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const DenseLayer& x = a.layers[l];
        const DenseLayer& y = b.layers[l];
        if (x.in != y.in || x.out != y.out || x.activation != y.activation)
            return false;
    }
    return true;
}

DenseNetwork make_network(const std::vector<std::size_t>& layer_sizes,
                          const std::vector<Activation>& activations, Rng& rng,
                          double final_layer_bound) {
    if (layer_sizes.size() < 2)
        throw ConfigError("a network needs at least an input and an output layer");
    if (activations.size() != layer_sizes.size() - 1)
        throw ConfigError("need one activation per layer: " +
                          std::to_string(layer_sizes.size() - 1) + " expected, " +
                          std::to_string(activations.size()) + " given");
    for (std::size_t s : layer_sizes)
        if (s == 0)
            throw ConfigError("layer sizes must be positive");

    DenseNetwork net;
    net.layers.resize(layer_sizes.size() - 1);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        DenseLayer& layer = net.layers[l];
        layer.in = layer_sizes[l];
        layer.out = layer_sizes[l + 1];
        layer.activation = activations[l];
        const bool last = (l + 1 == net.layers.size());
        const double bound = (last && final_layer_bound > 0.0)
                                 ? final_layer_bound
                                 : 1.0 / std::sqrt(static_cast<double>(layer.in));
        layer.weights.resize(layer.out * layer.in);
        layer.biases.resize(layer.out);
        for (double& w : layer.weights)
            w = rng.uniform(-bound, bound);
        for (double& b : layer.biases)
            b = rng.uniform(-bound, bound);
    }
    return net;
}

void forward(const DenseNetwork& net, std::span<const double> x, ForwardCache& cache) {
    if (x.size() != net.input_size())
        throw UsageError("forward input size " + std::to_string(x.size()) +
                         " does not match network input " + std::to_string(net.input_size()));

    const std::size_t n = net.layers.size();
    cache.inputs.resize(n);
    cache.pre.resize(n);

    cache.inputs[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < n; ++l) {
        const DenseLayer& layer = net.layers[l];
        const std::vector<double>& in = cache.inputs[l];
        std::vector<double>& z = cache.pre[l];
        z.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* row = layer.weights.data() + o * layer.in;
            double acc = layer.biases[o];
            for (std::size_t i = 0; i < layer.in; ++i)
                acc += row[i] * in[i];
            z[o] = acc;
        }
        std::vector<double>& act = (l + 1 < n) ? cache.inputs[l + 1] : cache.output;
        act.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o)
            act[o] = activate(layer.activation, z[o]);
    }
}

std::vector<double> forward(const DenseNetwork& net, std::span<const double> x) {
    ForwardCache cache;
    forward(net, x, cache);
    return cache.output;
}

Gradients Gradients::zeros_like(const DenseNetwork& net) {
    Gradients g;
    g.weights.resize(net.layers.size());
    g.biases.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g.weights[l].assign(net.layers[l].weights.size(), 0.0);
        g.biases[l].assign(net.layers[l].biases.size(), 0.0);
    }
    return g;
}

void Gradients::scale(double factor) {
    for (auto& w : weights)
        for (double& x : w)
            x *= factor;
    for (auto& b : biases)
        for (double& x : b)
            x *= factor;
}

namespace {

// Shared delta-propagation core. When `grads` is non-null the parameter
// gradients are accumulated; the return value is d(loss)/d(input).
std::vector<double> backprop(const DenseNetwork& net, const ForwardCache& cache,
                             std::span<const double> upstream, Gradients* grads) {
    check_cache(net, cache, upstream);
    if (grads != nullptr &&
        (grads->weights.size() != net.layers.size() || grads->biases.size() != net.layers.size()))
        throw UsageError("gradient accumulator does not match this network");

    const std::size_t n = net.layers.size();
    std::vector<double> delta(upstream.begin(), upstream.end());
    for (std::size_t li = n; li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        const std::vector<double>& z = cache.pre[li];
        const std::vector<double>& y = (li + 1 < n) ? cache.inputs[li + 1] : cache.output;
        for (std::size_t o = 0; o < layer.out; ++o)
            delta[o] *= activate_derivative(layer.activation, z[o], y[o]);

        if (grads != nullptr) {
            const std::vector<double>& in = cache.inputs[li];
            std::vector<double>& wg = grads->weights[li];
            std::vector<double>& bg = grads->biases[li];
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                double* row = wg.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i)
                    row[i] += d * in[i];
                bg[o] += d;
            }
        }

        std::vector<double> below(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            const double* row = layer.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i)
                below[i] += d * row[i];
        }
        delta = std::move(below);
    }
    return delta;
}

} // namespace

std::vector<double> backward_accumulate(const DenseNetwork& net, const ForwardCache& cache,
                                        std::span<const double> upstream, Gradients& grads) {
    return backprop(net, cache, upstream, &grads);
}

BackwardResult backward(const DenseNetwork& net, const ForwardCache& cache,
                        std::span<const double> upstream) {
    BackwardResult result;
    result.param_grads = Gradients::zeros_like(net);
    result.input_grad = backprop(net, cache, upstream, &result.param_grads);
    return result;
}

std::vector<double> backward_input_only(const DenseNetwork& net, const ForwardCache& cache,
                                        std::span<const double> upstream) {
    return backprop(net, cache, upstream, nullptr);
}

AdamState make_adam(const DenseNetwork& net, double learning_rate) {
    if (learning_rate <= 0.0)
        throw ConfigError("learning rate must be positive");
    AdamState opt;
    opt.learning_rate = learning_rate;
    opt.m_weights.resize(net.layers.size());
    opt.v_weights.resize(net.layers.size());
    opt.m_biases.resize(net.layers.size());
    opt.v_biases.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        opt.m_weights[l].assign(net.layers[l].weights.size(), 0.0);
        opt.v_weights[l].assign(net.layers[l].weights.size(), 0.0);
        opt.m_biases[l].assign(net.layers[l].biases.size(), 0.0);
        opt.v_biases[l].assign(net.layers[l].biases.size(), 0.0);
    }
    return opt;
}

void apply_update(DenseNetwork& net, const Gradients& grads, AdamState& opt) {
    const std::size_t n = net.layers.size();
    if (grads.weights.size() != n || grads.biases.size() != n || opt.m_weights.size() != n)
        throw UsageError("gradient/optimizer shape does not match this network");
    for (std::size_t l = 0; l < n; ++l) {
        if (grads.weights[l].size() != net.layers[l].weights.size() ||
            grads.biases[l].size() != net.layers[l].biases.size())
            throw UsageError("gradient shape does not match this network");
        if (!all_finite(grads.weights[l]) || !all_finite(grads.biases[l]))
            throw UsageError("non-finite gradient; update rejected");
    }

    opt.step += 1;
    const double beta1_corr = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double beta2_corr = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    const double lr_corrected = opt.learning_rate / beta1_corr;
    for (std::size_t l = 0; l < n; ++l) {
        adam_step_span(net.layers[l].weights, grads.weights[l], opt.m_weights[l],
                       opt.v_weights[l], lr_corrected, opt.beta1, opt.beta2, beta2_corr,
                       opt.epsilon);
        adam_step_span(net.layers[l].biases, grads.biases[l], opt.m_biases[l], opt.v_biases[l],
                       lr_corrected, opt.beta1, opt.beta2, beta2_corr, opt.epsilon);
    }
    for (std::size_t l = 0; l < n; ++l)
        if (!all_finite(net.layers[l].weights) || !all_finite(net.layers[l].biases))
            throw UsageError("parameters became non-finite after an optimizer step");
}

void copy_into_target(const DenseNetwork& source, DenseNetwork& target) {
    if (!same_architecture(source, target))
        throw UsageError("cannot copy parameters between different architectures");
    for (std::size_t l = 0; l < source.layers.size(); ++l) {
        target.layers[l].weights = source.layers[l].weights;
        target.layers[l].biases = source.layers[l].biases;
    }
}

nlohmann::json network_to_json(const DenseNetwork& net, const AdamState* opt) {
    nlohmann::json j;
    j["format"] = "beamlearn-network-v1";
    std::vector<std::size_t> sizes;
    sizes.push_back(net.input_size());
    std::vector<std::string> acts;
    for (const DenseLayer& l : net.layers) {
        sizes.push_back(l.out);
        acts.emplace_back(to_string(l.activation));
    }
    j["layer_sizes"] = sizes;
    j["activations"] = acts;

    std::vector<std::vector<double>> w, b;
    for (const DenseLayer& l : net.layers) {
        w.push_back(l.weights);
        b.push_back(l.biases);
    }
    j["parameters_b64"] = base64_encode(flatten_params(w, b));

    if (opt != nullptr) {
        nlohmann::json o;
        o["learning_rate"] = opt->learning_rate;
        o["beta1"] = opt->beta1;
        o["beta2"] = opt->beta2;
        o["epsilon"] = opt->epsilon;
        o["step"] = opt->step;
        o["m_b64"] = base64_encode(flatten_params(opt->m_weights, opt->m_biases));
        o["v_b64"] = base64_encode(flatten_params(opt->v_weights, opt->v_biases));
        j["optimizer"] = o;
    }
    return j;
}

namespace {

void unflatten_params(const std::vector<double>& flat, std::vector<std::vector<double>>& w,
                      std::vector<std::vector<double>>& b) {
    std::size_t at = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        std::copy_n(flat.begin() + static_cast<long>(at), w[l].size(), w[l].begin());
        at += w[l].size();
        std::copy_n(flat.begin() + static_cast<long>(at), b[l].size(), b[l].begin());
        at += b[l].size();
    }
}

} // namespace

DenseNetwork network_from_json(const nlohmann::json& j, AdamState* opt) {
    try {
        if (j.value("format", "") != std::string("beamlearn-network-v1"))
            throw IngestionError("unsupported network checkpoint format");
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        const auto acts = j.at("activations").get<std::vector<std::string>>();
        if (sizes.size() < 2 || acts.size() != sizes.size() - 1)
            throw IngestionError("checkpoint architecture is inconsistent");

        DenseNetwork net;
        net.layers.resize(acts.size());
        for (std::size_t l = 0; l < acts.size(); ++l) {
            net.layers[l].in = sizes[l];
            net.layers[l].out = sizes[l + 1];
            net.layers[l].activation = activation_from_string(acts[l]);
            net.layers[l].weights.resize(sizes[l] * sizes[l + 1]);
            net.layers[l].biases.resize(sizes[l + 1]);
        }

        const auto flat =
            base64_decode(j.at("parameters_b64").get<std::string>(), net.parameter_count());
        std::vector<std::vector<double>> w(net.layers.size()), b(net.layers.size());
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            w[l].resize(net.layers[l].weights.size());
            b[l].resize(net.layers[l].biases.size());
        }
        unflatten_params(flat, w, b);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            net.layers[l].weights = std::move(w[l]);
            net.layers[l].biases = std::move(b[l]);
        }

        if (opt != nullptr) {
            if (!j.contains("optimizer"))
                throw IngestionError("checkpoint has no optimizer state");
            const nlohmann::json& o = j.at("optimizer");
            *opt = make_adam(net, o.at("learning_rate").get<double>());
            opt->beta1 = o.at("beta1").get<double>();
            opt->beta2 = o.at("beta2").get<double>();
            opt->epsilon = o.at("epsilon").get<double>();
            opt->step = o.at("step").get<std::uint64_t>();
            const auto m = base64_decode(o.at("m_b64").get<std::string>(), net.parameter_count());
            const auto v = base64_decode(o.at("v_b64").get<std::string>(), net.parameter_count());
            unflatten_params(m, opt->m_weights, opt->m_biases);
            unflatten_params(v, opt->v_weights, opt->v_biases);
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed network checkpoint: ") + e.what());
    }
}

void save_checkpoint(const DenseNetwork& net, const AdamState* opt,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write checkpoint " + path.string());
    out << network_to_json(net, opt).dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("checkpoint " + path.string() + ": " + e.what());
    }
    Checkpoint ck;
    if (j.contains("optimizer")) {
        AdamState opt;
        ck.network = network_from_json(j, &opt);
        ck.optimizer = std::move(opt);
    } else {
        ck.network = network_from_json(j);
    }
    return ck;
}

} // namespace beamlearn
