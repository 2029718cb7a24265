// SPDX-License-Identifier: Apache-2.0
//
// Central-finite-difference gradient oracle shared by the unit and
// acceptance suites. Kept independent of the backward pass it checks: the
// numeric side only ever calls forward().

#ifndef BEAMLEARN_TESTS_GRADCHECK_HPP
#define BEAMLEARN_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "beamlearn/network.hpp"

namespace testsupport {

inline double loss_of(const beamlearn::DenseNetwork& net, const std::vector<double>& x,
                      const std::vector<double>& loss_weights) {
    const std::vector<double> y = beamlearn::forward(net, x);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        loss += loss_weights[i] * y[i];
    return loss;
}

// Max relative error between analytic and central-difference gradients of
// loss = sum_i weight_i * y_i over every parameter and every input entry.
inline double max_gradient_rel_error(const beamlearn::DenseNetwork& net,
                                     const std::vector<double>& x,
                                     const std::vector<double>& loss_weights,
                                     double eps = 1e-5) {
    using namespace beamlearn;

    ForwardCache cache;
    forward(net, x, cache);
    const BackwardResult analytic = backward(net, cache, loss_weights);

    double max_rel = 0.0;
    const auto update = [&max_rel](double a, double n) {
        const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
        max_rel = std::max(max_rel, std::abs(a - n) / denom);
    };

    DenseNetwork probe = net;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t i = 0; i < net.layers[l].weights.size(); ++i) {
            const double saved = probe.layers[l].weights[i];
            probe.layers[l].weights[i] = saved + eps;
            const double up = loss_of(probe, x, loss_weights);
            probe.layers[l].weights[i] = saved - eps;
            const double down = loss_of(probe, x, loss_weights);
            probe.layers[l].weights[i] = saved;
            update(analytic.param_grads.weights[l][i], (up - down) / (2.0 * eps));
        }
        for (std::size_t i = 0; i < net.layers[l].biases.size(); ++i) {
            const double saved = probe.layers[l].biases[i];
            probe.layers[l].biases[i] = saved + eps;
            const double up = loss_of(probe, x, loss_weights);
            probe.layers[l].biases[i] = saved - eps;
            const double down = loss_of(probe, x, loss_weights);
            probe.layers[l].biases[i] = saved;
            update(analytic.param_grads.biases[l][i], (up - down) / (2.0 * eps));
        }
    }

    std::vector<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = xp[i];
        xp[i] = saved + eps;
        const double up = loss_of(net, xp, loss_weights);
        xp[i] = saved - eps;
        const double down = loss_of(net, xp, loss_weights);
        xp[i] = saved;
        update(analytic.input_grad[i], (up - down) / (2.0 * eps));
    }
    return max_rel;
}

} // namespace testsupport

#endif // BEAMLEARN_TESTS_GRADCHECK_HPP
