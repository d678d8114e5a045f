#pragma once

// Central finite-difference gradient checker used by the unit and acceptance
// suites. Kept independent of the backward() implementation path: it only
// evaluates forward losses at perturbed parameters.

#include <cmath>
#include <functional>

#include "faircv/nn.hpp"

namespace faircv::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
};

inline double rel_error(double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
    return std::abs(analytic - numeric) / denom;
}

// `loss_of` evaluates the scalar loss for the current parameters of `net`.
// `analytic` are the gradients produced by backward() for the same loss.
inline GradCheckResult check_parameter_gradients(nn::MLP& net, const nn::Gradients& analytic,
                                                 const std::function<double()>& loss_of, double h = 1e-5) {
    GradCheckResult result;
    auto probe = [&](double& param, double analytic_grad) {
        const double saved = param;
        param = saved + h;
        const double up = loss_of();
        param = saved - h;
        const double down = loss_of();
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic_grad, numeric));
        result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic_grad - numeric));
    };
    for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        for (size_t i = 0; i < layer.weights.data.size(); ++i) probe(layer.weights.data[i], analytic.weights[l].data[i]);
        for (size_t i = 0; i < layer.bias.data.size(); ++i) probe(layer.bias.data[i], analytic.bias[l].data[i]);
    }
    return result;
}

// Same check for the gradient w.r.t. the network input.
inline GradCheckResult check_input_gradients(nn::Matrix& input, const nn::Matrix& analytic,
                                             const std::function<double()>& loss_of, double h = 1e-5) {
    GradCheckResult result;
    for (size_t i = 0; i < input.data.size(); ++i) {
        const double saved = input.data[i];
        input.data[i] = saved + h;
        const double up = loss_of();
        input.data[i] = saved - h;
        const double down = loss_of();
        input.data[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic.data[i], numeric));
        result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic.data[i] - numeric));
    }
    return result;
}

}  // namespace faircv::testing
