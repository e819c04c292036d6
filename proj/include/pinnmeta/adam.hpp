#pragma once

#include "pinnmeta/mlp.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace pinnmeta {

struct AdamConfig {
    double learning_rate = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
    AdamConfig config;
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::int64_t step_count = 0;

    AdamState() = default;
    AdamState(std::size_t n, AdamConfig cfg = {});
    static AdamState for_params(const MlpParams& params, AdamConfig cfg = {}) {
        return AdamState(params.size(), cfg);
    }

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update. Throws NumericError naming the offending
// layer if `grads` holds a non-finite entry; the inputs are left untouched.
void adam_step(MlpParams& params, const Eigen::VectorXd& grads, AdamState& state);

// Same update on a bare vector (used by shape-agnostic callers).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

} // namespace pinnmeta
