#include "pinnmeta/adam.hpp"

#include "pinnmeta/errors.hpp"

#include <cmath>

namespace pinnmeta {

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : config(cfg),
      first_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      second_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

namespace {

void update(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& s) {
    const AdamConfig& c = s.config;
    s.step_count += 1;
    s.first_moment = c.beta1 * s.first_moment + (1.0 - c.beta1) * grads;
    s.second_moment = c.beta2 * s.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step_count));
    params.array() -= c.learning_rate * (s.first_moment.array() / bc1) /
                      ((s.second_moment.array() / bc2).sqrt() + c.epsilon);
}

void check_shapes(Eigen::Index n, const Eigen::VectorXd& grads, const AdamState& s) {
    if (grads.size() != n || s.first_moment.size() != n || s.second_moment.size() != n) {
        throw UsageError("adam_step: parameter, gradient and moment sizes differ");
    }
}

} // namespace

void adam_step(MlpParams& params, const Eigen::VectorXd& grads, AdamState& state) {
    check_shapes(params.values().size(), grads, state);
    for (Eigen::Index i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw NumericError("non-finite gradient in layer " +
                               std::to_string(params.layer_of(static_cast<std::size_t>(i))));
        }
    }
    update(params.values(), grads, state);
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
    check_shapes(params.size(), grads, state);
    if (!grads.allFinite()) {
        throw NumericError("non-finite gradient");
    }
    update(params, grads, state);
}

} // namespace pinnmeta
