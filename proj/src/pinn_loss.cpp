#include "pinnmeta/pinn_loss.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinnmeta {

namespace {

std::string describe_point(const Eigen::MatrixXd& points, Eigen::Index i) {
    std::string s = "point " + std::to_string(i) + " (";
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        s += (r ? ", " : "") + format_double(points(r, i));
    }
    return s + ")";
}

void check_finite(const Eigen::VectorXd& v, const Eigen::MatrixXd& points, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i))) {
            throw NumericError(std::string("non-finite ") + what + " at " + describe_point(points, i));
        }
    }
}

} // namespace

ResidualBatch::ResidualBatch(const MlpParams& params, const TaskSpec& task,
                             const Eigen::MatrixXd& points, const Eigen::VectorXd& noise)
    : task_(task) {
    if (params.input_dim() != task.input_dim() || points.rows() != task.input_dim()) {
        throw UsageError("network / point input width does not match the task");
    }
    if (noise.size() != 0 && noise.size() != points.cols()) {
        throw UsageError("noise vector does not match the collocation points");
    }
    batch_ = std::make_unique<MlpJetBatch>(params, points, task.directions());
    const auto u_t = batch_->d1(Direction::T);
    const auto u_xx = batch_->d2(Direction::X);
    if (task.equation == Equation::Burgers1D) {
        const auto u = batch_->value();
        const auto u_x = batch_->d1(Direction::X);
        residuals_ = (u_t.array() + u.array() * u_x.array() - task.viscosity * u_xx.array()).transpose();
        if (task.noise_weight != 0.0 && noise.size() != 0) {
            residuals_ -= task.noise_weight * noise;
        }
    } else {
        const auto u_yy = batch_->d2(Direction::Y);
        residuals_ = (u_xx.array() + u_yy.array() - u_t.array()).transpose();
    }
    check_finite(residuals_, points, "PDE residual");
}

Eigen::VectorXd ResidualBatch::backward(const Eigen::VectorXd& d_residuals) const {
    ChannelAdjoint seed = batch_->make_adjoint();
    const Eigen::RowVectorXd w = d_residuals.transpose();
    if (task_.equation == Equation::Burgers1D) {
        seed.value() = w.array() * batch_->d1(Direction::X).array();
        seed.d1(Direction::X) = w.array() * batch_->value().array();
        seed.d2(Direction::X) = -task_.viscosity * w;
        seed.d1(Direction::T) = w;
    } else {
        seed.d2(Direction::X) = w;
        seed.d2(Direction::Y) = w;
        seed.d1(Direction::T) = -w;
    }
    return batch_->backward(seed);
}

ValueBatch::ValueBatch(const MlpParams& params, const Eigen::MatrixXd& points) {
    if (points.rows() != params.input_dim()) {
        throw UsageError("point width does not match the network input");
    }
    batch_ = std::make_unique<MlpJetBatch>(params, points, DirectionSet::value_only());
    values_ = batch_->value().transpose();
    check_finite(values_, points, "network value");
}

Eigen::VectorXd ValueBatch::backward(const Eigen::VectorXd& d_values) const {
    ChannelAdjoint seed = batch_->make_adjoint();
    seed.value() = d_values.transpose();
    return batch_->backward(seed);
}

ResidualLoss residual_loss(const MlpParams& params, const TaskSpec& task,
                           const Eigen::MatrixXd& points, const Eigen::VectorXd& noise,
                           const Eigen::VectorXd& offsets) {
    constexpr Eigen::Index kBlock = 128;
    const Eigen::Index n = points.cols();
    if (n == 0) {
        throw UsageError("residual loss needs at least one collocation point");
    }
    if (offsets.size() != 0 && offsets.size() != n) {
        throw UsageError("offset vector does not match the collocation points");
    }
    if (noise.size() != 0 && noise.size() != n) {
        throw UsageError("noise vector does not match the collocation points");
    }
    ResidualLoss out;
    out.residuals.resize(n);
    out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    const double scale = 2.0 / static_cast<double>(n);
    for (Eigen::Index start = 0; start < n; start += kBlock) {
        const Eigen::Index m = std::min(kBlock, n - start);
        const ResidualBatch rb(params, task, points.middleCols(start, m),
                               noise.size() ? Eigen::VectorXd(noise.segment(start, m)) : Eigen::VectorXd());
        Eigen::VectorXd diff = rb.residuals();
        out.residuals.segment(start, m) = diff;
        if (offsets.size()) {
            diff -= offsets.segment(start, m);
        }
        out.value += diff.squaredNorm();
        out.grad += rb.backward(scale * diff);
    }
    out.value /= static_cast<double>(n);
    return out;
}

PinnLosses pinn_losses(const MlpParams& params, const PointSet& points, const TaskSpec& task) {
    PinnLosses out;
    const Eigen::Index nf = points.n_collocation();
    const Eigen::Index nb = points.n_ib();
    if (nf > 0) {
        ResidualLoss rl = residual_loss(params, task, points.collocation, points.noise);
        out.residuals = std::move(rl.residuals);
        out.l_pde = rl.value;
        out.grad_pde = std::move(rl.grad);
    } else {
        out.grad_pde = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    }
    if (nb > 0) {
        if (points.ib_points.rows() != task.input_dim()) {
            throw UsageError("ib point width does not match the task");
        }
        const ValueBatch vb(params, points.ib_points);
        out.ib_errors = vb.values() - points.ib_targets;
        out.l_data = out.ib_errors.squaredNorm() / static_cast<double>(nb);
        out.grad_data = vb.backward((2.0 / static_cast<double>(nb)) * out.ib_errors);
    } else {
        out.grad_data = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    }
    return out;
}

Eigen::MatrixXd ib_features(const PointSet& points) { return points.ib_points.transpose(); }

GamConfig with_domain_bounds(GamConfig config, const TaskSpec& task) {
    config.bounds = {{-1.0, 1.0}};
    if (task.equation == Equation::Heat2D) {
        config.bounds.push_back({-1.0, 1.0});
    }
    config.bounds.push_back({0.0, 1.0});
    return config;
}

GamSupportLoss gam_support_loss(const MlpParams& params, const PointSet& points,
                                const TaskSpec& task, const GamConfig& config, GamLossMode mode,
                                const GamModel* frozen) {
    GamSupportLoss out;
    out.pinn = pinn_losses(params, points, task);
    const Eigen::MatrixXd features = ib_features(points);
    const Eigen::VectorXd& r = out.pinn.ib_errors;
    if (frozen) {
        out.fit.model = *frozen;
    } else {
        const GamConfig cfg = with_domain_bounds(config, task);
        out.fit = mode == GamLossMode::SmoothedResidual
                      ? fit_gam(features, r, cfg, FitTarget::Signed)
                      : fit_gam(features, r.cwiseAbs2(), cfg, FitTarget::Squared);
    }
    const GamLoss loss = gam_loss(out.fit.model, r, features, mode);
    out.l_gam = loss.value;
    if (mode == GamLossMode::SmoothedResidual) {
        const ValueBatch vb(params, points.ib_points);
        out.grad_gam = vb.backward(loss.d_residuals);
    } else {
        out.grad_gam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    }
    return out;
}

} // namespace pinnmeta
