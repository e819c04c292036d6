#pragma once

// PINN loss terms over a point set, with parameter gradients from the
// batched jet engine.

#include "pinnmeta/gam.hpp"
#include "pinnmeta/jet_batch.hpp"
#include "pinnmeta/pde.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>

namespace pinnmeta {

// PDE residual at every collocation point, plus the reverse map from
// dL/dr to the parameter gradient.
class ResidualBatch {
public:
    // `noise` holds one epsilon per column of `points`, or is empty.
    // Throws NumericError naming the first point with a non-finite residual.
    ResidualBatch(const MlpParams& params, const TaskSpec& task, const Eigen::MatrixXd& points,
                  const Eigen::VectorXd& noise = {});

    const Eigen::VectorXd& residuals() const { return residuals_; }
    Eigen::VectorXd backward(const Eigen::VectorXd& d_residuals) const;

private:
    TaskSpec task_;
    std::unique_ptr<MlpJetBatch> batch_;
    Eigen::VectorXd residuals_;
};

// Network values at a set of points, with the reverse map from dL/du.
class ValueBatch {
public:
    ValueBatch(const MlpParams& params, const Eigen::MatrixXd& points);

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd backward(const Eigen::VectorXd& d_values) const;

private:
    std::unique_ptr<MlpJetBatch> batch_;
    Eigen::VectorXd values_;
};

struct ResidualLoss {
    double value = 0.0;
    Eigen::VectorXd residuals;
    Eigen::VectorXd grad;
};

// L = mean (r_i - offset_i)^2 over collocation points, where r is the PDE
// residual (noise included) and `offsets` is empty or one constant per point.
// Forward and reverse passes run together over small blocks of points so the
// layer activations stay in cache; the result equals the unblocked sum.
ResidualLoss residual_loss(const MlpParams& params, const TaskSpec& task,
                           const Eigen::MatrixXd& points, const Eigen::VectorXd& noise = {},
                           const Eigen::VectorXd& offsets = {});

struct PinnLosses {
    double l_pde = 0.0;
    double l_data = 0.0;
    Eigen::VectorXd grad_pde;
    Eigen::VectorXd grad_data;
    Eigen::VectorXd residuals; // PDE residual per collocation point
    Eigen::VectorXd ib_errors; // u_hat - u per ib point

    double total() const { return l_pde + l_data; }
    Eigen::VectorXd grad() const { return grad_pde + grad_data; }
};

// L_pde = mean residual^2 over collocation points (noise included when
// p > 0), L_data = mean (u_hat - u)^2 over ib points. Throws UsageError if
// the network input width does not match the task.
PinnLosses pinn_losses(const MlpParams& params, const PointSet& points, const TaskSpec& task);

// Feature table (one row per ib point) and knot ranges used for the
// per-task GAM: the ib coordinates over the task domain.
Eigen::MatrixXd ib_features(const PointSet& points);
GamConfig with_domain_bounds(GamConfig config, const TaskSpec& task);

struct GamSupportLoss {
    PinnLosses pinn;
    double l_gam = 0.0;
    Eigen::VectorXd grad_gam;
    GamFit fit;

    double total() const { return pinn.l_pde + l_gam; }
    Eigen::VectorXd grad() const { return pinn.grad_pde + grad_gam; }
};

// L_pde + L_gam: the GAM is fit to the ib errors over ib coordinates (or to
// their squares in LiteralMean mode) and its predictions are held constant
// for the gradient. With `frozen` set, that model is reused instead of
// refitting.
GamSupportLoss gam_support_loss(const MlpParams& params, const PointSet& points,
                                const TaskSpec& task, const GamConfig& config, GamLossMode mode,
                                const GamModel* frozen = nullptr);

} // namespace pinnmeta
