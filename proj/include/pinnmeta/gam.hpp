#pragma once

// Generalized additive model, prediction = intercept + sum_j f_j(v_j), where
// every f_j is a cubic B-spline with a second-difference coefficient penalty
// (a P-spline). Fitting is by backfitting; each smooth is centered on the
// training points so the intercept carries the mean. Backfitting stops once
// a cycle's change (see GamFitReport) drops below the tolerance.

#include "pinnmeta/bspline.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace pinnmeta {

struct GamConfig {
    int n_basis = 12;
    double lambda = 1e-3;
    double tolerance = 1e-6;
    int max_cycles = 100;
    // Knot range per feature. Empty: use the training data range.
    std::vector<std::pair<double, double>> bounds;
};

// What the model was fit to; gam_loss checks it against the requested mode.
enum class FitTarget { Signed, Squared };

struct Smooth {
    BSplineBasis basis;
    Eigen::VectorXd coefficients;
    double lambda = 0.0;

    double operator()(double v) const { return basis.evaluate(v).dot(coefficients); }
};

struct GamModel {
    double intercept = 0.0;
    std::vector<Smooth> smooths;
    FitTarget target = FitTarget::Signed;

    std::size_t num_features() const { return smooths.size(); }
};

// Cycle change: size of one backfitting sweep in the norm of the penalized
// objective, sqrt((|dF|^2 + sum_j lambda |D dc_j|^2) / n), where dF is the
// change of the fitted values and dc_j that of smooth j's coefficients.
struct GamFitReport {
    int backfit_iterations = 0;
    double final_change = 0.0;
    double training_rmse = 0.0;
    // Change of every cycle, in order; never increases.
    std::vector<double> change_history;
};

struct GamFit {
    GamModel model;
    GamFitReport report;
};

// `features` is n x d (one row per observation).
// Throws DegenerateFitError for fewer than two rows and UsageError when
// lambda = 0 leaves more basis functions than rows, or on bad shapes.
GamFit fit_gam(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
               const GamConfig& config, FitTarget target = FitTarget::Signed);

double predict(const GamModel& model, std::span<const double> point);
// Row-wise prediction for an n x d feature table.
Eigen::VectorXd predict(const GamModel& model, const Eigen::MatrixXd& features);

enum class GamLossMode { SmoothedResidual, LiteralMean };

struct GamLoss {
    double value = 0.0;
    // d value / d r_i, with the model predictions held constant.
    Eigen::VectorXd d_residuals;
    // Model prediction at each point.
    Eigen::VectorXd predictions;
};

// SmoothedResidual: model fit to r,   L = mean (r_i - g_i)^2.
// LiteralMean:      model fit to r^2, L = mean g_i (no dependence on r).
GamLoss gam_loss(const GamModel& model, const Eigen::VectorXd& residuals,
                 const Eigen::MatrixXd& points, GamLossMode mode);

// Fits the model the loss mode expects (r or r^2) and evaluates the loss.
struct GamLossFit {
    GamFit fit;
    GamLoss loss;
};
GamLossFit fit_and_gam_loss(const Eigen::MatrixXd& points, const Eigen::VectorXd& residuals,
                            GamLossMode mode, const GamConfig& config);

// Text dump for plotting:
//   pinnmeta-gam 1
//   intercept <v>
//   target signed|squared
//   features <d>
//   feature <j> degree <p> lambda <l> range <lo> <hi>
//   knots <n> k0 k1 ...
//   coefficients <m> c0 c1 ...
void write_gam(std::ostream& os, const GamModel& model);

} // namespace pinnmeta
