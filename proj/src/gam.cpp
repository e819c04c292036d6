#include "pinnmeta/gam.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pinnmeta {

namespace {

// Solver for one smooth's penalized normal equations (B'B + lambda D'D) c = B'r.
class PenalizedSolver {
public:
    PenalizedSolver(const Eigen::MatrixXd& design, double lambda) : design_t_(design.transpose()) {
        const Eigen::MatrixXd d = second_difference(static_cast<int>(design.cols()));
        Eigen::MatrixXd system = design_t_ * design;
        if (lambda > 0.0) {
            system += lambda * d.transpose() * d;
        }
        llt_.compute(system);
        if (llt_.info() != Eigen::Success || !llt_.matrixLLT().diagonal().allFinite() ||
            (llt_.matrixLLT().diagonal().array().square() <= 1e-14 * system.diagonal().maxCoeff()).any()) {
            // Singular system (e.g. a feature with a single distinct value):
            // fall back to the minimum-norm solution.
            cod_.compute(system);
            use_cod_ = true;
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs_values) const {
        const Eigen::VectorXd rhs = design_t_ * rhs_values;
        return use_cod_ ? Eigen::VectorXd(cod_.solve(rhs)) : Eigen::VectorXd(llt_.solve(rhs));
    }

private:
    Eigen::MatrixXd design_t_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    bool use_cod_ = false;
};

bool target_matches(FitTarget target, GamLossMode mode) {
    return (mode == GamLossMode::SmoothedResidual && target == FitTarget::Signed) ||
           (mode == GamLossMode::LiteralMean && target == FitTarget::Squared);
}

} // namespace

GamFit fit_gam(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
               const GamConfig& config, FitTarget target) {
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (n < 2) {
        throw DegenerateFitError("GAM fit needs at least two rows, got " + std::to_string(n));
    }
    if (d < 1) {
        throw UsageError("GAM fit needs at least one feature");
    }
    if (targets.size() != n) {
        throw UsageError("GAM fit: target count does not match feature rows");
    }
    if (!targets.allFinite() || !features.allFinite()) {
        throw UsageError("GAM fit: non-finite input");
    }
    if (config.lambda < 0.0) {
        throw UsageError("GAM smoothing weight must be non-negative");
    }
    if (config.lambda == 0.0 && config.n_basis > n) {
        throw UsageError("unpenalized GAM with more basis functions than rows");
    }
    if (!config.bounds.empty() && static_cast<Eigen::Index>(config.bounds.size()) != d) {
        throw UsageError("GAM bounds must be given for every feature");
    }

    GamFit out;
    GamModel& model = out.model;
    model.target = target;
    model.intercept = targets.mean();

    std::vector<Eigen::MatrixXd> designs;
    std::vector<PenalizedSolver> solvers;
    std::vector<Eigen::VectorXd> fitted;
    for (Eigen::Index j = 0; j < d; ++j) {
        double lo = 0.0;
        double hi = 0.0;
        if (config.bounds.empty()) {
            lo = features.col(j).minCoeff();
            hi = features.col(j).maxCoeff();
        } else {
            std::tie(lo, hi) = config.bounds[static_cast<std::size_t>(j)];
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        Smooth s;
        s.basis = BSplineBasis(lo, hi, config.n_basis);
        s.coefficients = Eigen::VectorXd::Zero(config.n_basis);
        s.lambda = config.lambda;
        designs.push_back(s.basis.design(features.col(j)));
        solvers.emplace_back(designs.back(), config.lambda);
        fitted.push_back(Eigen::VectorXd::Zero(n));
        model.smooths.push_back(std::move(s));
    }

    Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
    const Eigen::MatrixXd diff = second_difference(config.n_basis);
    GamFitReport& report = out.report;
    for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
        const Eigen::VectorXd total_before = total;
        double penalty_step = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const Eigen::VectorXd partial =
                targets.array() - model.intercept - (total - fitted[j]).array();
            Eigen::VectorXd c = solvers[j].solve(partial);
            // B-splines sum to one, so a constant shift of c centers f_j.
            const Eigen::VectorXd f = designs[j] * c;
            c.array() -= f.mean();
            Eigen::VectorXd& old = model.smooths[j].coefficients;
            penalty_step += config.lambda * (diff * (c - old)).squaredNorm();
            old = c;
            total -= fitted[j];
            fitted[j] = designs[j] * c;
            total += fitted[j];
        }
        // Each cycle is one exact block-coordinate sweep over a convex
        // quadratic, which contracts in that quadratic's own norm; measured
        // there, the step never grows from one cycle to the next.
        const double change =
            std::sqrt(((total - total_before).squaredNorm() + penalty_step) / static_cast<double>(n));
        report.backfit_iterations = cycle;
        report.final_change = change;
        report.change_history.push_back(change);
        if (change < config.tolerance) {
            break;
        }
    }
    const Eigen::VectorXd resid = targets.array() - model.intercept - total.array();
    report.training_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
    return out;
}

double predict(const GamModel& model, std::span<const double> point) {
    if (point.size() != model.num_features()) {
        throw UsageError("GAM predict: point has " + std::to_string(point.size()) +
                         " features, model has " + std::to_string(model.num_features()));
    }
    double v = model.intercept;
    for (std::size_t j = 0; j < point.size(); ++j) {
        v += model.smooths[j](point[j]);
    }
    return v;
}

Eigen::VectorXd predict(const GamModel& model, const Eigen::MatrixXd& features) {
    if (static_cast<std::size_t>(features.cols()) != model.num_features()) {
        throw UsageError("GAM predict: feature table width does not match the model");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Constant(features.rows(), model.intercept);
    for (std::size_t j = 0; j < model.num_features(); ++j) {
        out += model.smooths[j].basis.design(features.col(static_cast<Eigen::Index>(j))) *
               model.smooths[j].coefficients;
    }
    return out;
}

GamLoss gam_loss(const GamModel& model, const Eigen::VectorXd& residuals,
                 const Eigen::MatrixXd& points, GamLossMode mode) {
    if (!target_matches(model.target, mode)) {
        throw UsageError(mode == GamLossMode::SmoothedResidual
                             ? "smoothed-residual loss needs a model fit to signed residuals"
                             : "literal-mean loss needs a model fit to squared residuals");
    }
    if (residuals.size() != points.rows() || residuals.size() == 0) {
        throw UsageError("GAM loss: residuals and points do not line up");
    }
    const double k = static_cast<double>(residuals.size());
    GamLoss out;
    out.predictions = predict(model, points);
    if (mode == GamLossMode::SmoothedResidual) {
        const Eigen::VectorXd diff = residuals - out.predictions;
        out.value = diff.squaredNorm() / k;
        out.d_residuals = (2.0 / k) * diff;
    } else {
        out.value = out.predictions.mean();
        out.d_residuals = Eigen::VectorXd::Zero(residuals.size());
    }
    return out;
}

GamLossFit fit_and_gam_loss(const Eigen::MatrixXd& points, const Eigen::VectorXd& residuals,
                            GamLossMode mode, const GamConfig& config) {
    GamLossFit out;
    if (mode == GamLossMode::SmoothedResidual) {
        out.fit = fit_gam(points, residuals, config, FitTarget::Signed);
    } else {
        out.fit = fit_gam(points, residuals.cwiseAbs2(), config, FitTarget::Squared);
    }
    out.loss = gam_loss(out.fit.model, residuals, points, mode);
    return out;
}

void write_gam(std::ostream& os, const GamModel& model) {
    os << "pinnmeta-gam 1\n";
    os << "intercept " << format_double(model.intercept) << '\n';
    os << "target " << (model.target == FitTarget::Signed ? "signed" : "squared") << '\n';
    os << "features " << model.num_features() << '\n';
    for (std::size_t j = 0; j < model.num_features(); ++j) {
        const Smooth& s = model.smooths[j];
        os << "feature " << j << " degree " << s.basis.degree() << " lambda "
           << format_double(s.lambda) << " range " << format_double(s.basis.lo()) << ' '
           << format_double(s.basis.hi()) << '\n';
        os << "knots " << s.basis.knots().size();
        for (double k : s.basis.knots()) {
            os << ' ' << format_double(k);
        }
        os << "\ncoefficients " << s.coefficients.size();
        for (Eigen::Index i = 0; i < s.coefficients.size(); ++i) {
            os << ' ' << format_double(s.coefficients(i));
        }
        os << '\n';
    }
}

} // namespace pinnmeta
