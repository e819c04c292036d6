#include "pinnmeta/meta.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"
#include "pinnmeta/jet_batch.hpp"
#include "pinnmeta/pinn_loss.hpp"
#include "pinnmeta/seeds.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

namespace pinnmeta {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '_' || c == '-'; }), s.end());
    return s;
}

} // namespace

std::string to_string(Arm arm) {
    switch (arm) {
    case Arm::Random: return "random";
    case Arm::MamlPinn: return "mamlpinn";
    case Arm::GamPinn: return "gampinn";
    }
    return "?";
}

std::string to_string(OuterMode mode) {
    return mode == OuterMode::FirstOrder ? "first-order" : "second-order";
}

std::string to_string(GamLossMode mode) {
    return mode == GamLossMode::SmoothedResidual ? "smoothed-residual" : "literal-mean";
}

Arm parse_arm(const std::string& s) {
    const std::string k = lower(s);
    if (k == "random") return Arm::Random;
    if (k == "mamlpinn" || k == "maml") return Arm::MamlPinn;
    if (k == "gampinn" || k == "gam") return Arm::GamPinn;
    throw UsageError("unknown arm '" + s + "' (random, mamlpinn, gampinn)");
}

OuterMode parse_outer_mode(const std::string& s) {
    const std::string k = lower(s);
    if (k == "firstorder" || k == "first" || k == "fomaml") return OuterMode::FirstOrder;
    if (k == "secondorder" || k == "second") return OuterMode::SecondOrder;
    throw UsageError("unknown outer mode '" + s + "' (first-order, second-order)");
}

GamLossMode parse_gam_mode(const std::string& s) {
    const std::string k = lower(s);
    if (k == "smoothedresidual" || k == "smoothed") return GamLossMode::SmoothedResidual;
    if (k == "literalmean" || k == "literal") return GamLossMode::LiteralMean;
    throw UsageError("unknown GAM loss mode '" + s + "' (smoothed-residual, literal-mean)");
}

void MetaConfig::validate() const {
    if (tasks_per_batch < 1 || inner_steps < 1 || support_nf < 1 || support_nib < 1 ||
        query_nf < 1 || query_nib < 1 || hidden_layers < 1 || width < 1 || threads < 1) {
        throw UsageError("meta configuration counts must be >= 1");
    }
    if (meta_epochs < 0) {
        throw UsageError("meta_epochs must be >= 0");
    }
    if (!(inner_lr > 0.0) || !(outer_lr > 0.0)) {
        throw UsageError("inner and outer learning rates must be > 0");
    }
    if (outer_mode == OuterMode::SecondOrder && inner_steps != 1) {
        throw UsageError("second-order outer mode supports inner_steps = 1 only");
    }
}

PinnTaskObjective::PinnTaskObjective(TaskSpec task, std::vector<int> layer_sizes, PointSet support,
                                     PointSet query, Arm arm, GamConfig gam, GamLossMode gam_mode)
    : task_(std::move(task)), shape_(std::move(layer_sizes)), support_(std::move(support)),
      query_(std::move(query)), arm_(arm), gam_(std::move(gam)), gam_mode_(gam_mode) {
    if (shape_.input_dim() != task_.input_dim()) {
        throw UsageError("network input width does not match the task");
    }
}

GamFit PinnTaskObjective::fit_gam_for(const Eigen::VectorXd& ib_errors, Phase phase) {
    (phase == Phase::Support ? calls_.support : calls_.query) += 1;
    const GamConfig cfg = with_domain_bounds(gam_, task_);
    const Eigen::MatrixXd features = ib_features(support_);
    return gam_mode_ == GamLossMode::SmoothedResidual
               ? fit_gam(features, ib_errors, cfg, FitTarget::Signed)
               : fit_gam(features, ib_errors.cwiseAbs2(), cfg, FitTarget::Squared);
}

LossEval PinnTaskObjective::support(const Eigen::VectorXd& params) {
    const MlpParams p = shape_.with_values(params);
    LossEval out;
    if (arm_ != Arm::GamPinn) {
        const PinnLosses l = pinn_losses(p, support_, task_);
        out.l_pde = l.l_pde;
        out.l_data = l.l_data;
        out.total = l.total();
        out.grad = l.grad();
        return out;
    }
    const PinnLosses probe = pinn_losses(p, support_, task_);
    last_gam_ = fit_gam_for(probe.ib_errors, Phase::Support).model;
    const GamSupportLoss l = gam_support_loss(p, support_, task_, gam_, gam_mode_, &*last_gam_);
    out.l_pde = l.pinn.l_pde;
    out.l_data = l.pinn.l_data;
    out.l_gam = l.l_gam;
    out.total = l.total();
    out.grad = l.grad();
    return out;
}

Eigen::VectorXd PinnTaskObjective::support_grad_frozen(const Eigen::VectorXd& params) {
    const MlpParams p = shape_.with_values(params);
    if (arm_ != Arm::GamPinn) {
        return pinn_losses(p, support_, task_).grad();
    }
    if (!last_gam_) {
        throw UsageError("support_grad_frozen called before support()");
    }
    return gam_support_loss(p, support_, task_, gam_, gam_mode_, &*last_gam_).grad();
}

LossEval PinnTaskObjective::query(const Eigen::VectorXd& params) {
    const PinnLosses l = pinn_losses(shape_.with_values(params), query_, task_);
    LossEval out;
    out.l_pde = l.l_pde;
    out.l_data = l.l_data;
    out.total = l.total();
    out.grad = l.grad();
    return out;
}

AdaptResult inner_adapt(const Eigen::VectorXd& init, TaskObjective& objective, int steps,
                        double alpha) {
    if (steps < 1) {
        throw UsageError("inner_adapt needs at least one step");
    }
    AdaptResult out;
    out.adapted = init;
    for (int s = 0; s < steps; ++s) {
        LossEval l = objective.support(out.adapted);
        out.adapted -= alpha * l.grad;
        if (s == 0) {
            out.support = std::move(l);
        }
    }
    return out;
}

MetaGradient meta_gradient(const Eigen::VectorXd& meta, TaskObjective& objective,
                           const MetaConfig& config) {
    MetaGradient out;
    AdaptResult a = inner_adapt(meta, objective, config.inner_steps, config.inner_lr);
    out.support = std::move(a.support);
    out.query = objective.query(a.adapted);
    out.grad = out.query.grad;
    if (config.outer_mode == OuterMode::SecondOrder) {
        if (config.inner_steps != 1) {
            throw UsageError("second-order outer mode supports inner_steps = 1 only");
        }
        const Eigen::VectorXd& v = out.query.grad;
        const double norm = v.norm();
        if (norm > 0.0) {
            const double h = 1e-4 / norm;
            const Eigen::VectorXd hv = (objective.support_grad_frozen(meta + h * v) -
                                        objective.support_grad_frozen(meta - h * v)) /
                                       (2.0 * h);
            out.grad = v - config.inner_lr * hv;
        }
    }
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

MetaStepResult meta_step(Eigen::VectorXd& meta, AdamState& adam,
                         const std::vector<std::unique_ptr<TaskObjective>>& objectives,
                         const MetaConfig& config) {
    if (objectives.empty()) {
        throw UsageError("meta_step needs at least one task");
    }
    std::vector<MetaGradient> grads(objectives.size());
    parallel_for(objectives.size(), config.threads,
                 [&](std::size_t i) { grads[i] = meta_gradient(meta, *objectives[i], config); });

    MetaStepResult out;
    Eigen::VectorXd total = Eigen::VectorXd::Zero(meta.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
        total += grads[i].grad;
        out.l_meta += grads[i].query.total;
        out.tasks.push_back({i, grads[i].support, grads[i].query});
    }
    const double n = static_cast<double>(grads.size());
    out.l_meta /= n;
    if (!std::isfinite(out.l_meta)) {
        std::string msg = "non-finite meta loss; per-task query losses:";
        for (const auto& t : out.tasks) {
            msg += " [" + std::to_string(t.task_index) + "] " + format_double(t.query.total);
        }
        throw NumericError(msg);
    }
    adam_step(meta, total / n, adam);
    for (auto& t : out.tasks) {
        t.support.grad.resize(0);
        t.query.grad.resize(0);
    }
    return out;
}

MetaStepResult meta_step(MlpParams& meta, AdamState& adam, const std::vector<TaskSpec>& tasks,
                         const MetaConfig& config, std::uint64_t step_seed) {
    std::vector<std::unique_ptr<TaskObjective>> objectives;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        std::mt19937_64 srng(derive_seed(step_seed, "support", i));
        PointSet support = sample_points(tasks[i], config.support_nf, config.support_nib, srng);
        std::mt19937_64 qrng(derive_seed(step_seed, "query", i));
        PointSet query = sample_points(tasks[i], config.query_nf, config.query_nib, qrng);
        objectives.push_back(std::make_unique<PinnTaskObjective>(
            tasks[i], meta.layer_sizes(), std::move(support), std::move(query), config.arm,
            config.gam, config.gam_mode));
    }
    return meta_step(meta.values(), adam, objectives, config);
}

MetaTrainResult meta_train(const MetaConfig& config, std::uint64_t master_seed,
                           const std::function<void(const MetaEpochRecord&)>& on_epoch) {
    config.validate();
    if (config.arm == Arm::Random) {
        throw UsageError("the random arm has no meta-training phase");
    }
    const TaskSpec probe = make_task(config.family, std::vector<double>(
                                                        static_cast<std::size_t>(family_arity(config.family)), 0.0));
    const auto sizes = pinn_layer_sizes(probe.input_dim(), config.hidden_layers, config.width);

    MetaTrainResult out;
    out.params = init_params(sizes, derive_seed(master_seed, "meta-init"));
    AdamConfig acfg;
    acfg.learning_rate = config.outer_lr;
    AdamState adam = AdamState::for_params(out.params, acfg);

    for (int epoch = 1; epoch <= config.meta_epochs; ++epoch) {
        const auto start = Clock::now();
        std::mt19937_64 trng(derive_seed(master_seed, "meta-tasks",
                                         config.fixed_task_pool ? 0 : static_cast<std::uint64_t>(epoch)));
        std::vector<TaskSpec> tasks;
        for (int i = 0; i < config.tasks_per_batch; ++i) {
            tasks.push_back(sample_task(config.family, trng));
        }
        const MetaStepResult step = meta_step(out.params, adam, tasks, config,
                                              derive_seed(master_seed, "meta-points",
                                                          static_cast<std::uint64_t>(epoch)));
        MetaEpochRecord rec;
        rec.epoch = epoch;
        rec.l_meta = step.l_meta;
        for (const auto& t : step.tasks) {
            rec.l_pde += t.query.l_pde;
            rec.l_data += t.query.l_data;
            rec.l_gam += t.support.l_gam;
            rec.l_support += t.support.total;
        }
        const double n = static_cast<double>(step.tasks.size());
        rec.l_pde /= n;
        rec.l_data /= n;
        rec.l_gam /= n;
        rec.l_support /= n;
        rec.wall_ms = elapsed_ms(start);
        out.trace.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
        if (step.l_meta <= config.epsilon) {
            out.converged = true;
            break;
        }
    }
    return out;
}

FineTuneResult fine_tune(const MlpParams& start, const TaskSpec& task, const SolutionField& field,
                         const FineTuneConfig& config, std::uint64_t seed,
                         const std::function<void(const FineTuneRecord&)>& on_log) {
    if (config.epochs < 0 || config.n_collocation < 1 || config.n_ib < 1 || config.log_interval < 1) {
        throw UsageError("fine-tune needs epochs >= 0 and positive point counts and log interval");
    }
    if (start.input_dim() != task.input_dim()) {
        throw UsageError("start parameters do not match the task input width");
    }
    FineTuneResult out;
    out.params = start;
    AdamState adam = AdamState::for_params(start, config.adam);
    std::mt19937_64 rng(seed);
    PointSet points = sample_points(task, config.n_collocation, config.n_ib, rng);
    const Eigen::MatrixXd coords = field.coordinates();
    const auto t0 = Clock::now();

    for (int e = 0; e <= config.epochs; ++e) {
        if (config.resample && e > 0) {
            points = sample_points(task, config.n_collocation, config.n_ib, rng);
        }
        const PinnLosses l = pinn_losses(out.params, points, task);
        if (e % config.log_interval == 0 || e == config.epochs) {
            FineTuneRecord rec;
            rec.epoch = e;
            rec.l_pde = l.l_pde;
            rec.l_data = l.l_data;
            rec.field_mse = eval_field_mse(field, forward_values(out.params, coords));
            rec.wall_ms = elapsed_ms(t0);
            out.trace.push_back(rec);
            if (on_log) {
                on_log(rec);
            }
        }
        if (e < config.epochs) {
            adam_step(out.params, l.grad(), adam);
        }
    }
    return out;
}

DenoiseResult denoise_run(const TaskSpec& task, const DenoiseConfig& config, std::uint64_t seed) {
    if (!(task.noise_weight > 0.0)) {
        throw UsageError("denoise needs a noise weight p > 0; use fine-tune for clean tasks");
    }
    if (task.family != IcFamily::BurgersSinOnly) {
        throw UsageError("denoise runs on the Burgers -sin(pi x) initial condition");
    }
    if (config.epochs < 0 || config.n_collocation < 1 || config.n_ib < 1 ||
        config.log_interval < 1 || config.refit_interval < 1) {
        throw UsageError("denoise needs epochs >= 0 and positive counts and intervals");
    }
    DenoiseResult out;
    out.clean = evaluation_field(task);
    const Eigen::MatrixXd coords = out.clean.coordinates();
    const MlpParams init = init_params(pinn_layer_sizes(task.input_dim(), config.hidden_layers, config.width),
                                       derive_seed(seed, "denoise-init"));
    std::mt19937_64 rng(derive_seed(seed, "denoise-points"));
    const PointSet points = sample_points(task, config.n_collocation, config.n_ib, rng);
    const Eigen::MatrixXd features = points.collocation.transpose();
    const GamConfig gam_cfg = with_domain_bounds(config.gam, task);
    const double nb = static_cast<double>(points.n_ib());

    auto train = [&](bool corrected, DenoiseArm& arm) {
        MlpParams p = init;
        AdamState adam = AdamState::for_params(p, config.adam);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(points.n_collocation());
        const auto t0 = Clock::now();
        for (int e = 0; e <= config.epochs; ++e) {
            if (corrected && e % config.refit_interval == 0) {
                const ResidualLoss probe = residual_loss(p, task, points.collocation, points.noise);
                g = predict(fit_gam(features, probe.residuals, gam_cfg).model, features);
            }
            const ResidualLoss rl = residual_loss(p, task, points.collocation, points.noise,
                                                  corrected ? g : Eigen::VectorXd());
            const double l_pde = rl.value;
            const ValueBatch vb(p, points.ib_points);
            const Eigen::VectorXd err = vb.values() - points.ib_targets;
            const double l_data = err.squaredNorm() / nb;
            if (e % config.log_interval == 0 || e == config.epochs) {
                FineTuneRecord rec;
                rec.epoch = e;
                rec.l_pde = l_pde;
                rec.l_data = l_data;
                rec.field_mse = eval_field_mse(out.clean, forward_values(p, coords));
                rec.wall_ms = elapsed_ms(t0);
                arm.trace.push_back(rec);
            }
            if (e < config.epochs) {
                const Eigen::VectorXd grad = rl.grad + vb.backward((2.0 / nb) * err);
                adam_step(p, grad, adam);
            }
        }
        arm.params = p;
        arm.field = out.clean;
        arm.field.scheme = corrected ? "pinn-gam-corrected" : "pinn-noisy";
        const Eigen::VectorXd pred = forward_values(p, coords);
        arm.field.values.assign(pred.data(), pred.data() + pred.size());
        arm.field_mse = eval_field_mse(out.clean, pred);
        arm.max_amplitude = pred.cwiseAbs().maxCoeff();
    };
    train(false, out.noisy);
    train(true, out.corrected);
    return out;
}

} // namespace pinnmeta
