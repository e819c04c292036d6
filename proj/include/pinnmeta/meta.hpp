#pragma once

// Meta-learning of PINN initializations (MAML), the three method arms,
// fine-tuning at meta-test time and the noisy-equation de-noising run.

#include "pinnmeta/adam.hpp"
#include "pinnmeta/gam.hpp"
#include "pinnmeta/oracle.hpp"
#include "pinnmeta/pde.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pinnmeta {

enum class Arm { Random, MamlPinn, GamPinn };
enum class OuterMode { FirstOrder, SecondOrder };

std::string to_string(Arm arm);
std::string to_string(OuterMode mode);
std::string to_string(GamLossMode mode);
Arm parse_arm(const std::string& s);
OuterMode parse_outer_mode(const std::string& s);
GamLossMode parse_gam_mode(const std::string& s);

struct MetaConfig {
    IcFamily family = IcFamily::BurgersSinCos;
    int tasks_per_batch = 5;
    int inner_steps = 1;
    double inner_lr = 0.005;
    double outer_lr = 0.005;
    int meta_epochs = 7000;
    int support_nf = 20;
    int support_nib = 10;
    int query_nf = 20;
    int query_nib = 10;
    Arm arm = Arm::GamPinn;
    OuterMode outer_mode = OuterMode::FirstOrder;
    double epsilon = 1e-3;
    GamConfig gam;
    GamLossMode gam_mode = GamLossMode::SmoothedResidual;
    // Sample the task batch once instead of every epoch.
    bool fixed_task_pool = false;
    int hidden_layers = 7;
    int width = 20;
    int threads = 1;

    // Throws UsageError on non-positive counts or rates.
    void validate() const;
};

struct LossEval {
    double total = 0.0;
    double l_pde = 0.0;
    double l_data = 0.0;
    double l_gam = 0.0;
    Eigen::VectorXd grad;
};

// Loss oracle for one task over a flat parameter vector.
class TaskObjective {
public:
    virtual ~TaskObjective() = default;
    // Support loss and gradient (refits the GAM in the GAM arm).
    virtual LossEval support(const Eigen::VectorXd& params) = 0;
    // Support gradient reusing the loss model of the last support() call.
    virtual Eigen::VectorXd support_grad_frozen(const Eigen::VectorXd& params) = 0;
    // Query loss L_pde + L_data and gradient.
    virtual LossEval query(const Eigen::VectorXd& params) = 0;
};

struct GamCallCounts {
    int support = 0;
    int query = 0;
};

class PinnTaskObjective : public TaskObjective {
public:
    PinnTaskObjective(TaskSpec task, std::vector<int> layer_sizes, PointSet support,
                      PointSet query, Arm arm, GamConfig gam, GamLossMode gam_mode);

    LossEval support(const Eigen::VectorXd& params) override;
    Eigen::VectorXd support_grad_frozen(const Eigen::VectorXd& params) override;
    LossEval query(const Eigen::VectorXd& params) override;

    const GamCallCounts& gam_calls() const { return calls_; }
    const TaskSpec& task() const { return task_; }

private:
    enum class Phase { Support, Query };
    GamFit fit_gam_for(const Eigen::VectorXd& ib_errors, Phase phase);

    TaskSpec task_;
    MlpParams shape_;
    PointSet support_;
    PointSet query_;
    Arm arm_;
    GamConfig gam_;
    GamLossMode gam_mode_;
    std::optional<GamModel> last_gam_;
    GamCallCounts calls_;
};

struct AdaptResult {
    Eigen::VectorXd adapted;
    LossEval support; // at the initial parameters
};

// `steps` plain gradient steps on the support loss with rate `alpha`.
AdaptResult inner_adapt(const Eigen::VectorXd& init, TaskObjective& objective, int steps,
                        double alpha);

struct MetaGradient {
    Eigen::VectorXd grad;
    LossEval support;
    LossEval query; // at the adapted parameters
};

// Outer gradient of one task's query loss. SecondOrder (inner_steps = 1
// only) applies (I - alpha H_S) to the query gradient, with the Hessian-vector
// product taken as a central difference of the support gradient.
MetaGradient meta_gradient(const Eigen::VectorXd& meta, TaskObjective& objective,
                           const MetaConfig& config);

struct TaskLosses {
    std::size_t task_index = 0;
    LossEval support;
    LossEval query;
};

struct MetaStepResult {
    double l_meta = 0.0;
    std::vector<TaskLosses> tasks;
};

// One outer update over the given task objectives. Per-task work may run on
// `config.threads` threads; the gradient is reduced in task order.
MetaStepResult meta_step(Eigen::VectorXd& meta, AdamState& adam,
                         const std::vector<std::unique_ptr<TaskObjective>>& objectives,
                         const MetaConfig& config);

// Samples support and query sets for every task and runs one outer update.
MetaStepResult meta_step(MlpParams& meta, AdamState& adam, const std::vector<TaskSpec>& tasks,
                         const MetaConfig& config, std::uint64_t step_seed);

struct MetaEpochRecord {
    int epoch = 0;
    double l_meta = 0.0;
    double l_pde = 0.0;     // query, mean over tasks
    double l_data = 0.0;    // query, mean over tasks
    double l_gam = 0.0;     // support, mean over tasks (GAM arm)
    double l_support = 0.0; // mean over tasks
    double wall_ms = 0.0;
};

struct MetaTrainResult {
    MlpParams params;
    std::vector<MetaEpochRecord> trace;
    bool converged = false; // stopped on L_meta <= epsilon
};

// Runs outer updates until L_meta <= epsilon or meta_epochs is reached.
// Randomness: initialization from derive_seed(master, "meta-init"); the
// task batch of epoch e from derive_seed(master, "meta-tasks", e) (e = 0
// for every epoch with a fixed pool); point sets from
// derive_seed(master, "meta-points", e).
MetaTrainResult meta_train(const MetaConfig& config, std::uint64_t master_seed,
                           const std::function<void(const MetaEpochRecord&)>& on_epoch = {});

struct FineTuneConfig {
    int epochs = 2000;
    int n_collocation = 10000;
    int n_ib = 100;
    // Draw a new point set every epoch instead of keeping the first.
    bool resample = false;
    AdamConfig adam;
    int log_interval = 50;
};

struct FineTuneRecord {
    int epoch = 0; // updates applied so far
    double l_pde = 0.0;
    double l_data = 0.0;
    double field_mse = 0.0;
    double wall_ms = 0.0;
};

struct FineTuneResult {
    MlpParams params;
    std::vector<FineTuneRecord> trace;
};

// Plain PINN training (L_pde + L_data, Adam) from `start`. Logs epoch 0,
// every log_interval epochs and the last epoch; each row holds the losses
// and the field MSE of the parameters after that many updates.
FineTuneResult fine_tune(const MlpParams& start, const TaskSpec& task, const SolutionField& field,
                         const FineTuneConfig& config, std::uint64_t seed,
                         const std::function<void(const FineTuneRecord&)>& on_log = {});

struct DenoiseConfig {
    int epochs = 2000;
    int n_collocation = 10000;
    int n_ib = 100;
    AdamConfig adam;
    int log_interval = 50;
    // Epochs between GAM refits of the corrected arm.
    int refit_interval = 50;
    GamConfig gam;
    int hidden_layers = 7;
    int width = 20;
};

struct DenoiseArm {
    std::vector<FineTuneRecord> trace;
    MlpParams params;
    SolutionField field; // network prediction on the evaluation grid
    double field_mse = 0.0;
    double max_amplitude = 0.0;
};

struct DenoiseResult {
    DenoiseArm noisy;
    DenoiseArm corrected;
    SolutionField clean;
};

// Trains two networks from the same initialization and point set on the
// jittered equation: the noisy arm minimizes the jittered residual directly,
// the corrected arm minimizes mean (E_i - g_i)^2 where g is a GAM over the
// collocation coordinates fit to the jittered residual values and refit every
// refit_interval epochs. Both add L_data. Throws UsageError if p <= 0.
DenoiseResult denoise_run(const TaskSpec& task, const DenoiseConfig& config, std::uint64_t seed);

// Runs body(i) for i in [0, n) on up to `threads` threads. Callers write to
// per-index slots, so results do not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

} // namespace pinnmeta
