#include "support.hpp"

#include "pinnmeta/adam.hpp"
#include "pinnmeta/errors.hpp"
#include "pinnmeta/meta.hpp"
#include "pinnmeta/oracle.hpp"
#include "pinnmeta/pinn_loss.hpp"
#include "pinnmeta/seeds.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

using namespace pinnmeta;

namespace {

// L(w) = sum w_k^2 on both support and query.
class Quadratic : public TaskObjective {
public:
    LossEval support(const Eigen::VectorXd& w) override { return eval(w); }
    Eigen::VectorXd support_grad_frozen(const Eigen::VectorXd& w) override { return 2.0 * w; }
    LossEval query(const Eigen::VectorXd& w) override { return eval(w); }

private:
    static LossEval eval(const Eigen::VectorXd& w) {
        LossEval l;
        l.total = w.squaredNorm();
        l.l_pde = l.total;
        l.grad = 2.0 * w;
        return l;
    }
};

class NanQuery : public Quadratic {
public:
    LossEval query(const Eigen::VectorXd& w) override {
        LossEval l = Quadratic::query(w);
        l.total = std::numeric_limits<double>::quiet_NaN();
        return l;
    }
};

MetaConfig small_config(Arm arm) {
    MetaConfig c;
    c.arm = arm;
    c.hidden_layers = 2;
    c.width = 8;
    c.tasks_per_batch = 3;
    c.epsilon = 0.0;
    return c;
}

std::unique_ptr<PinnTaskObjective> objective_for(const TaskSpec& task, const std::vector<int>& sizes,
                                                 Arm arm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PointSet s = sample_points(task, 20, 10, rng);
    PointSet q = sample_points(task, 20, 10, rng);
    return std::make_unique<PinnTaskObjective>(task, sizes, std::move(s), std::move(q), arm,
                                               GamConfig{}, GamLossMode::SmoothedResidual);
}

void check_rows_equal(const std::vector<MetaEpochRecord>& a, const std::vector<MetaEpochRecord>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].epoch == b[i].epoch);
        CHECK(a[i].l_meta == b[i].l_meta);
        CHECK(a[i].l_pde == b[i].l_pde);
        CHECK(a[i].l_data == b[i].l_data);
        CHECK(a[i].l_gam == b[i].l_gam);
        CHECK(a[i].l_support == b[i].l_support);
    }
}

} // namespace

TEST_CASE("inner_adapt on a quadratic") {
    Quadratic q;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
    CHECK(inner_adapt(w, q, 1, 0.0).adapted(0) == 1.0);
    for (double alpha : {0.005, 0.1, 0.3}) {
        CHECK(inner_adapt(w, q, 1, alpha).adapted(0) == doctest::Approx(1.0 - 2.0 * alpha).epsilon(1e-15));
        CHECK(inner_adapt(w, q, 3, alpha).adapted(0) ==
              doctest::Approx(std::pow(1.0 - 2.0 * alpha, 3)).epsilon(1e-14));
    }
    const AdaptResult r = inner_adapt(w, q, 2, 0.1);
    CHECK(r.support.total == 1.0); // loss at the initial parameters
    CHECK_THROWS_AS(inner_adapt(w, q, 0, 0.1), UsageError);
}

TEST_CASE("meta_gradient: second order is (1 - 2 alpha) times first order on w^2") {
    Quadratic q;
    for (double w0 : {1.0, -0.7, 3.0}) {
        for (double alpha : {0.005, 0.1, 0.25}) {
            MetaConfig c;
            c.inner_lr = alpha;
            const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, w0);
            c.outer_mode = OuterMode::FirstOrder;
            const double first = meta_gradient(w, q, c).grad(0);
            c.outer_mode = OuterMode::SecondOrder;
            const double second = meta_gradient(w, q, c).grad(0);
            CHECK(first == doctest::Approx(2.0 * (1.0 - 2.0 * alpha) * w0).epsilon(1e-14));
            CHECK(second == doctest::Approx((1.0 - 2.0 * alpha) * first).epsilon(1e-9));
        }
    }
    MetaConfig bad;
    bad.outer_mode = OuterMode::SecondOrder;
    bad.inner_steps = 2;
    CHECK_THROWS_AS(meta_gradient(Eigen::VectorXd::Ones(1), q, bad), UsageError);
}

TEST_CASE("meta_step with alpha = 0 is Adam on the mean query loss") {
    const auto sizes = pinn_layer_sizes(2, 2, 8);
    std::vector<std::unique_ptr<TaskObjective>> objectives;
    std::vector<PointSet> queries;
    std::vector<TaskSpec> tasks;
    for (int i = 0; i < 3; ++i) {
        tasks.push_back(make_task(IcFamily::BurgersSinCos, {0.2 * i + 0.1}));
        std::mt19937_64 rng(40 + i);
        PointSet s = sample_points(tasks.back(), 20, 10, rng);
        PointSet q = sample_points(tasks.back(), 20, 10, rng);
        queries.push_back(q);
        objectives.push_back(std::make_unique<PinnTaskObjective>(
            tasks.back(), sizes, s, q, Arm::MamlPinn, GamConfig{}, GamLossMode::SmoothedResidual));
    }
    MetaConfig c = small_config(Arm::MamlPinn);
    c.inner_lr = 0.0;
    c.threads = 2;

    const MlpParams init = init_params(sizes, 77);
    Eigen::VectorXd meta = init.values();
    AdamState meta_adam(init.size());
    MlpParams ref = init;
    AdamState ref_adam(init.size());
    double worst = 0.0;
    for (int step = 0; step < 10; ++step) {
        meta_step(meta, meta_adam, objectives, c);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ref.size()));
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            g += pinn_losses(ref, queries[i], tasks[i]).grad();
        }
        adam_step(ref, g / 3.0, ref_adam);
        worst = std::max(worst, (meta - ref.values()).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
    CHECK(meta_adam.step_count == 10);
}

TEST_CASE("the query stage never touches the GAM") {
    const auto sizes = pinn_layer_sizes(2, 2, 8);
    const TaskSpec task = make_task(IcFamily::BurgersSinCos, {0.5});
    const Eigen::VectorXd init = init_params(sizes, 5).values();
    for (OuterMode mode : {OuterMode::FirstOrder, OuterMode::SecondOrder}) {
        for (Arm arm : {Arm::GamPinn, Arm::MamlPinn}) {
            auto obj = objective_for(task, sizes, arm, 9);
            MetaConfig c = small_config(arm);
            c.outer_mode = mode;
            const MetaGradient g = meta_gradient(init, *obj, c);
            CHECK(obj->gam_calls().query == 0);
            CHECK(obj->gam_calls().support == (arm == Arm::GamPinn ? 1 : 0));
            CHECK(g.query.l_gam == 0.0);
            CHECK(g.query.total == doctest::Approx(g.query.l_pde + g.query.l_data).epsilon(1e-15));
            if (arm == Arm::GamPinn) {
                CHECK(g.support.l_gam >= 0.0);
                CHECK(g.support.total == doctest::Approx(g.support.l_pde + g.support.l_gam).epsilon(1e-15));
            }
        }
    }
    auto obj = objective_for(task, sizes, Arm::GamPinn, 9);
    CHECK_THROWS_AS(obj->support_grad_frozen(init), UsageError);
    CHECK_THROWS_AS(PinnTaskObjective(task, pinn_layer_sizes(3, 2, 4), {}, {}, Arm::GamPinn, {},
                                      GamLossMode::SmoothedResidual),
                    UsageError);
}

TEST_CASE("GAM arm with equal ib errors moves only under the PDE gradient") {
    const auto sizes = pinn_layer_sizes(2, 2, 8);
    const MlpParams net = init_params(sizes, 13);
    const TaskSpec task = make_task(IcFamily::BurgersSinCos, {0.3});
    std::mt19937_64 rng(14);
    PointSet s = sample_points(task, 20, 10, rng);
    for (Eigen::Index i = 0; i < s.n_ib(); ++i) {
        const Eigen::VectorXd p = s.ib_points.col(i);
        s.ib_targets(i) = forward_value(net, std::span<const double>(p.data(), p.size())) + 0.4;
    }
    PinnTaskObjective obj(task, sizes, s, s, Arm::GamPinn, {}, GamLossMode::SmoothedResidual);
    const double alpha = 0.01;
    const AdaptResult a = inner_adapt(net.values(), obj, 1, alpha);
    CHECK(a.support.l_gam < 1e-20);
    const Eigen::VectorXd expected = net.values() - alpha * pinn_losses(net, s, task).grad_pde;
    CHECK((a.adapted - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("meta_step: non-finite meta loss reports every task") {
    std::vector<std::unique_ptr<TaskObjective>> objectives;
    objectives.push_back(std::make_unique<Quadratic>());
    objectives.push_back(std::make_unique<NanQuery>());
    Eigen::VectorXd w = Eigen::VectorXd::Ones(2);
    AdamState adam(2);
    MetaConfig c;
    try {
        meta_step(w, adam, objectives, c);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[0]") != std::string::npos);
        CHECK(msg.find("[1]") != std::string::npos);
    }
    CHECK(w == Eigen::VectorXd::Ones(2));
    CHECK(adam.step_count == 0);
    std::vector<std::unique_ptr<TaskObjective>> none;
    CHECK_THROWS_AS(meta_step(w, adam, none, c), UsageError);
}

TEST_CASE("meta_train: structure, validation and determinism") {
    MetaConfig c = small_config(Arm::GamPinn);
    c.meta_epochs = 0;
    const MetaTrainResult empty = meta_train(c, 3);
    CHECK(empty.trace.empty());
    CHECK(empty.params == init_params(pinn_layer_sizes(2, 2, 8), derive_seed(3, "meta-init")));

    c.meta_epochs = 50;
    int callbacks = 0;
    const MetaTrainResult r = meta_train(c, 3, [&](const MetaEpochRecord&) { ++callbacks; });
    CHECK(r.trace.size() == 50);
    CHECK(callbacks == 50);
    CHECK_FALSE(r.converged);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const MetaEpochRecord& e = r.trace[i];
        CHECK(e.epoch == static_cast<int>(i) + 1);
        CHECK((std::isfinite(e.l_meta) && e.l_meta >= 0.0));
        CHECK(e.l_meta == doctest::Approx(e.l_pde + e.l_data).epsilon(1e-12));
        CHECK(e.l_gam >= 0.0);
    }

    MetaConfig threaded = c;
    threaded.threads = 3;
    const MetaTrainResult again = meta_train(threaded, 3);
    check_rows_equal(r.trace, again.trace);
    CHECK(r.params == again.params);

    MetaConfig stop = c;
    stop.epsilon = 1e9;
    const MetaTrainResult early = meta_train(stop, 3);
    CHECK(early.trace.size() == 1);
    CHECK(early.converged);

    MetaConfig pool = c;
    pool.meta_epochs = 3;
    pool.fixed_task_pool = true;
    CHECK(meta_train(pool, 3).trace.size() == 3);

    MetaConfig bad = c;
    bad.arm = Arm::Random;
    CHECK_THROWS_AS(meta_train(bad, 3), UsageError);
    bad = c;
    bad.inner_lr = 0.0;
    CHECK_THROWS_AS(meta_train(bad, 3), UsageError);
    bad = c;
    bad.tasks_per_batch = 0;
    CHECK_THROWS_AS(meta_train(bad, 3), UsageError);
    bad = c;
    bad.outer_mode = OuterMode::SecondOrder;
    bad.inner_steps = 2;
    CHECK_THROWS_AS(meta_train(bad, 3), UsageError);
}

TEST_CASE("meta_train: second-order mode runs and differs from first order") {
    MetaConfig c = small_config(Arm::MamlPinn);
    c.meta_epochs = 5;
    c.inner_lr = 0.05;
    const MetaTrainResult first = meta_train(c, 8);
    c.outer_mode = OuterMode::SecondOrder;
    const MetaTrainResult second = meta_train(c, 8);
    CHECK(second.trace.size() == 5);
    CHECK(first.trace.front().l_meta == second.trace.front().l_meta); // same start, same batch
    CHECK_FALSE(first.params == second.params);
}

TEST_CASE("fuzz: losses stay finite and non-negative") {
    int runs = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        MetaConfig c = small_config(seed % 2 == 0 ? Arm::GamPinn : Arm::MamlPinn);
        c.family = seed % 3 == 0 ? IcFamily::HeatAmplitude : IcFamily::BurgersSinCos;
        c.meta_epochs = 10;
        c.width = 6;
        const MetaTrainResult r = meta_train(c, seed);
        for (const auto& e : r.trace) {
            for (double v : {e.l_meta, e.l_pde, e.l_data, e.l_gam, e.l_support}) {
                CHECK((std::isfinite(v) && v >= 0.0));
            }
        }
        ++runs;
    }
    CHECK(runs == 100);
}

TEST_CASE("parallel_for: every index once, first failure by index") {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(37, 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) {
        CHECK(h.load() == 1);
    }
    for (int threads : {1, 4}) {
        try {
            parallel_for(10, threads, [](std::size_t i) {
                if (i == 7 || i == 2) {
                    throw std::runtime_error("task " + std::to_string(i));
                }
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "task 2");
        }
    }
    parallel_for(0, 3, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("fine_tune: logging schedule and the initial row") {
    const TaskSpec task = make_task(IcFamily::BurgersSinCos, {0.1});
    const SolutionField field = evaluation_field(task);
    const MlpParams start = init_params(pinn_layer_sizes(2, 2, 8), 21);
    FineTuneConfig c;
    c.n_collocation = 100;
    c.n_ib = 20;

    c.epochs = 0;
    const FineTuneResult zero = fine_tune(start, task, field, c, 5);
    REQUIRE(zero.trace.size() == 1);
    CHECK(zero.trace[0].epoch == 0);
    CHECK(zero.params == start);
    const double mse0 = eval_field_mse(field, [&](const Eigen::MatrixXd& pts) {
        Eigen::VectorXd v(pts.cols());
        for (Eigen::Index i = 0; i < pts.cols(); ++i) {
            const Eigen::VectorXd p = pts.col(i);
            v(i) = forward_value(start, std::span<const double>(p.data(), p.size()));
        }
        return v;
    });
    CHECK(zero.trace[0].field_mse == doctest::Approx(mse0).epsilon(1e-12));

    c.epochs = 120;
    std::vector<int> logged;
    const FineTuneResult run = fine_tune(start, task, field, c, 5,
                                         [&](const FineTuneRecord& r) { logged.push_back(r.epoch); });
    CHECK(logged == std::vector<int>{0, 50, 100, 120});
    CHECK(run.trace.size() == 4);
    CHECK(run.trace.front().field_mse == zero.trace[0].field_mse);
    CHECK(run.trace.back().l_pde + run.trace.back().l_data <
          run.trace.front().l_pde + run.trace.front().l_data);

    const FineTuneResult again = fine_tune(start, task, field, c, 5);
    CHECK(again.params == run.params);
    c.resample = true;
    CHECK_FALSE(fine_tune(start, task, field, c, 5).params == run.params);

    c.n_ib = 0;
    CHECK_THROWS_AS(fine_tune(start, task, field, c, 5), UsageError);
    c.n_ib = 20;
    CHECK_THROWS_AS(fine_tune(init_params(pinn_layer_sizes(3, 2, 4), 1), task, field, c, 5), UsageError);
}

TEST_CASE("denoise_run: preconditions and the vanishing-noise limit") {
    DenoiseConfig c;
    c.epochs = 150;
    c.n_collocation = 300;
    c.n_ib = 30;
    c.hidden_layers = 3;
    c.width = 10;
    CHECK_THROWS_AS(denoise_run(make_task(IcFamily::BurgersSinOnly, {}, 0.0), c, 1), UsageError);
    CHECK_THROWS_AS(denoise_run(make_task(IcFamily::BurgersSinCos, {0.0}, 0.1), c, 1), UsageError);

    // p tiny: both arms train on the clean equation up to the GAM's smoothing
    const DenoiseResult r = denoise_run(make_task(IcFamily::BurgersSinOnly, {}, 1e-12), c, 4);
    const double a = r.noisy.field_mse;
    const double b = r.corrected.field_mse;
    MESSAGE("noisy " << a << " corrected " << b);
    CHECK(std::abs(a - b) < 10.0 * std::min(a, b));
    CHECK(r.noisy.trace.front().field_mse == r.corrected.trace.front().field_mse); // shared init
    CHECK(r.noisy.trace.size() == 4);
    CHECK(r.noisy.max_amplitude > 0.0);
    CHECK(r.noisy.field.values.size() == r.clean.values.size());
}

TEST_CASE("meta_train: full-size Burgers run makes progress") {
    // trailing-500-epoch mean L_meta below the first 500 epochs
    MetaConfig c;
    c.arm = Arm::MamlPinn;
    c.epsilon = 0.0;
    c.meta_epochs = 7000;
    const MetaTrainResult r = meta_train(c, 2024);
    REQUIRE(r.trace.size() == 7000);
    double head = 0.0;
    double tail = 0.0;
    for (int i = 0; i < 500; ++i) {
        head += r.trace[static_cast<std::size_t>(i)].l_meta;
        tail += r.trace[r.trace.size() - 1 - static_cast<std::size_t>(i)].l_meta;
    }
    MESSAGE("first 500 mean " << head / 500 << ", last 500 mean " << tail / 500);
    CHECK(tail < head);
}
