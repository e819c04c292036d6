#include "grid_reference.hpp"
#include "support.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/oracle.hpp"

#include <numbers>

using namespace pinnmeta;

using namespace testing;

TEST_CASE("burgers: zero initial condition stays zero") {
    BurgersOptions opts;
    opts.initial = [](double) { return 0.0; };
    const SolutionField f = solve_burgers(make_task(IcFamily::BurgersSinCos, {0.5}), 64, 100, opts);
    for (double v : f.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("burgers: grid metadata, boundaries, odd symmetry") {
    const SolutionField f = solve_burgers(make_task(IcFamily::BurgersSinCos, {0.0}));
    CHECK(f.axes.size() == 2);
    CHECK(f.axis("t").coords.size() == 1025);
    CHECK(f.axis("x").coords.size() == 513);
    CHECK(f.axis("x").coords.front() == -1.0);
    CHECK(f.axis("x").coords.back() == 1.0);
    CHECK(f.axis("t").coords.back() == 1.0);
    CHECK(f.scheme == "crank-nicolson+ab2-central");
    CHECK(f.dx == doctest::Approx(2.0 / 512));
    CHECK(f.dt > 0.0);

    double asym = 0.0;
    for (std::size_t it = 0; it < 1025; ++it) {
        CHECK(at(f, it, 0) == 0.0);
        CHECK(at(f, it, 512) == 0.0);
        for (std::size_t ix = 0; ix <= 512; ++ix) {
            asym = std::max(asym, std::abs(at(f, it, ix) + at(f, it, 512 - ix)));
        }
    }
    CHECK(asym < 1e-6);
    CHECK(at(f, 0, 384) == doctest::Approx(-1.0)); // x = 0.5
}

TEST_CASE("burgers: agrees with explicit upwind at 4x resolution (theta = 0)") {
    const SolutionField f = solve_burgers(make_task(IcFamily::BurgersSinCos, {0.0}));
    std::vector<double> times;
    std::vector<std::size_t> slices;
    for (std::size_t it = 0; it <= 1024; it += 64) {
        times.push_back(f.axis("t").coords[it]);
        slices.push_back(it);
    }
    // Upwind is first order with a clean h error, so one Richardson step
    // (4x and 8x grids) brings it to the accuracy of the scheme under test.
    const auto ref4 = upwind_burgers(0.0, kBurgersViscosity, 2048, times);
    const auto ref8 = upwind_burgers(0.0, kBurgersViscosity, 4096, times);
    double gap4 = 0.0;
    double gap8 = 0.0;
    double gap = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t ix = 0; ix <= 512; ++ix) {
            const double u = at(f, slices[k], ix);
            const double a = ref4[k][ix * 4];
            const double b = ref8[k][ix * 8];
            gap4 = std::max(gap4, std::abs(u - a));
            gap8 = std::max(gap8, std::abs(u - b));
            gap = std::max(gap, std::abs(u - (2.0 * b - a)));
        }
    }
    MESSAGE("max |CN - upwind|: 4x " << gap4 << ", 8x " << gap8 << ", extrapolated " << gap);
    CHECK(gap8 < 0.6 * gap4); // the reference itself converges
    CHECK(gap < 1e-3);
}

TEST_CASE("burgers: self-convergence") {
    // theta = 0: the IC vanishes at x = +-1, so the data are smooth
    const TaskSpec smooth = make_task(IcFamily::BurgersSinCos, {0.0});
    const double s1 = burgers_gap(solve_burgers(smooth, 128, 200), solve_burgers(smooth, 256, 200));
    const double s2 = burgers_gap(solve_burgers(smooth, 256, 200), solve_burgers(smooth, 512, 200));
    MESSAGE("theta 0 gaps " << s1 << " " << s2 << " order " << std::log2(s1 / s2));
    CHECK(std::log2(s1 / s2) >= 1.8);
    CHECK(s2 < 1e-3);

    // theta = 0.7 jumps to the boundary value 0 at t = 0; away from that
    // layer the scheme still converges at close to second order
    const TaskSpec task = make_task(IcFamily::BurgersSinCos, {0.7});
    const SolutionField f128 = solve_burgers(task, 128, 200);
    const SolutionField f256 = solve_burgers(task, 256, 200);
    const SolutionField f512 = solve_burgers(task, 512, 200);
    const double e1 = burgers_gap(f128, f256, 20);
    const double e2 = burgers_gap(f256, f512, 20);
    MESSAGE("theta 0.7, t >= 0.1: gaps " << e1 << " " << e2 << " order " << std::log2(e1 / e2));
    CHECK(std::log2(e1 / e2) >= 1.5);
    CHECK(e2 < 1e-3);
    // the startup steps keep the layer from ringing: no early slice grows under refinement
    CHECK(burgers_gap(f256, f512) <= burgers_gap(f128, f256));

    // the refine option solves on the finer grid and samples it back
    BurgersOptions r;
    r.refine = 4;
    const SolutionField refined = solve_burgers(task, 128, 200, r);
    CHECK(refined.axis("x").coords.size() == 129);
    CHECK(refined.refine == 4);
    CHECK(burgers_gap(refined, f512) < 1e-12);
}

TEST_CASE("burgers: errors") {
    const TaskSpec task = make_task(IcFamily::BurgersSinCos, {0.0});
    CHECK_THROWS_AS(solve_burgers(task, 32, 200), UsageError);
    CHECK_THROWS_AS(solve_burgers(task, 128, 50), UsageError);
    CHECK_THROWS_AS(solve_burgers(make_task(IcFamily::HeatAmplitude, {1, 0}), 128, 200), UsageError);
    BurgersOptions blowup;
    blowup.initial = [](double x) { return 20.0 * std::sin(kPi * x); };
    CHECK_THROWS_AS(solve_burgers(task, 64, 100, blowup), SolverFailure);
}

TEST_CASE("heat: zero data stays zero") {
    HeatOptions opts;
    opts.initial = [](double, double) { return 0.0; };
    opts.boundary = [](double, double) { return 0.0; };
    const SolutionField f = solve_heat2d(make_task(IcFamily::HeatAmplitude, {1, 1}), 16, 16, 4, opts);
    for (double v : f.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("heat: steady state approaches the Laplace solution") {
    HeatOptions opts;
    opts.t_end = 3.0;
    const SolutionField f = solve_heat2d(make_task(IcFamily::HeatAmplitude, {0.6, 0.3}), 128, 128, 3, opts);
    const auto& xs = f.axis("x").coords;
    const auto& ys = f.axis("y").coords;
    double gap = 0.0;
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            const double exact = laplace_steady(xs[ix], ys[iy]);
            gap = std::max(gap, std::abs(at3(f, 3, iy, ix) - exact));
        }
    }
    // at (0.5, 0.5): sinh(1.5 pi) / sinh(2 pi)
    const double mid = std::sinh(1.5 * kPi) / std::sinh(2.0 * kPi);
    CHECK(mid == doctest::Approx(0.20788).epsilon(1e-4));
    CHECK(std::abs(at3(f, 3, 96, 96) - mid) < 1e-3);
    MESSAGE("max steady-state gap " << gap);
    CHECK(gap < 1e-3);
}

TEST_CASE("heat: separated mode decays at exp(-(pi^2 + pi^2/4) t)") {
    HeatOptions opts;
    opts.initial = [](double x, double y) { return std::sin(kPi * x) * std::cos(0.5 * kPi * y); };
    opts.boundary = [](double, double) { return 0.0; };
    const SolutionField f = solve_heat2d(make_task(IcFamily::HeatAmplitude, {1, 0}), 128, 128, 10, opts);
    const auto& ts = f.axis("t").coords;
    const auto& xs = f.axis("x").coords;
    const auto& ys = f.axis("y").coords;
    const double rate = kPi * kPi + kPi * kPi / 4.0;
    double gap = 0.0;
    for (std::size_t it = 0; it < ts.size(); ++it) {
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            for (std::size_t ix = 0; ix < xs.size(); ++ix) {
                const double exact = std::exp(-rate * ts[it]) * std::sin(kPi * xs[ix]) *
                                     std::cos(0.5 * kPi * ys[iy]);
                gap = std::max(gap, std::abs(at3(f, it, iy, ix) - exact));
            }
        }
    }
    MESSAGE("max mode-decay gap " << gap);
    CHECK(gap < 1e-3);
}

TEST_CASE("heat: maximum principle, boundary stamping, self-convergence") {
    const TaskSpec task = make_task(IcFamily::HeatAmplitude, {1.0, 0.5});
    const SolutionField f = solve_heat2d(task, 64, 64, 20);
    const std::size_t plane = 65 * 65;
    double bound = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        bound = std::max(bound, std::abs(f.values[i]));
    }
    const auto& xs = f.axis("x").coords;
    for (std::size_t it = 0; it <= 20; ++it) {
        for (std::size_t ix = 0; ix <= 64; ++ix) {
            CHECK(std::abs(at3(f, it, 64, ix) - std::sin(kPi * xs[ix])) < 1e-12);
            CHECK(at3(f, it, 0, ix) == 0.0);
            CHECK(at3(f, it, ix, 0) == 0.0);
            CHECK(at3(f, it, ix, 64) == 0.0);
        }
    }
    for (double v : f.values) {
        CHECK(std::abs(v) <= bound + 1e-9);
    }

    // three grids compared on the coarse nodes once the corner
    // incompatibility of the initial data has diffused away
    const SolutionField c = solve_heat2d(task, 16, 16, 4);
    const SolutionField m = solve_heat2d(task, 32, 32, 4);
    const SolutionField g = solve_heat2d(task, 64, 64, 4);
    const auto gap = [&](const SolutionField& a, const SolutionField& b, std::size_t step) {
        double out = 0.0;
        for (std::size_t it = 1; it <= 4; ++it) {
            for (std::size_t iy = 0; iy <= 16; ++iy) {
                for (std::size_t ix = 0; ix <= 16; ++ix) {
                    const std::size_t ka = (a.axis("x").coords.size() - 1) / 16;
                    out = std::max(out, std::abs(at3(a, it, iy * ka, ix * ka) -
                                                 at3(b, it, iy * ka * step, ix * ka * step)));
                }
            }
        }
        return out;
    };
    const double e1 = gap(c, m, 2);
    const double e2 = gap(m, g, 2);
    const double order = std::log2(e1 / e2);
    MESSAGE("heat gaps " << e1 << " " << e2 << " order " << order);
    CHECK(order >= 1.8);

    CHECK_THROWS_AS(solve_heat2d(make_task(IcFamily::BurgersSinCos, {0.0}), 8, 8, 2), UsageError);
}

TEST_CASE("evaluation grids and field MSE") {
    const SolutionField b = evaluation_field(make_task(IcFamily::BurgersSinCos, {0.3}, 0.2));
    CHECK(b.axis("x").coords.size() == 257);
    CHECK(b.axis("t").coords.size() == 101);
    CHECK(b.refine == 4);
    CHECK(b.task.noise_weight == 0.2);
    // the noise never reaches the oracle
    const SolutionField clean = evaluation_field(make_task(IcFamily::BurgersSinCos, {0.3}));
    CHECK(b.values == clean.values);

    const Eigen::MatrixXd coords = b.coordinates();
    CHECK(coords.rows() == 2);
    CHECK(coords.cols() == static_cast<Eigen::Index>(b.num_points()));
    CHECK(coords(0, 1) == b.axis("x").coords[1]);
    CHECK(coords(1, 257) == b.axis("t").coords[1]);

    const Eigen::Map<const Eigen::VectorXd> exact(b.values.data(),
                                                  static_cast<Eigen::Index>(b.values.size()));
    CHECK(eval_field_mse(b, [&](const Eigen::MatrixXd&) { return Eigen::VectorXd(exact); }) == 0.0);
    CHECK(eval_field_mse(b, Eigen::VectorXd(exact.array() + 0.1)) == doctest::Approx(0.01));
    CHECK_THROWS_AS(eval_field_mse(b, Eigen::VectorXd(Eigen::VectorXd::Zero(3))), UsageError);

    const SolutionField h = evaluation_field(make_task(IcFamily::HeatFrequency, {0.5, 0.5}));
    CHECK(h.axis("x").coords.size() == 65);
    CHECK(h.axis("y").coords.size() == 65);
    CHECK(h.axis("t").coords.size() == 21);
    const Eigen::MatrixXd hc = h.coordinates();
    CHECK(hc.rows() == 3);
    CHECK(hc(1, 65) == h.axis("y").coords[1]);
    CHECK(hc(2, 65 * 65) == h.axis("t").coords[1]);
    CHECK(h.time_slice(2).size() == 65 * 65);
    CHECK(h.time_slice(2)[0] == h.values[2 * 65 * 65]);
}

TEST_CASE("field container round trip") {
    const SolutionField f = solve_heat2d(make_task(IcFamily::HeatAmplitude, {0.25, 0.75}), 8, 6, 3);
    std::stringstream ss;
    write_field(ss, f);
    CHECK(ss.str().rfind("pinnmeta-field 1\ntask equation=heat2d", 0) == 0);
    const SolutionField g = read_field(ss);
    CHECK(g.values == f.values);
    CHECK(g.task == f.task);
    CHECK(g.scheme == f.scheme);
    CHECK(g.dx == f.dx);
    CHECK(g.dt == f.dt);
    CHECK(g.axes.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(g.axes[k].name == f.axes[k].name);
        CHECK(g.axes[k].coords == f.axes[k].coords);
    }

    testing::TempDir dir("field");
    save_field(dir / "f.txt", f);
    CHECK(load_field(dir / "f.txt").values == f.values);
    std::stringstream junk("pinnmeta-field 7\n");
    CHECK_THROWS(read_field(junk));
}
