#include "support.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/pde.hpp"

#include <numbers>

using namespace pinnmeta;

namespace {

double at(const TaskSpec& task, std::initializer_list<double> p) {
    const std::vector<double> v(p);
    return ic_bc_value(task, v);
}

} // namespace

TEST_CASE("sample_task: determinism, arity, uniform mean") {
    std::mt19937_64 a(7);
    std::mt19937_64 b(7);
    CHECK(sample_task(IcFamily::BurgersSinCos, a) == sample_task(IcFamily::BurgersSinCos, b));

    std::mt19937_64 rng(1);
    CHECK(sample_task(IcFamily::HeatAmplitude, rng).params.size() == 2);
    CHECK(sample_task(IcFamily::HeatFrequency, rng).params.size() == 2);
    CHECK(sample_task(IcFamily::BurgersSinOnly, rng).params.empty());
    const TaskSpec burgers = sample_task(IcFamily::BurgersSinCos, rng);
    CHECK(burgers.viscosity == 0.05);
    CHECK(burgers.noise_weight == 0.0);

    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double th = sample_task(IcFamily::BurgersSinCos, rng).params[0];
        CHECK((th >= 0.0 && th <= 1.0));
        sum += th;
    }
    CHECK(std::abs(sum / 10000 - 0.5) < 0.01);

    CHECK_THROWS_AS(make_task(IcFamily::HeatAmplitude, {0.1}), UsageError);
    CHECK_THROWS_AS(make_task(IcFamily::BurgersSinCos, {0.1}, -0.5), UsageError);
}

TEST_CASE("task record round trip") {
    TaskSpec t = make_task(IcFamily::HeatFrequency, {0.125, 1.0 / 3.0}, 0.0, 18446744073709551557ull);
    t.frequency_in_y = true;
    const std::string rec = to_record(t);
    CHECK(rec.find(',') == std::string::npos);
    CHECK(parse_record(rec) == t);

    const TaskSpec b = make_task(IcFamily::BurgersSinCos, {0.3}, 0.2, 7);
    CHECK(to_record(b) == "equation=burgers1d family=burgers-sincos params=0.3 nu=0.05 p=0.2 seed=7");
    CHECK(parse_record(to_record(b)) == b);
    CHECK_THROWS_AS(parse_record("equation=heat2d family=burgers-sincos params=0.3"), UsageError);
    CHECK_THROWS_AS(parse_record("family=burgers-sincos params=0.3 colour=blue"), UsageError);
}

TEST_CASE("ic_bc_value worked values and corner rule") {
    CHECK(at(make_task(IcFamily::BurgersSinCos, {0.0}), {0.5, 0.0}) == doctest::Approx(-1.0));
    CHECK(at(make_task(IcFamily::BurgersSinCos, {0.3}), {0.0, 0.0}) == doctest::Approx(0.3));
    CHECK(at(make_task(IcFamily::HeatAmplitude, {1.0, 0.5}), {0.5, 0.0, 0.0}) ==
          doctest::Approx(1.0));
    CHECK(at(make_task(IcFamily::HeatFrequency, {1.0, 1.0}), {0.25, 0.0, 0.0}) ==
          doctest::Approx(0.5));
    CHECK(at(make_task(IcFamily::HeatAmplitude, {0.2, 0.9}), {0.0, 1.0, 0.3}) == 0.0);
    CHECK(at(make_task(IcFamily::HeatAmplitude, {0.2, 0.9}), {0.5, 1.0, 0.3}) ==
          doctest::Approx(1.0));

    // boundary data wins at corners: theta cos(pi x) = -theta at x = 1, boundary says 0
    const TaskSpec b = make_task(IcFamily::BurgersSinCos, {0.6});
    CHECK(at(b, {1.0, 0.0}) == 0.0);
    CHECK(at(b, {-1.0, 0.0}) == 0.0);
    const TaskSpec h = make_task(IcFamily::HeatAmplitude, {0.0, 1.0});
    CHECK(at(h, {0.5, 1.0, 0.0}) == doctest::Approx(1.0)); // top edge, not the IC value 0
    CHECK(at(h, {1.0, 0.2, 0.0}) == 0.0);

    CHECK_THROWS_AS(at(b, {0.2, 0.5}), UsageError);
    CHECK_THROWS_AS(at(b, {0.2, 0.5, 0.1}), UsageError);

    // continuity along each face: the t = 0 face approaches the corner value
    const TaskSpec c = make_task(IcFamily::BurgersSinCos, {0.0});
    CHECK(std::abs(at(c, {1.0 - 1e-9, 0.0})) < 1e-8);
    const TaskSpec top = make_task(IcFamily::HeatFrequency, {0.7, 0.2});
    CHECK(std::abs(at(top, {1.0 - 1e-9, 1.0, 0.4})) < 1e-8);
}

TEST_CASE("sample_points: domains, faces, targets, noise") {
    std::mt19937_64 rng(3);
    for (IcFamily fam : {IcFamily::BurgersSinCos, IcFamily::HeatAmplitude,
                         IcFamily::HeatFrequency, IcFamily::BurgersSinOnly}) {
        const TaskSpec task = sample_task(fam, rng);
        const PointSet ps = sample_points(task, 500, 10, rng);
        const int dim = task.input_dim();
        CHECK(ps.n_collocation() == 500);
        CHECK(ps.n_ib() == 10);
        CHECK(ps.noise.size() == 0);
        for (Eigen::Index i = 0; i < ps.n_collocation(); ++i) {
            const auto p = ps.collocation.col(i);
            CHECK((p(0) > -1.0 && p(0) < 1.0));
            CHECK((p(dim - 1) > 0.0 && p(dim - 1) < 1.0));
            if (dim == 3) {
                CHECK((p(1) > -1.0 && p(1) < 1.0));
            }
        }
        int initial = 0;
        for (Eigen::Index i = 0; i < ps.n_ib(); ++i) {
            const Eigen::VectorXd p = ps.ib_points.col(i);
            const bool on_t0 = p(dim - 1) == 0.0;
            const bool on_x = std::abs(p(0)) == 1.0;
            const bool on_y = dim == 3 && std::abs(p(1)) == 1.0;
            CHECK((on_t0 || on_x || on_y));
            initial += on_t0 ? 1 : 0;
            CHECK(ps.ib_targets(i) == ic_bc_value(task, std::span<const double>(p.data(), p.size())));
        }
        CHECK(initial >= 1);
    }

    const TaskSpec noisy = make_task(IcFamily::BurgersSinOnly, {}, 0.2);
    const PointSet ps = sample_points(noisy, 1000, 5, rng);
    CHECK(ps.noise.size() == 1000);
    CHECK(ps.noise.cwiseAbs().maxCoeff() <= 1.0);

    CHECK(ib_face_allocation(make_task(IcFamily::BurgersSinCos, {0.0}), 10) ==
          std::vector<int>{4, 3, 3});
    CHECK(ib_face_allocation(make_task(IcFamily::HeatAmplitude, {0.0, 0.0}), 10) ==
          std::vector<int>{2, 2, 2, 2, 2});
    CHECK(ib_face_allocation(make_task(IcFamily::HeatAmplitude, {0.0, 0.0}), 1) ==
          std::vector<int>{1, 0, 0, 0, 0});
    CHECK_THROWS_AS(sample_points(noisy, 0, 5, rng), UsageError);

    std::mt19937_64 r1(99);
    std::mt19937_64 r2(99);
    const PointSet a = sample_points(noisy, 50, 10, r1);
    const PointSet b = sample_points(noisy, 50, 10, r2);
    CHECK(a.collocation == b.collocation);
    CHECK(a.ib_points == b.ib_points);
    CHECK(a.noise == b.noise);
}

TEST_CASE("residual worked values") {
    const TaskSpec b = make_task(IcFamily::BurgersSinCos, {0.0});
    CHECK(residual(b, Jet::constant(0.0, DirectionSet::burgers())) == 0.0);

    Jet j = Jet::constant(1.0, DirectionSet::burgers());
    j.first[0] = 2.0;  // u_x
    j.second[0] = 4.0; // u_xx
    j.first[2] = 0.0;  // u_t
    CHECK(residual(b, j) == doctest::Approx(1.8));

    const TaskSpec h = make_task(IcFamily::HeatAmplitude, {1.0, 0.0});
    Jet k = Jet::constant(0.7, DirectionSet::heat());
    k.second[0] = 3.0;
    k.second[1] = -1.0;
    k.first[2] = 2.0;
    CHECK(residual(h, k) == 0.0);

    // noise enters only when p > 0
    PointSet ps;
    ps.noise = Eigen::VectorXd::Constant(1, 0.5);
    CHECK(residual(b, j, 0, ps) == residual(b, j, 0.9));
    const TaskSpec noisy = make_task(IcFamily::BurgersSinOnly, {}, 0.2);
    CHECK(residual(noisy, j, 0, ps) == doctest::Approx(1.8 - 0.1));
    PointSet empty;
    CHECK_THROWS_AS(residual(noisy, j, 0, empty), UsageError);

    CHECK_THROWS_AS(residual(h, j), UsageError); // no y channel
}

TEST_CASE("manufactured field u = x^2 t through network-free jets") {
    const TaskSpec b = make_task(IcFamily::BurgersSinCos, {0.0});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        const double t = 0.5 * (u(rng) + 1.0);
        const Jet xj = Jet::seed(x, Direction::X, DirectionSet::burgers());
        const Jet tj = Jet::seed(t, Direction::T, DirectionSet::burgers());
        const Jet field = xj * xj * tj;
        const double expected = x * x + 2 * x * x * x * t * t - 0.1 * t;
        CHECK(std::abs(residual(b, field) - expected) < 1e-10);
    }
}
