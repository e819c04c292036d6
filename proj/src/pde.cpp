#include "pinnmeta/pde.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pinnmeta {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFaceTol = 1e-12;

bool is_heat(const TaskSpec& task) { return task.equation == Equation::Heat2D; }

double coord_x(std::span<const double> p) { return p[0]; }
double coord_y(std::span<const double> p) { return p[1]; }
double coord_t(std::span<const double> p) { return p[p.size() - 1]; }

void check_dim(const TaskSpec& task, std::span<const double> point) {
    if (static_cast<int>(point.size()) != task.input_dim()) {
        throw UsageError("point has " + std::to_string(point.size()) + " coordinates, task needs " +
                         std::to_string(task.input_dim()));
    }
}

// Uniform on the open interval (lo, hi).
double open_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    double v = dist(rng);
    while (v <= lo || v >= hi) {
        v = dist(rng);
    }
    return v;
}

} // namespace

Equation equation_of(IcFamily family) {
    switch (family) {
    case IcFamily::BurgersSinCos:
    case IcFamily::BurgersSinOnly: return Equation::Burgers1D;
    case IcFamily::HeatAmplitude:
    case IcFamily::HeatFrequency: return Equation::Heat2D;
    }
    throw UsageError("unknown IC family");
}

int family_arity(IcFamily family) {
    switch (family) {
    case IcFamily::BurgersSinCos: return 1;
    case IcFamily::HeatAmplitude:
    case IcFamily::HeatFrequency: return 2;
    case IcFamily::BurgersSinOnly: return 0;
    }
    throw UsageError("unknown IC family");
}

std::string to_string(Equation e) { return e == Equation::Heat2D ? "heat2d" : "burgers1d"; }

std::string to_string(IcFamily f) {
    switch (f) {
    case IcFamily::BurgersSinCos: return "burgers-sincos";
    case IcFamily::HeatAmplitude: return "heat-amplitude";
    case IcFamily::HeatFrequency: return "heat-frequency";
    case IcFamily::BurgersSinOnly: return "burgers-sin";
    }
    return "?";
}

Equation parse_equation(const std::string& s) {
    if (s == "burgers1d" || s == "burgers") {
        return Equation::Burgers1D;
    }
    if (s == "heat2d" || s == "heat") {
        return Equation::Heat2D;
    }
    throw UsageError("unknown equation '" + s + "' (expected burgers or heat2d)");
}

IcFamily parse_ic_family(const std::string& s) {
    if (s == "burgers-sincos" || s == "sincos") {
        return IcFamily::BurgersSinCos;
    }
    if (s == "burgers-sin" || s == "sin" || s == "sin-only") {
        return IcFamily::BurgersSinOnly;
    }
    if (s == "heat-amplitude" || s == "amplitude") {
        return IcFamily::HeatAmplitude;
    }
    if (s == "heat-frequency" || s == "frequency") {
        return IcFamily::HeatFrequency;
    }
    throw UsageError("unknown IC family '" + s + "'");
}

TaskSpec make_task(IcFamily family, std::vector<double> params, double noise_weight,
                   std::uint64_t seed) {
    if (static_cast<int>(params.size()) != family_arity(family)) {
        throw UsageError(to_string(family) + " takes " + std::to_string(family_arity(family)) +
                         " parameter(s), got " + std::to_string(params.size()));
    }
    if (!(noise_weight >= 0.0) || !std::isfinite(noise_weight)) {
        throw UsageError("noise weight must be finite and non-negative");
    }
    TaskSpec t;
    t.family = family;
    t.equation = equation_of(family);
    t.params = std::move(params);
    t.noise_weight = noise_weight;
    t.seed = seed;
    return t;
}

std::string to_record(const TaskSpec& task) {
    std::ostringstream os;
    os << "equation=" << to_string(task.equation) << " family=" << to_string(task.family)
       << " params=";
    for (std::size_t i = 0; i < task.params.size(); ++i) {
        os << (i ? ";" : "") << format_double(task.params[i]);
    }
    os << " nu=" << format_double(task.viscosity) << " p=" << format_double(task.noise_weight)
       << " seed=" << task.seed;
    if (task.frequency_in_y) {
        os << " ic_y=1";
    }
    return os.str();
}

TaskSpec parse_record(const std::string& record) {
    TaskSpec t;
    bool have_family = false;
    std::istringstream is(record);
    std::string field;
    while (is >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) {
            throw UsageError("malformed task record field '" + field + "'");
        }
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        if (key == "equation") {
            t.equation = parse_equation(val);
        } else if (key == "family") {
            t.family = parse_ic_family(val);
            have_family = true;
        } else if (key == "params") {
            t.params.clear();
            if (!val.empty()) {
                for (const auto& p : split(val, ';')) {
                    t.params.push_back(parse_double(p));
                }
            }
        } else if (key == "nu") {
            t.viscosity = parse_double(val);
        } else if (key == "p") {
            t.noise_weight = parse_double(val);
        } else if (key == "seed") {
            t.seed = std::stoull(val);
        } else if (key == "ic_y") {
            t.frequency_in_y = val == "1";
        } else {
            throw UsageError("unknown task record key '" + key + "'");
        }
    }
    if (!have_family) {
        throw UsageError("task record has no family");
    }
    if (equation_of(t.family) != t.equation ||
        static_cast<int>(t.params.size()) != family_arity(t.family)) {
        throw UsageError("inconsistent task record '" + record + "'");
    }
    return t;
}

TaskSpec sample_task(IcFamily family, std::mt19937_64& rng, double noise_weight) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> params(static_cast<std::size_t>(family_arity(family)));
    for (double& p : params) {
        p = unit(rng);
    }
    return make_task(family, std::move(params), noise_weight, rng());
}

std::vector<int> ib_face_allocation(const TaskSpec& task, int n_ib) {
    const int faces = is_heat(task) ? 5 : 3;
    std::vector<int> counts(static_cast<std::size_t>(faces), n_ib / faces);
    for (int i = 0; i < n_ib % faces; ++i) {
        counts[static_cast<std::size_t>(i)] += 1;
    }
    return counts;
}

PointSet sample_points(const TaskSpec& task, int n_collocation, int n_ib, std::mt19937_64& rng) {
    if (n_collocation < 1 || n_ib < 1) {
        throw UsageError("point counts must be at least 1");
    }
    const int dim = task.input_dim();
    const bool heat = is_heat(task);
    PointSet ps;

    ps.collocation.resize(dim, n_collocation);
    for (int i = 0; i < n_collocation; ++i) {
        ps.collocation(0, i) = open_uniform(rng, -1.0, 1.0);
        if (heat) {
            ps.collocation(1, i) = open_uniform(rng, -1.0, 1.0);
        }
        ps.collocation(dim - 1, i) = open_uniform(rng, 0.0, 1.0);
    }

    std::uniform_real_distribution<double> space(-1.0, 1.0);
    ps.ib_points.resize(dim, n_ib);
    const auto counts = ib_face_allocation(task, n_ib);
    int col = 0;
    for (std::size_t face = 0; face < counts.size(); ++face) {
        for (int k = 0; k < counts[face]; ++k, ++col) {
            auto p = ps.ib_points.col(col);
            // Free coordinates first, then pin the face coordinate.
            p(0) = space(rng);
            if (heat) {
                p(1) = space(rng);
            }
            p(dim - 1) = face == 0 ? 0.0 : open_uniform(rng, 0.0, 1.0);
            switch (face) {
            case 1: p(0) = -1.0; break;
            case 2: p(0) = 1.0; break;
            case 3: p(1) = -1.0; break;
            case 4: p(1) = 1.0; break;
            default: break;
            }
        }
    }

    ps.ib_targets.resize(n_ib);
    for (int i = 0; i < n_ib; ++i) {
        const Eigen::VectorXd p = ps.ib_points.col(i);
        ps.ib_targets(i) = ic_bc_value(task, std::span<const double>(p.data(), p.size()));
    }

    if (task.noise_weight > 0.0) {
        std::uniform_real_distribution<double> eps(-1.0, 1.0);
        ps.noise.resize(n_collocation);
        for (int i = 0; i < n_collocation; ++i) {
            ps.noise(i) = eps(rng);
        }
    }
    return ps;
}

double initial_value(const TaskSpec& task, std::span<const double> point) {
    check_dim(task, point);
    const double x = coord_x(point);
    switch (task.family) {
    case IcFamily::BurgersSinCos: return -std::sin(kPi * x) + task.params[0] * std::cos(kPi * x);
    case IcFamily::BurgersSinOnly: return -std::sin(kPi * x);
    case IcFamily::HeatAmplitude:
        return task.params[0] * std::sin(kPi * x) + task.params[1] * std::cos(kPi * x);
    case IcFamily::HeatFrequency: {
        const double second = task.frequency_in_y ? coord_y(point) : x;
        return std::sin(task.params[0] * kPi * x) * std::cos(task.params[1] * kPi * second);
    }
    }
    throw UsageError("unknown IC family");
}

bool on_spatial_boundary(const TaskSpec& task, std::span<const double> point) {
    check_dim(task, point);
    if (std::abs(std::abs(coord_x(point)) - 1.0) <= kFaceTol) {
        return true;
    }
    return is_heat(task) && std::abs(std::abs(coord_y(point)) - 1.0) <= kFaceTol;
}

double boundary_value(const TaskSpec& task, std::span<const double> point) {
    check_dim(task, point);
    if (!is_heat(task)) {
        return 0.0;
    }
    // Heated top edge; the side edges (x = +-1) are cold, sin(+-pi) = 0 anyway.
    const double x = coord_x(point);
    if (std::abs(std::abs(x) - 1.0) <= kFaceTol) {
        return 0.0;
    }
    if (std::abs(coord_y(point) - 1.0) <= kFaceTol) {
        return std::sin(kPi * x);
    }
    return 0.0;
}

double ic_bc_value(const TaskSpec& task, std::span<const double> point) {
    check_dim(task, point);
    if (on_spatial_boundary(task, point)) {
        return boundary_value(task, point);
    }
    if (std::abs(coord_t(point)) <= kFaceTol) {
        return initial_value(task, point);
    }
    throw UsageError("ic_bc_value called at an interior point");
}

double residual(const TaskSpec& task, const Jet& u, double noise) {
    if (is_heat(task)) {
        return u.d2(Direction::X) + u.d2(Direction::Y) - u.d1(Direction::T);
    }
    double e = u.d1(Direction::T) + u.value * u.d1(Direction::X) - task.viscosity * u.d2(Direction::X);
    if (task.noise_weight > 0.0) {
        e -= task.noise_weight * noise;
    }
    return e;
}

double residual(const TaskSpec& task, const Jet& u, Eigen::Index point_index,
                const PointSet& points) {
    double eps = 0.0;
    if (task.noise_weight > 0.0) {
        if (point_index < 0 || point_index >= points.noise.size()) {
            throw UsageError("point set carries no noise for this point");
        }
        eps = points.noise(point_index);
    }
    return residual(task, u, eps);
}

} // namespace pinnmeta
