#include "pinnmeta/oracle.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace pinnmeta {

namespace {

constexpr double kDivergenceBound = 10.0;
constexpr int kStartupSteps = 4;

std::vector<double> linspace(double lo, double hi, int intervals) {
    std::vector<double> v(static_cast<std::size_t>(intervals) + 1);
    for (int i = 0; i <= intervals; ++i) {
        v[static_cast<std::size_t>(i)] = i == intervals ? hi : lo + (hi - lo) * i / intervals;
    }
    return v;
}

// Constant-coefficient tridiagonal system (-r, 1 + 2r, -r), factored once.
class TridiagonalSolver {
public:
    TridiagonalSolver(int n, double r) : r_(r), cprime_(static_cast<std::size_t>(n)),
                                         denom_(static_cast<std::size_t>(n)) {
        const double b = 1.0 + 2.0 * r;
        double prev = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = b + r * prev; // b - a * c'_{i-1}, a = c = -r
            denom_[i] = d;
            cprime_[i] = -r / d;
            prev = cprime_[i];
        }
    }

    // Solves in place; rhs already includes the Dirichlet contributions.
    void solve(std::vector<double>& x) const {
        const std::size_t n = x.size();
        x[0] /= denom_[0];
        for (std::size_t i = 1; i < n; ++i) {
            x[i] = (x[i] + r_ * x[i - 1]) / denom_[i];
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            x[i] -= cprime_[i] * x[i + 1];
        }
    }

private:
    double r_;
    std::vector<double> cprime_;
    std::vector<double> denom_;
};

void check_state(const std::vector<double>& u, double t) {
    for (double v : u) {
        if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) {
            throw SolverFailure("finite-difference solution diverged near t = " + format_double(t));
        }
    }
}

} // namespace

const Axis& SolutionField::axis(const std::string& name) const {
    for (const Axis& a : axes) {
        if (a.name == name) {
            return a;
        }
    }
    throw UsageError("field has no axis '" + name + "'");
}

Eigen::MatrixXd SolutionField::coordinates() const {
    const auto& t = axis("t").coords;
    const auto& x = axis("x").coords;
    const bool heat = axes.size() == 3;
    const std::size_t ny = heat ? axis("y").coords.size() : 1;
    Eigen::MatrixXd pts(heat ? 3 : 2, static_cast<Eigen::Index>(t.size() * ny * x.size()));
    Eigen::Index col = 0;
    for (double tv : t) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (double xv : x) {
                pts(0, col) = xv;
                if (heat) {
                    pts(1, col) = axis("y").coords[iy];
                    pts(2, col) = tv;
                } else {
                    pts(1, col) = tv;
                }
                ++col;
            }
        }
    }
    return pts;
}

std::vector<double> SolutionField::time_slice(std::size_t it) const {
    std::size_t stride = 1;
    for (std::size_t a = 1; a < axes.size(); ++a) {
        stride *= axes[a].coords.size();
    }
    if (it >= axes.front().coords.size()) {
        throw UsageError("time slice index out of range");
    }
    return {values.begin() + static_cast<std::ptrdiff_t>(it * stride),
            values.begin() + static_cast<std::ptrdiff_t>((it + 1) * stride)};
}

SolutionField solve_burgers(const TaskSpec& task, int nx, int nt, const BurgersOptions& options) {
    if (task.equation != Equation::Burgers1D) {
        throw UsageError("solve_burgers needs a Burgers task");
    }
    if (nx < 64 || nt < 100 || options.refine < 1) {
        throw UsageError("solve_burgers needs nx >= 64, nt >= 100 and refine >= 1");
    }
    const int m = nx * options.refine;
    const double h = 2.0 / m;
    const double nu = task.viscosity;
    const auto xs = linspace(-1.0, 1.0, m);

    std::vector<double> u(xs.size(), 0.0);
    for (int j = 1; j < m; ++j) {
        const double pt[2] = {xs[j], 0.0};
        u[j] = options.initial ? options.initial(xs[j]) : initial_value(task, pt);
    }

    SolutionField field;
    field.task = task;
    field.scheme = "crank-nicolson+ab2-central";
    field.dx = h;
    field.refine = options.refine;
    field.axes = {{"t", linspace(0.0, options.t_end, nt)}, {"x", linspace(-1.0, 1.0, nx)}};
    field.values.reserve(static_cast<std::size_t>(nt + 1) * (nx + 1));
    auto record = [&] {
        for (int j = 0; j <= nx; ++j) {
            field.values.push_back(u[static_cast<std::size_t>(j) * options.refine]);
        }
    };
    record();

    auto convection = [&](const std::vector<double>& v, std::vector<double>& out) {
        out.assign(v.size(), 0.0);
        for (int j = 1; j < m; ++j) {
            out[j] = -(v[j + 1] * v[j + 1] - v[j - 1] * v[j - 1]) / (4.0 * h);
        }
    };

    std::vector<double> conv(u.size()), conv_prev(u.size()), rhs(static_cast<std::size_t>(m - 1));
    double dt_prev = 0.0;
    int taken = 0;
    std::optional<TridiagonalSolver> startup_solver;
    const double interval = options.t_end / nt;
    double t = 0.0;
    for (int k = 1; k <= nt; ++k) {
        double umax = 1e-12;
        for (double v : u) {
            umax = std::max(umax, std::abs(v));
        }
        const int steps = std::max(1, static_cast<int>(std::ceil(interval / (options.cfl * h / umax))));
        const double dt = interval / steps;
        field.dt = std::max(field.dt, dt);
        const double r = 0.5 * nu * dt / (h * h);
        const TridiagonalSolver solver(m - 1, r);

        for (int s = 0; s < steps; ++s) {
            // The first few steps are backward Euler: the IC need not vanish
            // at x = +-1, and Crank-Nicolson leaves that jump undamped.
            const bool startup = taken < kStartupSteps;
            if (startup && !startup_solver) {
                startup_solver.emplace(m - 1, 2.0 * r);
            }
            convection(u, conv);
            const double w = dt_prev > 0.0 ? dt / dt_prev : 0.0;
            for (int j = 1; j < m; ++j) {
                const double lap = u[j + 1] - 2.0 * u[j] + u[j - 1];
                const double n_star = dt_prev > 0.0
                                          ? (1.0 + 0.5 * w) * conv[j] - 0.5 * w * conv_prev[j]
                                          : conv[j];
                rhs[j - 1] = u[j] + (startup ? 0.0 : r * lap) + dt * n_star;
            }
            if (startup) {
                startup_solver->solve(rhs);
                if (++taken == kStartupSteps) {
                    startup_solver.reset();
                }
            } else {
                solver.solve(rhs);
            }
            std::copy(rhs.begin(), rhs.end(), u.begin() + 1);
            std::swap(conv, conv_prev);
            dt_prev = dt;
            t += dt;
        }
        check_state(u, t);
        record();
    }
    return field;
}

SolutionField solve_heat2d(const TaskSpec& task, int nx, int ny, int nt, const HeatOptions& options) {
    if (task.equation != Equation::Heat2D) {
        throw UsageError("solve_heat2d needs a heat task");
    }
    if (nx < 2 || ny < 2 || nt < 1 || options.refine < 1) {
        throw UsageError("solve_heat2d needs nx, ny >= 2, nt >= 1 and refine >= 1");
    }
    const int mx = nx * options.refine;
    const int my = ny * options.refine;
    const double hx = 2.0 / mx;
    const double hy = 2.0 / my;
    const auto xs = linspace(-1.0, 1.0, mx);
    const auto ys = linspace(-1.0, 1.0, my);
    const std::size_t w = xs.size();

    auto bc = [&](double x, double y) {
        if (options.boundary) {
            return options.boundary(x, y);
        }
        const double pt[3] = {x, y, 0.0};
        return boundary_value(task, pt);
    };
    auto ic = [&](double x, double y) {
        if (options.initial) {
            return options.initial(x, y);
        }
        const double pt[3] = {x, y, 0.0};
        return initial_value(task, pt);
    };

    std::vector<double> u(w * ys.size());
    for (int iy = 0; iy <= my; ++iy) {
        for (int ix = 0; ix <= mx; ++ix) {
            const bool edge = ix == 0 || ix == mx || iy == 0 || iy == my;
            u[iy * w + ix] = edge ? bc(xs[ix], ys[iy]) : ic(xs[ix], ys[iy]);
        }
    }

    SolutionField field;
    field.task = task;
    field.scheme = "backward-euler-split";
    field.dx = std::max(hx, hy);
    field.refine = options.refine;
    field.axes = {{"t", linspace(0.0, options.t_end, nt)},
                  {"y", linspace(-1.0, 1.0, ny)},
                  {"x", linspace(-1.0, 1.0, nx)}};
    auto record = [&] {
        for (int iy = 0; iy <= ny; ++iy) {
            for (int ix = 0; ix <= nx; ++ix) {
                field.values.push_back(
                    u[static_cast<std::size_t>(iy * options.refine) * w + ix * options.refine]);
            }
        }
    };
    record();

    const double interval = options.t_end / nt;
    const double cap = options.dt_max > 0.0 ? options.dt_max : std::min(hx, hy) * std::min(hx, hy);
    const int steps = std::max(1, static_cast<int>(std::ceil(interval / cap - 1e-9)));
    const double dt = interval / steps;
    field.dt = dt;
    const double rx = dt / (hx * hx);
    const double ry = dt / (hy * hy);
    const TridiagonalSolver solve_x(mx - 1, rx);
    const TridiagonalSolver solve_y(my - 1, ry);

    std::vector<double> line_x(static_cast<std::size_t>(mx - 1));
    std::vector<double> line_y(static_cast<std::size_t>(my - 1));
    double t = 0.0;
    for (int k = 1; k <= nt; ++k) {
        for (int s = 0; s < steps; ++s) {
            for (int iy = 1; iy < my; ++iy) {
                double* row = &u[iy * w];
                for (int ix = 1; ix < mx; ++ix) {
                    line_x[ix - 1] = row[ix];
                }
                line_x.front() += rx * row[0];
                line_x.back() += rx * row[mx];
                solve_x.solve(line_x);
                for (int ix = 1; ix < mx; ++ix) {
                    row[ix] = line_x[ix - 1];
                }
            }
            for (int ix = 1; ix < mx; ++ix) {
                for (int iy = 1; iy < my; ++iy) {
                    line_y[iy - 1] = u[iy * w + ix];
                }
                line_y.front() += ry * u[ix];
                line_y.back() += ry * u[my * w + ix];
                solve_y.solve(line_y);
                for (int iy = 1; iy < my; ++iy) {
                    u[iy * w + ix] = line_y[iy - 1];
                }
            }
            t += dt;
        }
        check_state(u, t);
        record();
    }
    return field;
}

SolutionField evaluation_field(const TaskSpec& task) {
    if (task.equation == Equation::Heat2D) {
        HeatOptions opts;
        opts.refine = 2;
        return solve_heat2d(task, 64, 64, 20, opts);
    }
    BurgersOptions opts;
    opts.refine = 4;
    TaskSpec clean = task;
    clean.noise_weight = 0.0;
    SolutionField f = solve_burgers(clean, 256, 100, opts);
    f.task = task;
    return f;
}

double eval_field_mse(const SolutionField& field, const Eigen::VectorXd& predictions) {
    if (static_cast<std::size_t>(predictions.size()) != field.values.size()) {
        throw UsageError("prediction count does not match the field grid");
    }
    const Eigen::Map<const Eigen::VectorXd> v(field.values.data(), predictions.size());
    return (predictions - v).squaredNorm() / static_cast<double>(field.values.size());
}

double eval_field_mse(const SolutionField& field, const BatchPredictor& predictor) {
    return eval_field_mse(field, predictor(field.coordinates()));
}

void write_field(std::ostream& os, const SolutionField& field) {
    os << "pinnmeta-field 1\n";
    os << "task " << to_record(field.task) << '\n';
    os << "scheme " << field.scheme << " dx " << format_double(field.dx) << " dt "
       << format_double(field.dt) << " refine " << field.refine << '\n';
    os << "axes " << field.axes.size() << '\n';
    for (const Axis& a : field.axes) {
        os << "axis " << a.name << ' ' << a.coords.size();
        for (double c : a.coords) {
            os << ' ' << format_double(c);
        }
        os << '\n';
    }
    os << "values " << field.values.size() << '\n';
    for (double v : field.values) {
        os << format_double(v) << '\n';
    }
}

SolutionField read_field(std::istream& is) {
    std::string line;
    auto next_line = [&](const std::string& tag) {
        if (!std::getline(is, line) || line.rfind(tag, 0) != 0) {
            throw UsageError("field container: expected '" + tag + "' line");
        }
        return line.substr(tag.size());
    };
    if (next_line("pinnmeta-field") != " 1") {
        throw UsageError("unsupported field container version");
    }
    SolutionField f;
    f.task = parse_record(std::string(trim(next_line("task "))));
    {
        std::istringstream ss(next_line("scheme "));
        std::string k1, dx, k2, dt, k3;
        ss >> f.scheme >> k1 >> dx >> k2 >> dt >> k3 >> f.refine;
        f.dx = parse_double(dx);
        f.dt = parse_double(dt);
    }
    const auto n_axes = static_cast<std::size_t>(parse_int(next_line("axes ")));
    for (std::size_t a = 0; a < n_axes; ++a) {
        std::istringstream ss(next_line("axis "));
        Axis ax;
        std::size_t n = 0;
        ss >> ax.name >> n;
        std::string tok;
        for (std::size_t i = 0; i < n && ss >> tok; ++i) {
            ax.coords.push_back(parse_double(tok));
        }
        if (ax.coords.size() != n) {
            throw UsageError("field container: truncated axis " + ax.name);
        }
        f.axes.push_back(std::move(ax));
    }
    const auto n_values = static_cast<std::size_t>(parse_int(next_line("values ")));
    f.values.reserve(n_values);
    for (std::size_t i = 0; i < n_values; ++i) {
        if (!std::getline(is, line)) {
            throw UsageError("field container: truncated values");
        }
        f.values.push_back(parse_double(line));
    }
    return f;
}

void save_field(const std::string& path, const SolutionField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write field " + path);
    }
    write_field(os, field);
}

SolutionField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open field " + path);
    }
    return read_field(is);
}

} // namespace pinnmeta
