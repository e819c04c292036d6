#include "pinnmeta/jet.hpp"

#include "pinnmeta/errors.hpp"

#include <cmath>

namespace pinnmeta {

std::string to_string(Direction d) {
    switch (d) {
    case Direction::X: return "x";
    case Direction::Y: return "y";
    case Direction::T: return "t";
    }
    return "?";
}

DirectionSet& DirectionSet::with(Direction d, int order) {
    if (order < 0 || order > 2) {
        throw UsageError("jet direction order must be 0, 1 or 2");
    }
    orders_[index(d)] = static_cast<std::uint8_t>(order);
    return *this;
}

DirectionSet DirectionSet::burgers() {
    DirectionSet s;
    s.with(Direction::X, 2).with(Direction::T, 1);
    return s;
}

DirectionSet DirectionSet::heat() {
    DirectionSet s;
    s.with(Direction::X, 2).with(Direction::Y, 2).with(Direction::T, 1);
    return s;
}

Jet Jet::constant(double v, DirectionSet dirs) {
    Jet j;
    j.value = v;
    j.dirs = dirs;
    return j;
}

Jet Jet::seed(double v, Direction d, DirectionSet dirs) {
    if (!dirs.has(d)) {
        throw UsageError("seed direction " + to_string(d) + " is not tracked by the jet");
    }
    Jet j = constant(v, dirs);
    j.first[static_cast<std::size_t>(d)] = 1.0;
    return j;
}

double Jet::d1(Direction d) const {
    if (!dirs.has(d)) {
        throw UsageError("jet does not track direction " + to_string(d));
    }
    return first[static_cast<std::size_t>(d)];
}

double Jet::d2(Direction d) const {
    if (dirs.order(d) < 2) {
        throw UsageError("jet does not track the second derivative along " + to_string(d));
    }
    return second[static_cast<std::size_t>(d)];
}

namespace {

void require_same_dirs(const Jet& a, const Jet& b) {
    if (!(a.dirs == b.dirs)) {
        throw UsageError("jet arithmetic on mismatched direction sets");
    }
}

} // namespace

Jet chain(const Jet& a, double f, double df, double d2f) {
    Jet r = Jet::constant(f, a.dirs);
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        r.first[k] = df * a.first[k];
        r.second[k] = df * a.second[k] + d2f * a.first[k] * a.first[k];
    }
    return r;
}

Jet operator+(const Jet& a, const Jet& b) {
    require_same_dirs(a, b);
    Jet r = Jet::constant(a.value + b.value, a.dirs);
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        r.first[k] = a.first[k] + b.first[k];
        r.second[k] = a.second[k] + b.second[k];
    }
    return r;
}

Jet operator-(const Jet& a, const Jet& b) {
    require_same_dirs(a, b);
    Jet r = Jet::constant(a.value - b.value, a.dirs);
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        r.first[k] = a.first[k] - b.first[k];
        r.second[k] = a.second[k] - b.second[k];
    }
    return r;
}

Jet operator*(const Jet& a, const Jet& b) {
    require_same_dirs(a, b);
    Jet r = Jet::constant(a.value * b.value, a.dirs);
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        r.first[k] = a.first[k] * b.value + a.value * b.first[k];
        r.second[k] =
            a.second[k] * b.value + 2.0 * a.first[k] * b.first[k] + a.value * b.second[k];
    }
    return r;
}

Jet operator/(const Jet& a, const Jet& b) {
    require_same_dirs(a, b);
    if (b.value == 0.0) {
        throw std::domain_error("jet division by a jet with zero value");
    }
    const double inv = 1.0 / b.value;
    return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Jet operator-(const Jet& a) { return a * -1.0; }

Jet operator+(const Jet& a, double c) {
    Jet r = a;
    r.value += c;
    return r;
}
Jet operator+(double c, const Jet& a) { return a + c; }
Jet operator-(const Jet& a, double c) { return a + (-c); }
Jet operator-(double c, const Jet& a) { return (-a) + c; }

Jet operator*(const Jet& a, double c) {
    Jet r = Jet::constant(a.value * c, a.dirs);
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        r.first[k] = a.first[k] * c;
        r.second[k] = a.second[k] * c;
    }
    return r;
}
Jet operator*(double c, const Jet& a) { return a * c; }

Jet operator/(const Jet& a, double c) {
    if (c == 0.0) {
        throw std::domain_error("jet division by zero");
    }
    return a * (1.0 / c);
}

Jet tanh(const Jet& a) {
    const double t = std::tanh(a.value);
    const double s = 1.0 - t * t;
    return chain(a, t, s, -2.0 * t * s);
}

Jet sin(const Jet& a) {
    const double s = std::sin(a.value);
    const double c = std::cos(a.value);
    return chain(a, s, c, -s);
}

Jet cos(const Jet& a) {
    const double s = std::sin(a.value);
    const double c = std::cos(a.value);
    return chain(a, c, -s, -c);
}

Jet exp(const Jet& a) {
    const double e = std::exp(a.value);
    return chain(a, e, e, e);
}

Jet pow(const Jet& a, double n) {
    if (a.value == 0.0 && n < 2.0 && n != 0.0 && n != 1.0) {
        throw std::domain_error("jet pow: derivative undefined at zero base");
    }
    const double f = std::pow(a.value, n);
    const double df = n == 0.0 ? 0.0 : n * std::pow(a.value, n - 1.0);
    const double d2f = (n == 0.0 || n == 1.0) ? 0.0 : n * (n - 1.0) * std::pow(a.value, n - 2.0);
    return chain(a, f, df, d2f);
}

int arity(ElementaryOp op) {
    switch (op) {
    case ElementaryOp::Add:
    case ElementaryOp::Sub:
    case ElementaryOp::Mul:
    case ElementaryOp::Div: return 2;
    default: return 1;
    }
}

Jet jet_apply(ElementaryOp op, std::span<const Jet> args, double scalar) {
    if (static_cast<int>(args.size()) != arity(op)) {
        throw UsageError("jet_apply: wrong number of arguments");
    }
    switch (op) {
    case ElementaryOp::Add: return args[0] + args[1];
    case ElementaryOp::Sub: return args[0] - args[1];
    case ElementaryOp::Mul: return args[0] * args[1];
    case ElementaryOp::Div: return args[0] / args[1];
    case ElementaryOp::Neg: return -args[0];
    case ElementaryOp::Scale: return args[0] * scalar;
    case ElementaryOp::Tanh: return tanh(args[0]);
    case ElementaryOp::Sin: return sin(args[0]);
    case ElementaryOp::Cos: return cos(args[0]);
    case ElementaryOp::Exp: return exp(args[0]);
    case ElementaryOp::Pow: return pow(args[0], scalar);
    }
    throw UsageError("jet_apply: unknown op");
}

} // namespace pinnmeta
