#include "pinnmeta/tape.hpp"

#include "pinnmeta/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnmeta {

const Jet& Var::jet() const {
    if (tape_ == nullptr) {
        throw UsageError("unbound tape variable");
    }
    return tape_->value(*this);
}

Var Tape::push(Node node, Jet value) {
    nodes_.push_back(node);
    values_.push_back(std::move(value));
    return Var(this, nodes_.size() - 1);
}

void Tape::check(Var v) const {
    if (v.tape() != this || v.index() >= nodes_.size()) {
        throw UsageError("variable does not belong to this tape or is out of range");
    }
}

Var Tape::leaf(const Jet& j) {
    if (!(j.dirs == dirs_)) {
        throw UsageError("leaf jet direction set does not match the tape");
    }
    return push(Node{}, j);
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    return push(Node{Op::Add, a.index(), b.index()}, values_[a.index()] + values_[b.index()]);
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    return push(Node{Op::Sub, a.index(), b.index()}, values_[a.index()] - values_[b.index()]);
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    return push(Node{Op::Mul, a.index(), b.index()}, values_[a.index()] * values_[b.index()]);
}

Var Tape::div(Var a, Var b) {
    check(b);
    const double v = values_[b.index()].value;
    if (v == 0.0) {
        throw std::domain_error("tape division by a node with zero value");
    }
    const double inv = 1.0 / v;
    const double inv2 = inv * inv;
    return mul(a, unary(b, inv, -inv2, 2.0 * inv2 * inv, -6.0 * inv2 * inv2));
}

Var Tape::add_scalar(Var a, double c) {
    check(a);
    Node n{Op::AddScalar, a.index()};
    n.c = c;
    return push(n, values_[a.index()] + c);
}

Var Tape::scale(Var a, double c) {
    check(a);
    Node n{Op::Scale, a.index()};
    n.c = c;
    return push(n, values_[a.index()] * c);
}

Var Tape::unary(Var a, double f, double df, double d2f, double d3f) {
    check(a);
    Node n{Op::Unary, a.index()};
    n.d1 = df;
    n.d2 = d2f;
    n.d3 = d3f;
    return push(n, chain(values_[a.index()], f, df, d2f));
}

Var Tape::tanh(Var a) {
    check(a);
    const double t = std::tanh(values_[a.index()].value);
    const double s = 1.0 - t * t;
    // d/dz(-2ts) = -2s^2 + 4t^2 s
    return unary(a, t, s, -2.0 * t * s, -2.0 * s * s + 4.0 * t * t * s);
}

Var Tape::sin(Var a) {
    check(a);
    const double s = std::sin(values_[a.index()].value);
    const double c = std::cos(values_[a.index()].value);
    return unary(a, s, c, -s, -c);
}

Var Tape::cos(Var a) {
    check(a);
    const double s = std::sin(values_[a.index()].value);
    const double c = std::cos(values_[a.index()].value);
    return unary(a, c, -s, -c, s);
}

Var Tape::exp(Var a) {
    check(a);
    const double e = std::exp(values_[a.index()].value);
    return unary(a, e, e, e, e);
}

Var Tape::pow(Var a, double n) {
    check(a);
    const double x = values_[a.index()].value;
    if (x == 0.0 && n < 3.0 && n != 0.0 && n != 1.0 && n != 2.0) {
        throw std::domain_error("tape pow: derivative undefined at zero base");
    }
    auto term = [&](double coeff, double e) { return coeff == 0.0 ? 0.0 : coeff * std::pow(x, e); };
    return unary(a, std::pow(x, n), term(n, n - 1.0), term(n * (n - 1.0), n - 2.0),
                 term(n * (n - 1.0) * (n - 2.0), n - 3.0));
}

Var Tape::component(Var a, Channel c) {
    check(a);
    const Jet& src = values_[a.index()];
    double v = 0.0;
    switch (c.kind) {
    case Channel::Kind::Value: v = src.value; break;
    case Channel::Kind::First: v = src.d1(c.dir); break;
    case Channel::Kind::Second: v = src.d2(c.dir); break;
    }
    Node n{Op::Component, a.index()};
    n.channel = c;
    return push(n, Jet::constant(v, dirs_));
}

const Jet& Tape::value(Var v) const {
    check(v);
    return values_[v.index()];
}

const Jet& Tape::adjoint(Var v) const {
    check(v);
    if (adjoints_.size() != nodes_.size()) {
        throw UsageError("no reverse sweep has been run on the current tape");
    }
    return adjoints_[v.index()];
}

namespace {

void accumulate(Jet& dst, const Jet& src, double w) {
    dst.value += w * src.value;
    for (std::size_t k = 0; k < kNumDirections; ++k) {
        dst.first[k] += w * src.first[k];
        dst.second[k] += w * src.second[k];
    }
}

} // namespace

void Tape::reverse(Var output) {
    check(output);
    adjoints_.assign(nodes_.size(), Jet::constant(0.0, dirs_));
    adjoints_[output.index()].value = 1.0;
    last_visits_ = 0;

    for (std::size_t i = output.index() + 1; i-- > 0;) {
        ++last_visits_;
        const Node& n = nodes_[i];
        const Jet& z = adjoints_[i];
        switch (n.op) {
        case Op::Leaf: break;
        case Op::Add:
            accumulate(adjoints_[n.a], z, 1.0);
            accumulate(adjoints_[n.b], z, 1.0);
            break;
        case Op::Sub:
            accumulate(adjoints_[n.a], z, 1.0);
            accumulate(adjoints_[n.b], z, -1.0);
            break;
        case Op::AddScalar: accumulate(adjoints_[n.a], z, 1.0); break;
        case Op::Scale: accumulate(adjoints_[n.a], z, n.c); break;
        case Op::Mul: {
            const Jet& a = values_[n.a];
            const Jet& b = values_[n.b];
            Jet& ga = adjoints_[n.a];
            Jet& gb = adjoints_[n.b];
            ga.value += z.value * b.value;
            gb.value += z.value * a.value;
            for (std::size_t k = 0; k < kNumDirections; ++k) {
                ga.value += z.first[k] * b.first[k] + z.second[k] * b.second[k];
                gb.value += z.first[k] * a.first[k] + z.second[k] * a.second[k];
                ga.first[k] += z.first[k] * b.value + 2.0 * z.second[k] * b.first[k];
                gb.first[k] += z.first[k] * a.value + 2.0 * z.second[k] * a.first[k];
                ga.second[k] += z.second[k] * b.value;
                gb.second[k] += z.second[k] * a.value;
            }
            break;
        }
        case Op::Unary: {
            const Jet& a = values_[n.a];
            Jet& ga = adjoints_[n.a];
            ga.value += z.value * n.d1;
            for (std::size_t k = 0; k < kNumDirections; ++k) {
                const double a1 = a.first[k];
                ga.value += z.first[k] * n.d2 * a1 + z.second[k] * (n.d2 * a.second[k] + n.d3 * a1 * a1);
                ga.first[k] += z.first[k] * n.d1 + 2.0 * z.second[k] * n.d2 * a1;
                ga.second[k] += z.second[k] * n.d1;
            }
            break;
        }
        case Op::Component: {
            Jet& ga = adjoints_[n.a];
            const auto k = static_cast<std::size_t>(n.channel.dir);
            switch (n.channel.kind) {
            case Channel::Kind::Value: ga.value += z.value; break;
            case Channel::Kind::First: ga.first[k] += z.value; break;
            case Channel::Kind::Second: ga.second[k] += z.value; break;
            }
            break;
        }
        }
    }
}

std::vector<double> Tape::grad_wrt_params(Var loss, std::span<const Var> params) {
    if (loss.tape() != this || loss.index() >= nodes_.size()) {
        throw UsageError("loss node out of range");
    }
    reverse(loss);
    std::vector<double> g;
    g.reserve(params.size());
    for (const Var& p : params) {
        g.push_back(adjoint(p).value);
    }
    return g;
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
Var operator-(Var a) { return a.tape()->scale(a, -1.0); }
Var operator+(Var a, double c) { return a.tape()->add_scalar(a, c); }
Var operator+(double c, Var a) { return a.tape()->add_scalar(a, c); }
Var operator-(Var a, double c) { return a.tape()->add_scalar(a, -c); }
Var operator*(Var a, double c) { return a.tape()->scale(a, c); }
Var operator*(double c, Var a) { return a.tape()->scale(a, c); }

Var tanh(Var a) { return a.tape()->tanh(a); }
Var sin(Var a) { return a.tape()->sin(a); }
Var cos(Var a) { return a.tape()->cos(a); }
Var exp(Var a) { return a.tape()->exp(a); }
Var pow(Var a, double exponent) { return a.tape()->pow(a, exponent); }

} // namespace pinnmeta
