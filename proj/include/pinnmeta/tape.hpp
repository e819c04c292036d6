#pragma once

// Reverse-mode tape whose node payloads are Jets.
//
// Every node stores a full Jet, and the adjoint of a node is a Jet-shaped
// vector of partials (one per value/first/second channel). Sweeping backwards
// through the jet arithmetic therefore yields exact derivatives of any scalar
// built from u, u_x, u_xx, u_t, ... with respect to the leaves, which is the
// third-order quantity d/dp (d^2 u / dx^2) needed by PDE losses.

#include "pinnmeta/jet.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace pinnmeta {

class Tape;

// Jet channel selector used by Tape::component.
struct Channel {
    enum class Kind : std::uint8_t { Value, First, Second };
    Kind kind = Kind::Value;
    Direction dir = Direction::X;

    static Channel value() { return {}; }
    static Channel first(Direction d) { return {Kind::First, d}; }
    static Channel second(Direction d) { return {Kind::Second, d}; }
};

// Handle to a tape node. Cheap to copy; only valid while its tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

    Tape* tape() const { return tape_; }
    std::size_t index() const { return index_; }
    const Jet& jet() const;
    double value() const { return jet().value; }

private:
    Tape* tape_ = nullptr;
    std::size_t index_ = 0;
};

class Tape {
public:
    enum class Op : std::uint8_t {
        Leaf,
        Add,
        Sub,
        Mul,
        AddScalar,
        Scale,
        Unary, // tanh/sin/cos/exp/pow: stores f', f'', f''' at the operand value
        Component,
    };

    explicit Tape(DirectionSet dirs = {}) : dirs_(dirs) {}

    DirectionSet directions() const { return dirs_; }
    std::size_t size() const { return nodes_.size(); }

    // Leaves: inputs (seeded jets) and parameters (constant jets).
    Var leaf(const Jet& j);
    Var parameter(double v) { return leaf(Jet::constant(v, dirs_)); }
    Var input(double v, Direction d) { return leaf(Jet::seed(v, d, dirs_)); }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var add_scalar(Var a, double c);
    Var scale(Var a, double c);
    Var tanh(Var a);
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var pow(Var a, double exponent);
    // Promotes one channel of `a` (e.g. u_xx) to the value of a new node whose
    // derivative channels are zero, so it can enter a loss as a plain scalar.
    Var component(Var a, Channel c);

    const Jet& value(Var v) const;

    // Clears all adjoints, seeds d(output.value) = 1 and sweeps backwards.
    // Every call starts from a clean slate, so repeated sweeps are idempotent.
    void reverse(Var output);

    // Jet-shaped adjoint of a node from the last reverse sweep.
    const Jet& adjoint(Var v) const;

    // d(loss.value)/d(param.value) for each parameter node.
    std::vector<double> grad_wrt_params(Var loss, std::span<const Var> params);

    // Nodes processed by the most recent reverse sweep.
    std::size_t last_sweep_visits() const { return last_visits_; }

private:
    struct Node {
        Op op = Op::Leaf;
        std::size_t a = 0;
        std::size_t b = 0;
        double c = 0.0;  // scalar operand (AddScalar, Scale)
        double d1 = 0.0; // f'   (Unary)
        double d2 = 0.0; // f''  (Unary)
        double d3 = 0.0; // f''' (Unary)
        Channel channel{};
    };

    Var push(Node node, Jet value);
    void check(Var v) const;
    Var unary(Var a, double f, double df, double d2f, double d3f);

    DirectionSet dirs_;
    std::vector<Node> nodes_;
    std::vector<Jet> values_;
    std::vector<Jet> adjoints_;
    std::size_t last_visits_ = 0;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator*(Var a, double c);
Var operator*(double c, Var a);

Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);
Var exp(Var a);
Var pow(Var a, double exponent);

} // namespace pinnmeta
