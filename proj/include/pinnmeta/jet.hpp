#pragma once

// Truncated multi-directional Taylor values.
//
// A Jet carries a value together with first and second derivatives along each
// tracked input direction (x, y, t). Cross partials are not tracked, so every
// rule below is the one-dimensional chain rule applied per direction:
//
//   (f o g)'  = f'(g) g'
//   (f o g)'' = f'(g) g'' + f''(g) (g')^2

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace pinnmeta {

enum class Direction : std::uint8_t { X = 0, Y = 1, T = 2 };

inline constexpr std::size_t kNumDirections = 3;
inline constexpr std::array<Direction, kNumDirections> kAllDirections{Direction::X, Direction::Y,
                                                                       Direction::T};

std::string to_string(Direction d);

// Which directions a jet tracks and up to which order (1 or 2).
class DirectionSet {
public:
    constexpr DirectionSet() = default;

    DirectionSet& with(Direction d, int order);

    int order(Direction d) const { return orders_[index(d)]; }
    bool has(Direction d) const { return orders_[index(d)] > 0; }
    bool empty() const { return orders_[0] == 0 && orders_[1] == 0 && orders_[2] == 0; }

    // Number of scalar channels: the value plus one entry per tracked order.
    int num_components() const { return 1 + orders_[0] + orders_[1] + orders_[2]; }

    // (x: 2, t: 1) -- what the Burgers residual needs.
    static DirectionSet burgers();
    // (x: 2, y: 2, t: 1) -- what the heat residual needs.
    static DirectionSet heat();
    static DirectionSet value_only() { return {}; }

    friend bool operator==(const DirectionSet&, const DirectionSet&) = default;

private:
    static constexpr std::size_t index(Direction d) { return static_cast<std::size_t>(d); }
    std::array<std::uint8_t, kNumDirections> orders_{};
};

struct Jet {
    double value = 0.0;
    std::array<double, kNumDirections> first{};
    std::array<double, kNumDirections> second{};
    DirectionSet dirs;

    static Jet constant(double v, DirectionSet dirs = {});
    // Seed for an input coordinate: d/dd = 1, everything else 0.
    static Jet seed(double v, Direction d, DirectionSet dirs);

    // Checked accessors; throw UsageError for an untracked direction/order.
    double d1(Direction d) const;
    double d2(Direction d) const;
};

enum class ElementaryOp { Add, Sub, Mul, Div, Neg, Scale, Tanh, Sin, Cos, Exp, Pow };

int arity(ElementaryOp op);

// Dispatches to the operator/function overloads below. `scalar` is the factor
// for Scale and the exponent for Pow; it is ignored by the other ops.
Jet jet_apply(ElementaryOp op, std::span<const Jet> args, double scalar = 0.0);

// Applies a scalar function given its value and first two derivatives at a.value.
Jet chain(const Jet& a, double f, double df, double d2f);

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);

Jet operator+(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator-(double c, const Jet& a);
Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator/(const Jet& a, double c);

Jet tanh(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet exp(const Jet& a);
Jet pow(const Jet& a, double exponent);

} // namespace pinnmeta
