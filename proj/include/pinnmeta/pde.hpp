#pragma once

#include "pinnmeta/jet.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pinnmeta {

enum class Equation { Burgers1D, Heat2D };

enum class IcFamily {
    BurgersSinCos,  // u(x,0) = -sin(pi x) + theta cos(pi x)
    HeatAmplitude,  // u(x,y,0) = a1 sin(pi x) + a2 cos(pi x)
    HeatFrequency,  // u(x,y,0) = sin(b1 pi x) cos(b2 pi x)
    BurgersSinOnly, // u(x,0) = -sin(pi x)
};

Equation equation_of(IcFamily family);
int family_arity(IcFamily family);

std::string to_string(Equation e);
std::string to_string(IcFamily f);
Equation parse_equation(const std::string& s);
IcFamily parse_ic_family(const std::string& s);

inline constexpr double kBurgersViscosity = 0.05;

struct TaskSpec {
    Equation equation = Equation::Burgers1D;
    IcFamily family = IcFamily::BurgersSinCos;
    std::vector<double> params;
    double viscosity = kBurgersViscosity;
    double noise_weight = 0.0;
    std::uint64_t seed = 0;
    // HeatFrequency only: use cos(b2 pi y) instead of the literal cos(b2 pi x).
    bool frequency_in_y = false;

    int input_dim() const { return equation == Equation::Heat2D ? 3 : 2; }
    DirectionSet directions() const {
        return equation == Equation::Heat2D ? DirectionSet::heat() : DirectionSet::burgers();
    }

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

// Builds a validated task; throws UsageError on arity mismatch.
TaskSpec make_task(IcFamily family, std::vector<double> params, double noise_weight = 0.0,
                   std::uint64_t seed = 0);

// Single-line record without commas, usable as a CSV join key:
//   equation=burgers1d family=burgers-sincos params=0.3 nu=0.05 p=0 seed=7
// Multiple params are ';'-separated. Parsing is the exact inverse.
std::string to_record(const TaskSpec& task);
TaskSpec parse_record(const std::string& record);

// Parameters ~ U(0,1) i.i.d.; p = `noise_weight`; seed drawn from `rng`.
TaskSpec sample_task(IcFamily family, std::mt19937_64& rng, double noise_weight = 0.0);

struct PointSet {
    // Points are columns: (x, t) or (x, y, t).
    Eigen::MatrixXd collocation;
    Eigen::MatrixXd ib_points;
    Eigen::VectorXd ib_targets;
    // One epsilon in [-1, 1] per collocation point; empty when p = 0.
    Eigen::VectorXd noise;

    Eigen::Index n_collocation() const { return collocation.cols(); }
    Eigen::Index n_ib() const { return ib_points.cols(); }
};

// Interior points uniform on the open domain; ib points split across the t=0
// face and the spatial boundary faces (equal share per face, the remainder
// going to the initial face first, so the initial face always gets one).
PointSet sample_points(const TaskSpec& task, int n_collocation, int n_ib, std::mt19937_64& rng);

// Number of ib points placed on each face, initial face first, then x=-1,
// x=+1, and for the heat plate y=-1, y=+1.
std::vector<int> ib_face_allocation(const TaskSpec& task, int n_ib);

// Initial-condition function of the task, ignoring boundaries.
double initial_value(const TaskSpec& task, std::span<const double> point);
// Dirichlet boundary value at a spatial boundary point.
double boundary_value(const TaskSpec& task, std::span<const double> point);
bool on_spatial_boundary(const TaskSpec& task, std::span<const double> point);

// Exact IC/BC value at an initial or boundary point; boundary data wins at
// corners. Throws UsageError for interior points.
double ic_bc_value(const TaskSpec& task, std::span<const double> point);

// PDE residual E at one point:
//   Burgers: u_t + u u_x - nu u_xx - p eps_i
//   Heat:    u_xx + u_yy - u_t
// `noise` is the epsilon for this point (ignored when p = 0).
double residual(const TaskSpec& task, const Jet& u, double noise = 0.0);

// Convenience overload reading epsilon from the point set.
double residual(const TaskSpec& task, const Jet& u, Eigen::Index point_index,
                const PointSet& points);

} // namespace pinnmeta
