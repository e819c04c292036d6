#pragma once

// Finite-difference reference solutions used to score trained networks.

#include "pinnmeta/pde.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnmeta {

struct Axis {
    std::string name;
    std::vector<double> coords;
};

// Dense field over a tensor grid. Axes are ordered time first, then y (heat
// only), then x; values are row-major over that order (x varies fastest), so
// every time slice is contiguous.
struct SolutionField {
    std::vector<Axis> axes;
    std::vector<double> values;
    TaskSpec task;
    std::string scheme;
    double dx = 0.0;      // internal spatial step
    double dt = 0.0;      // largest internal time step used
    int refine = 1;       // internal nodes per output interval

    std::size_t num_points() const { return values.size(); }
    const Axis& axis(const std::string& name) const;
    // Node coordinates in network input order ((x, t) or (x, y, t)), one
    // column per value, same ordering as `values`.
    Eigen::MatrixXd coordinates() const;
    // Values of time slice `it` (row-major y, x for heat).
    std::vector<double> time_slice(std::size_t it) const;
};

struct BurgersOptions {
    int refine = 1;      // internal grid = nx * refine intervals
    double cfl = 0.5;    // dt <= cfl * dx / max|u|, enforced by sub-stepping
    double t_end = 1.0;
    // Test hook: replaces the task's initial condition.
    std::function<double(double)> initial;
};

// Crank-Nicolson diffusion with explicit (Adams-Bashforth 2) central
// convection in conservative form. The first four steps are backward Euler
// (Rannacher start) to damp the IC/boundary mismatch at x = +-1 when theta
// != 0. Output grid: nx+1 nodes in x, nt+1 slices in t. Requires nx >= 64
// and nt >= 100. Throws SolverFailure if |u| > 10.
SolutionField solve_burgers(const TaskSpec& task, int nx = 512, int nt = 1024,
                            const BurgersOptions& options = {});

struct HeatOptions {
    int refine = 1;
    double t_end = 1.0;
    // Internal time step cap; <= 0 means the squared internal grid spacing.
    double dt_max = 0.0;
    // Test hooks: replace the task's initial / boundary data.
    std::function<double(double, double)> initial;
    std::function<double(double, double)> boundary;
};

// Backward Euler with x/y operator splitting on the 5-point Laplacian: every
// sub-step is an M-matrix solve, so the discrete maximum principle holds.
SolutionField solve_heat2d(const TaskSpec& task, int nx = 128, int ny = 128, int nt = 256,
                           const HeatOptions& options = {});

// Fixed evaluation grids: Burgers 256 x 100 intervals (x, t), heat
// 64 x 64 x 20 intervals (x, y, t), each solved on a refined internal grid.
SolutionField evaluation_field(const TaskSpec& task);

using BatchPredictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// Mean over all grid nodes of (prediction - field)^2.
double eval_field_mse(const SolutionField& field, const BatchPredictor& predictor);
double eval_field_mse(const SolutionField& field, const Eigen::VectorXd& predictions);

// Text container:
//   pinnmeta-field 1
//   task <task record>
//   scheme <name> dx <v> dt <v> refine <r>
//   axes <k>
//   axis <name> <n> c0 c1 ...
//   values <N>
//   <one value per line>
void write_field(std::ostream& os, const SolutionField& field);
SolutionField read_field(std::istream& is);
void save_field(const std::string& path, const SolutionField& field);
SolutionField load_field(const std::string& path);

} // namespace pinnmeta
