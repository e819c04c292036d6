#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pinnmeta {

// Clamped B-spline basis on [lo, hi] with uniformly spaced interior knots.
// The knot vector repeats each end knot degree+1 times.
class BSplineBasis {
public:
    BSplineBasis() = default;
    BSplineBasis(double lo, double hi, int n_basis, int degree = 3);

    int size() const { return n_basis_; }
    int degree() const { return degree_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<double>& knots() const { return knots_; }

    // All basis functions at x (clamped into [lo, hi]); sums to one.
    Eigen::VectorXd evaluate(double x) const;

    // Row i holds the basis evaluated at xs(i).
    Eigen::MatrixXd design(const Eigen::VectorXd& xs) const;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
    int n_basis_ = 0;
    int degree_ = 3;
    std::vector<double> knots_;
};

// Second-order difference operator, (n-2) x n.
Eigen::MatrixXd second_difference(int n);

} // namespace pinnmeta
