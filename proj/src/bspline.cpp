#include "pinnmeta/bspline.hpp"

#include "pinnmeta/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pinnmeta {

BSplineBasis::BSplineBasis(double lo, double hi, int n_basis, int degree)
    : lo_(lo), hi_(hi), n_basis_(n_basis), degree_(degree) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw UsageError("B-spline range must satisfy lo < hi");
    }
    if (degree < 1 || n_basis < degree + 1) {
        throw UsageError("B-spline basis needs at least degree+1 functions");
    }
    const int intervals = n_basis - degree;
    knots_.assign(static_cast<std::size_t>(degree), lo);
    for (int i = 0; i <= intervals; ++i) {
        knots_.push_back(i == intervals ? hi : lo + (hi - lo) * i / intervals);
    }
    knots_.insert(knots_.end(), static_cast<std::size_t>(degree), hi);
}

Eigen::VectorXd BSplineBasis::evaluate(double x) const {
    x = std::clamp(x, lo_, hi_);
    const int p = degree_;
    // Knot span index s with knots[s] <= x < knots[s+1]; the last span is closed.
    const int last_span = n_basis_ - 1;
    int s = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
    s = std::clamp(s, p, last_span);

    // Cox-de Boor triangle for the p+1 non-zero functions N_{s-p..s}.
    std::vector<double> n(static_cast<std::size_t>(p + 1), 0.0);
    std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots_[s + 1 - j];
        right[j] = knots_[s + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double tmp = denom == 0.0 ? 0.0 : n[r] / denom;
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }

    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_basis_);
    for (int r = 0; r <= p; ++r) {
        out(s - p + r) = n[r];
    }
    return out;
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::VectorXd& xs) const {
    Eigen::MatrixXd b(xs.size(), n_basis_);
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        b.row(i) = evaluate(xs(i)).transpose();
    }
    return b;
}

Eigen::MatrixXd second_difference(int n) {
    if (n < 3) {
        return Eigen::MatrixXd::Zero(0, n);
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
    for (int i = 0; i < n - 2; ++i) {
        d(i, i) = 1.0;
        d(i, i + 1) = -2.0;
        d(i, i + 2) = 1.0;
    }
    return d;
}

} // namespace pinnmeta
