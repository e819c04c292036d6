#include "pinnmeta/jet_batch.hpp"

#include "pinnmeta/errors.hpp"

namespace pinnmeta {

ChannelLayout::ChannelLayout(DirectionSet dirs) : dirs_(dirs) {
    for (Direction d : kAllDirections) {
        const auto k = static_cast<std::size_t>(d);
        if (dirs.order(d) >= 1) {
            first_[k] = count_++;
        }
        if (dirs.order(d) >= 2) {
            second_[k] = count_++;
        }
    }
}

int ChannelLayout::first(Direction d) const {
    const int c = first_[static_cast<std::size_t>(d)];
    if (c < 0) {
        throw UsageError("batch does not track direction " + to_string(d));
    }
    return c;
}

int ChannelLayout::second(Direction d) const {
    const int c = second_[static_cast<std::size_t>(d)];
    if (c < 0) {
        throw UsageError("batch does not track the second derivative along " + to_string(d));
    }
    return c;
}

ChannelAdjoint::ChannelAdjoint(const ChannelLayout& layout, Eigen::Index n)
    : layout_(layout), n_(n), data_(Eigen::RowVectorXd::Zero(layout.count() * n)) {}

namespace {

void check_points(const MlpParams& params, const Eigen::MatrixXd& points) {
    if (points.rows() != params.input_dim()) {
        throw UsageError("point matrix has " + std::to_string(points.rows()) +
                         " rows, network expects " + std::to_string(params.input_dim()));
    }
    if (!points.allFinite()) {
        throw UsageError("non-finite network input");
    }
}

// Eigen has no packet tanh for doubles; exp has one. Written through
// exp(-2|x|) so it never overflows; absolute error stays at a few ulp of 1.
template <typename Derived>
Eigen::ArrayXXd tanh_array(const Eigen::ArrayBase<Derived>& x) {
    const Eigen::ArrayXXd e = (-2.0 * x.abs()).exp();
    return x.sign() * (1.0 - e) / (1.0 + e);
}

} // namespace

MlpJetBatch::MlpJetBatch(const MlpParams& params, const Eigen::MatrixXd& points, DirectionSet dirs)
    : params_(&params), layout_(dirs), n_(points.cols()) {
    check_points(params, points);
    const int d_in = params.input_dim();
    const Eigen::Index cn = layout_.count() * n_;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d_in, cn);
    a.leftCols(n_) = points;
    for (Direction d : kAllDirections) {
        if (dirs.has(d)) {
            a.row(input_index(d_in, d)).segment(layout_.first(d) * n_, n_).setOnes();
        }
    }

    const std::size_t layers = params.num_layers();
    inputs_.reserve(layers);
    pre_.reserve(layers - 1);
    tanh_.reserve(layers - 1);

    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = params.weights(l) * a;
        z.leftCols(n_).colwise() += params.bias(l);
        inputs_.push_back(std::move(a));
        if (l + 1 == layers) {
            output_ = z.row(0);
            break;
        }

        Eigen::ArrayXXd t = tanh_array(z.leftCols(n_).array());
        const Eigen::ArrayXXd s = 1.0 - t.square();
        a.resize(z.rows(), cn);
        a.leftCols(n_) = t.matrix();
        for (Direction d : kAllDirections) {
            if (!dirs.has(d)) {
                continue;
            }
            const Eigen::Index c1 = layout_.first(d) * n_;
            const auto z1 = z.middleCols(c1, n_).array();
            a.middleCols(c1, n_) = (s * z1).matrix();
            if (dirs.order(d) == 2) {
                const Eigen::Index c2 = layout_.second(d) * n_;
                const auto z2 = z.middleCols(c2, n_).array();
                a.middleCols(c2, n_) = (s * z2 - 2.0 * t * s * z1.square()).matrix();
            }
        }
        pre_.push_back(std::move(z));
        tanh_.push_back(std::move(t));
    }
}

// Adjoint of h = tanh-jet(z): overwrites `adj` (dL/dh) with dL/dz.
//   h1 = s z1,  h2 = s z2 - 2 t s z1^2,  s = 1 - t^2
void MlpJetBatch::tanh_backward(Eigen::MatrixXd& adj, const Eigen::MatrixXd& pre,
                                const Eigen::ArrayXXd& t) const {
    const Eigen::ArrayXXd s = 1.0 - t.square();
    const Eigen::ArrayXXd ts = t * s;
    Eigen::ArrayXXd dv = adj.leftCols(n_).array() * s;

    const DirectionSet dirs = layout_.directions();
    for (Direction d : kAllDirections) {
        if (!dirs.has(d)) {
            continue;
        }
        const Eigen::Index c1 = layout_.first(d) * n_;
        const auto z1 = pre.middleCols(c1, n_).array();
        auto h1 = adj.middleCols(c1, n_).array();
        dv -= 2.0 * ts * z1 * h1;
        if (dirs.order(d) == 2) {
            const Eigen::Index c2 = layout_.second(d) * n_;
            const auto z2 = pre.middleCols(c2, n_).array();
            auto h2 = adj.middleCols(c2, n_).array();
            dv -= h2 * (2.0 * ts * z2 + 2.0 * s * (s - 2.0 * t.square()) * z1.square());
            h1 = h1 * s - 4.0 * ts * z1 * h2;
            h2 *= s;
        } else {
            h1 *= s;
        }
    }
    adj.leftCols(n_) = dv.matrix();
}

Eigen::VectorXd MlpJetBatch::backward(const ChannelAdjoint& seed) const {
    if (seed.data().size() != layout_.count() * n_ ||
        !(seed.layout().directions() == layout_.directions())) {
        throw UsageError("adjoint seed does not match the batch layout");
    }
    const MlpParams& params = *params_;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));

    Eigen::MatrixXd adj = seed.data();
    for (std::size_t l = params.num_layers(); l-- > 0;) {
        const Eigen::Index rows = params.layer_sizes()[l + 1];
        const Eigen::Index cols = params.layer_sizes()[l];
        Eigen::Map<RowMatrix> gw(grad.data() + params.weight_offset(l), rows, cols);
        gw.noalias() = adj * inputs_[l].transpose();
        grad.segment(static_cast<Eigen::Index>(params.bias_offset(l)), rows) =
            adj.leftCols(n_).rowwise().sum();
        if (l == 0) {
            break;
        }
        Eigen::MatrixXd prev = params.weights(l).transpose() * adj;
        tanh_backward(prev, pre_[l - 1], tanh_[l - 1]);
        adj = std::move(prev);
    }
    return grad;
}

Eigen::VectorXd forward_values(const MlpParams& params, const Eigen::MatrixXd& points) {
    check_points(params, points);
    Eigen::MatrixXd a = points;
    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = params.weights(l) * a;
        z.colwise() += params.bias(l);
        if (l + 1 < layers) {
            a = tanh_array(z.array()).matrix();
        } else {
            a = std::move(z);
        }
    }
    return a.row(0).transpose();
}

} // namespace pinnmeta
