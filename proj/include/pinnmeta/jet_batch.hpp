#pragma once

// Batched jet forward pass with a layer-granular reverse sweep.
//
// Each jet channel (value, u_x, u_xx, ...) of every point is laid out as its
// own block of columns, so one matrix product per layer propagates all of
// them: the affine map acts identically on every derivative channel, and only
// the value channel receives the bias. The reverse sweep replays the tanh jet
// rule in adjoint form and yields parameter gradients of any scalar built from
// the output channels. This is the same computation as building a Tape from
// `forward`, organized per layer instead of per scalar.

#include "pinnmeta/jet.hpp"
#include "pinnmeta/mlp.hpp"

#include <Eigen/Dense>

#include <vector>

namespace pinnmeta {

// Channel layout shared by outputs and output adjoints: value first, then per
// direction in x, y, t order its first and (if tracked) second derivative.
class ChannelLayout {
public:
    explicit ChannelLayout(DirectionSet dirs);

    DirectionSet directions() const { return dirs_; }
    int count() const { return count_; }
    int first(Direction d) const;  // throws if untracked
    int second(Direction d) const; // throws if order < 2

private:
    DirectionSet dirs_;
    int count_ = 1;
    std::array<int, kNumDirections> first_{-1, -1, -1};
    std::array<int, kNumDirections> second_{-1, -1, -1};
};

// Adjoint seeds for the output channels of a batch, one row vector per channel.
class ChannelAdjoint {
public:
    ChannelAdjoint(const ChannelLayout& layout, Eigen::Index n);

    Eigen::Ref<Eigen::RowVectorXd> value() { return channel(0); }
    Eigen::Ref<Eigen::RowVectorXd> d1(Direction d) { return channel(layout_.first(d)); }
    Eigen::Ref<Eigen::RowVectorXd> d2(Direction d) { return channel(layout_.second(d)); }

    const Eigen::RowVectorXd& data() const { return data_; }
    const ChannelLayout& layout() const { return layout_; }

private:
    Eigen::Ref<Eigen::RowVectorXd> channel(int c) { return data_.segment(c * n_, n_); }

    ChannelLayout layout_;
    Eigen::Index n_;
    Eigen::RowVectorXd data_;
};

class MlpJetBatch {
public:
    // `points` is input_dim x N (one column per point). `params` must outlive
    // the batch; the reverse sweep reads the weights again.
    MlpJetBatch(const MlpParams& params, const Eigen::MatrixXd& points, DirectionSet dirs);

    Eigen::Index size() const { return n_; }
    const ChannelLayout& layout() const { return layout_; }

    Eigen::VectorBlock<const Eigen::RowVectorXd> value() const { return channel(0); }
    Eigen::VectorBlock<const Eigen::RowVectorXd> d1(Direction d) const {
        return channel(layout_.first(d));
    }
    Eigen::VectorBlock<const Eigen::RowVectorXd> d2(Direction d) const {
        return channel(layout_.second(d));
    }

    ChannelAdjoint make_adjoint() const { return ChannelAdjoint(layout_, n_); }

    // Flat parameter gradient (MlpParams layout) of sum_c <seed_c, output_c>.
    Eigen::VectorXd backward(const ChannelAdjoint& seed) const;

private:
    Eigen::VectorBlock<const Eigen::RowVectorXd> channel(int c) const {
        return output_.segment(c * n_, n_);
    }
    void tanh_backward(Eigen::MatrixXd& adj, const Eigen::MatrixXd& pre,
                       const Eigen::ArrayXXd& act) const;

    const MlpParams* params_;
    ChannelLayout layout_;
    Eigen::Index n_;
    std::vector<Eigen::MatrixXd> inputs_;  // input to each layer, width x C*N
    std::vector<Eigen::MatrixXd> pre_;     // pre-activation of each hidden layer
    std::vector<Eigen::ArrayXXd> tanh_;    // tanh of the value block of each hidden layer
    Eigen::RowVectorXd output_;
};

// Value channel only, no intermediate storage. `points` is input_dim x N.
Eigen::VectorXd forward_values(const MlpParams& params, const Eigen::MatrixXd& points);

} // namespace pinnmeta
