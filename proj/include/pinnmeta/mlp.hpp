#pragma once

#include "pinnmeta/jet.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pinnmeta {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Parameters of a fully connected tanh network stored in one flat vector.
//
// Layout, per layer l (fan_in -> fan_out): the weight matrix in row-major
// order (fan_out x fan_in) followed by the bias vector (fan_out). The same
// ordering is used by gradients, Adam moments and the snapshot format.
class MlpParams {
public:
    MlpParams() = default;
    // Zero-initialized parameters for the given shape. Throws UsageError for
    // fewer than two entries, non-positive sizes, an input width other than
    // 2 or 3, or an output width other than 1.
    explicit MlpParams(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    std::size_t num_layers() const { return sizes_.size() - 1; }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

    Eigen::Map<RowMatrix> weights(std::size_t layer);
    Eigen::Map<const RowMatrix> weights(std::size_t layer) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }

    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const;
    // Layer that owns flat entry `index`.
    std::size_t layer_of(std::size_t index) const;

    // Same shape, different values.
    MlpParams with_values(Eigen::VectorXd values) const;

    bool all_finite() const { return values_.allFinite(); }

    friend bool operator==(const MlpParams& a, const MlpParams& b) {
        return a.sizes_ == b.sizes_ && a.values_ == b.values_;
    }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_; // start of each layer's weights
    Eigen::VectorXd values_;
};

// input_dim, `hidden_layers` x `width`, 1.
std::vector<int> pinn_layer_sizes(int input_dim, int hidden_layers = 7, int width = 20);

enum class InitScheme { XavierUniform, Zero };

// Weights ~ U(-b, b) with b = sqrt(6 / (fan_in + fan_out)); biases zero.
MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed,
                      InitScheme scheme = InitScheme::XavierUniform);

// Single point evaluation carrying derivatives along `dirs`. Input coordinates
// are (x, t) for two inputs and (x, y, t) for three.
Jet forward(const MlpParams& params, std::span<const double> point, DirectionSet dirs);

// Plain real-valued forward pass, independent of the jet machinery.
double forward_value(const MlpParams& params, std::span<const double> point);

// Maps a jet direction to its input coordinate index; throws if the network
// has no such input.
int input_index(int input_dim, Direction d);

// Snapshot container: text, exact round trip (17 significant digits).
//   pinnmeta-params 1
//   layers <n> <s0> ... <sn-1>
//   <one value per line, layer by layer: weights row-major, then biases>
void write_snapshot(std::ostream& os, const MlpParams& params);
MlpParams read_snapshot(std::istream& is);
void save_snapshot(const std::string& path, const MlpParams& params);
MlpParams load_snapshot(const std::string& path);

} // namespace pinnmeta
