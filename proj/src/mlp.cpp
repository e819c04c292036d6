#include "pinnmeta/mlp.hpp"

#include "pinnmeta/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace pinnmeta {

MlpParams::MlpParams(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) {
        throw UsageError("layer_sizes needs at least an input and an output entry");
    }
    for (int s : sizes_) {
        if (s <= 0) {
            throw UsageError("layer sizes must be positive");
        }
    }
    if (sizes_.front() != 2 && sizes_.front() != 3) {
        throw UsageError("network input width must be 2 (x, t) or 3 (x, y, t)");
    }
    if (sizes_.back() != 1) {
        throw UsageError("network output width must be 1");
    }
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<RowMatrix> MlpParams::weights(std::size_t l) {
    return {values_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const RowMatrix> MlpParams::weights(std::size_t l) const {
    return {values_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

std::size_t MlpParams::bias_offset(std::size_t l) const {
    return offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
}

Eigen::Map<Eigen::VectorXd> MlpParams::bias(std::size_t l) {
    return {values_.data() + bias_offset(l), sizes_[l + 1]};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias(std::size_t l) const {
    return {values_.data() + bias_offset(l), sizes_[l + 1]};
}

std::size_t MlpParams::layer_of(std::size_t index) const {
    if (index >= size()) {
        throw UsageError("parameter index out of range");
    }
    std::size_t l = 0;
    while (l + 1 < offsets_.size() && offsets_[l + 1] <= index) {
        ++l;
    }
    return l;
}

MlpParams MlpParams::with_values(Eigen::VectorXd values) const {
    if (values.size() != values_.size()) {
        throw UsageError("parameter vector size does not match the network shape");
    }
    MlpParams p = *this;
    p.values_ = std::move(values);
    return p;
}

std::vector<int> pinn_layer_sizes(int input_dim, int hidden_layers, int width) {
    std::vector<int> sizes{input_dim};
    sizes.insert(sizes.end(), static_cast<std::size_t>(hidden_layers), width);
    sizes.push_back(1);
    return sizes;
}

MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed, InitScheme scheme) {
    MlpParams p(layer_sizes);
    if (scheme == InitScheme::Zero) {
        return p;
    }
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        const double fan_in = layer_sizes[l];
        const double fan_out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        auto w = p.weights(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = dist(rng);
            }
        }
    }
    return p;
}

int input_index(int input_dim, Direction d) {
    switch (d) {
    case Direction::X: return 0;
    case Direction::Y:
        if (input_dim != 3) {
            throw UsageError("direction y requires a three-input network");
        }
        return 1;
    case Direction::T: return input_dim - 1;
    }
    throw UsageError("unknown direction");
}

namespace {

void check_point(const MlpParams& params, std::span<const double> point) {
    if (static_cast<int>(point.size()) != params.input_dim()) {
        throw UsageError("point dimension " + std::to_string(point.size()) +
                         " does not match network input width " +
                         std::to_string(params.input_dim()));
    }
    for (double v : point) {
        if (!std::isfinite(v)) {
            throw UsageError("non-finite network input");
        }
    }
}

} // namespace

Jet forward(const MlpParams& params, std::span<const double> point, DirectionSet dirs) {
    check_point(params, point);
    const int d_in = params.input_dim();

    std::vector<Jet> act(static_cast<std::size_t>(d_in));
    for (int i = 0; i < d_in; ++i) {
        act[i] = Jet::constant(point[i], dirs);
    }
    for (Direction d : kAllDirections) {
        if (dirs.has(d)) {
            act[input_index(d_in, d)].first[static_cast<std::size_t>(d)] = 1.0;
        }
    }

    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        const auto w = params.weights(l);
        const auto b = params.bias(l);
        std::vector<Jet> next(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            Jet z = Jet::constant(b(r), dirs);
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                z = z + act[c] * w(r, c);
            }
            next[r] = (l + 1 < layers) ? tanh(z) : z;
        }
        act = std::move(next);
    }
    return act.front();
}

double forward_value(const MlpParams& params, std::span<const double> point) {
    check_point(params, point);
    std::vector<double> act(point.begin(), point.end());
    const std::size_t layers = params.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        const auto w = params.weights(l);
        const auto b = params.bias(l);
        std::vector<double> next(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            double z = b(r);
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                z += w(r, c) * act[c];
            }
            next[r] = (l + 1 < layers) ? std::tanh(z) : z;
        }
        act = std::move(next);
    }
    return act.front();
}

void write_snapshot(std::ostream& os, const MlpParams& params) {
    os << "pinnmeta-params 1\n";
    os << "layers " << params.layer_sizes().size();
    for (int s : params.layer_sizes()) {
        os << ' ' << s;
    }
    os << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < params.values().size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", params.values()[i]);
        os << buf;
    }
}

MlpParams read_snapshot(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "pinnmeta-params") {
        throw UsageError("not a parameter snapshot");
    }
    if (version != 1) {
        throw UsageError("unsupported snapshot version " + std::to_string(version));
    }
    std::string tag;
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "layers") {
        throw UsageError("snapshot is missing its layers line");
    }
    std::vector<int> sizes(n);
    for (auto& s : sizes) {
        if (!(is >> s)) {
            throw UsageError("truncated layers line in snapshot");
        }
    }
    MlpParams p(sizes);
    for (Eigen::Index i = 0; i < p.values().size(); ++i) {
        std::string tok;
        if (!(is >> tok)) {
            throw UsageError("truncated snapshot: expected " + std::to_string(p.size()) + " values");
        }
        p.values()[i] = std::strtod(tok.c_str(), nullptr);
    }
    if (!p.all_finite()) {
        throw NumericError("snapshot contains non-finite parameters");
    }
    return p;
}

void save_snapshot(const std::string& path, const MlpParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write snapshot " + path);
    }
    write_snapshot(os, params);
    if (!os) {
        throw std::runtime_error("failed writing snapshot " + path);
    }
}

MlpParams load_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open snapshot " + path);
    }
    return read_snapshot(is);
}

} // namespace pinnmeta
