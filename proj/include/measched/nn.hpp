#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "measched/rng.hpp"

namespace measched::nn {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::identity;

    bool operator==(const LayerSpec&) const = default;
};

/// Dense layer parameters; weights are out_dim x in_dim, row-major.
struct DenseLayer {
    LayerSpec spec;
    std::vector<double> weights;
    std::vector<double> bias;

    bool operator==(const DenseLayer&) const = default;
};

/// Per-layer gradients with the same shapes as the network parameters.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;

    void add(const Gradients& other);
    void scale(double factor);
    std::vector<double> flatten() const;
};

/// Activations recorded by a forward pass. Tied to the exact parameter
/// version of the network that produced it.
struct ForwardCache {
    std::uint64_t network_id = 0;
    std::uint64_t version = 0;
    /// inputs[l] is the input to layer l; inputs.back() is the network output.
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> preactivations;

    std::span<const double> output() const { return inputs.back(); }
};

class Network {
public:
    Network() = default;
    explicit Network(std::vector<DenseLayer> layers);
    /// Uniform fan-in/fan-out init, U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), zero bias.
    static Network initialize(const std::vector<LayerSpec>& specs, Rng& rng);
    /// Chains relu hidden layers and an identity output layer.
    static std::vector<LayerSpec> mlp_specs(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                            std::size_t out_dim);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<LayerSpec> specs() const;

    std::vector<double> forward(std::span<const double> input, ForwardCache* cache = nullptr) const;
    Gradients backward(const ForwardCache& cache, std::span<const double> output_grad) const;
    /// Adds the gradient for `cache` into `acc` without allocating a fresh set.
    void accumulate_backward(const ForwardCache& cache, std::span<const double> output_grad, Gradients& acc) const;
    Gradients zero_gradients() const;

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    /// Overwrites all parameters from a flat array (layer order, weights then bias).
    void assign(std::span<const double> flat);

    /// Mutable access for optimizers. Bumps the version, invalidating caches.
    std::vector<DenseLayer>& mutable_layers();
    std::uint64_t version() const { return version_; }

    bool same_parameters(const Network& other) const { return layers_ == other.layers_; }

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t id_ = next_id();
    std::uint64_t version_ = 0;

    static std::uint64_t next_id();
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias-corrected moments.
class Adam {
public:
    Adam() = default;
    Adam(const Network& net, AdamConfig cfg);

    /// Throws TrainingError if a gradient is non-finite or the update would
    /// produce a non-finite parameter; the network is left untouched then.
    void step(Network& net, const Gradients& grads);

    std::uint64_t step_count() const { return steps_; }
    const AdamConfig& config() const { return cfg_; }
    const Gradients& first_moment() const { return m_; }
    const Gradients& second_moment() const { return v_; }

private:
    AdamConfig cfg_;
    Gradients m_;
    Gradients v_;
    std::uint64_t steps_ = 0;
};

/// Binary checkpoint: magic, format version, JSON header (layer specs plus
/// caller metadata), parameter count, little-endian float64 parameters.
void save_checkpoint(std::ostream& out, const Network& net, const nlohmann::json& metadata);
void save_checkpoint(const std::string& path, const Network& net, const nlohmann::json& metadata);

struct Checkpoint {
    Network network;
    nlohmann::json metadata;
};

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace measched::nn
