#include "measched/nn.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "measched/errors.hpp"

namespace measched::nn {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'C', 'H', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u64(std::ostream& out, std::uint64_t x) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw ConfigError("checkpoint truncated");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t{bytes[i]} << (8 * i);
    return x;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "'");
}

void Gradients::add(const Gradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
        for (std::size_t i = 0; i < bias[l].size(); ++i) bias[l][i] += other.bias[l][i];
    }
}

void Gradients::scale(double factor) {
    for (auto& w : weights)
        for (double& x : w) x *= factor;
    for (auto& b : bias)
        for (double& x : b) x *= factor;
}

std::vector<double> Gradients::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].begin(), weights[l].end());
        flat.insert(flat.end(), bias[l].begin(), bias[l].end());
    }
    return flat;
}

std::uint64_t Network::next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        if (L.spec.in_dim == 0 || L.spec.out_dim == 0) throw ConfigError("layer dims must be >= 1");
        if (L.weights.size() != L.spec.in_dim * L.spec.out_dim || L.bias.size() != L.spec.out_dim)
            throw ConfigError("layer " + std::to_string(l) + " parameter shape mismatch");
        if (l > 0 && layers_[l - 1].spec.out_dim != L.spec.in_dim)
            throw ConfigError("layer " + std::to_string(l) + " input does not chain");
        if (!all_finite(L.weights) || !all_finite(L.bias))
            throw ConfigError("layer " + std::to_string(l) + " has non-finite parameters");
    }
}

Network::Network(const Network& other)
    : layers_(other.layers_), id_(next_id()), version_(other.version_) {}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        layers_ = other.layers_;
        id_ = next_id();
        version_ = other.version_;
    }
    return *this;
}

Network Network::initialize(const std::vector<LayerSpec>& specs, Rng& rng) {
    std::vector<DenseLayer> layers;
    for (const auto& spec : specs) {
        DenseLayer L;
        L.spec = spec;
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
        L.weights.resize(spec.in_dim * spec.out_dim);
        for (double& w : L.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
        L.bias.assign(spec.out_dim, 0.0);
        layers.push_back(std::move(L));
    }
    return Network(std::move(layers));
}

std::vector<LayerSpec> Network::mlp_specs(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                          std::size_t out_dim) {
    std::vector<LayerSpec> specs;
    std::size_t prev = in_dim;
    for (std::size_t h : hidden) {
        specs.push_back({prev, h, Activation::relu});
        prev = h;
    }
    specs.push_back({prev, out_dim, Activation::identity});
    return specs;
}

std::size_t Network::input_dim() const { return layers_.front().spec.in_dim; }
std::size_t Network::output_dim() const { return layers_.back().spec.out_dim; }

std::vector<LayerSpec> Network::specs() const {
    std::vector<LayerSpec> s;
    for (const auto& L : layers_) s.push_back(L.spec);
    return s;
}

std::vector<double> Network::forward(std::span<const double> input, ForwardCache* cache) const {
    if (layers_.empty()) throw UsageError("forward on an empty network");
    if (input.size() != input_dim())
        throw ConfigError("network input has " + std::to_string(input.size()) + " entries, expected " +
                          std::to_string(input_dim()));
    std::vector<double> x(input.begin(), input.end());
    if (cache) {
        cache->network_id = id_;
        cache->version = version_;
        cache->inputs.clear();
        cache->preactivations.clear();
    }
    for (const auto& L : layers_) {
        const std::size_t in = L.spec.in_dim, out = L.spec.out_dim;
        std::vector<double> z(out);
        for (std::size_t o = 0; o < out; ++o) {
            const double* w = L.weights.data() + o * in;
            double acc = L.bias[o];
            for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
            z[o] = acc;
        }
        std::vector<double> y = z;
        if (L.spec.activation == Activation::relu)
            for (double& v : y) v = v > 0.0 ? v : 0.0;
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->preactivations.push_back(std::move(z));
        }
        x = std::move(y);
    }
    if (!all_finite(x)) throw TrainingError("forward pass produced a non-finite output");
    if (cache) cache->inputs.push_back(x);
    return x;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    for (const auto& L : layers_) {
        g.weights.emplace_back(L.weights.size(), 0.0);
        g.bias.emplace_back(L.bias.size(), 0.0);
    }
    return g;
}

Gradients Network::backward(const ForwardCache& cache, std::span<const double> output_grad) const {
    Gradients g = zero_gradients();
    accumulate_backward(cache, output_grad, g);
    return g;
}

void Network::accumulate_backward(const ForwardCache& cache, std::span<const double> output_grad,
                                  Gradients& acc) const {
    if (cache.network_id != id_ || cache.version != version_ ||
        cache.preactivations.size() != layers_.size())
        throw UsageError("backward() given a cache from a different or since-updated network");
    if (output_grad.size() != output_dim()) throw ConfigError("output gradient has the wrong size");
    if (acc.weights.size() != layers_.size() || acc.bias.size() != layers_.size())
        throw ConfigError("gradient accumulator has the wrong shape");

    std::vector<double> delta(output_grad.begin(), output_grad.end());
    std::vector<double> prev;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& L = layers_[l];
        const std::size_t in = L.spec.in_dim, out = L.spec.out_dim;
        const auto& z = cache.preactivations[l];
        const auto& x = cache.inputs[l];
        if (L.spec.activation == Activation::relu)
            for (std::size_t o = 0; o < out; ++o)
                if (!(z[o] > 0.0)) delta[o] = 0.0;
        auto& gw = acc.weights[l];
        auto& gb = acc.bias[l];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            gb[o] += d;
            double* row = gw.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d * x[i];
        }
        if (l == 0) break;
        prev.assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* w = L.weights.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += w[i] * d;
        }
        delta.swap(prev);
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
    return n;
}

std::vector<double> Network::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& L : layers_) {
        flat.insert(flat.end(), L.weights.begin(), L.weights.end());
        flat.insert(flat.end(), L.bias.begin(), L.bias.end());
    }
    return flat;
}

void Network::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ConfigError("flat parameter array has the wrong size");
    for (double x : flat)
        if (!std::isfinite(x)) throw ConfigError("non-finite parameter in flat array");
    std::size_t pos = 0;
    for (auto& L : layers_) {
        std::copy_n(flat.begin() + pos, L.weights.size(), L.weights.begin());
        pos += L.weights.size();
        std::copy_n(flat.begin() + pos, L.bias.size(), L.bias.begin());
        pos += L.bias.size();
    }
    ++version_;
}

std::vector<DenseLayer>& Network::mutable_layers() {
    ++version_;
    return layers_;
}

Adam::Adam(const Network& net, AdamConfig cfg) : cfg_(cfg), m_(net.zero_gradients()), v_(net.zero_gradients()) {
    if (!(cfg.learning_rate >= 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
        !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.epsilon > 0.0))
        throw ConfigError("invalid Adam hyperparameters");
}

void Adam::step(Network& net, const Gradients& grads) {
    if (grads.weights.size() != m_.weights.size()) throw ConfigError("gradient shape mismatch");
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        if (grads.weights[l].size() != m_.weights[l].size() || grads.bias[l].size() != m_.bias[l].size())
            throw ConfigError("gradient shape mismatch at layer " + std::to_string(l));
        for (std::size_t i = 0; i < grads.weights[l].size(); ++i)
            if (!std::isfinite(grads.weights[l][i]))
                throw TrainingError("non-finite gradient: layer " + std::to_string(l) + " weight " +
                                    std::to_string(i) + " = " + std::to_string(grads.weights[l][i]) +
                                    " at optimizer step " + std::to_string(steps_));
        for (std::size_t i = 0; i < grads.bias[l].size(); ++i)
            if (!std::isfinite(grads.bias[l][i]))
                throw TrainingError("non-finite gradient: layer " + std::to_string(l) + " bias " +
                                    std::to_string(i) + " = " + std::to_string(grads.bias[l][i]) +
                                    " at optimizer step " + std::to_string(steps_));
    }

    const double t = static_cast<double>(steps_ + 1);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t);
    Gradients m = m_, v = v_;
    std::vector<DenseLayer> updated = net.layers();
    auto apply = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& mm,
                     std::vector<double>& vv) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            mm[i] = cfg_.beta1 * mm[i] + (1.0 - cfg_.beta1) * g[i];
            vv[i] = cfg_.beta2 * vv[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = mm[i] / c1;
            const double vhat = vv[i] / c2;
            param[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    };
    for (std::size_t l = 0; l < updated.size(); ++l) {
        apply(updated[l].weights, grads.weights[l], m.weights[l], v.weights[l]);
        apply(updated[l].bias, grads.bias[l], m.bias[l], v.bias[l]);
        if (!all_finite(updated[l].weights) || !all_finite(updated[l].bias))
            throw TrainingError("optimizer update produced a non-finite parameter in layer " +
                                std::to_string(l) + " at optimizer step " + std::to_string(steps_));
    }
    net.mutable_layers() = std::move(updated);
    m_ = std::move(m);
    v_ = std::move(v);
    ++steps_;
}

void save_checkpoint(std::ostream& out, const Network& net, const nlohmann::json& metadata) {
    nlohmann::json header;
    header["format"] = "measched-checkpoint";
    header["version"] = kFormatVersion;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& spec : net.specs())
        layers.push_back({{"in_dim", spec.in_dim}, {"out_dim", spec.out_dim},
                          {"activation", to_string(spec.activation)}});
    header["layers"] = layers;
    header["metadata"] = metadata;
    const std::string text = header.dump();

    out.write(kMagic, sizeof(kMagic));
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    const auto flat = net.flatten();
    write_u64(out, flat.size());
    for (double x : flat) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        write_u64(out, bits);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const Network& net, const nlohmann::json& metadata) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_checkpoint(out, net, metadata);
}

Checkpoint load_checkpoint(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError("not a measched checkpoint");
    const std::uint64_t header_len = read_u64(in);
    std::string text(header_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw ConfigError("checkpoint truncated");
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<std::uint32_t>() != kFormatVersion)
        throw ConfigError("unsupported checkpoint version");

    std::vector<DenseLayer> layers;
    for (const auto& jl : header.at("layers")) {
        DenseLayer L;
        L.spec = {jl.at("in_dim").get<std::size_t>(), jl.at("out_dim").get<std::size_t>(),
                  activation_from_string(jl.at("activation").get<std::string>())};
        L.weights.assign(L.spec.in_dim * L.spec.out_dim, 0.0);
        L.bias.assign(L.spec.out_dim, 0.0);
        layers.push_back(std::move(L));
    }
    Network net(std::move(layers));
    const std::uint64_t count = read_u64(in);
    if (count != net.parameter_count()) throw ConfigError("checkpoint parameter count mismatch");
    std::vector<double> flat(count);
    for (auto& x : flat) {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&x, &bits, sizeof x);
    }
    net.assign(flat);
    return {std::move(net), header.at("metadata")};
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return load_checkpoint(in);
}

}  // namespace measched::nn
