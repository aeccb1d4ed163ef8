#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "longcast/container.hpp"
#include "longcast/digest.hpp"
#include "longcast/errors.hpp"
#include "longcast/rng.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Frozen decoder-style transformer: learned positional embeddings, pre-layer
// norm, GELU MLP, causal self-attention (a bidirectional flag covers
// BERT-style backbones). Inputs enter as embedding rows, not token ids;
// token lookup happens upstream where prompt and patch tokens are formed.
// No parameter here ever receives gradient, but the forward pass stays
// differentiable with respect to its inputs.

struct BackboneConfig {
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t dh = 64;
    std::size_t vocab_size = 512;
    std::size_t max_seq = 256;
    std::uint64_t seed = 42;
    bool bidirectional = false;

    void validate() const {
        if (layers < 1) throw ArgumentError("backbone: layers must be >= 1");
        if (heads == 0 || dh % heads != 0) throw ArgumentError("backbone: dh must be divisible by heads");
        if (vocab_size == 0 || max_seq == 0) throw ArgumentError("backbone: vocab and sequence capacity must be > 0");
    }
};

template <class S>
struct BackboneLayerT {
    TensorT<S> ln1_gain, ln1_bias;
    TensorT<S> attn_wqkv, attn_bqkv;  // dh x 3dh, 3dh
    TensorT<S> attn_wo, attn_bo;      // dh x dh, dh
    TensorT<S> ln2_gain, ln2_bias;
    TensorT<S> mlp_w1, mlp_b1;        // dh x 4dh, 4dh
    TensorT<S> mlp_w2, mlp_b2;        // 4dh x dh, dh
};

template <class S>
struct BackboneWeightsT {
    BackboneConfig config;
    TensorT<S> token_embedding;  // V x dh
    TensorT<S> positional;       // max_seq x dh
    std::vector<BackboneLayerT<S>> layers;
    TensorT<S> lnf_gain, lnf_bias;

    // canonical (name, tensor) listing; drives the container layout and the
    // content digest
    template <class Fn>
    void visit(Fn&& fn) const {
        fn("tok_emb", token_embedding);
        fn("pos_emb", positional);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const std::string p = "layers." + std::to_string(i) + ".";
            const auto& l = layers[i];
            fn(p + "ln1.gain", l.ln1_gain);
            fn(p + "ln1.bias", l.ln1_bias);
            fn(p + "attn.wqkv", l.attn_wqkv);
            fn(p + "attn.bqkv", l.attn_bqkv);
            fn(p + "attn.wo", l.attn_wo);
            fn(p + "attn.bo", l.attn_bo);
            fn(p + "ln2.gain", l.ln2_gain);
            fn(p + "ln2.bias", l.ln2_bias);
            fn(p + "mlp.w1", l.mlp_w1);
            fn(p + "mlp.b1", l.mlp_b1);
            fn(p + "mlp.w2", l.mlp_w2);
            fn(p + "mlp.b2", l.mlp_b2);
        }
        fn("ln_f.gain", lnf_gain);
        fn("ln_f.bias", lnf_bias);
    }

    std::uint64_t digest() const {
        std::uint64_t h = fnv1a_init();
        visit([&](const std::string& name, const TensorT<S>& t) {
            fnv1a_update(h, name);
            std::vector<std::uint64_t> dims(t.shape().begin(), t.shape().end());
            fnv1a_update(h, dims);
            fnv1a_update(h, t.values());
        });
        return h;
    }
};

namespace detail {

template <class S>
TensorT<S> gaussian_tensor(std::vector<std::size_t> shape, Rng& rng, double sd) {
    auto t = TensorT<S>::zeros(std::move(shape), false);
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<S>(rng.normal(0.0, sd));
    return t;
}

template <class S>
TensorT<S> const_tensor(std::vector<std::size_t> shape, S v) {
    auto t = TensorT<S>::zeros(std::move(shape), false);
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = v;
    return t;
}

}  // namespace detail

// Deterministic Gaussian init (sigma = 0.02) from cfg.seed; identical bytes
// for identical (cfg, seed). Layer-norm gains start at 1, all biases at 0.
template <class S>
BackboneWeightsT<S> random_init_backbone(const BackboneConfig& cfg) {
    cfg.validate();
    BackboneWeightsT<S> w;
    w.config = cfg;
    Rng rng(derive_seed(cfg.seed, "backbone-init"));
    const double sd = 0.02;
    const std::size_t dh = cfg.dh;
    w.token_embedding = detail::gaussian_tensor<S>({cfg.vocab_size, dh}, rng, sd);
    w.positional = detail::gaussian_tensor<S>({cfg.max_seq, dh}, rng, sd);
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        BackboneLayerT<S> l;
        l.ln1_gain = detail::const_tensor<S>({dh}, S(1));
        l.ln1_bias = detail::const_tensor<S>({dh}, S(0));
        l.attn_wqkv = detail::gaussian_tensor<S>({dh, 3 * dh}, rng, sd);
        l.attn_bqkv = detail::const_tensor<S>({3 * dh}, S(0));
        l.attn_wo = detail::gaussian_tensor<S>({dh, dh}, rng, sd);
        l.attn_bo = detail::const_tensor<S>({dh}, S(0));
        l.ln2_gain = detail::const_tensor<S>({dh}, S(1));
        l.ln2_bias = detail::const_tensor<S>({dh}, S(0));
        l.mlp_w1 = detail::gaussian_tensor<S>({dh, 4 * dh}, rng, sd);
        l.mlp_b1 = detail::const_tensor<S>({4 * dh}, S(0));
        l.mlp_w2 = detail::gaussian_tensor<S>({4 * dh, dh}, rng, sd);
        l.mlp_b2 = detail::const_tensor<S>({dh}, S(0));
        w.layers.push_back(std::move(l));
    }
    w.lnf_gain = detail::const_tensor<S>({dh}, S(1));
    w.lnf_bias = detail::const_tensor<S>({dh}, S(0));
    return w;
}

// Contextualizing forward pass over inline embeddings. first_layers
// truncates the stack (the shallow-backbone ablation); 0 is legal and
// reduces the pass to layer_norm(input + positional).
template <class S>
TensorT<S> backbone_forward(const BackboneWeightsT<S>& w, const TensorT<S>& input,
                            std::optional<std::size_t> first_layers = std::nullopt) {
    detail::require_2d(input, "backbone_forward");
    const std::size_t seq = input.shape()[0];
    const std::size_t dh = w.config.dh;
    if (input.shape()[1] != dh)
        throw DimensionError("backbone_forward: input " + shape_str(input.shape()) + " vs hidden dim " +
                             std::to_string(dh));
    if (seq > w.config.max_seq)
        throw CapacityError("sequence length " + std::to_string(seq) + " exceeds positional capacity " +
                            std::to_string(w.config.max_seq));
    std::size_t n_layers = first_layers.value_or(w.layers.size());
    if (n_layers > w.layers.size())
        throw ArgumentError("first_layers " + std::to_string(n_layers) + " exceeds layer count " +
                            std::to_string(w.layers.size()));

    auto x = add(input, slice_rows(w.positional, 0, seq));

    TensorT<S> causal_mask;
    if (!w.config.bidirectional) {
        causal_mask = TensorT<S>::zeros({seq, seq}, false);
        for (std::size_t i = 0; i < seq; ++i)
            for (std::size_t j = i + 1; j < seq; ++j) causal_mask.data()[i * seq + j] = S(-1e9);
    }

    const std::size_t heads = w.config.heads;
    const std::size_t hd = dh / heads;
    const S inv_scale = S(1) / std::sqrt(static_cast<S>(hd));
    for (std::size_t li = 0; li < n_layers; ++li) {
        const auto& l = w.layers[li];
        // attention sub-block
        auto normed = layer_norm(x, l.ln1_gain, l.ln1_bias);
        auto qkv = add_bias(matmul(normed, l.attn_wqkv), l.attn_bqkv);
        std::vector<TensorT<S>> head_outs;
        head_outs.reserve(heads);
        for (std::size_t h = 0; h < heads; ++h) {
            auto q = slice_cols(qkv, h * hd, hd);
            auto k = slice_cols(qkv, dh + h * hd, hd);
            auto v = slice_cols(qkv, 2 * dh + h * hd, hd);
            auto scores = scale(matmul(q, transpose(k)), inv_scale);
            if (!w.config.bidirectional) scores = add(scores, causal_mask);
            head_outs.push_back(matmul(softmax_rows(scores), v));
        }
        auto attn_out = add_bias(matmul(concat_cols(head_outs), l.attn_wo), l.attn_bo);
        x = add(x, attn_out);
        // MLP sub-block
        auto normed2 = layer_norm(x, l.ln2_gain, l.ln2_bias);
        auto hidden = gelu(add_bias(matmul(normed2, l.mlp_w1), l.mlp_b1));
        auto mlp_out = add_bias(matmul(hidden, l.mlp_w2), l.mlp_b2);
        x = add(x, mlp_out);
    }
    return layer_norm(x, w.lnf_gain, w.lnf_bias);
}

// ---- persistence (f32 container) ----

inline void save_backbone(const BackboneWeightsT<float>& w, const std::string& path) {
    Container c;
    c.meta["kind"] = "backbone";
    c.meta["layers"] = w.config.layers;
    c.meta["heads"] = w.config.heads;
    c.meta["dh"] = w.config.dh;
    c.meta["vocab_size"] = w.config.vocab_size;
    c.meta["max_seq"] = w.config.max_seq;
    c.meta["seed"] = w.config.seed;
    c.meta["bidirectional"] = w.config.bidirectional;
    w.visit([&](const std::string& name, const TensorT<float>& t) {
        c.tensors.emplace(name, ContainerEntry{t.shape(), t.values()});
    });
    save_container(path, c);
}

inline BackboneWeightsT<float> load_backbone(const std::string& path) {
    Container c = load_container(path);
    BackboneConfig cfg;
    try {
        cfg.layers = c.meta.at("layers").get<std::size_t>();
        cfg.heads = c.meta.at("heads").get<std::size_t>();
        cfg.dh = c.meta.at("dh").get<std::size_t>();
        cfg.vocab_size = c.meta.at("vocab_size").get<std::size_t>();
        cfg.max_seq = c.meta.at("max_seq").get<std::size_t>();
        cfg.seed = c.meta.at("seed").get<std::uint64_t>();
        cfg.bidirectional = c.meta.at("bidirectional").get<bool>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError("backbone container header is missing configuration fields: " + path);
    }
    cfg.validate();

    // build an empty skeleton with the right shapes, then fill from the file;
    // tensors are shared handles, so writing through the copies fills w
    BackboneWeightsT<float> w = random_init_backbone<float>(cfg);
    std::map<std::string, TensorT<float>> slots;
    w.visit([&](const std::string& name, const TensorT<float>& t) { slots.emplace(name, t); });

    for (auto& [name, slot] : slots) {
        auto it = c.tensors.find(name);
        if (it == c.tensors.end()) throw ValidationError("backbone container is missing tensor '" + name + "'");
        if (it->second.shape != slot.shape())
            throw ValidationError("tensor '" + name + "' has shape " + shape_str(it->second.shape) +
                                  ", expected " + shape_str(slot.shape()));
        slot.values().assign(it->second.data.begin(), it->second.data.end());
    }
    for (const auto& [name, entry] : c.tensors) {
        if (!slots.count(name))
            std::cerr << "warning: ignoring unknown tensor '" << name << "' in " << path << "\n";
    }
    return w;
}

using BackboneWeights = BackboneWeightsT<float>;

}  // namespace longcast
