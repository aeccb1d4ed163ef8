#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "longcast/errors.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Cross-modal reprogramming: patch embeddings (queries, d_e space) attend
// over text prototypes derived from the backbone vocabulary embeddings
// (keys/values, d_h space). Prototypes are either a dense learnable
// combination of the embedding matrix rows (linear mode, the default) or a
// literal row subset (subset mode).

enum class PrototypeMode { linear, subset };

template <class S>
struct PrototypeBankT {
    PrototypeMode mode = PrototypeMode::linear;
    TensorT<S> proto_map;              // V' x V, trainable (linear mode)
    std::vector<std::size_t> subset;   // V' row indices (subset mode)

    std::size_t prototype_count() const {
        return mode == PrototypeMode::linear ? proto_map.shape()[0] : subset.size();
    }
};

// E' = proto_map * E (gradients flow to proto_map, never to the frozen E),
// or a row gather in subset mode.
template <class S>
TensorT<S> build_prototypes(const TensorT<S>& embedding_matrix, const PrototypeBankT<S>& bank) {
    if (bank.mode == PrototypeMode::linear) {
        if (bank.proto_map.shape()[1] != embedding_matrix.shape()[0])
            throw DimensionError("build_prototypes: proto_map " + shape_str(bank.proto_map.shape()) +
                                 " vs embedding matrix " + shape_str(embedding_matrix.shape()));
        return matmul(bank.proto_map, embedding_matrix);
    }
    if (bank.subset.empty()) throw ArgumentError("build_prototypes: empty subset");
    return rows_gather(embedding_matrix, bank.subset);
}

template <class S>
struct CrossAttentionT {
    std::size_t heads = 0;
    std::size_t head_dim = 0;
    std::vector<TensorT<S>> w_q;  // per head: de x dk
    std::vector<TensorT<S>> w_k;  // per head: dh x dk
    std::vector<TensorT<S>> w_v;  // per head: dh x dk
    TensorT<S> w_o;               // (K*dk) x dh
    TensorT<S> b_o;               // dh
};

// Per head: A_k = softmax(Q_k K_k^T / sqrt(dk)), Z_k = A_k V_k;
// z = concat(Z_1..Z_K) W_O + b_O. Scale uses the per-head key dimension.
template <class S>
TensorT<S> cross_attend(const TensorT<S>& patch_embed, const TensorT<S>& prototypes,
                        const CrossAttentionT<S>& attn) {
    if (attn.heads == 0 || attn.w_q.size() != attn.heads)
        throw DimensionError("cross_attend: attention has " + std::to_string(attn.w_q.size()) +
                             " query projections for " + std::to_string(attn.heads) + " heads");
    const S inv_scale = S(1) / std::sqrt(static_cast<S>(attn.head_dim));
    std::vector<TensorT<S>> heads;
    heads.reserve(attn.heads);
    for (std::size_t k = 0; k < attn.heads; ++k) {
        auto q = matmul(patch_embed, attn.w_q[k]);
        auto key = matmul(prototypes, attn.w_k[k]);
        auto val = matmul(prototypes, attn.w_v[k]);
        auto scores = scale(matmul(q, transpose(key)), inv_scale);
        auto weights = softmax_rows(scores);
        heads.push_back(matmul(weights, val));
    }
    return add_bias(matmul(concat_cols(heads), attn.w_o), attn.b_o);
}

// Attention weights of one head, for inspection and tests.
template <class S>
TensorT<S> attention_weights(const TensorT<S>& patch_embed, const TensorT<S>& prototypes,
                             const CrossAttentionT<S>& attn, std::size_t head) {
    if (head >= attn.heads) throw BoundsError("attention_weights: head " + std::to_string(head));
    const S inv_scale = S(1) / std::sqrt(static_cast<S>(attn.head_dim));
    auto q = matmul(patch_embed, attn.w_q[head]);
    auto key = matmul(prototypes, attn.w_k[head]);
    return softmax_rows(scale(matmul(q, transpose(key)), inv_scale));
}

using PrototypeBank = PrototypeBankT<float>;
using CrossAttention = CrossAttentionT<float>;

}  // namespace longcast
