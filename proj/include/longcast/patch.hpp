#pragma once

#include <cstddef>
#include <vector>

#include "longcast/errors.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Overlapping temporal patches. A series of length T is end-padded by
// replicating its final value s times, then cut into windows of length l at
// stride s, which yields exactly floor((T - l) / s) + 2 patches.

struct PatchSequence {
    std::vector<double> patches;    // m x l, row-major
    std::vector<bool> patch_mask;   // patch observed if any constituent visit observed
    std::size_t m = 0;
    std::size_t len = 0;
    std::size_t stride = 0;
};

inline std::size_t patch_count(std::size_t t, std::size_t len, std::size_t stride) {
    return (t - len) / stride + 2;
}

inline PatchSequence segment(const std::vector<double>& series, const std::vector<bool>& mask,
                             std::size_t len, std::size_t stride) {
    if (len < 1 || stride < 1) throw ArgumentError("segment: patch length and stride must be >= 1");
    const std::size_t t = series.size();
    if (t < len)
        throw ArgumentError("segment: series length " + std::to_string(t) + " shorter than patch length " +
                            std::to_string(len));
    if (mask.size() != t) throw DimensionError("segment: series/mask length mismatch");

    std::vector<double> padded(series);
    std::vector<bool> padded_mask(mask);
    for (std::size_t i = 0; i < stride; ++i) {
        padded.push_back(series.back());
        padded_mask.push_back(mask.back());
    }

    PatchSequence out;
    out.len = len;
    out.stride = stride;
    out.m = patch_count(t, len, stride);
    out.patches.resize(out.m * len);
    out.patch_mask.resize(out.m);
    for (std::size_t p = 0; p < out.m; ++p) {
        bool any = false;
        for (std::size_t j = 0; j < len; ++j) {
            out.patches[p * len + j] = padded[p * stride + j];
            any = any || padded_mask[p * stride + j];
        }
        out.patch_mask[p] = any;
    }
    return out;
}

// Learnable patch embedding: row-wise affine map into the d_e space.
template <class S>
struct PatchEmbedderT {
    TensorT<S> weight;  // l x de
    TensorT<S> bias;    // de

    std::size_t patch_len() const { return weight.shape()[0]; }
    std::size_t embed_dim() const { return weight.shape()[1]; }
};

template <class S>
TensorT<S> embed_patches(const PatchSequence& seq, const PatchEmbedderT<S>& e) {
    if (seq.len != e.patch_len())
        throw DimensionError("embed_patches: patch length " + std::to_string(seq.len) +
                             " vs embedder weight rows " + std::to_string(e.patch_len()));
    std::vector<S> vals(seq.patches.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<S>(seq.patches[i]);
    auto x = TensorT<S>::from({seq.m, seq.len}, std::move(vals));
    return add_bias(matmul(x, e.weight), e.bias);
}

using PatchEmbedder = PatchEmbedderT<float>;

}  // namespace longcast
