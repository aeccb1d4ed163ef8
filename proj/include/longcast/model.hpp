#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "longcast/backbone.hpp"
#include "longcast/container.hpp"
#include "longcast/data.hpp"
#include "longcast/errors.hpp"
#include "longcast/patch.hpp"
#include "longcast/prompt.hpp"
#include "longcast/reprogram.hpp"
#include "longcast/revin.hpp"
#include "longcast/rng.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Full pipeline per variable: normalize -> patch -> embed -> reprogram ->
// concatenate with the prompt -> frozen forward -> head -> denormalize.
// Variables are processed independently; the trainable set is exactly the
// patch embedder, the prototype map (linear mode), the cross-attention
// projections, and the head.

enum class PromptMode { per_variable, shared, off };

struct ModelHyper {
    std::size_t patch_len = 2;       // Table 3: l
    std::size_t stride = 1;          // Table 3: s
    std::size_t embed_dim = 16;      // Table 3: d_e
    std::size_t heads = 8;           // Table 3: K
    std::size_t prototypes = 100;    // Table 3: V'
    std::size_t horizon_steps = 1;   // h: scheduled visits predicted per call
    std::size_t input_visits = 2;    // T: canonical slots in the input window
    bool revin = true;
    double revin_eps = 1e-5;
    PromptMode prompt_mode = PromptMode::per_variable;
    std::size_t max_prompt_tokens = 128;
    std::optional<std::size_t> first_layers;  // backbone truncation
    PrototypeMode proto_mode = PrototypeMode::linear;

    // patches are produced from the window after any left-extension to the
    // patch length, so the head shape is static
    std::size_t effective_visits() const { return std::max(input_visits, patch_len); }
    std::size_t patch_count() const { return longcast::patch_count(effective_visits(), patch_len, stride); }
};

template <class S>
struct ModelBundleT {
    ModelHyper hyper;
    BackboneWeightsT<S> backbone;
    PatchEmbedderT<S> patch_embedder;
    PrototypeBankT<S> prototype_bank;
    CrossAttentionT<S> cross_attention;
    TensorT<S> head_weight;  // (m * dh) x h
    TensorT<S> head_bias;    // h
    TokenVocab vocab;
    PromptTemplate prompt_template;

    // Shared handles onto the trainable tensors, in a fixed order. The
    // backbone is deliberately absent: it stays frozen.
    std::vector<ParameterT<S>> parameters() const {
        std::vector<ParameterT<S>> ps;
        ps.push_back({"patch_embed.weight", patch_embedder.weight, true});
        ps.push_back({"patch_embed.bias", patch_embedder.bias, true});
        if (hyper.proto_mode == PrototypeMode::linear)
            ps.push_back({"prototypes.map", prototype_bank.proto_map, true});
        for (std::size_t k = 0; k < cross_attention.heads; ++k) {
            const std::string p = "reprogram.h" + std::to_string(k) + ".";
            ps.push_back({p + "wq", cross_attention.w_q[k], true});
            ps.push_back({p + "wk", cross_attention.w_k[k], true});
            ps.push_back({p + "wv", cross_attention.w_v[k], true});
        }
        ps.push_back({"reprogram.wo", cross_attention.w_o, true});
        ps.push_back({"reprogram.bo", cross_attention.b_o, true});
        ps.push_back({"head.weight", head_weight, true});
        ps.push_back({"head.bias", head_bias, true});
        return ps;
    }
};

template <class S>
ModelBundleT<S> init_model(const ModelHyper& hyper, BackboneWeightsT<S> backbone, std::uint64_t seed,
                           TokenVocab vocab = {}, PromptTemplate tmpl = {}) {
    const std::size_t dh = backbone.config.dh;
    if (hyper.heads == 0 || dh % hyper.heads != 0)
        throw ArgumentError("reprogramming heads must divide the backbone hidden dim");
    ModelBundleT<S> m;
    m.hyper = hyper;
    m.backbone = std::move(backbone);
    if (vocab.size() == 0) vocab = default_vocab(m.backbone.config.vocab_size);
    if (vocab.size() != m.backbone.config.vocab_size)
        throw ArgumentError("vocabulary size " + std::to_string(vocab.size()) +
                            " does not match backbone vocab size " +
                            std::to_string(m.backbone.config.vocab_size));
    m.vocab = std::move(vocab);
    m.prompt_template = std::move(tmpl);

    Rng rng(derive_seed(seed, "model-init"));
    const double sd = 0.02;
    auto gauss = [&](std::vector<std::size_t> shape) {
        auto t = detail::gaussian_tensor<S>(std::move(shape), rng, sd);
        t.n->requires_grad = true;
        t.n->ensure_grad();
        return t;
    };
    auto zeros = [&](std::vector<std::size_t> shape) { return TensorT<S>::zeros(std::move(shape), true); };

    m.patch_embedder.weight = gauss({hyper.patch_len, hyper.embed_dim});
    m.patch_embedder.bias = zeros({hyper.embed_dim});

    m.prototype_bank.mode = hyper.proto_mode;
    if (hyper.proto_mode == PrototypeMode::linear) {
        m.prototype_bank.proto_map = gauss({hyper.prototypes, m.backbone.config.vocab_size});
    } else {
        if (hyper.prototypes > m.backbone.config.vocab_size)
            throw ArgumentError("subset prototype count exceeds vocabulary size");
        m.prototype_bank.subset.resize(hyper.prototypes);
        for (std::size_t i = 0; i < hyper.prototypes; ++i) m.prototype_bank.subset[i] = i;
    }

    const std::size_t dk = dh / hyper.heads;
    m.cross_attention.heads = hyper.heads;
    m.cross_attention.head_dim = dk;
    for (std::size_t k = 0; k < hyper.heads; ++k) {
        m.cross_attention.w_q.push_back(gauss({hyper.embed_dim, dk}));
        m.cross_attention.w_k.push_back(gauss({dh, dk}));
        m.cross_attention.w_v.push_back(gauss({dh, dk}));
    }
    m.cross_attention.w_o = gauss({hyper.heads * dk, dh});
    m.cross_attention.b_o = zeros({dh});

    m.head_weight = gauss({hyper.patch_count() * dh, hyper.horizon_steps});
    m.head_bias = zeros({hyper.horizon_steps});
    return m;
}

// ---- windows and targets ----

struct Window {
    std::vector<double> values;  // length = hyper.input_visits, NaN where masked
    std::vector<bool> mask;
    std::vector<int> months;     // true visit months; padding slots carry -1 and stay masked

    std::size_t observed() const {
        std::size_t c = 0;
        for (bool b : mask) c += b ? 1 : 0;
        return c;
    }
};

// Input window for one variable: the canonical slots strictly before
// upto_month, right-aligned into input_visits slots (extra history is
// dropped from the front, short history is left-padded as masked).
inline Window extract_window(const SubjectRecord& s, std::size_t var, int upto_month,
                             std::size_t input_visits) {
    const int idx = visit_index(upto_month);
    if (idx < 0) throw ArgumentError("upto month " + std::to_string(upto_month) + " is not a scheduled visit");
    Window w;
    w.values.assign(input_visits, std::numeric_limits<double>::quiet_NaN());
    w.mask.assign(input_visits, false);
    w.months.assign(input_visits, -1);
    const std::size_t avail = static_cast<std::size_t>(idx);
    const std::size_t take = std::min(avail, input_visits);
    for (std::size_t k = 0; k < take; ++k) {
        const std::size_t slot = avail - take + k;           // source visit index
        const std::size_t dst = input_visits - take + k;     // right-aligned destination
        w.months[dst] = kVisitMonths[slot];
        if (s.is_observed(var, slot)) {
            w.values[dst] = s.value(var, slot);
            w.mask[dst] = true;
        }
    }
    return w;
}

// ---- forward ----

template <class S>
struct VariableForward {
    TensorT<S> y_norm;  // 1 x h, normalized scale
    RevinState state;
};

// Algorithm steps for one variable. Requires at least one observed visit in
// the window; callers treat the degenerate case as a skip.
template <class S>
VariableForward<S> forward_variable(const ModelBundleT<S>& m, const Window& win,
                                    const std::vector<std::size_t>& prompt_ids,
                                    const TensorT<S>& prototypes) {
    if (win.observed() == 0) throw DegenerateInputError("forward_variable: window has no observed visit");
    const auto& hy = m.hyper;

    RevinState state = revin_identity(hy.revin_eps);
    std::vector<double> series(win.values);
    std::vector<bool> mask(win.mask);
    if (hy.revin) {
        auto rv = revin_normalize(series, mask, hy.revin_eps);
        series = std::move(rv.normalized);
        state = rv.state;
    } else {
        for (std::size_t t = 0; t < series.size(); ++t)
            if (!mask[t]) series[t] = 0.0;
    }

    // left-extend histories shorter than the patch length by replicating the
    // earliest value
    while (series.size() < hy.patch_len) {
        series.insert(series.begin(), series.front());
        mask.insert(mask.begin(), mask.front());
    }

    auto patches = segment(series, mask, hy.patch_len, hy.stride);
    auto x_patch = embed_patches(patches, m.patch_embedder);
    auto z = cross_attend(x_patch, prototypes, m.cross_attention);

    auto p = rows_gather(m.backbone.token_embedding, prompt_ids);
    auto llm_in = concat_rows(p, z);
    auto h = backbone_forward(m.backbone, llm_in, hy.first_layers);
    auto h_patch = slice_rows(h, prompt_ids.size(), patches.m);
    auto flat = reshape(h_patch, {std::size_t(1), patches.m * m.backbone.config.dh});
    auto y = add_bias(matmul(flat, m.head_weight), m.head_bias);
    return {y, state};
}

// Prompt token ids for one (subject, variable) window under the bundle's
// prompt mode; empty in the no-prompt configuration.
template <class S>
std::vector<std::size_t> prompt_ids_for(const ModelBundleT<S>& m, const SubjectRecord& s, std::size_t var,
                                        const Window& win, int horizon_month,
                                        const std::vector<std::string>& variable_names) {
    if (m.hyper.prompt_mode == PromptMode::off) return {};
    const std::string label =
        m.hyper.prompt_mode == PromptMode::shared ? "clinical" : variable_names[var];
    return build_prompt_ids(s.demographics, win.values, win.mask, win.months, label, horizon_month, m.vocab,
                            m.hyper.max_prompt_tokens, m.prompt_template);
}

struct ForecastOutput {
    std::vector<double> y_hat;   // d x h, clinical units; NaN where skipped
    std::vector<double> y_norm;  // d x h, normalized scale
    std::vector<RevinState> states;
    std::vector<bool> skipped;   // per variable

    std::size_t horizon = 1;
    double value(std::size_t var, std::size_t step = 0) const { return y_hat[var * horizon + step]; }
};

// Inference over all variables at once. Variables whose window has no
// observed visit land in the skip set and produce NaN forecasts.
template <class S>
ForecastOutput forward_all(const ModelBundleT<S>& m, const SubjectRecord& s, int upto_month,
                           const std::vector<std::string>& variable_names) {
    const std::size_t d = variable_names.size();
    ForecastOutput out;
    out.horizon = m.hyper.horizon_steps;
    out.y_hat.assign(d * out.horizon, std::numeric_limits<double>::quiet_NaN());
    out.y_norm.assign(d * out.horizon, std::numeric_limits<double>::quiet_NaN());
    out.states.assign(d, RevinState{});
    out.skipped.assign(d, true);

    auto prototypes = build_prototypes(m.backbone.token_embedding, m.prototype_bank);
    std::size_t produced = 0;
    for (std::size_t v = 0; v < d; ++v) {
        Window win = extract_window(s, v, upto_month, m.hyper.input_visits);
        if (win.observed() == 0) continue;
        auto ids = prompt_ids_for(m, s, v, win, upto_month, variable_names);
        auto fwd = forward_variable(m, win, ids, prototypes);
        out.states[v] = fwd.state;
        out.skipped[v] = false;
        ++produced;
        for (std::size_t j = 0; j < out.horizon; ++j) {
            const double yn = static_cast<double>(fwd.y_norm.data()[j]);
            out.y_norm[v * out.horizon + j] = yn;
            out.y_hat[v * out.horizon + j] = revin_denormalize(yn, fwd.state);
        }
    }
    if (produced == 0) throw DegenerateInputError("forward_all: no forecastable variable for subject " + s.subject_id);
    return out;
}

// Forecast the single next scheduled visit from all available history before
// upto_month.
template <class S>
ForecastOutput predict_next_visit(const ModelBundleT<S>& m, const SubjectRecord& s, int upto_month,
                                  const std::vector<std::string>& variable_names) {
    if (visit_index(upto_month) < 1)
        throw ArgumentError("predict_next_visit: upto month must be a scheduled follow-up visit");
    return forward_all(m, s, upto_month, variable_names);
}

// ---- checkpoints ----

// Named-tensor container with the trainable tensors only, plus a JSON
// manifest of the hyperparameters and the frozen backbone provenance.
template <class S>
void save_checkpoint(const ModelBundleT<S>& m, const std::string& container_path,
                     const std::string& manifest_path) {
    Container c;
    c.meta["kind"] = "checkpoint";
    for (const auto& p : m.parameters()) {
        std::vector<float> data(p.tensor.numel());
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(p.tensor.data()[i]);
        c.tensors.emplace(p.name, ContainerEntry{p.tensor.shape(), std::move(data)});
    }
    save_container(container_path, c);

    nlohmann::json man;
    man["hyper"] = {{"patch_len", m.hyper.patch_len},
                    {"stride", m.hyper.stride},
                    {"embed_dim", m.hyper.embed_dim},
                    {"heads", m.hyper.heads},
                    {"prototypes", m.hyper.prototypes},
                    {"horizon_steps", m.hyper.horizon_steps},
                    {"input_visits", m.hyper.input_visits},
                    {"revin", m.hyper.revin},
                    {"revin_eps", m.hyper.revin_eps},
                    {"prompt_mode", m.hyper.prompt_mode == PromptMode::per_variable
                                        ? "per_variable"
                                        : (m.hyper.prompt_mode == PromptMode::shared ? "shared" : "off")},
                    {"max_prompt_tokens", m.hyper.max_prompt_tokens},
                    {"proto_mode", m.hyper.proto_mode == PrototypeMode::linear ? "linear" : "subset"}};
    if (m.hyper.first_layers) man["hyper"]["first_layers"] = *m.hyper.first_layers;
    man["backbone"] = {{"layers", m.backbone.config.layers},     {"heads", m.backbone.config.heads},
                       {"dh", m.backbone.config.dh},             {"vocab_size", m.backbone.config.vocab_size},
                       {"max_seq", m.backbone.config.max_seq},   {"seed", m.backbone.config.seed},
                       {"bidirectional", m.backbone.config.bidirectional},
                       {"digest", digest_hex(m.backbone.digest())}};
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint manifest: " + manifest_path);
    out << man.dump(2) << "\n";
}

inline ModelBundleT<float> load_checkpoint(const std::string& container_path, const std::string& manifest_path,
                                           const std::string& backbone_path = "") {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open checkpoint manifest: " + manifest_path);
    nlohmann::json man = nlohmann::json::parse(in, nullptr, false);
    if (man.is_discarded()) throw FormatError("malformed checkpoint manifest: " + manifest_path);

    ModelHyper hy;
    const auto& h = man.at("hyper");
    hy.patch_len = h.at("patch_len").get<std::size_t>();
    hy.stride = h.at("stride").get<std::size_t>();
    hy.embed_dim = h.at("embed_dim").get<std::size_t>();
    hy.heads = h.at("heads").get<std::size_t>();
    hy.prototypes = h.at("prototypes").get<std::size_t>();
    hy.horizon_steps = h.at("horizon_steps").get<std::size_t>();
    hy.input_visits = h.at("input_visits").get<std::size_t>();
    hy.revin = h.at("revin").get<bool>();
    hy.revin_eps = h.at("revin_eps").get<double>();
    const std::string pm = h.at("prompt_mode").get<std::string>();
    hy.prompt_mode = pm == "per_variable" ? PromptMode::per_variable
                                          : (pm == "shared" ? PromptMode::shared : PromptMode::off);
    hy.max_prompt_tokens = h.at("max_prompt_tokens").get<std::size_t>();
    hy.proto_mode = h.at("proto_mode").get<std::string>() == "linear" ? PrototypeMode::linear
                                                                      : PrototypeMode::subset;
    if (h.contains("first_layers")) hy.first_layers = h.at("first_layers").get<std::size_t>();

    const auto& b = man.at("backbone");
    BackboneWeightsT<float> backbone;
    if (!backbone_path.empty()) {
        backbone = load_backbone(backbone_path);
    } else {
        BackboneConfig cfg;
        cfg.layers = b.at("layers").get<std::size_t>();
        cfg.heads = b.at("heads").get<std::size_t>();
        cfg.dh = b.at("dh").get<std::size_t>();
        cfg.vocab_size = b.at("vocab_size").get<std::size_t>();
        cfg.max_seq = b.at("max_seq").get<std::size_t>();
        cfg.seed = b.at("seed").get<std::uint64_t>();
        cfg.bidirectional = b.at("bidirectional").get<bool>();
        backbone = random_init_backbone<float>(cfg);
    }
    const std::string recorded = b.at("digest").get<std::string>();
    if (digest_hex(backbone.digest()) != recorded)
        throw ValidationError("backbone digest mismatch: checkpoint recorded " + recorded);

    ModelBundleT<float> m = init_model<float>(hy, std::move(backbone), /*seed=*/0);
    Container c = load_container(container_path);
    for (auto p : m.parameters()) {
        auto it = c.tensors.find(p.name);
        if (it == c.tensors.end())
            throw ValidationError("checkpoint is missing trainable tensor '" + p.name + "'");
        if (it->second.shape != p.tensor.shape())
            throw ValidationError("checkpoint tensor '" + p.name + "' has shape " + shape_str(it->second.shape) +
                                  ", expected " + shape_str(p.tensor.shape()));
        for (std::size_t i = 0; i < p.tensor.numel(); ++i) p.tensor.data()[i] = it->second.data[i];
    }
    return m;
}

using ModelBundle = ModelBundleT<float>;

}  // namespace longcast
