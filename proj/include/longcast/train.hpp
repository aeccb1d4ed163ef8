#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "longcast/data.hpp"
#include "longcast/errors.hpp"
#include "longcast/model.hpp"
#include "longcast/rng.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

struct TrainConfig {
    double lr = 0.005;          // Table 3 initial learning rate
    std::size_t epochs = 30;    // Table 3
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    // off by default; available as flags
    double weight_decay = 0.0;
    double grad_clip = 0.0;
    double lr_decay = 1.0;  // per-epoch multiplier

    void validate() const {
        if (lr <= 0) throw ArgumentError("train: lr must be > 0");
        if (epochs < 1) throw ArgumentError("train: epochs must be >= 1");
        if (batch_size < 1) throw ArgumentError("train: batch size must be >= 1");
    }
};

// Flattened B x d x h prediction/target/mask block. The loss reads only
// mask-true cells.
struct MaskedBatch {
    std::vector<double> predictions;
    std::vector<double> targets;
    std::vector<bool> mask;
};

// Mean squared error over observed cells only; the denominator is the
// observed-cell count, which coincides with d*h on fully observed data.
inline double masked_mse(const MaskedBatch& batch) {
    if (batch.predictions.size() != batch.targets.size() || batch.predictions.size() != batch.mask.size())
        throw DimensionError("masked_mse: batch fields have differing lengths");
    double se = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < batch.mask.size(); ++i) {
        if (!batch.mask[i]) continue;
        const double d = batch.predictions[i] - batch.targets[i];
        se += d * d;
        ++count;
    }
    if (count == 0) throw DegenerateInputError("masked_mse: batch has no observed cell");
    return se / static_cast<double>(count);
}

// Per-variable masked absolute-error contributions (sum, count); aggregation
// across a split divides sums by counts.
inline void masked_mae_accumulate(const std::vector<double>& pred, const std::vector<double>& target,
                                  const std::vector<bool>& mask, double& abs_sum, std::size_t& count) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        abs_sum += std::fabs(pred[i] - target[i]);
        ++count;
    }
}

// ---- Adam ----

template <class S>
struct AdamStateT {
    std::vector<std::vector<S>> m;  // first moments, aligned with the parameter list
    std::vector<std::vector<S>> v;  // second moments
    std::size_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void init(const std::vector<ParameterT<S>>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.trainable ? p.tensor.numel() : 0, S(0));
            v.emplace_back(p.trainable ? p.tensor.numel() : 0, S(0));
        }
        t = 0;
    }
};

// Standard bias-corrected Adam update over the trainable parameters; frozen
// parameters are untouched by contract.
template <class S>
void adam_step(std::vector<ParameterT<S>>& params, AdamStateT<S>& state, double lr,
               double weight_decay = 0.0) {
    if (state.m.size() != params.size()) throw ContractError("adam_step: state not initialized for parameter set");
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        if (!p.trainable) continue;
        if (p.tensor.grad().size() != p.tensor.numel())
            throw ContractError("adam_step: parameter '" + p.name + "' has no gradient");
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < p.tensor.numel(); ++i) {
            const double g = static_cast<double>(p.tensor.grad()[i]);
            if (std::isnan(g)) throw NumericError("NaN gradient in parameter '" + p.name + "'");
            const double m_new = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            const double v_new = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            m[i] = static_cast<S>(m_new);
            v[i] = static_cast<S>(v_new);
            const double m_hat = m_new / bc1;
            const double v_hat = v_new / bc2;
            double w = static_cast<double>(p.tensor.data()[i]);
            w -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
            if (weight_decay > 0.0) w -= lr * weight_decay * w;
            p.tensor.data()[i] = static_cast<S>(w);
        }
    }
}

// ---- training loop ----

struct TrainResult {
    std::vector<double> train_loss;  // masked MSE per epoch, clinical units
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;  // 1-based; 0 when no validation was possible
};

inline void write_loss_csv(const std::string& path, const TrainResult& r) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write loss history: " + path);
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
        const double vl = e < r.val_loss.size() ? r.val_loss[e] : std::numeric_limits<double>::quiet_NaN();
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", e + 1, r.train_loss[e], vl);
        out << buf;
    }
}

namespace detail {

// One (subject, variable) training sample: cached window, prompt ids, and
// the raw targets over the horizon slots.
struct TrainSample {
    std::size_t subject = 0;
    std::size_t variable = 0;
    Window window;
    std::vector<std::size_t> prompt_ids;
    std::vector<double> target;    // length h, raw units
    std::vector<bool> target_mask;
};

template <class S>
std::vector<TrainSample> collect_samples(const ModelBundleT<S>& m, const Cohort& cohort,
                                         const std::vector<std::string>& ids, int horizon_month) {
    const int target_idx = visit_index(horizon_month);
    if (target_idx < 1) throw ArgumentError("train: horizon month must be a scheduled follow-up visit");
    const std::size_t h = m.hyper.horizon_steps;
    std::vector<TrainSample> samples;
    for (const auto& id : ids) {
        const SubjectRecord* s = cohort.find(id);
        if (!s) throw DataError("split references unknown subject '" + id + "'");
        for (std::size_t v = 0; v < cohort.num_vars(); ++v) {
            TrainSample smp;
            smp.subject = static_cast<std::size_t>(s - cohort.subjects.data());
            smp.variable = v;
            smp.window = extract_window(*s, v, horizon_month, m.hyper.input_visits);
            if (smp.window.observed() == 0) continue;
            smp.target.assign(h, 0.0);
            smp.target_mask.assign(h, false);
            bool any = false;
            for (std::size_t j = 0; j < h; ++j) {
                const std::size_t slot = static_cast<std::size_t>(target_idx) + j;
                if (slot >= kNumVisits) break;
                if (s->is_observed(v, slot)) {
                    smp.target[j] = s->value(v, slot);
                    smp.target_mask[j] = true;
                    any = true;
                }
            }
            if (!any) continue;
            smp.prompt_ids = prompt_ids_for(m, *s, v, smp.window, horizon_month, cohort.variable_names);
            samples.push_back(std::move(smp));
        }
    }
    return samples;
}

// Squared-error sum node and observed count for a set of samples. The error
// is taken in clinical units: predictions are denormalized inside the graph
// (per the algorithm's per-variable order) and compared against raw targets.
// Builds one prototype tensor shared by the whole set.
template <class S>
std::pair<TensorT<S>, std::size_t> loss_graph(const ModelBundleT<S>& m,
                                              const std::vector<TrainSample>& samples,
                                              const std::vector<std::size_t>& order) {
    auto prototypes = build_prototypes(m.backbone.token_embedding, m.prototype_bank);
    TensorT<S> se_sum = TensorT<S>::scalar(S(0));
    std::size_t count = 0;
    for (std::size_t idx : order) {
        const auto& smp = samples[idx];
        auto fwd = forward_variable(m, smp.window, smp.prompt_ids, prototypes);
        const std::size_t h = m.hyper.horizon_steps;
        std::vector<S> tgt(h, S(0)), msk(h, S(0)), mean(h, static_cast<S>(fwd.state.mean));
        for (std::size_t j = 0; j < h; ++j) {
            if (!smp.target_mask[j]) continue;
            tgt[j] = static_cast<S>(smp.target[j]);
            msk[j] = S(1);
            ++count;
        }
        auto pred = add(scale(fwd.y_norm, static_cast<S>(fwd.state.scale())),
                        TensorT<S>::from({std::size_t(1), h}, std::move(mean)));
        auto diff = sub(pred, TensorT<S>::from({std::size_t(1), h}, std::move(tgt)));
        auto se = mul(mul(diff, diff), TensorT<S>::from({std::size_t(1), h}, std::move(msk)));
        se_sum = add(se_sum, sum_all(se));
    }
    return {se_sum, count};
}

}  // namespace detail

// Epoch x minibatch Adam loop over the train split. Shuffling, init, and all
// arithmetic are seeded; identical configs give bit-identical histories. The
// best-validation parameters are restored into the bundle before returning.
template <class S>
TrainResult train_model(ModelBundleT<S>& m, const Cohort& cohort, const SplitSpec& split, int horizon_month,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (split.train_ids.empty()) throw DegenerateInputError("train: empty train split");

    auto train_samples = detail::collect_samples(m, cohort, split.train_ids, horizon_month);
    auto val_samples = detail::collect_samples(m, cohort, split.val_ids, horizon_month);
    if (train_samples.empty()) throw DegenerateInputError("train: no usable training sample");

    auto params = m.parameters();
    AdamStateT<S> adam;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.adam_eps;
    adam.init(params);

    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle"));
    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<S>> best_params;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double lr = cfg.lr;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_se = 0.0;
        std::size_t epoch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            for (auto& p : params) p.tensor.zero_grad();
            auto [se_sum, count] = detail::loss_graph(m, train_samples, batch);
            if (count == 0) continue;
            auto loss = scale(se_sum, S(1) / static_cast<S>(count));
            backward(loss);
            if (cfg.grad_clip > 0.0) {
                double norm_sq = 0.0;
                for (auto& p : params)
                    for (S g : p.tensor.grad()) norm_sq += static_cast<double>(g) * static_cast<double>(g);
                const double norm = std::sqrt(norm_sq);
                if (norm > cfg.grad_clip) {
                    const S f = static_cast<S>(cfg.grad_clip / norm);
                    for (auto& p : params)
                        for (S& g : p.tensor.grad()) g *= f;
                }
            }
            adam_step(params, adam, lr, cfg.weight_decay);
            epoch_se += static_cast<double>(se_sum.item());
            epoch_count += count;
        }
        result.train_loss.push_back(epoch_count ? epoch_se / static_cast<double>(epoch_count)
                                                : std::numeric_limits<double>::quiet_NaN());

        if (!val_samples.empty()) {
            std::vector<std::size_t> all(val_samples.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            auto [vse, vcount] = detail::loss_graph(m, val_samples, all);
            const double vl = vcount ? static_cast<double>(vse.item()) / static_cast<double>(vcount)
                                     : std::numeric_limits<double>::quiet_NaN();
            result.val_loss.push_back(vl);
            if (vl < best_val) {
                best_val = vl;
                result.best_epoch = epoch + 1;
                best_params.clear();
                for (const auto& p : params) best_params.push_back(p.tensor.values());
            }
        } else {
            result.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        lr *= cfg.lr_decay;
    }

    if (!best_params.empty())
        for (std::size_t i = 0; i < params.size(); ++i) params[i].tensor.values() = best_params[i];
    return result;
}

using AdamState = AdamStateT<float>;

}  // namespace longcast
