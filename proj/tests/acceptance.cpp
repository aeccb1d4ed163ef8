// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy criteria share artifacts (the 30-epoch training run
// backs both the frozen-contract and the learning checks).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "longcast/longcast.hpp"

using namespace longcast;
namespace fs = std::filesystem;

#ifndef LONGCAST_CLI_PATH
#define LONGCAST_CLI_PATH "./longcast"
#endif

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void start() { g_t0 = std::chrono::steady_clock::now(); }

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), " [%.1fs]", secs);
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << buf << std::endl;
    if (!ok) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "longcast_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ---- criterion 1: RevIN round trip ----

void criterion_revin() {
    start();
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> x(7);
        std::vector<bool> mask(7, false);
        const std::size_t observed = 1 + rng.below(7);  // 1..7 of 7 slots
        std::vector<std::size_t> order = {0, 1, 2, 3, 4, 5, 6};
        rng.shuffle(order);
        for (std::size_t i = 0; i < observed; ++i) mask[order[i]] = true;
        for (auto& v : x) v = rng.normal(2.0, 5.0);
        auto r = revin_normalize(x, mask);
        for (std::size_t i = 0; i < 7; ++i) {
            if (!mask[i]) continue;
            const float carried = static_cast<float>(r.normalized[i]);
            worst = std::max(worst, std::fabs(revin_denormalize(static_cast<double>(carried), r.state) - x[i]));
        }
    }
    report(1, worst < 1e-5, "RevIN round-trip over 1000 random masked series",
           "max abs error " + fmt(worst));
}

// ---- criterion 2: patch-count formula ----

void criterion_patch_count() {
    start();
    bool ok = true;
    std::string detail;
    Rng rng(102);
    for (std::size_t t = 2; t <= 32 && ok; ++t) {
        for (std::size_t l = 1; l <= 4 && ok; ++l) {
            for (std::size_t s = 1; s <= 3 && ok; ++s) {
                if (t < l) continue;
                std::vector<double> x(t);
                for (auto& v : x) v = rng.normal();
                auto p = segment(x, std::vector<bool>(t, true), l, s);
                if (p.m != (t - l) / s + 2) {
                    ok = false;
                    detail = "T=" + std::to_string(t) + " l=" + std::to_string(l) + " s=" + std::to_string(s);
                }
            }
        }
    }
    auto spot = segment(std::vector<double>(7, 1.0), std::vector<bool>(7, true), 2, 1);
    if (spot.m != 7) {
        ok = false;
        detail = "spot value T=7,l=2,s=1 gave " + std::to_string(spot.m);
    }
    report(2, ok, "patch count equals floor((T-l)/s)+2 over the full grid; T=7,l=2,s=1 -> 7", detail);
}

// ---- criterion 3: gradient oracle on the tiny bundle ----
//
// The same tiny bundle is built at f32 and f64 from identical draws; the
// central-difference oracle is evaluated on the f64 twin (where differencing
// noise is negligible) and both builds' analytic gradients are compared
// against it at their precision's tolerance.

template <class S>
struct GradSetup {
    ModelBundleT<S> model;
    std::vector<Window> windows;
    std::vector<std::vector<std::size_t>> prompt_ids;
    std::vector<double> targets;
    std::vector<bool> target_mask;
};

template <class S>
GradSetup<S> tiny_grad_setup() {
    BackboneConfig bc;
    bc.layers = 1;
    bc.heads = 2;
    bc.dh = 16;
    bc.vocab_size = 32;
    bc.max_seq = 24;
    bc.seed = 7;
    ModelHyper hy;
    hy.patch_len = 2;
    hy.stride = 1;
    hy.embed_dim = 4;
    hy.heads = 2;  // K=2, dk=8
    hy.prototypes = 4;
    hy.input_visits = 4;  // m = 4
    std::vector<std::string> toks = {"<unk>"};
    for (int i = 1; i < 32; ++i) toks.push_back("t" + std::to_string(i));
    GradSetup<S> s{init_model<S>(hy, random_init_backbone<S>(bc), 11, TokenVocab::from_tokens(toks)),
                   {}, {}, {}, {}};

    // rescale to healthy magnitudes so gradients are well conditioned
    Rng rng(301);
    for (auto p : s.model.parameters())
        for (std::size_t i = 0; i < p.tensor.numel(); ++i)
            p.tensor.data()[i] = static_cast<S>(rng.normal(0.0, 0.3));
    s.model.backbone.visit([&](const std::string& name, const TensorT<S>& t) {
        if (name.find("gain") != std::string::npos || name.find("bias") != std::string::npos) return;
        auto& h = const_cast<TensorT<S>&>(t);
        for (auto& v : h.values()) v *= S(6);
    });

    // two samples, one with a masked input visit
    s.windows.resize(2);
    s.windows[0].values = {1.0, 2.0, 2.5, 4.0};
    s.windows[0].mask = {true, true, true, true};
    s.windows[0].months = {0, 6, 12, 18};
    s.windows[1].values = {2.0, std::numeric_limits<double>::quiet_NaN(), 1.0, 0.5};
    s.windows[1].mask = {true, false, true, true};
    s.windows[1].months = {0, 6, 12, 18};
    s.prompt_ids = {{3, 1, 4, 1, 5}, {2, 9}};
    s.targets = {2.2, 1.2};
    s.target_mask = {true, true};
    return s;
}

template <class S>
TensorT<S> grad_setup_loss(const GradSetup<S>& s) {
    auto protos = build_prototypes(s.model.backbone.token_embedding, s.model.prototype_bank);
    TensorT<S> se = TensorT<S>::scalar(S(0));
    std::size_t count = 0;
    for (std::size_t k = 0; k < s.windows.size(); ++k) {
        auto fwd = forward_variable(s.model, s.windows[k], s.prompt_ids[k], protos);
        std::vector<S> tgt(1, S(0)), msk(1, S(0));
        if (s.target_mask[k]) {
            tgt[0] = static_cast<S>(s.targets[k]);
            msk[0] = S(1);
            ++count;
        }
        auto pred = add(scale(fwd.y_norm, static_cast<S>(fwd.state.scale())),
                        TensorT<S>::from({1, 1}, {static_cast<S>(fwd.state.mean)}));
        auto diff = sub(pred, TensorT<S>::from({1, 1}, std::move(tgt)));
        se = add(se, sum_all(mul(mul(diff, diff), TensorT<S>::from({1, 1}, std::move(msk)))));
    }
    return scale(se, S(1) / static_cast<S>(count));
}

void criterion_gradient_oracle() {
    start();
    auto s64 = tiny_grad_setup<double>();
    auto s32 = tiny_grad_setup<float>();

    // f64 build against its own central differences (the library oracle op)
    auto p64 = s64.model.parameters();
    std::vector<ParameterT<double>*> plist;
    for (auto& p : p64) plist.push_back(&p);
    const double err64 = finite_diff_check<double>(plist, [&] { return grad_setup_loss(s64); }, 1e-4);

    // f32 build: analytic gradients vs the f64 twin's central differences
    auto p32 = s32.model.parameters();
    for (auto& p : p32) p.tensor.zero_grad();
    backward(grad_setup_loss(s32));
    const double eps = 1e-4;
    double err32 = 0.0;
    for (std::size_t pi = 0; pi < p64.size(); ++pi) {
        auto& vals = p64[pi].tensor.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + eps;
            const double fp = grad_setup_loss(s64).item();
            vals[i] = keep - eps;
            const double fm = grad_setup_loss(s64).item();
            vals[i] = keep;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = static_cast<double>(p32[pi].tensor.grad()[i]);
            err32 = std::max(err32,
                             std::fabs(numeric - analytic) / std::max({std::fabs(numeric), std::fabs(analytic), 1e-3}));
        }
    }
    const bool ok = err64 < 1e-5 && err32 < 1e-3;
    report(3, ok, "masked-MSE gradients on the tiny bundle match central differences",
           "f64 rel err " + fmt(err64) + " < 1e-5, f32 rel err " + fmt(err32) + " < 1e-3");
}

// ---- criteria 4 and 6: the 30-epoch training run ----

struct SmokeArtifacts {
    bool digest_ok = false;
    double first_epoch_loss = 0, final_loss = 0;
    double model_mae = 0, locf_mae = 0;
};

SmokeArtifacts run_learning_smoke() {
    auto cohort = synth_cohort(200, 42);
    SplitSpec split = split_subjects(cohort, 42);

    // Table 3 values: l=2, s=1, d_e=16, K=8, V'=100, lr=0.005, 30 epochs;
    // desk-scale frozen backbone
    BackboneConfig bc;  // layers=2, heads=4, dh=64, V=512 desk defaults
    ModelHyper hy;
    hy.input_visits = static_cast<std::size_t>(visit_index(12));
    auto bundle = init_model<float>(hy, random_init_backbone<float>(bc), 42);

    TrainConfig tc;
    tc.seed = 42;  // lr 0.005, 30 epochs, batch 32 defaults

    SmokeArtifacts art;
    const auto digest_before = bundle.backbone.digest();
    auto result = train_model(bundle, cohort, split, 12, tc);
    art.digest_ok = bundle.backbone.digest() == digest_before;
    art.first_epoch_loss = result.train_loss.front();
    art.final_loss = result.train_loss.back();

    auto model_res = evaluate_next_visit(cohort, split.test_ids, 12,
                                         model_predictor(bundle, cohort.variable_names));
    auto locf_res = evaluate_next_visit(cohort, split.test_ids, 12, locf_predictor(cohort.num_vars()));
    double msum = 0, lsum = 0;
    std::size_t mcount = 0, lcount = 0;
    for (std::size_t v = 0; v < cohort.num_vars(); ++v) {
        msum += model_res.abs_sum[v];
        mcount += model_res.count[v];
        lsum += locf_res.abs_sum[v];
        lcount += locf_res.count[v];
    }
    art.model_mae = msum / static_cast<double>(mcount);
    art.locf_mae = lsum / static_cast<double>(lcount);
    return art;
}

// ---- criterion 5: mask faithfulness ----

void criterion_mask_faithfulness() {
    start();
    bool ok = true;
    std::string detail;

    MaskedBatch base{{1.0, 2.5, -3.0, 4.0}, {1.5, 9.0, -2.0, -9.0}, {true, false, true, false}};
    const double base_mse = masked_mse(base);
    for (double junk : {-1e6, 0.0, 1e6}) {
        MaskedBatch mod = base;
        mod.targets[1] = junk;
        mod.targets[3] = junk;
        mod.predictions[1] = junk;
        if (masked_mse(mod) != base_mse) {
            ok = false;
            detail = "masked_mse changed for junk " + fmt(junk);
        }
    }

    // EvalReport invariance on a real model path
    auto cohort = synth_cohort(24, 5);
    BackboneConfig bc;
    bc.layers = 1;
    bc.dh = 32;
    bc.heads = 4;
    ModelHyper hy;
    hy.embed_dim = 8;
    hy.heads = 4;
    hy.prototypes = 8;
    hy.input_visits = 2;
    auto bundle = init_model<float>(hy, random_init_backbone<float>(bc), 9);
    std::vector<std::string> ids;
    for (const auto& s : cohort.subjects) ids.push_back(s.subject_id);
    auto base_res = evaluate_next_visit(cohort, ids, 12, model_predictor(bundle, cohort.variable_names));

    const int vidx = visit_index(12);
    for (double junk : {-1e6, 0.0, 1e6}) {
        Cohort mod = cohort;
        for (auto& s : mod.subjects)
            for (std::size_t v = 0; v < mod.num_vars(); ++v)
                if (!s.is_observed(v, static_cast<std::size_t>(vidx)))
                    s.values[v * kNumVisits + static_cast<std::size_t>(vidx)] = junk;
        auto res = evaluate_next_visit(mod, ids, 12, model_predictor(bundle, mod.variable_names));
        for (std::size_t v = 0; v < mod.num_vars(); ++v) {
            if (res.abs_sum[v] != base_res.abs_sum[v] || res.count[v] != base_res.count[v]) {
                ok = false;
                detail = "EvalReport changed for junk " + fmt(junk);
            }
        }
    }
    report(5, ok, "unobserved target cells cannot influence masked_mse or EvalReport numbers", detail);
}

// ---- criterion 7: ablation direction ----

void criterion_ablation_direction() {
    start();
    // default generator: CDRSB baseline sd 2.0 >= 5 x noise sd 0.1
    auto cohort = synth_cohort(120, 13);

    ProtocolConfig cfg;
    cfg.horizons = {12};
    cfg.backbone.layers = 1;
    cfg.backbone.heads = 4;
    cfg.backbone.dh = 32;
    cfg.hyper.embed_dim = 8;
    cfg.hyper.heads = 4;
    cfg.hyper.prototypes = 16;
    cfg.train.epochs = 12;
    cfg.train.batch_size = 16;

    auto rows = run_ablation<float>(cohort, {"revin=off"}, 0, cfg, 0.5);
    double mae_default = 0, mae_norevin = 0;
    for (const auto& r : rows) {
        if (r.axis == "default") mae_default = r.mae;
        if (r.axis == "revin=off") mae_norevin = r.mae;
    }
    const bool ok = mae_norevin >= 1.5 * mae_default && mae_default > 0;
    report(7, ok, "No-RevIN CDRSB MAE at least 1.5x the default on a heterogeneous cohort",
           "default " + fmt(mae_default) + ", no-revin " + fmt(mae_norevin));
}

// ---- criterion 8: protocol arithmetic ----

void criterion_protocol_arithmetic() {
    start();
    bool ok = true;
    std::string detail;

    auto cohort = synth_cohort(1783, 3);
    auto split = split_subjects(cohort, 3);
    if (split.train_ids.size() != 1248 || split.val_ids.size() != 178 || split.test_ids.size() != 357) {
        ok = false;
        detail = std::to_string(split.train_ids.size()) + "/" + std::to_string(split.val_ids.size()) + "/" +
                 std::to_string(split.test_ids.size());
    }
    if (subsample_fewshot(split, 0.10, 3).train_ids.size() != 124) {
        ok = false;
        detail += " 10% size wrong";
    }
    if (subsample_fewshot(split, 0.01, 3).train_ids.size() != 12) {
        ok = false;
        detail += " 1% size wrong";
    }

    // 5-seed aggregation against hand-computed mean/std
    std::vector<RunRecord> runs;
    const double maes[5] = {1.0, 2.0, 3.0, 4.0, 5.0};
    for (std::uint64_t s = 0; s < 5; ++s) runs.push_back({s, 0.1, 12, "CDRSB", maes[s], 10 + s});
    auto rep = aggregate_runs(runs, {"CDRSB"});
    if (rep.cells.size() != 1 || std::fabs(rep.cells[0].mae_mean - 3.0) > 1e-12 ||
        std::fabs(rep.cells[0].mae_std - std::sqrt(2.5)) > 1e-12 || rep.cells[0].n_observed != 60) {
        ok = false;
        detail += " aggregation mismatch";
    }
    report(8, ok, "split sizes 1248/178/357, few-shot 124/12, 5-seed mean/std as hand-computed", detail);
}

// ---- criterion 9: protocol determinism through the CLI ----

void criterion_protocol_determinism() {
    start();
    const auto dir = work_dir();
    const std::string cli = LONGCAST_CLI_PATH;
    const std::string cohort_dir = (dir / "cohort").string();
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };

    bool ok = run("synth --n 30 --seed 4 --out \"" + cohort_dir + "\"");
    const std::string proto_flags =
        " --seeds 0 1 --horizons 12 --fractions 1.0 0.5 --epochs 2 --batch-size 8"
        " --llm-layers 1 --dh 32 --llm-heads 4 --embed-dim 8 --heads 4 --prototypes 8";
    const std::string out1 = (dir / "p1").string(), out2 = (dir / "p2").string();
    ok = ok && run("protocol --cohort \"" + cohort_dir + "\" --out \"" + out1 + "\"" + proto_flags);
    ok = ok && run("protocol --cohort \"" + cohort_dir + "\" --out \"" + out2 + "\"" + proto_flags);

    std::string detail;
    if (ok) {
        for (const char* f : {"report.csv", "runs.csv", "run_manifest.json"}) {
            const auto a = slurp(fs::path(out1) / f), b = slurp(fs::path(out2) / f);
            if (a.empty() || a != b) {
                ok = false;
                detail = std::string(f) + " differs or is empty";
            }
        }
    } else {
        detail = "CLI run failed";
    }
    report(9, ok, "two identical-seed protocol runs give byte-identical reports and manifests", detail);
}

// ---- criterion 10: cross-attention brute-force oracle ----

double brute_force_entry(const std::vector<double>& x, std::size_t m, std::size_t de,
                         const std::vector<double>& protos, std::size_t vp, std::size_t dh,
                         const CrossAttentionT<double>& attn, std::size_t row, std::size_t col) {
    const std::size_t heads = attn.heads, dk = attn.head_dim;
    double acc = static_cast<double>(attn.b_o.data()[col]);
    for (std::size_t k = 0; k < heads; ++k) {
        // q row
        std::vector<double> q(dk, 0.0);
        for (std::size_t j = 0; j < dk; ++j)
            for (std::size_t p = 0; p < de; ++p)
                q[j] += x[row * de + p] * static_cast<double>(attn.w_q[k].data()[p * dk + j]);
        // scores over prototypes
        std::vector<double> scores(vp, 0.0);
        for (std::size_t i = 0; i < vp; ++i) {
            for (std::size_t j = 0; j < dk; ++j) {
                double key = 0.0;
                for (std::size_t p = 0; p < dh; ++p)
                    key += protos[i * dh + p] * static_cast<double>(attn.w_k[k].data()[p * dk + j]);
                scores[i] += q[j] * key;
            }
            scores[i] /= std::sqrt(static_cast<double>(dk));
        }
        double mx = scores[0];
        for (double s : scores) mx = std::max(mx, s);
        double zsum = 0.0;
        for (auto& s : scores) {
            s = std::exp(s - mx);
            zsum += s;
        }
        for (auto& s : scores) s /= zsum;
        // z_k row, then its contribution through w_o
        for (std::size_t j = 0; j < dk; ++j) {
            double zj = 0.0;
            for (std::size_t i = 0; i < vp; ++i) {
                double val = 0.0;
                for (std::size_t p = 0; p < dh; ++p)
                    val += protos[i * dh + p] * static_cast<double>(attn.w_v[k].data()[p * dk + j]);
                zj += scores[i] * val;
            }
            acc += zj * static_cast<double>(attn.w_o.data()[(k * dk + j) * dh + col]);
        }
    }
    return acc;
}

void criterion_cross_attention_oracle() {
    start();
    Rng rng(401);
    const std::size_t m = 3, de = 5, dh = 6, vp = 4, heads = 2;
    auto rand_t = [&](std::vector<std::size_t> shape, double sd) {
        auto t = TensorT<double>::zeros(std::move(shape));
        for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.normal(0.0, sd);
        return t;
    };
    auto x = rand_t({m, de}, 0.8);
    auto protos = rand_t({vp, dh}, 0.8);
    CrossAttentionT<double> attn;
    attn.heads = heads;
    attn.head_dim = dh / heads;
    for (std::size_t k = 0; k < heads; ++k) {
        attn.w_q.push_back(rand_t({de, attn.head_dim}, 0.6));
        attn.w_k.push_back(rand_t({dh, attn.head_dim}, 0.6));
        attn.w_v.push_back(rand_t({dh, attn.head_dim}, 0.6));
    }
    attn.w_o = rand_t({heads * attn.head_dim, dh}, 0.6);
    attn.b_o = rand_t({dh}, 0.3);

    auto z = cross_attend(x, protos, attn);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < dh; ++j)
            worst = std::max(worst, std::fabs(z.data()[i * dh + j] -
                                              brute_force_entry(x.values(), m, de, protos.values(), vp,
                                                                dh, attn, i, j)));
    double worst_rowsum = 0.0;
    for (std::size_t k = 0; k < heads; ++k) {
        auto w = attention_weights(x, protos, attn, k);
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < vp; ++j) sum += w.data()[i * vp + j];
            worst_rowsum = std::max(worst_rowsum, std::fabs(sum - 1.0));
        }
    }
    const bool ok = worst < 1e-5 && worst_rowsum < 1e-6;
    report(10, ok, "cross_attend matches the step-by-step oracle; attention rows sum to 1",
           "max abs diff " + fmt(worst) + ", row-sum dev " + fmt(worst_rowsum));
}

// ---- criterion 11: weight-container round trip ----

void criterion_container_roundtrip() {
    start();
    const auto dir = work_dir() / "container";
    fs::create_directories(dir);
    bool ok = true;
    std::string detail;

    BackboneConfig bc;
    bc.layers = 1;
    bc.dh = 32;
    bc.heads = 4;
    bc.vocab_size = 64;
    bc.max_seq = 16;
    auto w = random_init_backbone<float>(bc);
    const auto p1 = (dir / "a.ntc").string(), p2 = (dir / "b.ntc").string();
    save_backbone(w, p1);
    save_backbone(load_backbone(p1), p2);
    if (slurp(p1) != slurp(p2)) {
        ok = false;
        detail = "save->load->save not byte-identical";
    }

    // corrupted header
    {
        const auto pc = (dir / "corrupt.ntc").string();
        fs::copy_file(p1, pc);
        std::fstream f(pc, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(10);
        f.write("!!!!!!", 6);
        f.close();
        try {
            load_backbone(pc);
            ok = false;
            detail = "corrupt header accepted";
        } catch (const FormatError&) {
        } catch (...) {
            ok = false;
            detail = "corrupt header raised the wrong error type";
        }
    }

    // wrong-shape tensor, rejected with the tensor named
    {
        const auto ps = (dir / "shape.ntc").string();
        Container c = load_container(p1);
        c.tensors.at("pos_emb").shape = {3, 3};
        c.tensors.at("pos_emb").data.assign(9, 0.0f);
        save_container(ps, c);
        try {
            load_backbone(ps);
            ok = false;
            detail = "wrong-shape tensor accepted";
        } catch (const ValidationError& e) {
            if (std::string(e.what()).find("pos_emb") == std::string::npos) {
                ok = false;
                detail = "error does not name the tensor";
            }
        } catch (...) {
            ok = false;
            detail = "wrong-shape tensor raised the wrong error type";
        }
    }
    report(11, ok, "container save->load->save is byte-identical; corrupt/mis-shaped files rejected",
           detail);
}

}  // namespace

int main() {
    std::cout << "longcast acceptance suite\n";

    criterion_revin();
    criterion_patch_count();
    criterion_gradient_oracle();

    start();
    SmokeArtifacts art = run_learning_smoke();
    report(4, art.digest_ok, "backbone digest bit-identical across the 30-epoch training run");

    criterion_mask_faithfulness();

    start();
    {
        const bool halved = art.final_loss <= 0.5 * art.first_epoch_loss;
        const bool beats_locf = art.model_mae <= art.locf_mae;
        report(6, halved && beats_locf,
               "n=200 smoke run: final loss <= 0.5x epoch-1 and test MAE <= LOCF",
               "loss " + fmt(art.first_epoch_loss) + " -> " + fmt(art.final_loss) + "; MAE model " +
                   fmt(art.model_mae) + " vs LOCF " + fmt(art.locf_mae));
    }

    criterion_ablation_direction();
    criterion_protocol_arithmetic();
    criterion_protocol_determinism();
    criterion_cross_attention_oracle();
    criterion_container_roundtrip();

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(g_failures))
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
