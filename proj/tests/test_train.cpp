#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "longcast/eval.hpp"
#include "longcast/train.hpp"

using namespace longcast;

namespace {

BackboneConfig tiny_backbone() {
    BackboneConfig cfg;
    cfg.layers = 1;
    cfg.heads = 4;
    cfg.dh = 32;
    cfg.vocab_size = 512;
    cfg.max_seq = 96;
    cfg.seed = 3;
    return cfg;
}

ModelHyper tiny_hyper(int horizon_month) {
    ModelHyper hy;
    hy.embed_dim = 8;
    hy.heads = 4;
    hy.prototypes = 10;
    hy.input_visits = static_cast<std::size_t>(visit_index(horizon_month));
    return hy;
}

ModelBundleT<float> tiny_model(int horizon_month, std::uint64_t seed = 17) {
    return init_model<float>(tiny_hyper(horizon_month), random_init_backbone<float>(tiny_backbone()), seed);
}

}  // namespace

TEST(MaskedMse, PerfectPrediction) {
    MaskedBatch b{{1, 2, 3}, {1, 2, 3}, {true, true, true}};
    EXPECT_DOUBLE_EQ(masked_mse(b), 0.0);
}

TEST(MaskedMse, UnitErrors) {
    MaskedBatch b{{1, 1, 1}, {0, 0, 0}, {true, true, true}};
    EXPECT_DOUBLE_EQ(masked_mse(b), 1.0);
}

TEST(MaskedMse, MaskedCellExcluded) {
    MaskedBatch b{{1, 2, 3}, {2, 0, 5}, {true, false, true}};
    EXPECT_DOUBLE_EQ(masked_mse(b), 2.5);
}

TEST(MaskedMse, AllMaskedRejected) {
    MaskedBatch b{{1}, {2}, {false}};
    EXPECT_THROW(masked_mse(b), DegenerateInputError);
}

TEST(MaskedMse, ExactInvarianceToMaskedCells) {
    MaskedBatch b{{1, 2, 3, 4}, {2, 0, 5, 0}, {true, false, true, false}};
    const double base = masked_mse(b);
    for (double junk : {-1e6, 0.0, 1e6, 123.456}) {
        MaskedBatch mod = b;
        mod.targets[1] = junk;
        mod.targets[3] = -junk;
        mod.predictions[1] = junk * 2;
        EXPECT_EQ(masked_mse(mod), base);  // bitwise equal
    }
}

TEST(Adam, SingleStepHandComputed) {
    auto w = TensorT<double>::zeros({1}, true);
    w.grad().assign(1, 1.0);
    std::vector<ParameterT<double>> params{{"w", w, true}};
    AdamStateT<double> state;
    state.init(params);
    adam_step(params, state, 0.005);
    // m_hat = 1, v_hat = 1  ->  w = -lr / (1 + eps)
    EXPECT_NEAR(w.data()[0], -0.005, 1e-9);
    EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    auto w = TensorT<double>::from({2}, {1.5, -2.5}, true);
    w.zero_grad();
    std::vector<ParameterT<double>> params{{"w", w, true}};
    AdamStateT<double> state;
    state.init(params);
    adam_step(params, state, 0.005);
    EXPECT_DOUBLE_EQ(w.data()[0], 1.5);
    EXPECT_DOUBLE_EQ(w.data()[1], -2.5);
}

TEST(Adam, FrozenParameterUntouched) {
    auto w = TensorT<double>::from({2}, {1.0, 2.0}, true);
    auto frozen = TensorT<double>::from({2}, {3.0, 4.0}, false);
    w.grad().assign(2, 1.0);
    std::vector<ParameterT<double>> params{{"w", w, true}, {"frozen", frozen, false}};
    AdamStateT<double> state;
    state.init(params);
    adam_step(params, state, 0.1);
    EXPECT_DOUBLE_EQ(frozen.data()[0], 3.0);
    EXPECT_DOUBLE_EQ(frozen.data()[1], 4.0);
    EXPECT_TRUE(frozen.grad().empty());
    EXPECT_NE(w.data()[0], 1.0);
}

TEST(Adam, NanGradientNamesParameter) {
    auto w = TensorT<double>::zeros({1}, true);
    w.grad().assign(1, std::nan(""));
    std::vector<ParameterT<double>> params{{"reprogram.wo", w, true}};
    AdamStateT<double> state;
    state.init(params);
    try {
        adam_step(params, state, 0.005);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("reprogram.wo"), std::string::npos);
    }
}

TEST(Train, LossGraphAgreesWithMaskedMse) {
    auto cohort = synth_cohort(6, 2);
    auto m = tiny_model(12);
    std::vector<std::string> ids;
    for (const auto& s : cohort.subjects) ids.push_back(s.subject_id);
    auto samples = detail::collect_samples(m, cohort, ids, 12);
    ASSERT_FALSE(samples.empty());
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto [se_sum, count] = detail::loss_graph(m, samples, order);

    auto protos = build_prototypes(m.backbone.token_embedding, m.prototype_bank);
    MaskedBatch batch;
    for (const auto& smp : samples) {
        auto fwd = forward_variable(m, smp.window, smp.prompt_ids, protos);
        for (std::size_t j = 0; j < m.hyper.horizon_steps; ++j) {
            batch.predictions.push_back(
                revin_denormalize(static_cast<double>(fwd.y_norm.data()[j]), fwd.state));
            batch.targets.push_back(smp.target_mask[j] ? smp.target[j] : 0.0);
            batch.mask.push_back(smp.target_mask[j]);
        }
    }
    ASSERT_GT(count, 0u);
    EXPECT_NEAR(static_cast<double>(se_sum.item()) / static_cast<double>(count), masked_mse(batch), 1e-5);
}

TEST(Train, LossDecreasesAndHistoryIsDeterministic) {
    auto cohort = synth_cohort(40, 4);
    SplitSpec split = split_subjects(cohort, 4);

    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    cfg.seed = 1;

    auto m1 = tiny_model(12, 21);
    auto r1 = train_model(m1, cohort, split, 12, cfg);
    ASSERT_EQ(r1.train_loss.size(), 6u);
    EXPECT_LT(r1.train_loss.back(), r1.train_loss.front());
    for (double v : r1.val_loss) EXPECT_FALSE(std::isnan(v));

    auto m2 = tiny_model(12, 21);
    auto r2 = train_model(m2, cohort, split, 12, cfg);
    EXPECT_EQ(r1.train_loss, r2.train_loss);  // bit-identical
    EXPECT_EQ(r1.val_loss, r2.val_loss);
    EXPECT_EQ(r1.best_epoch, r2.best_epoch);
}

TEST(Train, FrozenContractAndTrainableClosure) {
    auto cohort = synth_cohort(16, 8);
    SplitSpec split = split_subjects(cohort, 8);
    auto m = tiny_model(12, 33);

    const auto backbone_digest = m.backbone.digest();
    std::vector<std::vector<float>> before;
    for (const auto& p : m.parameters()) before.push_back(p.tensor.values());

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    train_model(m, cohort, split, 12, cfg);

    EXPECT_EQ(m.backbone.digest(), backbone_digest);
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
        EXPECT_NE(params[i].tensor.values(), before[i]) << params[i].name << " did not move";
    // frozen tensors never allocate gradients
    EXPECT_TRUE(m.backbone.token_embedding.grad().empty());
    EXPECT_TRUE(m.backbone.layers[0].mlp_w1.grad().empty());
}

TEST(Train, SingleSubjectOverfit) {
    // one clean subject with non-degenerate two-visit windows per variable
    Cohort cohort;
    cohort.variable_names = default_variables();
    SubjectRecord s;
    s.subject_id = "OVERFIT";
    s.demographics.age_years = 72.0;
    s.demographics.education_years = 15.0;
    s.demographics.apoe4_count = 1;
    // four distinct window shapes at horizon 18 (three input visits), so the
    // patch path alone can tell the samples apart
    const double series[4][4] = {{1.0, 1.6, 2.6, 3.4},
                                 {16.0, 18.0, 17.0, 19.0},
                                 {4.0, 6.0, 6.5, 8.0},
                                 {7.0, 6.0, 6.8, 5.9}};
    s.values.assign(4 * kNumVisits, std::numeric_limits<double>::quiet_NaN());
    s.observed.assign(4 * kNumVisits, false);
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t t = 0; t < 4; ++t) {
            s.values[v * kNumVisits + t] = series[v][t];
            s.observed[v * kNumVisits + t] = true;
        }
    cohort.subjects.push_back(s);
    SplitSpec split;
    split.train_ids = {s.subject_id};

    TrainConfig cfg;
    cfg.epochs = 75;  // four per-variable samples, batch 1 -> 300 optimizer steps
    cfg.batch_size = 1;
    cfg.lr = 0.1;
    cfg.lr_decay = 0.97;
    auto m = tiny_model(18, 5);
    auto r = train_model(m, cohort, split, 18, cfg);
    ASSERT_FALSE(r.train_loss.empty());

    // the masked MSE after the 300 steps, not the last running average
    auto samples = detail::collect_samples(m, cohort, split.train_ids, 18);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto [se, count] = detail::loss_graph(m, samples, order);
    EXPECT_LT(static_cast<double>(se.item()) / static_cast<double>(count), 1e-3);
}

TEST(Train, BestValidationCheckpointRestored) {
    auto cohort = synth_cohort(30, 12);
    SplitSpec split = split_subjects(cohort, 12);
    ASSERT_FALSE(split.val_ids.empty());
    auto m = tiny_model(12, 7);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    auto r = train_model(m, cohort, split, 12, cfg);
    ASSERT_GE(r.best_epoch, 1u);
    // restored parameters must reproduce the recorded best validation loss
    auto val_samples = detail::collect_samples(m, cohort, split.val_ids, 12);
    std::vector<std::size_t> order(val_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto [se, count] = detail::loss_graph(m, val_samples, order);
    const double vl = static_cast<double>(se.item()) / static_cast<double>(count);
    EXPECT_NEAR(vl, r.val_loss[r.best_epoch - 1], 1e-6);
}

TEST(Train, EmptySplitRejected) {
    auto cohort = synth_cohort(5, 1);
    SplitSpec split;
    auto m = tiny_model(12);
    TrainConfig cfg;
    EXPECT_THROW(train_model(m, cohort, split, 12, cfg), DegenerateInputError);
}

TEST(Train, LossCsvFormat) {
    TrainResult r;
    r.train_loss = {1.5, 0.75};
    r.val_loss = {2.0, 1.0};
    const auto path = std::filesystem::temp_directory_path() /
                      ("longcast_loss_" + std::to_string(::getpid()) + ".csv");
    write_loss_csv(path.string(), r);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch,train_loss,val_loss");
    std::getline(in, line);
    EXPECT_EQ(line, "1,1.5,2");
    std::getline(in, line);
    EXPECT_EQ(line, "2,0.75,1");
}
