// Command-line entry point: cohort preparation, synthetic cohorts, training,
// evaluation, the full seeds x fractions x horizons protocol, the ablation
// grid, and single-subject forecasts. Every command writes a run manifest
// with the fully resolved configuration so runs can be reproduced exactly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "longcast/longcast.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longcast;

namespace {

struct Options {
    // data
    std::string input;
    std::string schema;
    std::string cohort_dir;
    std::string out_dir;
    std::size_t synth_n = 200;
    std::uint64_t seed = 0;

    // Table 3 defaults
    std::size_t prototypes = 100;
    std::size_t llm_layers = 12;
    std::size_t patch_len = 2;
    std::size_t stride = 1;
    std::size_t embed_dim = 16;
    std::size_t heads = 8;
    double lr = 0.005;
    std::size_t epochs = 30;

    std::size_t batch_size = 32;
    double weight_decay = 0.0;
    double grad_clip = 0.0;
    double lr_decay = 1.0;

    // backbone (desk-scale defaults)
    std::size_t dh = 64;
    std::size_t llm_heads = 4;
    std::size_t vocab_size = 512;
    std::size_t max_seq = 256;
    std::uint64_t backbone_seed = 42;
    bool bidirectional = false;
    std::string backbone_file;

    // prompting
    std::string prompt_mode = "per_variable";
    std::size_t max_prompt_tokens = 128;
    std::string template_file;
    std::string vocab_file;
    std::string proto_mode = "linear";
    bool revin = true;

    // run shape
    int horizon = 12;
    double fraction = 1.0;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::vector<int> horizons = {12, 18, 24, 36, 48};
    std::vector<double> fractions = {1.0, 0.1, 0.01};
    std::vector<std::string> axes;
    std::string subject_id;
    int upto = 24;

    std::string config_file;
};

json options_to_json(const Options& o) {
    json j;
    j["prototypes"] = o.prototypes;
    j["llm_layers"] = o.llm_layers;
    j["patch_len"] = o.patch_len;
    j["stride"] = o.stride;
    j["embed_dim"] = o.embed_dim;
    j["heads"] = o.heads;
    j["lr"] = o.lr;
    j["epochs"] = o.epochs;
    j["batch_size"] = o.batch_size;
    j["weight_decay"] = o.weight_decay;
    j["grad_clip"] = o.grad_clip;
    j["lr_decay"] = o.lr_decay;
    j["dh"] = o.dh;
    j["llm_heads"] = o.llm_heads;
    j["vocab_size"] = o.vocab_size;
    j["max_seq"] = o.max_seq;
    j["backbone_seed"] = o.backbone_seed;
    j["bidirectional"] = o.bidirectional;
    j["backbone_file"] = o.backbone_file;
    j["prompt_mode"] = o.prompt_mode;
    j["max_prompt_tokens"] = o.max_prompt_tokens;
    j["template_file"] = o.template_file;
    j["vocab_file"] = o.vocab_file;
    j["proto_mode"] = o.proto_mode;
    j["revin"] = o.revin;
    j["horizon"] = o.horizon;
    j["fraction"] = o.fraction;
    j["seed"] = o.seed;
    j["seeds"] = o.seeds;
    j["horizons"] = o.horizons;
    j["fractions"] = o.fractions;
    j["synth_n"] = o.synth_n;
    return j;
}

// config file (or a previous run manifest) fills every option the command
// line did not set explicitly: flags > config > defaults
void apply_config_file(Options& o, const CLI::App& app) {
    if (o.config_file.empty()) return;
    std::ifstream in(o.config_file);
    if (!in) throw IoError("cannot open config file: " + o.config_file);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("malformed config file: " + o.config_file);
    if (j.contains("config")) j = j["config"];  // accept a run manifest directly

    auto untouched = [&](const char* flag) {
        const CLI::Option* opt = app.get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    auto load = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && untouched(flag)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    load("prototypes", "--prototypes", o.prototypes);
    load("llm_layers", "--llm-layers", o.llm_layers);
    load("patch_len", "--patch-length", o.patch_len);
    load("stride", "--stride", o.stride);
    load("embed_dim", "--embed-dim", o.embed_dim);
    load("heads", "--heads", o.heads);
    load("lr", "--lr", o.lr);
    load("epochs", "--epochs", o.epochs);
    load("batch_size", "--batch-size", o.batch_size);
    load("weight_decay", "--weight-decay", o.weight_decay);
    load("grad_clip", "--grad-clip", o.grad_clip);
    load("lr_decay", "--lr-decay", o.lr_decay);
    load("dh", "--dh", o.dh);
    load("llm_heads", "--llm-heads", o.llm_heads);
    load("vocab_size", "--vocab-size", o.vocab_size);
    load("max_seq", "--max-seq", o.max_seq);
    load("backbone_seed", "--backbone-seed", o.backbone_seed);
    load("backbone_file", "--backbone", o.backbone_file);
    load("prompt_mode", "--prompt-mode", o.prompt_mode);
    load("max_prompt_tokens", "--max-prompt-tokens", o.max_prompt_tokens);
    load("template_file", "--template", o.template_file);
    load("vocab_file", "--vocab", o.vocab_file);
    load("proto_mode", "--proto-mode", o.proto_mode);
    load("horizon", "--horizon", o.horizon);
    load("fraction", "--fraction", o.fraction);
    load("seed", "--seed", o.seed);
    load("seeds", "--seeds", o.seeds);
    load("horizons", "--horizons", o.horizons);
    load("fractions", "--fractions", o.fractions);
    load("synth_n", "--n", o.synth_n);
    if (j.contains("revin") && untouched("--revin") && untouched("--no-revin")) o.revin = j["revin"].get<bool>();
    if (j.contains("bidirectional") && untouched("--bidirectional"))
        o.bidirectional = j["bidirectional"].get<bool>();
}

BackboneConfig backbone_config(const Options& o) {
    BackboneConfig cfg;
    cfg.layers = o.llm_layers;
    cfg.heads = o.llm_heads;
    cfg.dh = o.dh;
    cfg.vocab_size = o.vocab_size;
    cfg.max_seq = o.max_seq;
    cfg.seed = o.backbone_seed;
    cfg.bidirectional = o.bidirectional;
    return cfg;
}

ModelHyper model_hyper(const Options& o, int horizon_month) {
    ModelHyper hy;
    hy.patch_len = o.patch_len;
    hy.stride = o.stride;
    hy.embed_dim = o.embed_dim;
    hy.heads = o.heads;
    hy.prototypes = o.prototypes;
    hy.input_visits = static_cast<std::size_t>(visit_index(horizon_month));
    hy.revin = o.revin;
    hy.max_prompt_tokens = o.max_prompt_tokens;
    hy.prompt_mode = o.prompt_mode == "off" ? PromptMode::off
                                            : (o.prompt_mode == "shared" ? PromptMode::shared
                                                                         : PromptMode::per_variable);
    hy.proto_mode = o.proto_mode == "subset" ? PrototypeMode::subset : PrototypeMode::linear;
    return hy;
}

TrainConfig train_config(const Options& o) {
    TrainConfig tc;
    tc.lr = o.lr;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.seed = o.seed;
    tc.weight_decay = o.weight_decay;
    tc.grad_clip = o.grad_clip;
    tc.lr_decay = o.lr_decay;
    return tc;
}

BackboneWeightsT<float> make_backbone(const Options& o) {
    if (!o.backbone_file.empty()) return load_backbone(o.backbone_file);
    return random_init_backbone<float>(backbone_config(o));
}

TokenVocab make_vocab(const Options& o, const BackboneConfig& cfg) {
    if (!o.vocab_file.empty()) return load_vocab(o.vocab_file);
    return default_vocab(cfg.vocab_size);
}

PromptTemplate make_template(const Options& o) {
    if (!o.template_file.empty()) return load_template(o.template_file);
    return PromptTemplate{};
}

Cohort load_cohort_dir(const std::string& dir) {
    return load_cohort((fs::path(dir) / "cohort.ntc").string(), (fs::path(dir) / "cohort.json").string());
}

void save_cohort_dir(const Cohort& cohort, const std::string& dir) {
    fs::create_directories(dir);
    save_cohort(cohort, (fs::path(dir) / "cohort.ntc").string(), (fs::path(dir) / "cohort.json").string());
}

json cohort_digests(const std::string& dir) {
    json j;
    j["cohort.ntc"] = digest_hex(digest_file((fs::path(dir) / "cohort.ntc").string()));
    j["cohort.json"] = digest_hex(digest_file((fs::path(dir) / "cohort.json").string()));
    return j;
}

void write_manifest(const std::string& out_dir, const std::string& command, const Options& o,
                    const json& inputs, const std::vector<std::string>& outputs) {
    json man;
    man["command"] = command;
    man["version"] = kVersion;
    man["config"] = options_to_json(o);
    man["inputs"] = inputs;
    man["outputs"] = outputs;
    std::ofstream f(fs::path(out_dir) / "run_manifest.json", std::ios::trunc);
    if (!f) throw IoError("cannot write run manifest in " + out_dir);
    f << man.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
}

// ---- commands ----

int cmd_prepare(const Options& o) {
    CsvSchema schema = o.schema.empty() ? default_schema() : load_schema(o.schema);
    Cohort raw = parse_adni_csv(o.input, schema);
    Cohort cohort = select_cohort(raw);
    save_cohort_dir(cohort, o.out_dir);
    const auto stats = format_cohort_stats(cohort_stats(cohort));
    write_text(fs::path(o.out_dir) / "stats.txt", stats);
    json inputs;
    inputs["input_csv"] = digest_hex(digest_file(o.input));
    write_manifest(o.out_dir, "prepare", o, inputs,
                   {"cohort.ntc", "cohort.json", "stats.txt"});
    std::cout << stats;
    std::cout << "kept " << cohort.subjects.size() << " of " << raw.subjects.size() << " subjects\n";
    return 0;
}

int cmd_synth(const Options& o) {
    Cohort cohort = synth_cohort(o.synth_n, o.seed);
    save_cohort_dir(cohort, o.out_dir);
    const auto stats = format_cohort_stats(cohort_stats(cohort));
    write_text(fs::path(o.out_dir) / "stats.txt", stats);
    write_manifest(o.out_dir, "synth", o, json::object(), {"cohort.ntc", "cohort.json", "stats.txt"});
    std::cout << stats;
    return 0;
}

int cmd_train(const Options& o) {
    Cohort cohort = load_cohort_dir(o.cohort_dir);
    fs::create_directories(o.out_dir);

    SplitSpec split = split_subjects(cohort, o.seed);
    split = subsample_fewshot(split, o.fraction, o.seed);

    auto backbone = make_backbone(o);
    auto vocab = make_vocab(o, backbone.config);
    ModelBundleT<float> bundle =
        init_model<float>(model_hyper(o, o.horizon), std::move(backbone), o.seed, vocab, make_template(o));

    auto result = train_model(bundle, cohort, split, o.horizon, train_config(o));
    save_checkpoint(bundle, (fs::path(o.out_dir) / "model.ntc").string(),
                    (fs::path(o.out_dir) / "model.json").string());
    write_loss_csv((fs::path(o.out_dir) / "loss.csv").string(), result);
    write_manifest(o.out_dir, "train", o, cohort_digests(o.cohort_dir),
                   {"model.ntc", "model.json", "loss.csv"});
    std::cout << "trained " << result.train_loss.size() << " epochs; final train loss "
              << result.train_loss.back() << ", best epoch " << result.best_epoch << "\n";
    return 0;
}

int cmd_eval(const Options& o, const std::string& checkpoint_dir, bool horizon_given) {
    Cohort cohort = load_cohort_dir(o.cohort_dir);
    fs::create_directories(o.out_dir);
    auto bundle = load_checkpoint((fs::path(checkpoint_dir) / "model.ntc").string(),
                                  (fs::path(checkpoint_dir) / "model.json").string(), o.backbone_file);
    const int horizon = horizon_given
                            ? o.horizon
                            : kVisitMonths[std::min<std::size_t>(bundle.hyper.input_visits, kNumVisits - 1)];

    SplitSpec split = split_subjects(cohort, o.seed);
    auto res = evaluate_next_visit(cohort, split.test_ids, horizon,
                                   model_predictor(bundle, cohort.variable_names));

    std::vector<RunRecord> runs;
    for (std::size_t v = 0; v < cohort.num_vars(); ++v)
        runs.push_back({o.seed, o.fraction, horizon, cohort.variable_names[v], res.mae(v), res.count[v]});
    auto report = aggregate_runs(runs, cohort.variable_names);
    write_report_csv((fs::path(o.out_dir) / "report.csv").string(), report);
    const auto table = format_report_table(report, cohort.variable_names);
    write_text(fs::path(o.out_dir) / "report.txt", table);
    json inputs = cohort_digests(o.cohort_dir);
    inputs["checkpoint"] = digest_hex(digest_file((fs::path(checkpoint_dir) / "model.ntc").string()));
    write_manifest(o.out_dir, "eval", o, inputs, {"report.csv", "report.txt"});
    std::cout << table;
    return 0;
}

int cmd_protocol(const Options& o) {
    Cohort cohort = load_cohort_dir(o.cohort_dir);
    fs::create_directories(o.out_dir);

    ProtocolConfig cfg;
    cfg.seeds = o.seeds;
    cfg.horizons = o.horizons;
    cfg.fractions = o.fractions;
    cfg.hyper = model_hyper(o, o.horizons.front());
    cfg.backbone = backbone_config(o);
    cfg.train = train_config(o);
    cfg.vocab = make_vocab(o, cfg.backbone);
    cfg.prompt_template = make_template(o);

    auto result = run_protocol<float>(cohort, cfg);
    write_report_csv((fs::path(o.out_dir) / "report.csv").string(), result.report);
    const auto table = format_report_table(result.report, cohort.variable_names);
    write_text(fs::path(o.out_dir) / "report.txt", table);
    {
        std::ofstream runs(fs::path(o.out_dir) / "runs.csv", std::ios::trunc);
        runs << "seed,fraction,horizon_months,variable,mae,n_test_observed\n";
        char buf[160];
        for (const auto& r : result.runs) {
            std::snprintf(buf, sizeof(buf), "%llu,%.6g,%d,%s,%.6f,%zu\n",
                          static_cast<unsigned long long>(r.seed), r.fraction, r.horizon_month,
                          r.variable.c_str(), r.mae, r.n_observed);
            runs << buf;
        }
    }
    write_manifest(o.out_dir, "protocol", o, cohort_digests(o.cohort_dir),
                   {"report.csv", "report.txt", "runs.csv"});
    std::cout << result.trainings << " training runs\n" << table;
    return 0;
}

int cmd_ablate(const Options& o) {
    Cohort cohort = load_cohort_dir(o.cohort_dir);
    fs::create_directories(o.out_dir);

    ProtocolConfig cfg;
    cfg.horizons = o.horizons;
    cfg.hyper = model_hyper(o, o.horizons.front());
    cfg.backbone = backbone_config(o);
    cfg.train = train_config(o);
    cfg.vocab = make_vocab(o, cfg.backbone);
    cfg.prompt_template = make_template(o);

    auto rows = run_ablation<float>(cohort, o.axes, o.seed, cfg, o.fraction);
    write_ablation_csv((fs::path(o.out_dir) / "ablation.csv").string(), rows);
    const auto table = format_ablation_table(rows);
    write_text(fs::path(o.out_dir) / "ablation.txt", table);
    write_manifest(o.out_dir, "ablate", o, cohort_digests(o.cohort_dir), {"ablation.csv", "ablation.txt"});
    std::cout << table;
    return 0;
}

int cmd_forecast(const Options& o, const std::string& checkpoint_dir) {
    Cohort cohort = load_cohort_dir(o.cohort_dir);
    auto bundle = load_checkpoint((fs::path(checkpoint_dir) / "model.ntc").string(),
                                  (fs::path(checkpoint_dir) / "model.json").string(), o.backbone_file);
    const SubjectRecord* s = cohort.find(o.subject_id);
    if (!s) throw DataError("subject '" + o.subject_id + "' not in cohort");
    auto out = forward_all(bundle, *s, o.upto, cohort.variable_names);

    char buf[128];
    std::cout << "forecast for subject " << o.subject_id << " at month " << o.upto << ":\n";
    for (std::size_t v = 0; v < cohort.num_vars(); ++v) {
        if (out.skipped[v]) {
            std::snprintf(buf, sizeof(buf), "  %-12s (skipped: no observed history)\n",
                          cohort.variable_names[v].c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "  %-12s %.4f\n", cohort.variable_names[v].c_str(),
                          out.value(v));
        }
        std::cout << buf;
    }
    if (!o.out_dir.empty()) {
        fs::create_directories(o.out_dir);
        json f;
        f["subject_id"] = o.subject_id;
        f["upto_month"] = o.upto;
        for (std::size_t v = 0; v < cohort.num_vars(); ++v)
            if (!out.skipped[v]) f["forecast"][cohort.variable_names[v]] = out.value(v);
        write_text(fs::path(o.out_dir) / "forecast.json", f.dump(2) + "\n");
        write_manifest(o.out_dir, "forecast", o, cohort_digests(o.cohort_dir), {"forecast.json"});
    }
    return 0;
}

void add_model_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--prototypes", o.prototypes, "text prototype count V'")->capture_default_str();
    cmd->add_option("--llm-layers", o.llm_layers, "backbone layer count")->capture_default_str();
    cmd->add_option("--patch-length", o.patch_len, "patch length l")->capture_default_str();
    cmd->add_option("--stride", o.stride, "patch stride s")->capture_default_str();
    cmd->add_option("--embed-dim", o.embed_dim, "patch embedding dim d_e")->capture_default_str();
    cmd->add_option("--heads", o.heads, "reprogramming attention heads K")->capture_default_str();
    cmd->add_option("--lr", o.lr, "initial learning rate")->capture_default_str();
    cmd->add_option("--epochs", o.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size, "minibatch size")->capture_default_str();
    cmd->add_option("--weight-decay", o.weight_decay, "decoupled weight decay")->capture_default_str();
    cmd->add_option("--grad-clip", o.grad_clip, "global gradient-norm clip (0 = off)")->capture_default_str();
    cmd->add_option("--lr-decay", o.lr_decay, "per-epoch learning-rate multiplier")->capture_default_str();
    cmd->add_option("--dh", o.dh, "backbone hidden dim")->capture_default_str();
    cmd->add_option("--llm-heads", o.llm_heads, "backbone attention heads")->capture_default_str();
    cmd->add_option("--vocab-size", o.vocab_size, "vocabulary size")->capture_default_str();
    cmd->add_option("--max-seq", o.max_seq, "positional capacity")->capture_default_str();
    cmd->add_option("--backbone-seed", o.backbone_seed, "frozen backbone init seed")->capture_default_str();
    cmd->add_flag("--bidirectional", o.bidirectional, "bidirectional (BERT-style) attention");
    cmd->add_option("--backbone", o.backbone_file, "load frozen backbone weights from container");
    cmd->add_option("--prompt-mode", o.prompt_mode, "per_variable | shared | off")->capture_default_str();
    cmd->add_option("--max-prompt-tokens", o.max_prompt_tokens, "prompt token budget")->capture_default_str();
    cmd->add_option("--template", o.template_file, "prompt template file");
    cmd->add_option("--vocab", o.vocab_file, "vocabulary file (one token per line)");
    cmd->add_option("--proto-mode", o.proto_mode, "linear | subset")->capture_default_str();
    cmd->add_flag("--revin,!--no-revin", o.revin, "reversible instance normalization");
    cmd->add_option("--config", o.config_file, "JSON config file (or run manifest) with option overrides");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"longitudinal clinical forecasting with a frozen transformer backbone"};
    app.require_subcommand(1);
    Options o;

    auto* prepare = app.add_subcommand("prepare", "parse a visit-aligned CSV into a cohort cache");
    prepare->add_option("--input", o.input, "input CSV")->required();
    prepare->add_option("--schema", o.schema, "schema file (logical=column lines); identity when omitted");
    prepare->add_option("--out", o.out_dir, "output directory")->required();

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    synth->add_option("--n", o.synth_n, "subject count")->capture_default_str();
    synth->add_option("--seed", o.seed, "generator seed")->capture_default_str();
    synth->add_option("--out", o.out_dir, "output directory")->required();

    auto* train = app.add_subcommand("train", "train one model for one horizon setting");
    train->add_option("--cohort", o.cohort_dir, "cohort cache directory")->required();
    train->add_option("--horizon", o.horizon, "forecast horizon month")->capture_default_str();
    train->add_option("--fraction", o.fraction, "few-shot fraction of the train split")->capture_default_str();
    train->add_option("--seed", o.seed, "split/init/shuffle seed")->capture_default_str();
    train->add_option("--out", o.out_dir, "output directory")->required();
    add_model_flags(train, o);

    std::string checkpoint_dir;
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    evalc->add_option("--cohort", o.cohort_dir, "cohort cache directory")->required();
    evalc->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
    evalc->add_option("--horizon", o.horizon, "horizon month (default: from checkpoint)");
    evalc->add_option("--fraction", o.fraction, "fraction label for the report")->capture_default_str();
    evalc->add_option("--seed", o.seed, "split seed")->capture_default_str();
    evalc->add_option("--out", o.out_dir, "output directory")->required();
    evalc->add_option("--backbone", o.backbone_file, "backbone container (when not seed-derived)");
    evalc->add_option("--config", o.config_file, "JSON config overrides");

    auto* protocol = app.add_subcommand("protocol", "run the seeds x fractions x horizons protocol");
    protocol->add_option("--cohort", o.cohort_dir, "cohort cache directory")->required();
    protocol->add_option("--out", o.out_dir, "output directory")->required();
    protocol->add_option("--seeds", o.seeds, "split seeds")->capture_default_str();
    protocol->add_option("--horizons", o.horizons, "horizon months")->capture_default_str();
    protocol->add_option("--fractions", o.fractions, "few-shot fractions")->capture_default_str();
    add_model_flags(protocol, o);

    auto* ablate = app.add_subcommand("ablate", "run the ablation grid (default + one-axis variants)");
    ablate->add_option("--cohort", o.cohort_dir, "cohort cache directory")->required();
    ablate->add_option("--axis", o.axes, "axis variant, e.g. revin=off (repeatable)");
    ablate->add_option("--seed", o.seed, "split seed")->capture_default_str();
    ablate->add_option("--fraction", o.fraction, "few-shot fraction")->default_val(0.1);
    ablate->add_option("--horizons", o.horizons, "horizon months")->capture_default_str();
    ablate->add_option("--out", o.out_dir, "output directory")->required();
    add_model_flags(ablate, o);

    auto* forecast = app.add_subcommand("forecast", "forecast one subject's next visit");
    forecast->add_option("--cohort", o.cohort_dir, "cohort cache directory")->required();
    forecast->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
    forecast->add_option("--subject-id", o.subject_id, "subject id")->required();
    forecast->add_option("--upto", o.upto, "predict the visit at this month")->capture_default_str();
    forecast->add_option("--out", o.out_dir, "optional output directory");
    forecast->add_option("--backbone", o.backbone_file, "backbone container (when not seed-derived)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train)) apply_config_file(o, *train);
        if (app.got_subcommand(protocol)) apply_config_file(o, *protocol);
        if (app.got_subcommand(ablate)) apply_config_file(o, *ablate);
        if (app.got_subcommand(evalc)) apply_config_file(o, *evalc);

        if (app.got_subcommand(prepare)) return cmd_prepare(o);
        if (app.got_subcommand(synth)) return cmd_synth(o);
        if (app.got_subcommand(train)) return cmd_train(o);
        if (app.got_subcommand(evalc)) return cmd_eval(o, checkpoint_dir, evalc->count("--horizon") > 0);
        if (app.got_subcommand(protocol)) return cmd_protocol(o);
        if (app.got_subcommand(ablate)) return cmd_ablate(o);
        if (app.got_subcommand(forecast)) return cmd_forecast(o, checkpoint_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
