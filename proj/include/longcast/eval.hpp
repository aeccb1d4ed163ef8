#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "longcast/data.hpp"
#include "longcast/errors.hpp"
#include "longcast/model.hpp"
#include "longcast/train.hpp"

namespace longcast {

// Next-visit evaluation: for each test subject, predict the value at the
// horizon visit from the history strictly before it, and accumulate masked
// absolute error per variable. Cells without an observed target, or where
// the predictor has no usable history, contribute nothing.

using NextVisitPredictor =
    std::function<std::vector<std::optional<double>>(const SubjectRecord&, int upto_month)>;

struct EvalResult {
    std::vector<double> abs_sum;
    std::vector<std::size_t> count;

    double mae(std::size_t var) const {
        return count[var] ? abs_sum[var] / static_cast<double>(count[var]) : 0.0;
    }
};

inline EvalResult evaluate_next_visit(const Cohort& cohort, const std::vector<std::string>& ids,
                                      int horizon_month, const NextVisitPredictor& predict) {
    if (ids.empty()) throw DegenerateInputError("evaluate: empty test split");
    const int target_idx = visit_index(horizon_month);
    if (target_idx < 1) throw ArgumentError("evaluate: horizon month must be a scheduled follow-up visit");
    const std::size_t d = cohort.num_vars();
    EvalResult res;
    res.abs_sum.assign(d, 0.0);
    res.count.assign(d, 0);
    for (const auto& id : ids) {
        const SubjectRecord* s = cohort.find(id);
        if (!s) throw DataError("split references unknown subject '" + id + "'");
        const auto preds = predict(*s, horizon_month);
        for (std::size_t v = 0; v < d; ++v) {
            if (!s->is_observed(v, static_cast<std::size_t>(target_idx))) continue;
            if (!preds[v]) continue;
            res.abs_sum[v] += std::fabs(*preds[v] - s->value(v, static_cast<std::size_t>(target_idx)));
            ++res.count[v];
        }
    }
    return res;
}

// ---- predictors ----

template <class S>
NextVisitPredictor model_predictor(const ModelBundleT<S>& m, const std::vector<std::string>& variables) {
    return [&m, variables](const SubjectRecord& s, int upto) {
        std::vector<std::optional<double>> out(variables.size());
        ForecastOutput fo;
        try {
            fo = predict_next_visit(m, s, upto, variables);
        } catch (const DegenerateInputError&) {
            return out;
        }
        for (std::size_t v = 0; v < variables.size(); ++v)
            if (!fo.skipped[v]) out[v] = fo.value(v, 0);
        return out;
    };
}

// Last observation carried forward: the most recent observed value strictly
// before the horizon visit.
inline NextVisitPredictor locf_predictor(std::size_t num_vars) {
    return [num_vars](const SubjectRecord& s, int upto) {
        std::vector<std::optional<double>> out(num_vars);
        const int idx = visit_index(upto);
        for (std::size_t v = 0; v < num_vars; ++v)
            for (int t = idx - 1; t >= 0; --t)
                if (s.is_observed(v, static_cast<std::size_t>(t))) {
                    out[v] = s.value(v, static_cast<std::size_t>(t));
                    break;
                }
        return out;
    };
}

inline NextVisitPredictor constant_predictor(std::vector<double> values) {
    return [values](const SubjectRecord&, int) {
        std::vector<std::optional<double>> out(values.size());
        for (std::size_t v = 0; v < values.size(); ++v) out[v] = values[v];
        return out;
    };
}

// ---- aggregation and reports ----

struct RunRecord {
    std::uint64_t seed = 0;
    double fraction = 1.0;
    int horizon_month = 0;
    std::string variable;
    double mae = 0.0;
    std::size_t n_observed = 0;
};

struct ReportCell {
    std::string variable;
    int horizon_month = 0;
    double fraction = 1.0;
    double mae_mean = 0.0;
    double mae_std = 0.0;  // sample std over seeds; 0 for a single seed
    std::size_t n_observed = 0;
};

struct EvalReport {
    std::vector<ReportCell> cells;
};

// Mean and sample standard deviation over the per-seed MAEs of each
// (variable, horizon, fraction) cell. Cells with no observed target in any
// seed are omitted.
inline EvalReport aggregate_runs(const std::vector<RunRecord>& runs,
                                 const std::vector<std::string>& variable_order) {
    auto var_rank = [&](const std::string& v) {
        for (std::size_t i = 0; i < variable_order.size(); ++i)
            if (variable_order[i] == v) return i;
        return variable_order.size();
    };
    std::map<std::tuple<double, int, std::size_t>, std::vector<const RunRecord*>> groups;
    for (const auto& r : runs) {
        if (r.n_observed == 0) continue;
        groups[{r.fraction, r.horizon_month, var_rank(r.variable)}].push_back(&r);
    }
    EvalReport report;
    for (const auto& [key, group] : groups) {
        ReportCell cell;
        cell.variable = group.front()->variable;
        cell.horizon_month = group.front()->horizon_month;
        cell.fraction = group.front()->fraction;
        double sum = 0.0;
        for (const auto* r : group) {
            sum += r->mae;
            cell.n_observed += r->n_observed;
        }
        const double n = static_cast<double>(group.size());
        cell.mae_mean = sum / n;
        if (group.size() > 1) {
            double sq = 0.0;
            for (const auto* r : group) sq += (r->mae - cell.mae_mean) * (r->mae - cell.mae_mean);
            cell.mae_std = std::sqrt(sq / (n - 1.0));
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

inline void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + path);
    out << "variable,horizon_months,fraction,mae_mean,mae_std,n_test_observed\n";
    char buf[160];
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6g,%.6f,%.6f,%zu\n", c.variable.c_str(), c.horizon_month,
                      c.fraction, c.mae_mean, c.mae_std, c.n_observed);
        out << buf;
    }
}

// Aligned text table: one block per fraction, horizons as rows, variables as
// columns, mean +/- std per cell.
inline std::string format_report_table(const EvalReport& report,
                                       const std::vector<std::string>& variable_order) {
    std::vector<double> fractions;
    std::vector<int> horizons;
    for (const auto& c : report.cells) {
        if (std::find(fractions.begin(), fractions.end(), c.fraction) == fractions.end())
            fractions.push_back(c.fraction);
        if (std::find(horizons.begin(), horizons.end(), c.horizon_month) == horizons.end())
            horizons.push_back(c.horizon_month);
    }
    std::sort(horizons.begin(), horizons.end());
    std::sort(fractions.rbegin(), fractions.rend());

    std::ostringstream os;
    char buf[96];
    for (double f : fractions) {
        std::snprintf(buf, sizeof(buf), "== training fraction %g ==\n", f);
        os << buf;
        os << "  Mo";
        for (const auto& v : variable_order) {
            std::snprintf(buf, sizeof(buf), "  %19s", display_name(v).c_str());
            os << buf;
        }
        os << "\n";
        for (int hm : horizons) {
            std::snprintf(buf, sizeof(buf), "%4d", hm);
            os << buf;
            for (const auto& v : variable_order) {
                const ReportCell* found = nullptr;
                for (const auto& c : report.cells)
                    if (c.fraction == f && c.horizon_month == hm && c.variable == v) found = &c;
                if (found)
                    std::snprintf(buf, sizeof(buf), "  %8.4f +/- %6.4f", found->mae_mean, found->mae_std);
                else
                    std::snprintf(buf, sizeof(buf), "  %19s", "-");
                os << buf;
            }
            os << "\n";
        }
        os << "\n";
    }
    return os.str();
}

// ---- protocol ----

struct ProtocolConfig {
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::vector<int> horizons = {12, 18, 24, 36, 48};
    // fraction of the 70% train split retained: 1.0 is the paper's 70%
    // setting, 0.1 and 0.01 the few-shot regimes
    std::vector<double> fractions = {1.0, 0.1, 0.01};
    ModelHyper hyper;
    BackboneConfig backbone;
    TrainConfig train;
    TokenVocab vocab;          // default vocabulary when empty
    PromptTemplate prompt_template;
};

struct ProtocolResult {
    std::vector<RunRecord> runs;
    EvalReport report;
    std::size_t trainings = 0;
};

template <class S>
std::vector<RunRecord> run_single(const Cohort& cohort, const ProtocolConfig& cfg, std::uint64_t seed,
                                  double fraction, int horizon_month) {
    SplitSpec split = split_subjects(cohort, seed);
    split = subsample_fewshot(split, fraction, seed);

    ModelHyper hyper = cfg.hyper;
    hyper.input_visits = static_cast<std::size_t>(visit_index(horizon_month));
    auto backbone = random_init_backbone<S>(cfg.backbone);
    ModelBundleT<S> bundle = init_model<S>(hyper, std::move(backbone), seed, cfg.vocab, cfg.prompt_template);

    TrainConfig tc = cfg.train;
    tc.seed = seed;
    train_model(bundle, cohort, split, horizon_month, tc);

    auto result = evaluate_next_visit(cohort, split.test_ids, horizon_month,
                                      model_predictor(bundle, cohort.variable_names));
    std::vector<RunRecord> records;
    for (std::size_t v = 0; v < cohort.num_vars(); ++v) {
        RunRecord r;
        r.seed = seed;
        r.fraction = fraction;
        r.horizon_month = horizon_month;
        r.variable = cohort.variable_names[v];
        r.mae = result.mae(v);
        r.n_observed = result.count[v];
        records.push_back(std::move(r));
    }
    return records;
}

// Full protocol grid: seeds x fractions x horizons, one training per cell,
// aggregated to mean +/- std over seeds.
template <class S>
ProtocolResult run_protocol(const Cohort& cohort, const ProtocolConfig& cfg) {
    ProtocolResult out;
    for (std::uint64_t seed : cfg.seeds) {
        for (double fraction : cfg.fractions) {
            for (int horizon : cfg.horizons) {
                auto records = run_single<S>(cohort, cfg, seed, fraction, horizon);
                out.runs.insert(out.runs.end(), records.begin(), records.end());
                ++out.trainings;
            }
        }
    }
    out.report = aggregate_runs(out.runs, cohort.variable_names);
    return out;
}

// ---- ablation ----

// One axis varied from the default configuration, named like the reference
// grid: llm-layers=<n>, prompt=off, revin=off, prototypes=<n>, heads=<n>.
inline void apply_ablation_axis(const std::string& axis, ModelHyper& hyper, BackboneConfig&) {
    if (axis == "default" || axis.empty()) return;
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ArgumentError("ablation axis must look like key=value: " + axis);
    const std::string key = axis.substr(0, eq);
    const std::string value = axis.substr(eq + 1);
    if (key == "llm-layers") {
        hyper.first_layers = static_cast<std::size_t>(std::stoul(value));
    } else if (key == "prompt") {
        if (value != "off") throw ArgumentError("ablation axis prompt only supports 'off'");
        hyper.prompt_mode = PromptMode::off;
    } else if (key == "revin") {
        if (value != "off") throw ArgumentError("ablation axis revin only supports 'off'");
        hyper.revin = false;
    } else if (key == "prototypes") {
        hyper.prototypes = static_cast<std::size_t>(std::stoul(value));
    } else if (key == "heads") {
        hyper.heads = static_cast<std::size_t>(std::stoul(value));
    } else {
        throw ArgumentError("unknown ablation axis '" + key + "'");
    }
}

struct AblationRow {
    std::string axis;
    int horizon_month = 0;
    double mae = 0.0;  // CDR-SB analog
    std::size_t n_observed = 0;
};

// Ablation grid under the 10% few-shot split; reports the CDRSB MAE per
// horizon for the default plus each requested variant.
template <class S>
std::vector<AblationRow> run_ablation(const Cohort& cohort, const std::vector<std::string>& axes,
                                      std::uint64_t seed, const ProtocolConfig& base,
                                      double fraction = 0.1) {
    const int cdrsb = cohort.variable_index("CDRSB");
    if (cdrsb < 0) throw SchemaError("ablation requires a CDRSB variable");
    std::vector<std::string> all_axes = {"default"};
    for (const auto& a : axes)
        if (a != "default") all_axes.push_back(a);

    std::vector<AblationRow> rows;
    for (const auto& axis : all_axes) {
        ProtocolConfig cfg = base;
        apply_ablation_axis(axis, cfg.hyper, cfg.backbone);
        for (int horizon : base.horizons) {
            auto records = run_single<S>(cohort, cfg, seed, fraction, horizon);
            for (const auto& r : records) {
                if (r.variable != "CDRSB") continue;
                rows.push_back({axis, horizon, r.mae, r.n_observed});
            }
        }
    }
    return rows;
}

inline void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write ablation table: " + path);
    out << "axis,horizon_months,mae,n_test_observed\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%zu\n", r.axis.c_str(), r.horizon_month, r.mae,
                      r.n_observed);
        out << buf;
    }
}

inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::vector<std::string> axes;
    std::vector<int> horizons;
    for (const auto& r : rows) {
        if (std::find(axes.begin(), axes.end(), r.axis) == axes.end()) axes.push_back(r.axis);
        if (std::find(horizons.begin(), horizons.end(), r.horizon_month) == horizons.end())
            horizons.push_back(r.horizon_month);
    }
    std::sort(horizons.begin(), horizons.end());
    std::ostringstream os;
    char buf[64];
    os << "  Mo";
    for (const auto& a : axes) {
        std::snprintf(buf, sizeof(buf), " %12s", a.c_str());
        os << buf;
    }
    os << "\n";
    for (int hm : horizons) {
        std::snprintf(buf, sizeof(buf), "%4d", hm);
        os << buf;
        for (const auto& a : axes) {
            const AblationRow* found = nullptr;
            for (const auto& r : rows)
                if (r.axis == a && r.horizon_month == hm) found = &r;
            if (found)
                std::snprintf(buf, sizeof(buf), " %12.4f", found->mae);
            else
                std::snprintf(buf, sizeof(buf), " %12s", "-");
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace longcast
