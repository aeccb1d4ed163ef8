#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "longcast/container.hpp"
#include "longcast/errors.hpp"
#include "longcast/rng.hpp"

namespace longcast {

// Visit-aligned longitudinal records. The canonical grid is baseline plus
// follow-ups at 6, 12, 18, 24, 36 and 48 months; visits at other months in
// raw exports are ignored. Unobserved cells hold NaN and must never be read
// except through the observed mask.

inline constexpr std::size_t kNumVisits = 7;
inline constexpr std::array<int, kNumVisits> kVisitMonths = {0, 6, 12, 18, 24, 36, 48};
inline constexpr std::array<const char*, kNumVisits> kVisitSlots = {"bl", "m06", "m12", "m18",
                                                                    "m24", "m36", "m48"};

inline const std::vector<std::string>& default_variables() {
    static const std::vector<std::string> v = {"CDRSB", "TOTAL13", "FAQTOTAL", "AVDEL30MIN"};
    return v;
}

// Reading names used in prompt text.
inline std::string display_name(const std::string& variable) {
    if (variable == "CDRSB") return "CDR-SB";
    if (variable == "TOTAL13") return "ADAS13";
    if (variable == "AVDEL30MIN") return "AVDEL30";
    return variable;
}

inline int visit_index(int month) {
    for (std::size_t i = 0; i < kNumVisits; ++i)
        if (kVisitMonths[i] == month) return static_cast<int>(i);
    return -1;
}

enum class Sex { female, male };

struct Demographics {
    double age_years = 0.0;
    Sex sex = Sex::female;
    std::optional<int> apoe4_count;  // 0, 1, 2 or missing
    double education_years = 0.0;
};

struct SubjectRecord {
    std::string subject_id;
    Demographics demographics;
    // d x 7, row-major over (variable, visit); NaN sentinel where unobserved
    std::vector<double> values;
    std::vector<bool> observed;

    double value(std::size_t var, std::size_t visit) const { return values[var * kNumVisits + visit]; }
    bool is_observed(std::size_t var, std::size_t visit) const { return observed[var * kNumVisits + visit]; }

    std::size_t observed_count(std::size_t var) const {
        std::size_t c = 0;
        for (std::size_t t = 0; t < kNumVisits; ++t)
            if (observed[var * kNumVisits + t]) ++c;
        return c;
    }

    // visits with at least one observed score across variables
    std::size_t attended_visits(std::size_t num_vars) const {
        std::size_t c = 0;
        for (std::size_t t = 0; t < kNumVisits; ++t) {
            for (std::size_t v = 0; v < num_vars; ++v) {
                if (observed[v * kNumVisits + t]) {
                    ++c;
                    break;
                }
            }
        }
        return c;
    }
};

struct Cohort {
    std::vector<SubjectRecord> subjects;
    std::vector<std::string> variable_names;

    std::size_t num_vars() const { return variable_names.size(); }

    int variable_index(const std::string& name) const {
        for (std::size_t i = 0; i < variable_names.size(); ++i)
            if (variable_names[i] == name) return static_cast<int>(i);
        return -1;
    }

    const SubjectRecord* find(const std::string& id) const {
        for (const auto& s : subjects)
            if (s.subject_id == id) return &s;
        return nullptr;
    }

    void check_unique_ids() const {
        std::set<std::string> seen;
        for (const auto& s : subjects)
            if (!seen.insert(s.subject_id).second)
                throw DataError("duplicate subject_id '" + s.subject_id + "'");
    }
};

struct SplitSpec {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double fewshot_fraction = 1.0;
};

// ---- CSV parsing ----

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) return std::nullopt;
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

// Schema file: one `logical=column` pair per line; '#' starts a comment.
// Logical names: subject_id, age, sex, apoe4, education, and VAR_slot for
// each variable and slot in {bl, m06, m12, m18, m24, m36, m48}.
struct CsvSchema {
    std::map<std::string, std::string> columns;

    const std::string& column(const std::string& logical) const {
        auto it = columns.find(logical);
        if (it == columns.end()) throw SchemaError("schema is missing logical field '" + logical + "'");
        return it->second;
    }
};

inline CsvSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file: " + path);
    CsvSchema schema;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw FormatError("schema line without '=': " + t);
        schema.columns[detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
    }
    return schema;
}

// Identity schema for files whose columns already use the logical names.
inline CsvSchema default_schema(const std::vector<std::string>& variables = default_variables()) {
    CsvSchema schema;
    for (const char* d : {"subject_id", "age", "sex", "apoe4", "education"}) schema.columns[d] = d;
    for (const auto& var : variables)
        for (const char* slot : kVisitSlots) schema.columns[var + "_" + slot] = var + "_" + slot;
    return schema;
}

inline Cohort parse_adni_csv(const std::string& path, const CsvSchema& schema,
                             const std::vector<std::string>& variables = default_variables()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw FormatError("empty CSV file: " + path);
    const auto header = detail::split_csv_line(header_line);

    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index[detail::trim(header[i])] = i;

    auto require_col = [&](const std::string& logical) {
        const std::string& col = schema.column(logical);
        auto it = col_index.find(col);
        if (it == col_index.end()) throw SchemaError("required column '" + col + "' not found in " + path);
        return it->second;
    };

    const std::size_t id_col = require_col("subject_id");
    const std::size_t age_col = require_col("age");
    const std::size_t sex_col = require_col("sex");
    const std::size_t apoe_col = require_col("apoe4");
    const std::size_t edu_col = require_col("education");
    std::vector<std::size_t> var_cols(variables.size() * kNumVisits);
    for (std::size_t v = 0; v < variables.size(); ++v)
        for (std::size_t t = 0; t < kNumVisits; ++t)
            var_cols[v * kNumVisits + t] = require_col(variables[v] + "_" + kVisitSlots[t]);

    Cohort cohort;
    cohort.variable_names = variables;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        auto field = [&](std::size_t c) -> std::string { return c < fields.size() ? fields[c] : ""; };

        SubjectRecord rec;
        rec.subject_id = detail::trim(field(id_col));
        if (rec.subject_id.empty()) throw DataError("row " + std::to_string(row) + ": empty subject_id");

        const auto age = detail::parse_number(field(age_col));
        if (!age || *age <= 0) throw DataError("row " + std::to_string(row) + ": invalid age");
        rec.demographics.age_years = *age;

        const std::string sex = detail::lower(detail::trim(field(sex_col)));
        if (sex == "female" || sex == "f")
            rec.demographics.sex = Sex::female;
        else if (sex == "male" || sex == "m")
            rec.demographics.sex = Sex::male;
        else
            throw DataError("row " + std::to_string(row) + ": unrecognized sex '" + sex + "'");

        // invalid or empty APOE4 is legal and treated as missing
        if (const auto apoe = detail::parse_number(field(apoe_col))) {
            const int a = static_cast<int>(*apoe);
            if (a >= 0 && a <= 2 && *apoe == a) rec.demographics.apoe4_count = a;
        }

        const auto edu = detail::parse_number(field(edu_col));
        if (!edu || *edu < 0) throw DataError("row " + std::to_string(row) + ": invalid education");
        rec.demographics.education_years = *edu;

        rec.values.assign(variables.size() * kNumVisits, std::numeric_limits<double>::quiet_NaN());
        rec.observed.assign(variables.size() * kNumVisits, false);
        for (std::size_t v = 0; v < variables.size(); ++v) {
            for (std::size_t t = 0; t < kNumVisits; ++t) {
                if (const auto val = detail::parse_number(field(var_cols[v * kNumVisits + t]))) {
                    rec.values[v * kNumVisits + t] = *val;
                    rec.observed[v * kNumVisits + t] = true;
                }
            }
        }
        cohort.subjects.push_back(std::move(rec));
    }
    cohort.check_unique_ids();
    return cohort;
}

// ---- cohort selection and splits ----

// Keep subjects with at least two observed CDRSB entries across the seven
// slots. No diagnosis filtering.
inline Cohort select_cohort(const Cohort& raw) {
    const int cdrsb = raw.variable_index("CDRSB");
    if (cdrsb < 0) throw SchemaError("cohort has no CDRSB variable");
    Cohort out;
    out.variable_names = raw.variable_names;
    for (const auto& s : raw.subjects)
        if (s.observed_count(static_cast<std::size_t>(cdrsb)) >= 2) out.subjects.push_back(s);
    return out;
}

// Deterministic 70/10/20 split by subject; the test set takes the rounding
// remainder.
inline SplitSpec split_subjects(const Cohort& cohort, std::uint64_t seed) {
    if (cohort.subjects.empty()) throw DegenerateInputError("split_subjects: empty cohort");
    std::vector<std::string> ids;
    for (const auto& s : cohort.subjects) ids.push_back(s.subject_id);
    Rng rng(derive_seed(seed, "subject-split"));
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_train = static_cast<std::size_t>(0.7 * static_cast<double>(n));
    const std::size_t n_val = static_cast<std::size_t>(0.1 * static_cast<double>(n));
    SplitSpec split;
    split.seed = seed;
    split.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                         ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    return split;
}

// Reduce the train set to floor(fraction * |train|) subjects, minimum 1.
inline SplitSpec subsample_fewshot(const SplitSpec& split, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ArgumentError("fewshot fraction must be in (0, 1], got " + std::to_string(fraction));
    SplitSpec out = split;
    out.fewshot_fraction = fraction;
    if (fraction == 1.0) return out;
    std::vector<std::string> ids = split.train_ids;
    Rng rng(derive_seed(seed, "fewshot"));
    rng.shuffle(ids);
    std::size_t keep = static_cast<std::size_t>(fraction * static_cast<double>(ids.size()));
    if (keep == 0) keep = 1;
    ids.resize(keep);
    out.train_ids = std::move(ids);
    return out;
}

// ---- synthetic cohort ----

// Per-variable trajectory model: value(t) = baseline + slope * t + noise,
// with subject-level baseline and slope. Only the demographic moments are
// anchored to the reference cohort summary; trajectory parameters are
// documented defaults.
struct VariableProfile {
    std::string name;
    double baseline_mean = 0.0;
    double baseline_sd = 1.0;
    double slope_mean = 0.0;   // per month
    double slope_sd = 0.0;
    double noise_sd = 0.1;
};

struct SynthProfile {
    std::vector<VariableProfile> variables = {
        {"CDRSB", 2.5, 2.0, 0.07, 0.03, 0.08},
        {"TOTAL13", 18.0, 6.0, 0.25, 0.10, 0.40},
        {"FAQTOTAL", 5.0, 4.0, 0.20, 0.08, 0.35},
        {"AVDEL30MIN", 6.0, 3.0, -0.10, 0.05, 0.20},
    };
    double mean_visits = 4.8;
    double sd_visits = 1.3;
    double score_dropout = 0.04;  // per attended visit, per variable
    double age_mean = 73.5;
    double age_sd = 7.2;
    double female_fraction = 0.455;
    // APOE4 copy-count probabilities: 0, 1, 2, missing
    std::array<double, 4> apoe4_probs = {0.531, 0.368, 0.100, 0.001};
    double education_mean = 16.0;
    double education_sd = 2.8;
};

inline Cohort synth_cohort(std::size_t n, std::uint64_t seed, const SynthProfile& profile = SynthProfile{}) {
    if (n < 1) throw ArgumentError("synth_cohort: n must be >= 1");
    Cohort cohort;
    for (const auto& v : profile.variables) cohort.variable_names.push_back(v.name);
    const std::size_t d = cohort.variable_names.size();

    Rng rng(derive_seed(seed, "synth-cohort"));
    for (std::size_t i = 0; i < n; ++i) {
        SubjectRecord rec;
        {
            std::ostringstream id;
            id << "SYN" << std::setw(5) << std::setfill('0') << i;
            rec.subject_id = id.str();
        }
        rec.demographics.age_years = rng.normal(profile.age_mean, profile.age_sd);
        if (rec.demographics.age_years < 40.0) rec.demographics.age_years = 40.0;
        rec.demographics.sex = rng.bernoulli(profile.female_fraction) ? Sex::female : Sex::male;
        {
            const double u = rng.uniform();
            double acc = 0.0;
            int cat = 3;
            for (int k = 0; k < 4; ++k) {
                acc += profile.apoe4_probs[static_cast<std::size_t>(k)];
                if (u < acc) {
                    cat = k;
                    break;
                }
            }
            if (cat < 3) rec.demographics.apoe4_count = cat;
        }
        rec.demographics.education_years = std::max(0.0, rng.normal(profile.education_mean, profile.education_sd));

        // monotone attrition: subjects attend the first k visits and then drop
        // out, the dominant missingness pattern in longitudinal follow-up
        int target = static_cast<int>(std::lround(rng.normal(profile.mean_visits, profile.sd_visits)));
        target = std::max(2, std::min(target, static_cast<int>(kNumVisits)));
        std::vector<bool> attended(kNumVisits, false);
        for (int k = 0; k < target; ++k) attended[static_cast<std::size_t>(k)] = true;

        rec.values.assign(d * kNumVisits, std::numeric_limits<double>::quiet_NaN());
        rec.observed.assign(d * kNumVisits, false);
        for (std::size_t v = 0; v < d; ++v) {
            const auto& vp = profile.variables[v];
            const double baseline = rng.normal(vp.baseline_mean, vp.baseline_sd);
            const double slope = rng.normal(vp.slope_mean, vp.slope_sd);
            for (std::size_t t = 0; t < kNumVisits; ++t) {
                const double value = baseline + slope * kVisitMonths[t] + rng.normal(0.0, vp.noise_sd);
                const bool drop = rng.bernoulli(profile.score_dropout);
                if (attended[t] && !drop) {
                    rec.values[v * kNumVisits + t] = value;
                    rec.observed[v * kNumVisits + t] = true;
                }
            }
        }

        // guarantee the selection rule: at least two observed CDRSB entries,
        // forced onto the earliest attended slots when dropout bit too deep
        const int cdrsb = cohort.variable_index("CDRSB");
        if (cdrsb >= 0) {
            const auto cv = static_cast<std::size_t>(cdrsb);
            std::size_t have = rec.observed_count(cv);
            const auto& vp = profile.variables[cv];
            if (have < 2) {
                const double baseline = rng.normal(vp.baseline_mean, vp.baseline_sd);
                const double slope = rng.normal(vp.slope_mean, vp.slope_sd);
                for (std::size_t t = 0; t < kNumVisits && have < 2; ++t) {
                    if (!attended[t] || rec.observed[cv * kNumVisits + t]) continue;
                    rec.values[cv * kNumVisits + t] =
                        baseline + slope * kVisitMonths[t] + rng.normal(0.0, vp.noise_sd);
                    rec.observed[cv * kNumVisits + t] = true;
                    ++have;
                }
            }
        }
        cohort.subjects.push_back(std::move(rec));
    }
    return cohort;
}

// ---- cohort cache ----

// Values and demographics live in the named-tensor container; ids and masks
// in a sidecar JSON manifest. Unobserved cells are written as 0 and restored
// to NaN on load.

inline void save_cohort(const Cohort& cohort, const std::string& container_path,
                        const std::string& manifest_path) {
    const std::size_t n = cohort.subjects.size();
    const std::size_t d = cohort.num_vars();

    Container c;
    ContainerEntry values{{n, d, kNumVisits}, std::vector<float>(n * d * kNumVisits, 0.0f)};
    ContainerEntry age{{n}, std::vector<float>(n)};
    ContainerEntry sex{{n}, std::vector<float>(n)};
    ContainerEntry apoe{{n}, std::vector<float>(n)};
    ContainerEntry edu{{n}, std::vector<float>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = cohort.subjects[i];
        for (std::size_t j = 0; j < d * kNumVisits; ++j)
            if (s.observed[j]) values.data[i * d * kNumVisits + j] = static_cast<float>(s.values[j]);
        age.data[i] = static_cast<float>(s.demographics.age_years);
        sex.data[i] = s.demographics.sex == Sex::female ? 0.0f : 1.0f;
        apoe.data[i] = s.demographics.apoe4_count ? static_cast<float>(*s.demographics.apoe4_count) : -1.0f;
        edu.data[i] = static_cast<float>(s.demographics.education_years);
    }
    c.meta["kind"] = "cohort";
    c.tensors.emplace("values", std::move(values));
    c.tensors.emplace("age", std::move(age));
    c.tensors.emplace("sex", std::move(sex));
    c.tensors.emplace("apoe4", std::move(apoe));
    c.tensors.emplace("education", std::move(edu));
    save_container(container_path, c);

    nlohmann::json manifest;
    manifest["variable_names"] = cohort.variable_names;
    manifest["visit_months"] = kVisitMonths;
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& s : cohort.subjects) {
        nlohmann::json e;
        e["id"] = s.subject_id;
        nlohmann::json masks = nlohmann::json::array();
        for (std::size_t v = 0; v < d; ++v) {
            std::string bits(kNumVisits, '0');
            for (std::size_t t = 0; t < kNumVisits; ++t)
                if (s.observed[v * kNumVisits + t]) bits[t] = '1';
            masks.push_back(bits);
        }
        e["observed"] = masks;
        subjects.push_back(e);
    }
    manifest["subjects"] = subjects;
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write cohort manifest: " + manifest_path);
    out << manifest.dump(2) << "\n";
}

inline Cohort load_cohort(const std::string& container_path, const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open cohort manifest: " + manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
    if (manifest.is_discarded()) throw FormatError("malformed cohort manifest: " + manifest_path);

    Container c = load_container(container_path);
    const auto need = [&](const char* name) -> const ContainerEntry& {
        auto it = c.tensors.find(name);
        if (it == c.tensors.end())
            throw ValidationError("cohort container is missing tensor '" + std::string(name) + "'");
        return it->second;
    };
    const auto& values = need("values");
    const auto& age = need("age");
    const auto& sex = need("sex");
    const auto& apoe = need("apoe4");
    const auto& edu = need("education");

    Cohort cohort;
    cohort.variable_names = manifest["variable_names"].get<std::vector<std::string>>();
    const std::size_t d = cohort.num_vars();
    const auto& subjects = manifest["subjects"];
    const std::size_t n = subjects.size();
    if (values.shape != std::vector<std::size_t>{n, d, kNumVisits})
        throw ValidationError("cohort tensor 'values' has unexpected shape");

    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = subjects[static_cast<int>(i)];
        SubjectRecord rec;
        rec.subject_id = e["id"].get<std::string>();
        rec.demographics.age_years = age.data[i];
        rec.demographics.sex = sex.data[i] == 0.0f ? Sex::female : Sex::male;
        if (apoe.data[i] >= 0.0f) rec.demographics.apoe4_count = static_cast<int>(apoe.data[i]);
        rec.demographics.education_years = edu.data[i];
        rec.values.assign(d * kNumVisits, std::numeric_limits<double>::quiet_NaN());
        rec.observed.assign(d * kNumVisits, false);
        const auto& masks = e["observed"];
        for (std::size_t v = 0; v < d; ++v) {
            const std::string bits = masks[static_cast<int>(v)].get<std::string>();
            for (std::size_t t = 0; t < kNumVisits; ++t) {
                if (bits[t] == '1') {
                    rec.observed[v * kNumVisits + t] = true;
                    rec.values[v * kNumVisits + t] = values.data[(i * d + v) * kNumVisits + t];
                }
            }
        }
        cohort.subjects.push_back(std::move(rec));
    }
    cohort.check_unique_ids();
    return cohort;
}

// Cohort summary in the shape of the reference population table.
struct CohortStats {
    std::size_t n = 0;
    double age_mean = 0.0, age_sd = 0.0;
    std::size_t female = 0;
    std::array<std::size_t, 3> apoe4_counts = {0, 0, 0};
    std::size_t apoe4_missing = 0;
    double education_mean = 0.0, education_sd = 0.0;
    double visits_mean = 0.0, visits_sd = 0.0;
};

inline CohortStats cohort_stats(const Cohort& cohort) {
    CohortStats st;
    st.n = cohort.subjects.size();
    if (st.n == 0) return st;
    double age_sum = 0, age_sq = 0, edu_sum = 0, edu_sq = 0, vis_sum = 0, vis_sq = 0;
    for (const auto& s : cohort.subjects) {
        age_sum += s.demographics.age_years;
        age_sq += s.demographics.age_years * s.demographics.age_years;
        edu_sum += s.demographics.education_years;
        edu_sq += s.demographics.education_years * s.demographics.education_years;
        const double v = static_cast<double>(s.attended_visits(cohort.num_vars()));
        vis_sum += v;
        vis_sq += v * v;
        if (s.demographics.sex == Sex::female) ++st.female;
        if (s.demographics.apoe4_count)
            ++st.apoe4_counts[static_cast<std::size_t>(*s.demographics.apoe4_count)];
        else
            ++st.apoe4_missing;
    }
    const double n = static_cast<double>(st.n);
    auto sd = [n](double sum, double sq) {
        const double var = sq / n - (sum / n) * (sum / n);
        return std::sqrt(std::max(0.0, var));
    };
    st.age_mean = age_sum / n;
    st.age_sd = sd(age_sum, age_sq);
    st.education_mean = edu_sum / n;
    st.education_sd = sd(edu_sum, edu_sq);
    st.visits_mean = vis_sum / n;
    st.visits_sd = sd(vis_sum, vis_sq);
    return st;
}

inline std::string format_cohort_stats(const CohortStats& st) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    const double n = std::max<std::size_t>(st.n, 1);
    os << "Cohort summary (N = " << st.n << ")\n";
    os << "  Age (years)                 " << st.age_mean << " +/- " << st.age_sd << "\n";
    os << "  Sex (female)                " << st.female << " (" << 100.0 * st.female / n << "%)\n";
    for (int k = 0; k < 3; ++k)
        os << "  APOE4 = " << k << "                   " << st.apoe4_counts[static_cast<std::size_t>(k)] << " ("
           << 100.0 * st.apoe4_counts[static_cast<std::size_t>(k)] / n << "%)\n";
    os << "  APOE missing                " << st.apoe4_missing << " (" << 100.0 * st.apoe4_missing / n << "%)\n";
    os << "  Years of education          " << st.education_mean << " +/- " << st.education_sd << "\n";
    os << "  Mean visits per participant " << st.visits_mean << " +/- " << st.visits_sd << "\n";
    return os.str();
}

}  // namespace longcast
