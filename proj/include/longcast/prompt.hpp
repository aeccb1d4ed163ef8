#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "longcast/data.hpp"
#include "longcast/errors.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Clinical prompt rendering and word-level tokenization. The renderer is a
// pure function of its arguments; the tokenizer lowercases, groups [a-z0-9]
// runs, emits punctuation as single-character tokens, and maps anything
// out of vocabulary to a reserved <unk> id.

struct TokenVocab {
    std::vector<std::string> tokens;
    std::map<std::string, std::size_t> ids;

    std::size_t size() const { return tokens.size(); }

    std::size_t unk_id() const { return 0; }

    std::size_t id_of(const std::string& token) const {
        auto it = ids.find(token);
        return it == ids.end() ? unk_id() : it->second;
    }

    static TokenVocab from_tokens(std::vector<std::string> toks) {
        TokenVocab v;
        v.tokens = std::move(toks);
        for (std::size_t i = 0; i < v.tokens.size(); ++i) {
            if (!v.ids.emplace(v.tokens[i], i).second)
                throw DataError("duplicate vocabulary token '" + v.tokens[i] + "'");
        }
        return v;
    }
};

// Vocabulary file: one token per line, line number = id. Line 0 must be the
// unknown-token entry.
inline TokenVocab load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::vector<std::string> toks;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        toks.push_back(line);
    }
    if (toks.empty()) throw FormatError("empty vocabulary file: " + path);
    return TokenVocab::from_tokens(std::move(toks));
}

inline void save_vocab(const TokenVocab& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    for (const auto& t : vocab.tokens) out << t << "\n";
}

// Self-contained default vocabulary covering the default template's words,
// punctuation, and integers 0..199 (larger numbers fall back to <unk>),
// padded with filler entries up to the requested size.
inline TokenVocab default_vocab(std::size_t size = 512) {
    std::vector<std::string> toks = {"<unk>"};
    for (const char* p : {".", ",", ":", ";", "-", "(", ")", "%", "/", "+"}) toks.push_back(p);
    const char* words[] = {
        "patient",  "profile",    "a",        "an",       "is",        "years",     "old",      "year",
        "female",   "male",       "carries",  "apoe4",    "allele",    "alleles",   "copies",   "status",
        "unknown",  "education",  "of",       "with",     "the",       "task",      "forecast", "predict",
        "score",    "at",         "month",    "months",   "visit",     "visits",    "after",    "baseline",
        "observed", "timeline",   "history",  "summary",  "statistics","minimum",   "maximum",  "median",
        "trend",    "increasing", "decreasing","stable",  "measured",  "assessment","clinical", "variable",
        "next",     "scheduled",  "follow",   "up",       "value",     "values",    "cdr",      "sb",
        "adas13",   "faqtotal",   "avdel30",  "total13",  "avdel30min","and",       "for",      "to",
        "was",      "were",       "has",      "no",       "data",      "scores",    "over",     "past",
        "omitted",  "timepoints", "record"};
    for (const char* w : words) toks.push_back(w);
    for (int i = 0; i < 200; ++i) toks.push_back(std::to_string(i));
    if (toks.size() > size)
        throw ArgumentError("default_vocab: size " + std::to_string(size) + " smaller than the base set (" +
                            std::to_string(toks.size()) + ")");
    for (std::size_t i = toks.size(); i < size; ++i) toks.push_back("tok" + std::to_string(i));
    return TokenVocab::from_tokens(std::move(toks));
}

inline std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            if (!std::isspace(c)) words.emplace_back(1, static_cast<char>(c));
        }
    }
    flush();
    return words;
}

inline std::vector<std::size_t> tokenize(const std::string& text, const TokenVocab& vocab) {
    std::vector<std::size_t> ids;
    for (const auto& w : tokenize_words(text)) ids.push_back(vocab.id_of(w));
    return ids;
}

inline std::string detokenize(const std::vector<std::size_t>& ids, const TokenVocab& vocab) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= vocab.size()) throw BoundsError("detokenize: id " + std::to_string(ids[i]) + " out of range");
        if (i) out.push_back(' ');
        out += vocab.tokens[ids[i]];
    }
    return out;
}

// ---- prompt rendering ----

struct PromptTemplate {
    std::string text =
        "Patient profile: {age} years old, {sex}, {apoe4}, {education} years of education. "
        "History: {variable} was observed at months {visit_months} after baseline. "
        "Summary statistics: minimum {min}, maximum {max}, median {median}, trend {trend}. "
        "Task: forecast the {variable} score at the visit {horizon_months} months after baseline.";
};

inline PromptTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open template file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    PromptTemplate t;
    t.text = os.str();
    while (!t.text.empty() && (t.text.back() == '\n' || t.text.back() == '\r')) t.text.pop_back();
    return t;
}

namespace detail {

inline std::string format_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string substitute(std::string text, const std::map<std::string, std::string>& fields) {
    for (const auto& [key, value] : fields) {
        const std::string pat = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = text.find(pat, pos)) != std::string::npos) {
            text.replace(pos, pat.size(), value);
            pos += value.size();
        }
    }
    return text;
}

struct SeriesSummary {
    double min = 0, max = 0, median = 0;
    std::string trend;
    std::vector<int> observed_months;
};

inline SeriesSummary summarize_series(const std::vector<double>& series, const std::vector<bool>& mask,
                                      const std::vector<int>& months) {
    SeriesSummary s;
    std::vector<double> vals;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (!mask[t]) continue;
        vals.push_back(series[t]);
        s.observed_months.push_back(months[t]);
    }
    if (vals.empty()) throw DegenerateInputError("prompt: series has no observed value");
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const std::size_t n = sorted.size();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double first = vals.front(), last = vals.back();
    s.trend = last > first ? "increasing" : (last < first ? "decreasing" : "stable");
    return s;
}

}  // namespace detail

// Deterministic prompt text from demographics, the observed part of the raw
// series, the variable name, and the forecast horizon. timeline_keep limits
// how many of the most recent observed months appear; it exists for the
// token-budget truncation below, callers normally leave it unbounded.
inline std::string render_prompt(const Demographics& demo, const std::vector<double>& series,
                                 const std::vector<bool>& mask, const std::vector<int>& months,
                                 const std::string& variable, int horizon_months,
                                 const PromptTemplate& tmpl = PromptTemplate{},
                                 std::size_t timeline_keep = std::size_t(-1)) {
    const auto summary = detail::summarize_series(series, mask, months);

    std::map<std::string, std::string> fields;
    fields["age"] = detail::format_value(demo.age_years);
    fields["sex"] = demo.sex == Sex::female ? "female" : "male";
    if (demo.apoe4_count)
        fields["apoe4"] = "carries " + std::to_string(*demo.apoe4_count) + " APOE4 " +
                          (*demo.apoe4_count == 1 ? "allele" : "alleles");
    else
        fields["apoe4"] = "APOE4 status unknown";
    fields["education"] = detail::format_value(demo.education_years);
    fields["variable"] = display_name(variable);
    fields["horizon_months"] = std::to_string(horizon_months);
    fields["min"] = detail::format_value(summary.min);
    fields["max"] = detail::format_value(summary.max);
    fields["median"] = detail::format_value(summary.median);
    fields["trend"] = summary.trend;

    std::string timeline;
    const std::size_t total = summary.observed_months.size();
    const std::size_t keep = std::min(timeline_keep, total);
    for (std::size_t i = total - keep; i < total; ++i) {
        if (!timeline.empty()) timeline += ", ";
        timeline += std::to_string(summary.observed_months[i]);
    }
    if (timeline.empty()) timeline = "(timeline omitted)";
    fields["visit_months"] = timeline;

    return detail::substitute(tmpl.text, fields);
}

// Tokenized prompt bounded by max_tokens. When over budget the timeline is
// shortened first (dropping the oldest months); if the text is still too
// long, tokens are cut from the front so the task instruction at the end of
// the template is never truncated.
inline std::vector<std::size_t> build_prompt_ids(const Demographics& demo, const std::vector<double>& series,
                                                 const std::vector<bool>& mask, const std::vector<int>& months,
                                                 const std::string& variable, int horizon_months,
                                                 const TokenVocab& vocab, std::size_t max_tokens,
                                                 const PromptTemplate& tmpl = PromptTemplate{}) {
    std::size_t keep = std::size_t(-1);
    std::vector<std::size_t> ids =
        tokenize(render_prompt(demo, series, mask, months, variable, horizon_months, tmpl, keep), vocab);
    if (ids.size() <= max_tokens) return ids;

    std::size_t observed = 0;
    for (bool b : mask) observed += b ? 1 : 0;
    for (keep = observed; keep > 0 && ids.size() > max_tokens;) {
        --keep;
        ids = tokenize(render_prompt(demo, series, mask, months, variable, horizon_months, tmpl, keep), vocab);
    }
    if (ids.size() > max_tokens)
        ids.erase(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ids.size() - max_tokens));
    return ids;
}

// Row lookup into the backbone embedding matrix: ids -> l_p x d_h.
template <class S>
TensorT<S> embed_prompt(const std::vector<std::size_t>& ids, const TensorT<S>& embedding_matrix) {
    return rows_gather(embedding_matrix, ids);
}

}  // namespace longcast
