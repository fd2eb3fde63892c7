#pragma once

// Gold-standard parsing and boundary/morpheme-level precision, recall, F1.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morse/corpus_io.hpp"
#include "morse/error.hpp"
#include "morse/utf8.hpp"

namespace morse {

using Analysis = std::vector<std::string>;
using BoundarySet = std::vector<std::size_t>;  // sorted, unique

struct GoldEntry {
    std::string word;
    std::vector<Analysis> analyses;
    friend bool operator==(const GoldEntry&, const GoldEntry&) = default;
};

/// Lines `word<TAB>analysis{, analysis}`; morphemes are space-separated.
/// Repeated words merge their analyses into the first entry.
inline std::vector<GoldEntry> parse_gold(std::istream& in) {
    std::vector<GoldEntry> out;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw line_error("missing TAB in gold entry", line_no);
        std::string word = line.substr(0, tab);
        if (word.empty()) throw line_error("empty gold word", line_no);
        if (!utf8::is_valid(line)) throw line_error("invalid UTF-8", line_no);
        std::vector<Analysis> analyses;
        std::string_view rest = std::string_view(line).substr(tab + 1);
        for (;;) {
            const auto comma = rest.find(',');
            auto morphs = detail::split_ws(rest.substr(0, comma));
            if (morphs.empty()) throw line_error("empty analysis", line_no);
            analyses.emplace_back(morphs.begin(), morphs.end());
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        auto [it, fresh] = index.emplace(word, out.size());
        if (fresh) out.push_back({std::move(word), {}});
        auto& dst = out[it->second].analyses;
        for (auto& a : analyses)
            if (std::find(dst.begin(), dst.end(), a) == dst.end()) dst.push_back(std::move(a));
    }
    return out;
}

inline void write_gold(std::ostream& out, const std::vector<GoldEntry>& gold) {
    for (const auto& g : gold) {
        out << g.word << '\t';
        for (std::size_t a = 0; a < g.analyses.size(); ++a) {
            if (a) out << ", ";
            for (std::size_t m = 0; m < g.analyses[a].size(); ++m) out << (m ? " " : "") << g.analyses[a][m];
        }
        out << '\n';
    }
}

/// Cumulative cut positions (scalar values), excluding 0 and the word length.
inline BoundarySet boundaries_of(const Analysis& analysis) {
    BoundarySet out;
    std::size_t pos = 0;
    for (std::size_t i = 0; i + 1 < analysis.size(); ++i) {
        pos += utf8::length(analysis[i]);
        if (pos > 0) out.push_back(pos);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// nullopt when the analysis does not concatenate to `word` (a canonical form).
inline std::optional<BoundarySet> surface_boundaries(const Analysis& analysis, std::string_view word) {
    std::string joined;
    for (const auto& m : analysis) joined += m;
    if (joined != word) return std::nullopt;
    return boundaries_of(analysis);
}

/// Cuts `word` at the given scalar-value positions.
inline std::vector<std::string> cut_at(std::string_view word, const BoundarySet& cuts) {
    std::vector<std::string> out;
    std::size_t prev = 0;
    for (auto b : cuts) {
        const auto lo = utf8::byte_offset(word, prev), hi = utf8::byte_offset(word, b);
        out.emplace_back(word.substr(lo, hi - lo));
        prev = b;
    }
    out.emplace_back(word.substr(utf8::byte_offset(word, prev)));
    return out;
}

struct Metrics {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 1, recall = 1, f1 = 1;
    bool precision_undefined = false;
    std::size_t words_evaluated = 0;
    std::size_t alternatives_used = 0;  // words best matched by a non-first analysis
    std::size_t skipped_non_surface = 0;

    /// Empty denominators count as perfect; f1 is 0 when precision + recall is 0.
    void finalize() {
        precision_undefined = tp + fp == 0;
        precision = precision_undefined ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        f1 = precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
    }
};

namespace detail {

struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
    double f1() const {
        Metrics m;
        m.tp = tp;
        m.fp = fp;
        m.fn = fn;
        m.finalize();
        return m.f1;
    }
};

inline Counts compare_sets(const BoundarySet& pred, const BoundarySet& gold) {
    Counts c;
    std::size_t i = 0, j = 0;
    while (i < pred.size() && j < gold.size()) {
        if (pred[i] == gold[j]) {
            ++c.tp, ++i, ++j;
        } else if (pred[i] < gold[j]) {
            ++c.fp, ++i;
        } else {
            ++c.fn, ++j;
        }
    }
    c.fp += pred.size() - i;
    c.fn += gold.size() - j;
    return c;
}

inline Counts compare_multisets(Analysis pred, Analysis gold) {
    std::sort(pred.begin(), pred.end());
    std::sort(gold.begin(), gold.end());
    Counts c;
    std::size_t i = 0, j = 0;
    while (i < pred.size() && j < gold.size()) {
        if (pred[i] == gold[j]) {
            ++c.tp, ++i, ++j;
        } else if (pred[i] < gold[j]) {
            ++c.fp, ++i;
        } else {
            ++c.fn, ++j;
        }
    }
    c.fp += pred.size() - i;
    c.fn += gold.size() - j;
    return c;
}

template <typename Map>
void check_coverage(const Map& pred, const std::vector<GoldEntry>& gold) {
    std::vector<std::string> missing;
    for (const auto& g : gold)
        if (pred.find(g.word) == pred.end()) missing.push_back(g.word);
    if (missing.empty()) return;
    std::string msg = "gold words missing from predictions (" + std::to_string(missing.size()) + "):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw InputError(msg);
}

} // namespace detail

/// Boundary-level scores, micro-averaged. Each word is scored against its
/// best-F1 surface analysis (first on ties); `pred_of(i)` yields the
/// prediction for gold[i].
template <typename PredFn>
Metrics boundary_eval_with(PredFn&& pred_of, const std::vector<GoldEntry>& gold) {
    Metrics m;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& g = gold[i];
        std::optional<detail::Counts> best;
        std::size_t best_alt = 0, alt = 0;
        const BoundarySet& pred = pred_of(i);
        for (const auto& a : g.analyses) {
            auto gb = surface_boundaries(a, g.word);
            if (!gb) {
                ++m.skipped_non_surface;
                ++alt;
                continue;
            }
            auto c = detail::compare_sets(pred, *gb);
            if (!best || c.f1() > best->f1()) {
                best = c;
                best_alt = alt;
            }
            ++alt;
        }
        if (!best) continue;
        ++m.words_evaluated;
        if (best_alt != 0) ++m.alternatives_used;
        m.tp += best->tp;
        m.fp += best->fp;
        m.fn += best->fn;
    }
    m.finalize();
    return m;
}

template <typename Map>
Metrics boundary_eval(const Map& pred, const std::vector<GoldEntry>& gold) {
    detail::check_coverage(pred, gold);
    return boundary_eval_with([&](std::size_t i) -> const BoundarySet& { return pred.find(gold[i].word)->second; },
                              gold);
}

/// Morpheme-level scores: multiset overlap of predicted and gold morphemes,
/// best analysis per word (canonical analyses allowed), micro-averaged.
template <typename Map>
Metrics morpheme_eval(const Map& pred, const std::vector<GoldEntry>& gold) {
    detail::check_coverage(pred, gold);
    Metrics m;
    for (const auto& g : gold) {
        const Analysis& p = pred.find(g.word)->second;
        std::optional<detail::Counts> best;
        std::size_t best_alt = 0;
        for (std::size_t a = 0; a < g.analyses.size(); ++a) {
            auto c = detail::compare_multisets(p, g.analyses[a]);
            if (!best || c.f1() > best->f1()) {
                best = c;
                best_alt = a;
            }
        }
        ++m.words_evaluated;
        if (best_alt != 0) ++m.alternatives_used;
        m.tp += best->tp;
        m.fp += best->fp;
        m.fn += best->fn;
    }
    m.finalize();
    return m;
}

/// Excess segments over words that should stay whole: the summed boundary
/// count. Words without a prediction count as unsegmented.
template <typename Map>
std::size_t composition_probe(const Map& pred, const std::vector<std::string>& words) {
    std::size_t excess = 0;
    for (const auto& w : words) {
        auto it = pred.find(w);
        if (it != pred.end()) excess += it->second.size();
    }
    return excess;
}

inline void write_report(std::ostream& out, const Metrics& m) {
    out << "tp=" << m.tp << '\n'
        << "fp=" << m.fp << '\n'
        << "fn=" << m.fn << '\n'
        << "precision=" << detail::format_real(m.precision) << '\n'
        << "recall=" << detail::format_real(m.recall) << '\n'
        << "f1=" << detail::format_real(m.f1) << '\n'
        << "words_evaluated=" << m.words_evaluated << '\n'
        << "alternatives_used=" << m.alternatives_used << '\n'
        << "skipped_non_surface=" << m.skipped_non_surface << '\n';
}

} // namespace morse
