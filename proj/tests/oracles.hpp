#pragma once

// Brute-force reference implementations used only by tests. They share no
// code paths with the library beyond UTF-8 decoding.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "morse/corpus_io.hpp"
#include "morse/rules.hpp"
#include "morse/utf8.hpp"

namespace oracle {

using morse::AffixKind;

struct NaiveRule {
    AffixKind kind;
    std::u32string from, to;
    bool operator<(const NaiveRule& o) const {
        if (kind != o.kind) return kind < o.kind;
        auto a = morse::utf8::encode(from), b = morse::utf8::encode(o.from);
        if (a != b) return a < b;
        return morse::utf8::encode(to) < morse::utf8::encode(o.to);
    }
};

using NaiveTable = std::map<NaiveRule, std::set<std::pair<std::string, std::string>>>;

/// Rule table from an O(|V|^2) double loop over ordered pairs.
inline NaiveTable naive_rules(std::vector<std::string> words, std::size_t min_stem, std::size_t max_affix) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    NaiveTable table;
    for (int k = 0; k < 2; ++k) {
        const auto kind = static_cast<AffixKind>(k);
        for (const auto& a : words)
            for (const auto& b : words) {
                if (a == b) continue;
                auto x = *morse::utf8::decode(a), y = *morse::utf8::decode(b);
                if (kind == AffixKind::Prefix) {
                    std::reverse(x.begin(), x.end());
                    std::reverse(y.begin(), y.end());
                }
                std::size_t s = 0;
                while (s < x.size() && s < y.size() && x[s] == y[s]) ++s;
                auto fa = x.substr(s), fb = y.substr(s);
                if (s < min_stem || fa.size() > max_affix || fb.size() > max_affix) continue;
                if (kind == AffixKind::Prefix) {
                    std::reverse(fa.begin(), fa.end());
                    std::reverse(fb.begin(), fb.end());
                }
                table[{kind, fa, fb}].insert({a, b});
            }
    }
    return table;
}

/// naive_rules serialized in the library's dump format, pairs included.
inline std::string naive_rule_dump(const std::vector<std::string>& words, std::size_t min_stem, std::size_t max_affix) {
    std::string out;
    for (const auto& [r, pairs] : naive_rules(words, min_stem, max_affix)) {
        auto aff = [](const std::u32string& s) {
            return s.empty() ? std::string(morse::kEmptyAffix) : morse::utf8::encode(s);
        };
        out += std::string(r.kind == AffixKind::Suffix ? "suffix" : "prefix") + "\t" + aff(r.from) + "\t" +
               aff(r.to) + "\t" + std::to_string(pairs.size()) + "\n";
        for (const auto& [a, b] : pairs) out += "\t" + a + "\t" + b + "\n";
    }
    return out;
}

inline std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t n, const std::vector<std::string>& alphabet,
                                             std::size_t min_len, std::size_t max_len) {
    std::set<std::string> out;
    std::size_t guard = 0;
    while (out.size() < n && guard++ < n * 100) {
        const std::size_t len = min_len + rng() % (max_len - min_len + 1);
        std::string w;
        for (std::size_t i = 0; i < len; ++i) w += alphabet[rng() % alphabet.size()];
        out.insert(w);
    }
    return {out.begin(), out.end()};
}

inline double cos(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    return d / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<double> vec(const morse::EmbeddingTable& e, const std::string& w) {
    auto r = e.at(w);
    return {r.begin(), r.end()};
}

/// cos(v4, v2 - v1 + v3) > tau, computed from scratch.
inline bool agrees(const morse::EmbeddingTable& e, const std::string& w1, const std::string& w2,
                   const std::string& w3, const std::string& w4, double tau) {
    auto v1 = vec(e, w1), v2 = vec(e, w2), v3 = vec(e, w3), v4 = vec(e, w4);
    std::vector<double> t(v1.size());
    double nt = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = v2[k] - v1[k] + v3[k];
        nt += t[k] * t[k];
    }
    if (nt == 0) return false;
    return cos(v4, t) > tau;
}

} // namespace oracle
