#pragma once

// Affix-transformation rules and their orthographic support sets.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "morse/corpus_io.hpp"
#include "morse/error.hpp"
#include "morse/utf8.hpp"

namespace morse {

enum class AffixKind : std::uint8_t { Suffix = 0, Prefix = 1 };

inline std::string_view to_string(AffixKind k) { return k == AffixKind::Suffix ? "suffix" : "prefix"; }

inline AffixKind parse_kind(std::string_view s) {
    if (s == "suffix") return AffixKind::Suffix;
    if (s == "prefix") return AffixKind::Prefix;
    throw InputError("unknown affix kind: " + std::string(s));
}

/// Written in place of the empty affix in text formats.
inline constexpr std::string_view kEmptyAffix = "\xE2\x88\x85";  // U+2205

inline std::string_view affix_text(const std::string& a) { return a.empty() ? kEmptyAffix : std::string_view(a); }
inline std::string affix_from_text(std::string_view s) { return s == kEmptyAffix ? std::string() : std::string(s); }

/// Directed transformation `from -> to` at one end of a word.
struct Rule {
    AffixKind kind = AffixKind::Suffix;
    std::string from;
    std::string to;

    bool is_add() const { return from.empty() && !to.empty(); }
    bool is_rep() const { return !from.empty() && !to.empty(); }
    Rule inverse() const { return {kind, to, from}; }

    auto operator<=>(const Rule&) const = default;
    bool operator==(const Rule&) const = default;
};

inline std::string describe(const Rule& r) {
    return std::string(affix_text(r.from)) + " -" + std::string(to_string(r.kind)) + "-> " +
           std::string(affix_text(r.to));
}

struct MiningConfig {
    std::size_t min_stem = 2;
    std::size_t max_affix = 6;
    std::size_t max_support = 1000;  // sampling cap for quadratic scoring

    void validate() const {
        if (min_stem < 1) throw InputError("min_stem must be >= 1");
        if (max_affix < 1) throw InputError("max_affix must be >= 1");
        if (max_support < 1) throw InputError("sampling cap must be >= 1");
    }
};

struct PairSplit {
    std::string stem;
    std::string aff1;
    std::string aff2;
    friend bool operator==(const PairSplit&, const PairSplit&) = default;
};

/// Minimal-affix split of a word pair: the stem is the longest common prefix
/// (suffix rules) or longest common suffix (prefix rules).
inline std::optional<PairSplit> split_pair(std::string_view w1, std::string_view w2, AffixKind kind,
                                           const MiningConfig& cfg) {
    auto a = utf8::decode(w1);
    auto b = utf8::decode(w2);
    if (!a || !b || *a == *b) return std::nullopt;
    if (kind == AffixKind::Prefix) {
        std::reverse(a->begin(), a->end());
        std::reverse(b->begin(), b->end());
    }
    const std::size_t limit = std::min(a->size(), b->size());
    std::size_t s = 0;
    while (s < limit && (*a)[s] == (*b)[s]) ++s;
    const std::size_t la = a->size() - s, lb = b->size() - s;
    if (s < cfg.min_stem || std::max(la, lb) > cfg.max_affix) return std::nullopt;
    std::u32string stem = a->substr(0, s), aff1 = a->substr(s), aff2 = b->substr(s);
    if (kind == AffixKind::Prefix) {
        std::reverse(stem.begin(), stem.end());
        std::reverse(aff1.begin(), aff1.end());
        std::reverse(aff2.begin(), aff2.end());
    }
    return PairSplit{utf8::encode(stem), utf8::encode(aff1), utf8::encode(aff2)};
}

using WordId = std::uint32_t;

/// Sorted, de-duplicated word list; ids follow byte-lexicographic order.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::vector<std::string> words) : words_(std::move(words)) {
        std::sort(words_.begin(), words_.end());
        words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
        index_.reserve(words_.size());
        for (WordId i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
    }

    std::size_t size() const { return words_.size(); }
    const std::string& word(WordId id) const { return words_[id]; }
    const std::vector<std::string>& words() const { return words_; }
    std::optional<WordId> find(const std::string& w) const {
        auto it = index_.find(w);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// FNV-1a over the sorted word list.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](unsigned char c) {
            h ^= c;
            h *= 1099511628211ULL;
        };
        for (const auto& w : words_) {
            for (char c : w) mix(static_cast<unsigned char>(c));
            mix('\n');
        }
        return h;
    }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, WordId> index_;
};

/// (w1, w2) with w1 = stem + from and w2 = stem + to (mirrored for prefixes).
struct WordPair {
    WordId w1 = 0;
    WordId w2 = 0;
    std::uint32_t stem_len = 0;  // in scalar values

    auto operator<=>(const WordPair&) const = default;
    bool operator==(const WordPair&) const = default;
};

struct SupportSet {
    Rule rule;
    std::vector<WordPair> pairs;
};

/// Every rule with non-empty support, sorted by rule; pairs sorted by (w1, w2).
struct RuleTable {
    Lexicon lexicon;
    std::vector<SupportSet> rules;

    const SupportSet* find(const Rule& r) const {
        auto it = std::lower_bound(rules.begin(), rules.end(), r,
                                   [](const SupportSet& s, const Rule& key) { return s.rule < key; });
        return (it != rules.end() && it->rule == r) ? &*it : nullptr;
    }
};

namespace detail {

inline void mine_kind(const Lexicon& lex, AffixKind kind, const MiningConfig& cfg,
                      std::map<Rule, std::vector<WordPair>>& out) {
    std::vector<std::u32string> text;
    text.reserve(lex.size());
    for (const auto& w : lex.words()) {
        auto cps = utf8::decode(w);
        if (!cps) throw InputError("invalid UTF-8 in vocabulary word: " + w);
        if (kind == AffixKind::Prefix) std::reverse(cps->begin(), cps->end());
        text.push_back(std::move(*cps));
    }

    // One entry per (word, candidate stem length); entries sharing a stem form a block.
    struct Entry {
        WordId word;
        std::uint32_t stem_len;
    };
    std::vector<Entry> entries;
    for (WordId i = 0; i < text.size(); ++i) {
        const std::size_t len = text[i].size();
        const std::size_t lo = std::max(cfg.min_stem, len > cfg.max_affix ? len - cfg.max_affix : 0);
        for (std::size_t s = lo; s <= len; ++s) entries.push_back({i, static_cast<std::uint32_t>(s)});
    }
    auto stem_of = [&](const Entry& e) { return std::u32string_view(text[e.word]).substr(0, e.stem_len); };
    std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        auto sa = stem_of(a), sb = stem_of(b);
        if (sa != sb) return sa < sb;
        return a.word < b.word;
    });

    auto encode_affix = [&](const Entry& e) {
        std::u32string a = text[e.word].substr(e.stem_len);
        if (kind == AffixKind::Prefix) std::reverse(a.begin(), a.end());
        return utf8::encode(a);
    };

    std::size_t begin = 0;
    while (begin < entries.size()) {
        std::size_t end = begin + 1;
        while (end < entries.size() && stem_of(entries[end]) == stem_of(entries[begin])) ++end;
        // Within a block the longest common stem of two members is exactly the
        // block stem iff their affixes differ in the first scalar value.
        for (std::size_t i = begin; i < end; ++i) {
            const auto& a = entries[i];
            const auto& ta = text[a.word];
            for (std::size_t j = i + 1; j < end; ++j) {
                const auto& b = entries[j];
                const auto& tb = text[b.word];
                const bool a_end = ta.size() == a.stem_len, b_end = tb.size() == b.stem_len;
                if (!a_end && !b_end && ta[a.stem_len] == tb[b.stem_len]) continue;
                std::string fa = encode_affix(a), fb = encode_affix(b);
                out[Rule{kind, fa, fb}].push_back({a.word, b.word, a.stem_len});
                out[Rule{kind, std::move(fb), std::move(fa)}].push_back({b.word, a.word, a.stem_len});
            }
        }
        begin = end;
    }
}

} // namespace detail

inline RuleTable mine(const std::vector<std::string>& words, const MiningConfig& cfg) {
    cfg.validate();
    RuleTable table;
    table.lexicon = Lexicon(words);
    std::map<Rule, std::vector<WordPair>> found;
    detail::mine_kind(table.lexicon, AffixKind::Suffix, cfg, found);
    detail::mine_kind(table.lexicon, AffixKind::Prefix, cfg, found);
    table.rules.reserve(found.size());
    for (auto& [rule, pairs] : found) {
        std::sort(pairs.begin(), pairs.end());
        table.rules.push_back({rule, std::move(pairs)});
    }
    return table;
}

inline RuleTable mine(const Vocabulary& vocab, const MiningConfig& cfg) { return mine(vocab.words(), cfg); }

struct MiningStats {
    std::size_t candidate_rules = 0;
    std::size_t candidate_pairs = 0;
    friend bool operator==(const MiningStats&, const MiningStats&) = default;
};

/// Pairs are counted once per unordered word pair, across both kinds.
inline MiningStats mining_stats(const RuleTable& table) {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& ss : table.rules)
        for (const auto& p : ss.pairs) {
            const auto lo = std::min(p.w1, p.w2), hi = std::max(p.w1, p.w2);
            seen.insert((static_cast<std::uint64_t>(lo) << 32) | hi);
        }
    return {table.rules.size(), seen.size()};
}

/// One line per rule: kind, from, to, pair count. With `with_pairs`, each rule
/// line is followed by `\tw1\tw2` lines.
inline void write_rule_table(std::ostream& out, const RuleTable& table, bool with_pairs = false) {
    for (const auto& ss : table.rules) {
        out << to_string(ss.rule.kind) << '\t' << affix_text(ss.rule.from) << '\t' << affix_text(ss.rule.to)
            << '\t' << ss.pairs.size() << '\n';
        if (with_pairs)
            for (const auto& p : ss.pairs)
                out << '\t' << table.lexicon.word(p.w1) << '\t' << table.lexicon.word(p.w2) << '\n';
    }
}

} // namespace morse
