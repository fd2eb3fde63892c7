#pragma once

// Vocabulary-wide and local confidence scores for mined rules and pairs.
//
// For a rule r with support set SS:
//   r_orth  = |SS|
//   r_sem   = |{(p, q) in SS x SS : agree(p, q)}| / |SS|^2   (ordered, p == q included)
// and for a pair p = (w1, w2) in SS:
//   w_sem   = |{q in SS : agree(p, q)}| / |SS|
//   loc_sem = cos(v(w1), v(w2))
// where agree((w1, w2), (w3, w4)) holds iff cos(v(w4), v(w2) - v(w1) + v(w3)) > tau.
//
// Support sets larger than the sampling cap are scored on a seeded uniform
// sample of `cap` pairs; r_orth always reports the true size.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "morse/corpus_io.hpp"
#include "morse/error.hpp"
#include "morse/parallel.hpp"
#include "morse/rules.hpp"

namespace morse {

inline constexpr double kDefaultTau = 0.1;

template <typename U, typename V>
double cosine(const U& u, const V& v) {
    if (std::size(u) != std::size(v)) throw std::invalid_argument("cosine: length mismatch");
    double dot = 0, nu = 0, nv = 0;
    auto it = std::begin(v);
    for (auto x : u) {
        const double a = x, b = *it++;
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0 || nv == 0) throw std::domain_error("cosine: zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Analogy test for the pair-of-pairs ((w1, w2), (w3, w4)), asymmetric as written.
template <typename Vec>
bool agree(const Vec& v1, const Vec& v2, const Vec& v3, const Vec& v4, double tau = kDefaultTau) {
    const std::size_t d = std::size(v1);
    std::vector<double> probe(d);
    double zero = 0;
    for (std::size_t k = 0; k < d; ++k) {
        probe[k] = (static_cast<double>(v2[k]) - static_cast<double>(v1[k])) + static_cast<double>(v3[k]);
        zero += probe[k] * probe[k];
    }
    if (zero == 0) return false;
    return cosine(v4, probe) > tau;
}

struct RuleScores {
    std::size_t r_orth = 0;
    double r_sem = 0;
    bool sampled = false;
    friend bool operator==(const RuleScores&, const RuleScores&) = default;
};

struct PairScores {
    double w_sem = 0;
    double loc_sem = 0;
    friend bool operator==(const PairScores&, const PairScores&) = default;
};

struct ScoringOptions {
    double tau = kDefaultTau;
    std::uint64_t seed = 42;
    bool prune_singletons = false;
    unsigned jobs = 1;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t rule_seed(const Rule& r, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(r.kind));
    for (char c : r.from) h = splitmix64(h ^ static_cast<unsigned char>(c));
    h = splitmix64(h ^ 0xFF);
    for (char c : r.to) h = splitmix64(h ^ static_cast<unsigned char>(c));
    return h;
}

} // namespace detail

/// Indices of the pairs used for semantic scoring: all of them when n <= cap,
/// otherwise a sorted uniform sample of size cap (partial Fisher-Yates).
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t cap, const Rule& rule,
                                               std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n <= cap) return idx;
    std::mt19937_64 rng(detail::rule_seed(rule, seed));
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Scores one support set. `row(id)` maps a word id to its embedding.
class SupportSetScorer {
public:
    template <typename RowFn>
    SupportSetScorer(const SupportSet& ss, RowFn&& row, std::size_t cap, std::uint64_t seed, double tau)
        : ss_(ss), tau_(tau), dim_(0) {
        if (ss.pairs.empty()) throw std::invalid_argument("empty support set");
        sample_ = sample_indices(ss.pairs.size(), cap, ss.rule, seed);
        auto first = row(ss.pairs.front().w1);
        dim_ = first.size();
        const std::size_t n = ss.pairs.size();
        w1_.resize(n * dim_);
        w2_.resize(n * dim_);
        for (std::size_t i = 0; i < n; ++i) {
            auto a = row(ss.pairs[i].w1);
            auto b = row(ss.pairs[i].w2);
            for (std::size_t k = 0; k < dim_; ++k) {
                w1_[i * dim_ + k] = a[k];
                w2_[i * dim_ + k] = b[k];
            }
        }
        norm2_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t k = 0; k < dim_; ++k) s += w2_[i * dim_ + k] * w2_[i * dim_ + k];
            norm2_[i] = s;
        }
        in_sample_.assign(n, false);
        for (auto i : sample_) in_sample_[i] = true;
    }

    bool sampled() const { return sample_.size() < ss_.pairs.size(); }

    /// agree(pairs[p], pairs[q]).
    bool agree_at(std::size_t p, std::size_t q) const {
        const double* a = &w1_[p * dim_];
        const double* b = &w2_[p * dim_];
        const double* c = &w1_[q * dim_];
        const double* d = &w2_[q * dim_];
        double dot = 0, tt = 0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double t = (b[k] - a[k]) + c[k];
            dot += d[k] * t;
            tt += t * t;
        }
        if (tt == 0) return false;
        return dot / (std::sqrt(norm2_[q]) * std::sqrt(tt)) > tau_;
    }

    RuleScores rule_scores() const {
        std::size_t cluster = 0;
        for (auto p : sample_)
            for (auto q : sample_) cluster += agree_at(p, q);
        const double m = static_cast<double>(sample_.size());
        return {ss_.pairs.size(), static_cast<double>(cluster) / (m * m), sampled()};
    }

    PairScores pair_scores(std::size_t p) const {
        std::size_t hits = 0;
        for (auto q : sample_) hits += agree_at(p, q);
        std::size_t denom = sample_.size();
        if (!in_sample_[p]) {
            hits += agree_at(p, p);
            ++denom;
        }
        PairScores s;
        s.w_sem = static_cast<double>(hits) / static_cast<double>(denom);
        s.loc_sem = cosine(std::span<const double>(&w1_[p * dim_], dim_), std::span<const double>(&w2_[p * dim_], dim_));
        return s;
    }

private:
    const SupportSet& ss_;
    double tau_;
    std::size_t dim_;
    std::vector<std::size_t> sample_;
    std::vector<bool> in_sample_;
    std::vector<double> w1_, w2_, norm2_;
};

namespace detail {
inline auto lexicon_rows(const Lexicon& lex, const EmbeddingTable& emb) {
    return [&lex, &emb](WordId id) { return emb.at(lex.word(id)); };
}
} // namespace detail

inline RuleScores score_rule(const SupportSet& ss, const Lexicon& lex, const EmbeddingTable& emb,
                             std::size_t cap, std::uint64_t seed, double tau = kDefaultTau) {
    return SupportSetScorer(ss, detail::lexicon_rows(lex, emb), cap, seed, tau).rule_scores();
}

inline PairScores score_pair(const WordPair& p, const SupportSet& ss, const Lexicon& lex, const EmbeddingTable& emb,
                             std::size_t cap, std::uint64_t seed, double tau = kDefaultTau) {
    auto it = std::find(ss.pairs.begin(), ss.pairs.end(), p);
    if (it == ss.pairs.end()) throw std::invalid_argument("pair not in support set");
    SupportSetScorer scorer(ss, detail::lexicon_rows(lex, emb), cap, seed, tau);
    return scorer.pair_scores(static_cast<std::size_t>(it - ss.pairs.begin()));
}

struct ScoredPair {
    WordPair pair;
    PairScores scores;
    friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

struct ScoredRule {
    Rule rule;
    RuleScores scores;
    std::vector<ScoredPair> pairs;
    friend bool operator==(const ScoredRule&, const ScoredRule&) = default;
};

/// Where a word occurs as the derived (target) side of a support pair.
struct TargetRef {
    std::uint32_t rule;
    std::uint32_t pair;
};

/// Trained state: every rule with its scores and per-pair scores.
class ScoredModel {
public:
    static constexpr int kFormatVersion = 1;

    MiningConfig mining;
    double tau = kDefaultTau;
    std::uint64_t seed = 42;
    bool pruned_singletons = false;
    std::size_t dim = 0;
    std::uint64_t vocab_hash = 0;
    Lexicon lexicon;
    std::vector<ScoredRule> rules;

    /// Builds the inference index. Call after `rules` or `lexicon` change.
    void finalize() {
        by_target_.assign(lexicon.size(), {});
        max_support_ = 0;
        for (std::uint32_t r = 0; r < rules.size(); ++r) {
            max_support_ = std::max(max_support_, rules[r].scores.r_orth);
            for (std::uint32_t p = 0; p < rules[r].pairs.size(); ++p)
                by_target_[rules[r].pairs[p].pair.w2].push_back({r, p});
        }
    }

    std::span<const TargetRef> targets_of(WordId w) const { return by_target_[w]; }
    std::size_t max_support() const { return max_support_; }

    const ScoredRule* find(const Rule& r) const {
        auto it = std::lower_bound(rules.begin(), rules.end(), r,
                                   [](const ScoredRule& s, const Rule& key) { return s.rule < key; });
        return (it != rules.end() && it->rule == r) ? &*it : nullptr;
    }

    std::uint64_t config_hash() const;

private:
    std::vector<std::vector<TargetRef>> by_target_;
    std::size_t max_support_ = 0;
};

/// Scores every rule of the table. Deterministic for a given seed regardless of `jobs`.
inline ScoredModel score_all(const RuleTable& table, const EmbeddingTable& emb, const MiningConfig& mining,
                             const ScoringOptions& opt = {}) {
    ScoredModel model;
    model.mining = mining;
    model.tau = opt.tau;
    model.seed = opt.seed;
    model.pruned_singletons = opt.prune_singletons;
    model.dim = emb.dim();
    model.lexicon = table.lexicon;
    model.vocab_hash = table.lexicon.hash();

    std::vector<const SupportSet*> work;
    for (const auto& ss : table.rules)
        if (!(opt.prune_singletons && ss.pairs.size() == 1)) work.push_back(&ss);

    // Resolve embedding rows once; lookups by string inside the quadratic loops would dominate.
    std::vector<std::span<const float>> rows(table.lexicon.size());
    for (WordId i = 0; i < rows.size(); ++i)
        if (emb.contains(table.lexicon.word(i))) rows[i] = emb.at(table.lexicon.word(i));
    auto row = [&](WordId id) {
        if (rows[id].empty()) throw InputError("no embedding for word: " + table.lexicon.word(id));
        return rows[id];
    };

    model.rules.resize(work.size());
    parallel_for(work.size(), opt.jobs, [&](std::size_t i) {
        const SupportSet& ss = *work[i];
        SupportSetScorer scorer(ss, row, mining.max_support, opt.seed, opt.tau);
        ScoredRule& out = model.rules[i];
        out.rule = ss.rule;
        out.scores = scorer.rule_scores();
        out.pairs.resize(ss.pairs.size());
        for (std::size_t p = 0; p < ss.pairs.size(); ++p) out.pairs[p] = {ss.pairs[p], scorer.pair_scores(p)};
    });
    model.finalize();
    return model;
}

// ---------------------------------------------------------------------------
// Text serialization

namespace detail {

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string model_header(const ScoredModel& m) {
    std::string h;
    h += "min_stem\t" + std::to_string(m.mining.min_stem) + "\n";
    h += "max_affix\t" + std::to_string(m.mining.max_affix) + "\n";
    h += "sample_cap\t" + std::to_string(m.mining.max_support) + "\n";
    h += "seed\t" + std::to_string(m.seed) + "\n";
    h += "tau\t" + format_real(m.tau) + "\n";
    h += "dim\t" + std::to_string(m.dim) + "\n";
    h += "pruned_singletons\t" + std::string(m.pruned_singletons ? "1" : "0") + "\n";
    h += "vocab_hash\t" + hex64(m.vocab_hash) + "\n";
    return h;
}

} // namespace detail

inline std::uint64_t ScoredModel::config_hash() const { return detail::fnv1a(detail::model_header(*this)); }

/// Versioned TSV model: magic line, config header, config hash, lexicon, then
/// `R` rule records each followed by its `P` pair records.
inline void save_model(std::ostream& out, const ScoredModel& m) {
    using detail::format_real;
    out << "morse-model\t" << ScoredModel::kFormatVersion << '\n';
    out << detail::model_header(m);
    out << "config_hash\t" << detail::hex64(m.config_hash()) << '\n';
    out << "words\t" << m.lexicon.size() << '\n';
    for (const auto& w : m.lexicon.words()) out << w << '\n';
    out << "rules\t" << m.rules.size() << '\n';
    for (const auto& r : m.rules) {
        out << "R\t" << to_string(r.rule.kind) << '\t' << affix_text(r.rule.from) << '\t' << affix_text(r.rule.to)
            << '\t' << r.scores.r_orth << '\t' << format_real(r.scores.r_sem) << '\t' << (r.scores.sampled ? 1 : 0)
            << '\t' << r.pairs.size() << '\n';
        for (const auto& p : r.pairs)
            out << "P\t" << m.lexicon.word(p.pair.w1) << '\t' << m.lexicon.word(p.pair.w2) << '\t'
                << p.pair.stem_len << '\t' << format_real(p.scores.w_sem) << '\t' << format_real(p.scores.loc_sem)
                << '\n';
    }
    out << "end\n";
}

namespace detail {

class ModelReader {
public:
    explicit ModelReader(std::istream& in) : in_(in) {}

    std::vector<std::string> fields(std::size_t expected, std::string_view tag = {}) {
        std::string line;
        if (!std::getline(in_, line)) fail("unexpected end of file");
        ++line_no_;
        strip_cr(line);
        std::vector<std::string> out;
        std::size_t start = 0;
        for (;;) {
            auto tab = line.find('\t', start);
            out.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (out.size() != expected) fail("expected " + std::to_string(expected) + " fields");
        if (!tag.empty() && out[0] != tag) fail("expected record '" + std::string(tag) + "'");
        return out;
    }

    std::string line() {
        std::string l;
        if (!std::getline(in_, l)) fail("unexpected end of file");
        ++line_no_;
        strip_cr(l);
        return l;
    }

    template <typename Int>
    Int integer(const std::string& s) {
        Int v{};
        if (!parse_int(s, v)) fail("malformed integer '" + s + "'");
        return v;
    }

    double real(const std::string& s) {
        double v;
        if (!parse_double(s, v)) fail("malformed real '" + s + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw CorruptArtifact("model file line " + std::to_string(line_no_) + ": " + what);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

} // namespace detail

inline ScoredModel load_model(std::istream& in) {
    detail::ModelReader rd(in);
    ScoredModel m;
    auto magic = rd.fields(2);
    if (magic[0] != "morse-model") rd.fail("not a model file");
    const int version = rd.integer<int>(magic[1]);
    if (version != ScoredModel::kFormatVersion)
        rd.fail("unsupported model format version " + magic[1] + " (expected " +
                std::to_string(ScoredModel::kFormatVersion) + ")");
    m.mining.min_stem = rd.integer<std::size_t>(rd.fields(2, "min_stem")[1]);
    m.mining.max_affix = rd.integer<std::size_t>(rd.fields(2, "max_affix")[1]);
    m.mining.max_support = rd.integer<std::size_t>(rd.fields(2, "sample_cap")[1]);
    m.seed = rd.integer<std::uint64_t>(rd.fields(2, "seed")[1]);
    m.tau = rd.real(rd.fields(2, "tau")[1]);
    m.dim = rd.integer<std::size_t>(rd.fields(2, "dim")[1]);
    m.pruned_singletons = rd.integer<int>(rd.fields(2, "pruned_singletons")[1]) != 0;
    {
        auto f = rd.fields(2, "vocab_hash");
        std::uint64_t h = 0;
        auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), h, 16);
        if (ec != std::errc() || ptr != f[1].data() + f[1].size()) rd.fail("malformed vocab_hash");
        m.vocab_hash = h;
    }
    const auto stored_hash = rd.fields(2, "config_hash")[1];
    if (stored_hash != detail::hex64(m.config_hash())) rd.fail("config hash mismatch");

    const auto n_words = rd.integer<std::size_t>(rd.fields(2, "words")[1]);
    std::vector<std::string> words;
    words.reserve(n_words);
    for (std::size_t i = 0; i < n_words; ++i) words.push_back(rd.line());
    if (!std::is_sorted(words.begin(), words.end()) ||
        std::adjacent_find(words.begin(), words.end()) != words.end())
        rd.fail("lexicon not strictly sorted");
    m.lexicon = Lexicon(std::move(words));
    if (m.lexicon.hash() != m.vocab_hash) rd.fail("lexicon does not match vocab_hash");

    auto word_id = [&](const std::string& w) {
        auto id = m.lexicon.find(w);
        if (!id) rd.fail("unknown word '" + w + "'");
        return *id;
    };

    const auto n_rules = rd.integer<std::size_t>(rd.fields(2, "rules")[1]);
    m.rules.resize(n_rules);
    for (auto& r : m.rules) {
        auto f = rd.fields(8, "R");
        try {
            r.rule = {parse_kind(f[1]), affix_from_text(f[2]), affix_from_text(f[3])};
        } catch (const InputError& e) {
            rd.fail(e.what());
        }
        r.scores.r_orth = rd.integer<std::size_t>(f[4]);
        r.scores.r_sem = rd.real(f[5]);
        r.scores.sampled = rd.integer<int>(f[6]) != 0;
        const auto n_pairs = rd.integer<std::size_t>(f[7]);
        if (n_pairs != r.scores.r_orth) rd.fail("pair count differs from r_orth");
        r.pairs.resize(n_pairs);
        for (auto& p : r.pairs) {
            auto g = rd.fields(6, "P");
            p.pair = {word_id(g[1]), word_id(g[2]), rd.integer<std::uint32_t>(g[3])};
            p.scores = {rd.real(g[4]), rd.real(g[5])};
        }
    }
    if (!std::is_sorted(m.rules.begin(), m.rules.end(),
                        [](const ScoredRule& a, const ScoredRule& b) { return a.rule < b.rule; }))
        rd.fail("rules not sorted");
    if (rd.line() != "end") rd.fail("missing end marker");
    m.finalize();
    return m;
}

} // namespace morse
