#pragma once

// Greedy iterative segmentation. Each iteration picks the best feasible rule
// that derives the current word from a shorter word, trying affix-adding
// rules before affix-replacing ones, and stops when neither stage is feasible.

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morse/error.hpp"
#include "morse/scoring.hpp"
#include "morse/utf8.hpp"

namespace morse {

using BoundaryCuts = std::vector<std::size_t>;

struct Thresholds {
    double r_sem = 0;
    double r_orth = 1;
    double w_sem = 0;
    double loc_sem = 0;

    void validate() const {
        if (!(r_orth >= 1)) throw InputError("t_r_orth must be >= 1");
        if (!(r_sem >= 0 && r_sem <= 1)) throw InputError("t_r_sem must lie in [0, 1]");
        if (!(w_sem >= 0 && w_sem <= 1)) throw InputError("t_w_sem must lie in [0, 1]");
        if (!(loc_sem >= -1 && loc_sem <= 1)) throw InputError("t_loc_sem must lie in [-1, 1]");
    }

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

inline void save_thresholds(std::ostream& out, const Thresholds& t) {
    out << "t_r_sem=" << detail::format_real(t.r_sem) << '\n'
        << "t_r_orth=" << detail::format_real(t.r_orth) << '\n'
        << "t_w_sem=" << detail::format_real(t.w_sem) << '\n'
        << "t_loc_sem=" << detail::format_real(t.loc_sem) << '\n';
}

/// Reads `key=value` lines; other keys and `#` comments are ignored, so a
/// tuning report doubles as a thresholds file.
inline Thresholds load_thresholds(std::istream& in) {
    Thresholds t;
    bool seen[4] = {};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptArtifact("thresholds file: missing '=' at line " + std::to_string(line_no));
        const std::string key = line.substr(0, eq);
        double v;
        auto assign = [&](double& slot, bool& flag) {
            if (!detail::parse_double(std::string_view(line).substr(eq + 1), v))
                throw CorruptArtifact("thresholds file: malformed value at line " + std::to_string(line_no));
            slot = v;
            flag = true;
        };
        if (key == "t_r_sem") assign(t.r_sem, seen[0]);
        else if (key == "t_r_orth") assign(t.r_orth, seen[1]);
        else if (key == "t_w_sem") assign(t.w_sem, seen[2]);
        else if (key == "t_loc_sem") assign(t.loc_sem, seen[3]);
    }
    for (bool s : seen)
        if (!s) throw CorruptArtifact("thresholds file: missing one of t_r_sem, t_r_orth, t_w_sem, t_loc_sem");
    try {
        t.validate();
    } catch (const InputError& e) {
        throw CorruptArtifact(std::string("thresholds file: ") + e.what());
    }
    return t;
}

enum class Stage { Add, Rep };

struct Candidate {
    const ScoredRule* rule = nullptr;
    const ScoredPair* pair = nullptr;
    std::string_view source;  // w' with (w', w) in the rule's support set
    double objective = 0;
};

namespace detail {

inline bool in_stage(const Rule& r, Stage stage) {
    if (stage == Stage::Add) return r.is_add();
    return r.is_rep() && utf8::length(r.from) < utf8::length(r.to);
}

} // namespace detail

/// Rules of the stage's class whose support set contains (w', w). Replacement
/// rules are restricted to those that shorten the word. Sorted by rule.
inline std::vector<Candidate> candidates(const ScoredModel& model, std::string_view w, Stage stage) {
    std::vector<Candidate> out;
    auto id = model.lexicon.find(std::string(w));
    if (!id) return out;
    for (const auto& ref : model.targets_of(*id)) {
        const ScoredRule& r = model.rules[ref.rule];
        if (!detail::in_stage(r.rule, stage)) continue;
        const ScoredPair& p = r.pairs[ref.pair];
        out.push_back({&r, &p, model.lexicon.word(p.pair.w1), 0});
    }
    return out;
}

/// log(1 + n) / log(1 + max support) so the orthographic term lies in [0, 1].
inline double normalized_orth(std::size_t r_orth, std::size_t max_support) {
    if (max_support == 0) return 0;
    return std::log1p(static_cast<double>(r_orth)) / std::log1p(static_cast<double>(max_support));
}

inline bool feasible(const ScoredRule& r, const PairScores& p, const Thresholds& th) {
    return r.scores.r_sem > th.r_sem && static_cast<double>(r.scores.r_orth) > th.r_orth && p.w_sem > th.w_sem &&
           p.loc_sem > th.loc_sem;
}

namespace detail {

inline std::optional<Candidate> best_candidate(const ScoredModel& model, WordId w, const Thresholds& th,
                                               Stage stage) {
    std::optional<Candidate> best;
    // Targets are listed in rule order, so strict comparisons keep the smaller rule on full ties.
    for (const auto& ref : model.targets_of(w)) {
        const ScoredRule& r = model.rules[ref.rule];
        const ScoredPair& p = r.pairs[ref.pair];
        if (!feasible(r, p.scores, th) || !in_stage(r.rule, stage)) continue;
        const double objective =
            p.scores.w_sem + p.scores.loc_sem + r.scores.r_sem + normalized_orth(r.scores.r_orth, model.max_support());
        if (!best || objective > best->objective ||
            (objective == best->objective && p.scores.loc_sem > best->pair->scores.loc_sem))
            best = Candidate{&r, &p, model.lexicon.word(p.pair.w1), objective};
    }
    return best;
}

struct WalkStep {
    const Candidate& choice;
    Stage stage;
    WordId input;
};

/// The greedy loop. `on_step` sees every accepted step in order; returns the lemma id.
template <typename OnStep>
WordId walk(const ScoredModel& model, WordId start, const Thresholds& th, OnStep&& on_step) {
    WordId current = start;
    for (;;) {
        auto best = best_candidate(model, current, th, Stage::Add);
        Stage stage = Stage::Add;
        if (!best) {
            best = best_candidate(model, current, th, Stage::Rep);
            stage = Stage::Rep;
        }
        if (!best) return current;
        on_step(WalkStep{*best, stage, current});
        current = best->pair->pair.w1;
    }
}

/// Tracks surface cuts in the original word's coordinates. Valid while only
/// add-rules have been applied; a replacement step records the cut between
/// its stem and the replaced affix and ends surface tracking.
class SurfaceTracker {
public:
    explicit SurfaceTracker(std::size_t length) : hi_(length) {}

    void apply(const Rule& r, Stage stage, std::uint32_t stem_len) {
        if (!surface_) return;
        const std::size_t to_len = utf8::length(r.to);
        if (stage == Stage::Add) {
            if (r.kind == AffixKind::Suffix) {
                hi_ -= to_len;
                cuts_.push_back(hi_);
            } else {
                lo_ += to_len;
                cuts_.push_back(lo_);
            }
        } else {
            cuts_.push_back(r.kind == AffixKind::Suffix ? lo_ + stem_len : lo_ + to_len);
            surface_ = false;
        }
    }

    std::vector<std::size_t> cuts() const {
        auto out = cuts_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<std::size_t> cuts_;
    std::size_t lo_ = 0, hi_;
    bool surface_ = true;
};

} // namespace detail

/// Feasible candidate maximizing w_sem + loc_sem + r_sem + normalized r_orth.
/// Ties go to higher loc_sem, then to the smaller rule.
inline std::optional<Candidate> best_rule(const ScoredModel& model, std::string_view w, const Thresholds& th,
                                          Stage stage) {
    auto id = model.lexicon.find(std::string(w));
    if (!id) return std::nullopt;
    return detail::best_candidate(model, *id, th, stage);
}

struct SegmentStep {
    Rule rule;
    Stage stage = Stage::Add;
    std::string input;
    std::string result;  // w'
    double objective = 0;
};

struct Segmentation {
    std::string word;
    std::vector<std::size_t> boundaries;  // internal cuts, in scalar values
    std::vector<SegmentStep> steps;
    std::string lemma;
    std::vector<std::string> canonical;

    std::vector<std::string> surface_morphemes() const {
        std::vector<std::string> out;
        std::size_t prev = 0;
        for (std::size_t b : boundaries) {
            const auto lo = utf8::byte_offset(word, prev), hi = utf8::byte_offset(word, b);
            out.push_back(word.substr(lo, hi - lo));
            prev = b;
        }
        out.push_back(word.substr(utf8::byte_offset(word, prev)));
        return out;
    }
};

/// Segments `word`. Words outside the model come back whole. After a
/// replacement step the loop continues on w' to extend the canonical chain,
/// but adds no further surface cuts since w' need not be a substring of the input.
inline Segmentation segment(const ScoredModel& model, std::string_view word, const Thresholds& th) {
    Segmentation seg;
    seg.word = std::string(word);
    seg.lemma = seg.word;
    seg.canonical = {seg.word};
    auto id = model.lexicon.find(seg.word);
    if (!id) return seg;

    std::vector<std::string> prefixes, suffixes;
    detail::SurfaceTracker surface(utf8::length(word));
    const WordId lemma = detail::walk(model, *id, th, [&](const detail::WalkStep& s) {
        const Rule& r = s.choice.rule->rule;
        surface.apply(r, s.stage, s.choice.pair->pair.stem_len);
        (r.kind == AffixKind::Suffix ? suffixes : prefixes).push_back(r.to);
        seg.steps.push_back({r, s.stage, model.lexicon.word(s.input), std::string(s.choice.source),
                             s.choice.objective});
    });
    seg.boundaries = surface.cuts();
    seg.lemma = model.lexicon.word(lemma);
    seg.canonical = prefixes;
    seg.canonical.push_back(seg.lemma);
    seg.canonical.insert(seg.canonical.end(), suffixes.rbegin(), suffixes.rend());
    return seg;
}

/// Surface cut positions only; same result as segment(...).boundaries.
inline BoundaryCuts segment_boundaries(const ScoredModel& model, std::string_view word, const Thresholds& th) {
    auto id = model.lexicon.find(std::string(word));
    if (!id) return {};
    detail::SurfaceTracker surface(utf8::length(word));
    detail::walk(model, *id, th, [&](const detail::WalkStep& s) {
        surface.apply(s.choice.rule->rule, s.stage, s.choice.pair->pair.stem_len);
    });
    return surface.cuts();
}

/// Morphemes with full forms restored: prefixes, final lemma, suffixes, in surface order.
inline std::vector<std::string> segment_canonical(const ScoredModel& model, std::string_view word,
                                                  const Thresholds& th) {
    return segment(model, word, th).canonical;
}

// ---------------------------------------------------------------------------
// Batch output format

inline std::string escape_morpheme(std::string_view m) {
    std::string out;
    out.reserve(m.size());
    for (char c : m) {
        if (c == '-' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

/// Joins morphemes with `-`, escaping literal `-` and `\`.
inline std::string join_surface(const std::vector<std::string>& morphemes) {
    std::string out;
    for (std::size_t i = 0; i < morphemes.size(); ++i) {
        if (i) out.push_back('-');
        out += escape_morpheme(morphemes[i]);
    }
    return out;
}

/// Inverse of join_surface.
inline std::vector<std::string> split_surface(std::string_view s) {
    std::vector<std::string> out(1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            out.back().push_back(s[++i]);
        } else if (s[i] == '-') {
            out.emplace_back();
        } else {
            out.back().push_back(s[i]);
        }
    }
    return out;
}

inline std::string format_segmentation(const Segmentation& seg, bool canonical) {
    std::string line = seg.word + '\t' + join_surface(seg.surface_morphemes());
    if (canonical) {
        line.push_back('\t');
        for (std::size_t i = 0; i < seg.canonical.size(); ++i) {
            if (i) line.push_back(' ');
            line += seg.canonical[i];
        }
    }
    return line;
}

} // namespace morse
