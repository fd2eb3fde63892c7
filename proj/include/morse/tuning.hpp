#pragma once

// Threshold fitting by exhaustive grid search, precision/recall sweeps and
// tuning-set size curves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "morse/evaluation.hpp"
#include "morse/parallel.hpp"
#include "morse/segmenter.hpp"

namespace morse {

enum class ThresholdName { RSem = 0, ROrth = 1, WSem = 2, LocSem = 3 };

inline constexpr std::array<ThresholdName, 4> kAllThresholds = {ThresholdName::RSem, ThresholdName::ROrth,
                                                                 ThresholdName::WSem, ThresholdName::LocSem};

inline std::string_view to_string(ThresholdName n) {
    switch (n) {
    case ThresholdName::RSem: return "t_r_sem";
    case ThresholdName::ROrth: return "t_r_orth";
    case ThresholdName::WSem: return "t_w_sem";
    case ThresholdName::LocSem: return "t_loc_sem";
    }
    return "?";
}

inline ThresholdName parse_threshold_name(std::string_view s) {
    for (auto n : kAllThresholds)
        if (s == to_string(n)) return n;
    throw InputError("unknown threshold name: " + std::string(s));
}

inline double& get(Thresholds& t, ThresholdName n) {
    switch (n) {
    case ThresholdName::RSem: return t.r_sem;
    case ThresholdName::ROrth: return t.r_orth;
    case ThresholdName::WSem: return t.w_sem;
    case ThresholdName::LocSem: return t.loc_sem;
    }
    return t.r_sem;
}

inline double get(const Thresholds& t, ThresholdName n) { return get(const_cast<Thresholds&>(t), n); }

/// One sorted value list per threshold.
struct Grid {
    std::array<std::vector<double>, 4> axes;

    std::vector<double>& axis(ThresholdName n) { return axes[static_cast<int>(n)]; }
    const std::vector<double>& axis(ThresholdName n) const { return axes[static_cast<int>(n)]; }

    std::size_t size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.size();
        return n;
    }

    void validate() const {
        for (auto n : kAllThresholds) {
            const auto& a = axis(n);
            if (a.empty()) throw InputError("grid axis " + std::string(to_string(n)) + " is empty");
            if (!std::is_sorted(a.begin(), a.end()))
                throw InputError("grid axis " + std::string(to_string(n)) + " is not sorted ascending");
        }
    }

    Thresholds at(const std::array<std::size_t, 4>& idx) const {
        Thresholds t;
        for (auto n : kAllThresholds) get(t, n) = axis(n)[idx[static_cast<int>(n)]];
        return t;
    }

    /// r_orth on a log-spaced integer list; semantic thresholds on linear ranges.
    static Grid defaults() {
        Grid g;
        g.axis(ThresholdName::ROrth) = {2, 5, 10, 25, 50, 100, 250, 500, 1000};
        for (int i = 0; i <= 10; ++i) {
            g.axis(ThresholdName::RSem).push_back(i / 20.0);
            g.axis(ThresholdName::WSem).push_back(i / 20.0);
        }
        for (int i = 0; i <= 7; ++i) g.axis(ThresholdName::LocSem).push_back(i / 10.0);
        return g;
    }
};

/// Comma-separated ascending list, e.g. "0,0.05,0.1".
inline std::vector<double> parse_axis(std::string_view spec) {
    std::vector<double> out;
    while (true) {
        const auto comma = spec.find(',');
        auto tok = spec.substr(0, comma);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        double v;
        if (!detail::parse_double(tok, v)) throw InputError("malformed grid value '" + std::string(tok) + "'");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        spec.remove_prefix(comma + 1);
    }
    if (!std::is_sorted(out.begin(), out.end())) throw InputError("grid values must be ascending");
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Gold entries in a canonical order, so results never depend on file order.
inline std::vector<GoldEntry> canonical_gold(std::vector<GoldEntry> gold) {
    std::sort(gold.begin(), gold.end(), [](const GoldEntry& a, const GoldEntry& b) { return a.word < b.word; });
    return gold;
}

/// Boundary metrics of the segmenter under `th` on `gold`.
inline Metrics evaluate(const ScoredModel& model, const std::vector<GoldEntry>& gold, const Thresholds& th) {
    std::vector<BoundarySet> pred(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) pred[i] = segment_boundaries(model, gold[i].word, th);
    return boundary_eval_with([&](std::size_t i) -> const BoundarySet& { return pred[i]; }, gold);
}

struct TuneResult {
    Thresholds thresholds;
    Metrics metrics;
    std::size_t points_evaluated = 0;
};

struct TuneOptions {
    bool refine = true;
    unsigned jobs = 1;
};

namespace detail {

inline std::array<double, 4> key_of(const Thresholds& t) { return {t.r_sem, t.r_orth, t.w_sem, t.loc_sem}; }

/// Higher F1 wins; equal F1 goes to the strictest thresholds (lexicographically
/// largest in r_sem, r_orth, w_sem, loc_sem order).
inline bool better(const Metrics& a, const Thresholds& ta, const Metrics& b, const Thresholds& tb) {
    if (a.f1 != b.f1) return a.f1 > b.f1;
    return key_of(ta) > key_of(tb);
}

inline TuneResult search(const ScoredModel& model, const std::vector<GoldEntry>& gold, const Grid& grid,
                         unsigned jobs) {
    const std::size_t n = grid.size();
    std::vector<Metrics> results(n);
    std::vector<Thresholds> points(n);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::array<std::size_t, 4> idx{};
        std::size_t rem = flat;
        for (int a = 3; a >= 0; --a) {
            idx[a] = rem % grid.axes[a].size();
            rem /= grid.axes[a].size();
        }
        points[flat] = grid.at(idx);
    }
    parallel_for(n, jobs, [&](std::size_t i) { results[i] = evaluate(model, gold, points[i]); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (better(results[i], points[i], results[best], points[best])) best = i;
    return {points[best], results[best], n};
}

/// Neighbourhood of `v` in `axis`, each adjacent interval split into `parts` steps.
inline std::vector<double> refine_axis(const std::vector<double>& axis, double v, int parts) {
    const auto pos = static_cast<std::size_t>(std::find(axis.begin(), axis.end(), v) - axis.begin());
    std::vector<double> out{v};
    auto fill = [&](double a, double b) {
        for (int k = 0; k <= parts; ++k) out.push_back(a + (b - a) * k / parts);
    };
    if (pos > 0) fill(axis[pos - 1], v);
    if (pos + 1 < axis.size()) fill(v, axis[pos + 1]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace detail

/// Coarse exhaustive search, then one refinement pass on a local grid around
/// the coarse optimum (each neighbouring interval split in five).
inline TuneResult tune(const ScoredModel& model, const std::vector<GoldEntry>& gold_in, const Grid& grid,
                       const TuneOptions& opt = {}) {
    if (gold_in.empty()) throw InputError("empty tuning set");
    grid.validate();
    const auto gold = canonical_gold(gold_in);
    TuneResult best = detail::search(model, gold, grid, opt.jobs);
    if (!opt.refine) return best;
    Grid local;
    for (auto n : kAllThresholds) local.axis(n) = detail::refine_axis(grid.axis(n), get(best.thresholds, n), 5);
    TuneResult fine = detail::search(model, gold, local, opt.jobs);
    fine.points_evaluated += best.points_evaluated;
    if (detail::better(fine.metrics, fine.thresholds, best.metrics, best.thresholds)) return fine;
    best.points_evaluated = fine.points_evaluated;
    return best;
}

struct SweepRow {
    double v1 = 0, v2 = 0;
    Metrics metrics;
};

/// Precision/recall over the product of two grid axes; the other two
/// thresholds stay at their values in `base`.
inline std::vector<SweepRow> sweep(const ScoredModel& model, const std::vector<GoldEntry>& gold_in,
                                   ThresholdName axis1, ThresholdName axis2, const Grid& grid,
                                   const Thresholds& base, unsigned jobs = 1) {
    if (axis1 == axis2) throw InputError("sweep axes must differ");
    const auto gold = canonical_gold(gold_in);
    const auto& a1 = grid.axis(axis1);
    const auto& a2 = grid.axis(axis2);
    std::vector<SweepRow> rows(a1.size() * a2.size());
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        Thresholds t = base;
        get(t, axis1) = a1[i / a2.size()];
        get(t, axis2) = a2[i % a2.size()];
        rows[i] = {get(t, axis1), get(t, axis2), evaluate(model, gold, t)};
    });
    return rows;
}

inline void write_sweep_csv(std::ostream& out, ThresholdName axis1, ThresholdName axis2,
                            const std::vector<SweepRow>& rows) {
    out << to_string(axis1) << ',' << to_string(axis2) << ",precision,recall\n";
    for (const auto& r : rows)
        out << detail::format_real(r.v1) << ',' << detail::format_real(r.v2) << ','
            << detail::format_real(r.metrics.precision) << ',' << detail::format_real(r.metrics.recall) << '\n';
}

/// Seeded Fisher-Yates with a portable index draw.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

struct CurvePoint {
    double fraction = 0;
    std::size_t tuning_words = 0;
    Thresholds thresholds;
    Metrics heldout;
};

/// For each fraction, tunes on that prefix of a seeded shuffle of `tuning`
/// and reports boundary metrics on `heldout`.
inline std::vector<CurvePoint> tuning_curve(const ScoredModel& model, const std::vector<GoldEntry>& tuning,
                                            const std::vector<GoldEntry>& heldout,
                                            const std::vector<double>& fractions, const Grid& grid,
                                            std::uint64_t seed, const TuneOptions& opt = {}) {
    auto order = canonical_gold(tuning);
    seeded_shuffle(order, seed);
    const auto test = canonical_gold(heldout);
    std::vector<CurvePoint> out;
    for (double f : fractions) {
        if (!(f > 0 && f <= 1)) throw InputError("tuning fractions must lie in (0, 1]");
        const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(order.size()) + 0.5));
        if (k == 0) throw InputError("empty tuning subset");
        std::vector<GoldEntry> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        auto fit = tune(model, subset, grid, opt);
        out.push_back({f, k, fit.thresholds, evaluate(model, test, fit.thresholds)});
    }
    return out;
}

/// Single-set form: a seeded 80/20 split into tuning and held-out words.
inline std::vector<CurvePoint> tuning_curve(const ScoredModel& model, const std::vector<GoldEntry>& gold,
                                            const std::vector<double>& fractions, const Grid& grid,
                                            std::uint64_t seed, const TuneOptions& opt = {}) {
    auto all = canonical_gold(gold);
    seeded_shuffle(all, seed);
    const std::size_t cut = all.size() * 4 / 5;
    std::vector<GoldEntry> tuning(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<GoldEntry> heldout(all.begin() + static_cast<std::ptrdiff_t>(cut), all.end());
    if (heldout.empty()) throw InputError("gold set too small for a held-out split");
    return tuning_curve(model, tuning, heldout, fractions, grid, seed + 1, opt);
}

} // namespace morse
