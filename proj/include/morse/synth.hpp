#pragma once

// Synthetic vocabularies with planted concatenative morphology.
//
// Stems are random lowercase strings with base vectors of radius 5. Each
// planted rule owns a unit offset; a derived word gets base + offset plus
// Gaussian noise. Probe words glue a planted affix onto a fresh decoy base but
// receive an unrelated random vector, so they look segmentable while their
// meaning is not compositional.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "morse/corpus_io.hpp"
#include "morse/evaluation.hpp"
#include "morse/rules.hpp"

namespace morse {

struct PlantedRule {
    AffixKind kind = AffixKind::Suffix;
    std::string affix;
};

struct SynthSpec {
    std::size_t n_stems = 50;
    std::vector<PlantedRule> rules;
    std::size_t dim = 50;
    double noise_sigma = 0;  // per component, relative to the unit offset norm
    std::size_t n_decoys = 0;
    std::uint64_t seed = 1;
    std::size_t min_stem_len = 4;
    std::size_t max_stem_len = 8;

    void validate() const {
        if (dim < 2) throw InputError("synthetic dim must be >= 2");
        if (noise_sigma < 0) throw InputError("noise_sigma must be >= 0");
        if (rules.empty()) throw InputError("at least one planted rule required");
        if (min_stem_len < 1 || min_stem_len > max_stem_len) throw InputError("invalid stem length range");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (rules[i].affix.empty()) throw InputError("planted affixes must be non-empty");
            for (std::size_t j = 0; j < i; ++j)
                if (rules[j].kind == rules[i].kind && rules[j].affix == rules[i].affix)
                    throw InputError("duplicate planted affix: " + rules[i].affix);
        }
    }
};

struct SynthBundle {
    Vocabulary vocab;
    EmbeddingTable embeddings;
    std::vector<GoldEntry> gold;      // one single-boundary analysis per derived word
    std::vector<std::string> probes;  // non-compositional look-alikes
};

namespace detail {

class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : rng_(seed) {}

    std::string letters(std::size_t lo, std::size_t hi) {
        const std::size_t n = lo + rng_() % (hi - lo + 1);
        std::string s(n, 'a');
        for (auto& c : s) c = static_cast<char>('a' + rng_() % 26);
        return s;
    }

    std::vector<float> sphere(std::size_t dim, double radius) {
        std::vector<double> g(dim);
        double norm = 0;
        do {
            norm = 0;
            for (auto& x : g) {
                x = normal_(rng_);
                norm += x * x;
            }
        } while (norm == 0);
        norm = std::sqrt(norm);
        std::vector<float> out(dim);
        for (std::size_t k = 0; k < dim; ++k) out[k] = static_cast<float>(g[k] / norm * radius);
        return out;
    }

    double gaussian(double sigma) { return sigma == 0 ? 0.0 : normal_(rng_) * sigma; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline std::string attach(const PlantedRule& r, const std::string& stem) {
    return r.kind == AffixKind::Suffix ? stem + r.affix : r.affix + stem;
}

} // namespace detail

inline SynthBundle generate(const SynthSpec& spec) {
    spec.validate();
    constexpr int kMaxRetries = 1000;
    constexpr double kBaseRadius = 5.0;
    detail::SynthRng rng(spec.seed);

    std::vector<std::vector<float>> offsets;
    for (std::size_t r = 0; r < spec.rules.size(); ++r) offsets.push_back(rng.sphere(spec.dim, 1.0));

    std::unordered_set<std::string> taken;
    // Draws a base word whose derived forms are all fresh, reserving them.
    auto fresh_family = [&](const std::vector<PlantedRule>& rules) {
        for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
            std::string base = rng.letters(spec.min_stem_len, spec.max_stem_len);
            std::vector<std::string> family{base};
            for (const auto& r : rules) family.push_back(detail::attach(r, base));
            std::unordered_set<std::string> local(family.begin(), family.end());
            bool ok = local.size() == family.size();
            for (const auto& w : family) ok = ok && !taken.count(w);
            if (!ok) continue;
            taken.insert(family.begin(), family.end());
            return base;
        }
        throw InputError("synthetic generation: could not avoid word collisions");
    };

    std::vector<std::string> words;
    EmbeddingTable emb(spec.dim);
    SynthBundle out;
    std::vector<float> v(spec.dim);

    std::vector<std::string> stems;
    for (std::size_t s = 0; s < spec.n_stems; ++s) stems.push_back(fresh_family(spec.rules));
    for (const auto& stem : stems) {
        const auto base = rng.sphere(spec.dim, kBaseRadius);
        emb.add(stem, base);
        words.push_back(stem);
        for (std::size_t r = 0; r < spec.rules.size(); ++r) {
            for (std::size_t k = 0; k < spec.dim; ++k)
                v[k] = static_cast<float>(base[k] + offsets[r][k] + rng.gaussian(spec.noise_sigma));
            const std::string derived = detail::attach(spec.rules[r], stem);
            emb.add(derived, v);
            words.push_back(derived);
            Analysis a = spec.rules[r].kind == AffixKind::Suffix ? Analysis{stem, spec.rules[r].affix}
                                                                 : Analysis{spec.rules[r].affix, stem};
            out.gold.push_back({derived, {a}});
        }
    }

    for (std::size_t d = 0; d < spec.n_decoys; ++d) {
        const PlantedRule& r = spec.rules[d % spec.rules.size()];
        const std::string base = fresh_family({r});
        emb.add(base, rng.sphere(spec.dim, kBaseRadius));
        words.push_back(base);
        const std::string probe = detail::attach(r, base);
        emb.add(probe, rng.sphere(spec.dim, kBaseRadius));
        words.push_back(probe);
        out.probes.push_back(probe);
    }

    const std::size_t n = words.size();
    out.vocab = Vocabulary(std::move(words), n);
    out.embeddings = std::move(emb);
    return out;
}

/// Writes vocab.txt, embeddings.vec, gold.tsv and probes.txt into `dir`.
inline void write_bundle(const std::filesystem::path& dir, const SynthBundle& b) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw InputError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("vocab.txt");
        for (const auto& w : b.vocab.words()) f << w << '\n';
    }
    {
        auto f = open("embeddings.vec");
        write_embeddings(f, b.embeddings);
    }
    {
        auto f = open("gold.tsv");
        write_gold(f, b.gold);
    }
    {
        auto f = open("probes.txt");
        for (const auto& w : b.probes) f << w << '\n';
    }
}

} // namespace morse
