#pragma once

// Vocabulary and word-embedding ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morse/error.hpp"
#include "morse/utf8.hpp"

namespace morse {

namespace detail {

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        if (i == s.size()) break;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

/// Shortest representation that reads back to the same double.
inline std::string format_real(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

template <typename Int>
bool parse_int(std::string_view tok, Int& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

} // namespace detail

/// Frequency-ranked word list. Rank 0 is the most frequent word.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> words, std::size_t cap) : cap_(cap) {
        if (words.size() > cap) words.resize(cap);
        words_.reserve(words.size());
        for (auto& w : words) {
            if (w.empty()) throw InputError("empty word in vocabulary");
            if (rank_of_.emplace(w, words_.size()).second) words_.push_back(std::move(w));
        }
    }

    const std::vector<std::string>& words() const { return words_; }
    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }
    std::size_t cap() const { return cap_; }
    bool contains(const std::string& w) const { return rank_of_.count(w) != 0; }
    std::size_t rank_of(const std::string& w) const { return rank_of_.at(w); }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> rank_of_;
    std::size_t cap_ = std::numeric_limits<std::size_t>::max();
};

/// Reads `word[<TAB>count]` lines. Without counts, file order is rank order.
/// Ties in count keep file order; repeated words keep their first occurrence.
inline Vocabulary load_vocab(std::istream& in, std::size_t cap, bool lowercase = false) {
    if (cap == 0) throw InputError("vocabulary cap must be positive");
    struct Entry {
        std::string word;
        long long count;
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    int counted = -1;  // unknown until the first non-empty line
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        const bool has_count = tab != std::string::npos;
        if (counted == -1) counted = has_count ? 1 : 0;
        if (has_count != (counted == 1)) throw line_error("mixed counted and bare vocabulary lines", line_no);
        std::string word = line.substr(0, tab);
        long long count = 0;
        if (has_count) {
            std::string_view tok = std::string_view(line).substr(tab + 1);
            if (!detail::parse_int(tok, count) || count < 0) throw line_error("malformed count", line_no);
        }
        if (word.empty()) throw line_error("empty word", line_no);
        if (!utf8::is_valid(word)) throw line_error("invalid UTF-8", line_no);
        if (lowercase) word = utf8::to_lower(word);
        if (seen.emplace(word, entries.size()).second) entries.push_back({std::move(word), count});
    }
    if (entries.empty()) throw InputError("empty vocabulary");
    if (counted == 1)
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry& a, const Entry& b) { return a.count > b.count; });
    std::vector<std::string> words;
    words.reserve(std::min(cap, entries.size()));
    for (auto& e : entries) {
        if (words.size() == cap) break;
        words.push_back(std::move(e.word));
    }
    return Vocabulary(std::move(words), cap);
}

/// Dense word vectors of a fixed dimension, stored row-major in insertion order.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    bool contains(const std::string& w) const { return index_.count(w) != 0; }

    std::span<const float> at(const std::string& w) const {
        auto it = index_.find(w);
        if (it == index_.end()) throw InputError("no embedding for word: " + w);
        return row(it->second);
    }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    /// Adds a vector unless the word is already present. Returns false on duplicates.
    bool add(const std::string& word, std::span<const float> v) {
        if (v.size() != dim_) throw InputError("dimension mismatch for word: " + word);
        if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; }))
            throw InputError("zero vector: " + word);
        if (!index_.emplace(word, words_.size()).second) return false;
        words_.push_back(word);
        data_.insert(data_.end(), v.begin(), v.end());
        return true;
    }

private:
    std::size_t dim_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<float> data_;
};

/// Parses the word2vec-style text format: a `N D` header, then `word v1 ... vD` rows.
inline EmbeddingTable load_embeddings(std::istream& in, bool lowercase = false) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        auto toks = detail::split_ws(line);
        std::size_t n = 0;
        if (toks.size() != 2 || !detail::parse_int(toks[0], n) || !detail::parse_int(toks[1], dim) || dim == 0)
            throw line_error("malformed embedding header", line_no);
        break;
    }
    if (dim == 0) throw InputError("empty embedding file");
    EmbeddingTable table(dim);
    std::vector<float> v(dim);
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        auto toks = detail::split_ws(line);
        if (toks.size() != dim + 1) throw line_error("dimension mismatch", line_no);
        std::string word(toks[0]);
        if (!utf8::is_valid(word)) throw line_error("invalid UTF-8", line_no);
        for (std::size_t k = 0; k < dim; ++k) {
            double x;
            if (!detail::parse_double(toks[k + 1], x)) throw line_error("non-numeric component", line_no);
            v[k] = static_cast<float>(x);
        }
        if (lowercase) word = utf8::to_lower(word);
        table.add(word, v);
    }
    return table;
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    out << table.size() << ' ' << table.dim() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.words()[i];
        for (float x : table.row(i)) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
            out << ' ' << std::string_view(buf, ptr - buf);
        }
        out << '\n';
    }
}

/// Keeps only words that have an embedding, preserving rank order.
inline Vocabulary restrict_vocab(const Vocabulary& vocab, const EmbeddingTable& emb,
                                 std::size_t* removed = nullptr) {
    std::vector<std::string> kept;
    kept.reserve(vocab.size());
    for (const auto& w : vocab.words())
        if (emb.contains(w)) kept.push_back(w);
    if (kept.empty()) throw InputError("vocabulary and embeddings disjoint");
    if (removed) *removed = vocab.size() - kept.size();
    return Vocabulary(std::move(kept), vocab.cap());
}

} // namespace morse
