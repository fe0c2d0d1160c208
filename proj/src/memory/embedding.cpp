#include "repairgraph/memory/embedding.hpp"

#include <cmath>

#include "repairgraph/common/digest.hpp"

namespace repairgraph::memory {

namespace {

bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

void add_token(EmbeddingVector& acc, const std::string& token) {
    const std::uint64_t hash = digest::fnv1a64(token);
    const std::size_t bucket = static_cast<std::size_t>((hash >> 1) % kDimension);
    acc[bucket] += (hash & 1ull) != 0 ? 1.0 : -1.0;
}

}  // namespace

EmbeddingVector embed(const std::string& text) {
    std::string lower;
    lower.reserve(text.size());
    for (const char c : text) lower.push_back(ascii_lower(c));

    EmbeddingVector acc{};

    std::string word;
    for (std::size_t i = 0; i <= lower.size(); ++i) {
        if (i < lower.size() && word_char(lower[i])) {
            word.push_back(lower[i]);
        } else if (!word.empty()) {
            add_token(acc, "w:" + word);
            word.clear();
        }
    }

    // squash every non-word run to a single space, trim the ends
    std::string normalized;
    normalized.reserve(lower.size());
    for (const char c : lower) {
        if (word_char(c)) {
            normalized.push_back(c);
        } else if (!normalized.empty() && normalized.back() != ' ') {
            normalized.push_back(' ');
        }
    }
    while (!normalized.empty() && normalized.back() == ' ') normalized.pop_back();

    for (std::size_t i = 0; i + 3 <= normalized.size(); ++i) {
        add_token(acc, "t:" + normalized.substr(i, 3));
    }

    const double norm = l2_norm(acc);
    if (norm == 0.0) return acc;
    for (double& v : acc) v /= norm;
    return acc;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < kDimension; ++i) dot += a[i] * b[i];
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (const double x : v) sum += x * x;
    return std::sqrt(sum);
}

}  // namespace repairgraph::memory
