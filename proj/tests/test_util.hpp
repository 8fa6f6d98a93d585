#pragma once

// Shared fixture builders and independent mini-oracles for the test
// suites. Everything here is deliberately written against plain loops,
// not the library's own helpers, so the checks stay independent.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lagn/embedding.hpp"

namespace testutil {

inline lagn::SentenceEmbedding make_sentence(const std::string& lang, const std::string& id,
                                             std::vector<std::vector<double>> vectors,
                                             int layer = 0,
                                             std::vector<bool> special = {}) {
    lagn::SentenceEmbedding s;
    s.lang = lang;
    s.sent_id = id;
    s.layer = layer;
    s.vectors = std::move(vectors);
    if (special.empty()) special.assign(s.vectors.size(), false);
    s.special_mask = std::move(special);
    for (std::size_t i = 0; i < s.vectors.size(); ++i) s.tokens.push_back("w" + std::to_string(i));
    return s;
}

inline lagn::EmbeddingCorpus make_corpus(std::vector<lagn::SentenceEmbedding> sentences) {
    lagn::EmbeddingCorpus c;
    c.dim = sentences.empty() ? 0 : sentences.front().vectors.front().size();
    c.sentences = std::move(sentences);
    return c;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    // Explicit mapping keeps draws identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim, double lo,
                                         double hi) {
    std::vector<double> v(dim);
    for (double& x : v) x = uniform(rng, lo, hi);
    return v;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
    return acc;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) acc += a[d] * b[d];
    return acc;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double cosine_ref(const std::vector<double>& a, const std::vector<double>& b) {
    return dot(a, b) / (norm(a) * norm(b));
}

// Plain Gaussian elimination with partial pivoting; the independent solver
// for cross-checking fitted maps.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A,
                                       std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double acc = rhs[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= A[r][c] * x[c];
        x[r] = acc / A[r][r];
    }
    return x;
}

// A 2-D rotation matrix, the generator for the map-recovery fixtures.
inline std::vector<std::vector<double>> rotation2(double angle) {
    return {{std::cos(angle), -std::sin(angle)}, {std::sin(angle), std::cos(angle)}};
}

inline std::vector<double> apply_linear(const std::vector<std::vector<double>>& W,
                                        const std::vector<double>& x,
                                        const std::vector<double>& b) {
    std::vector<double> y(b);
    for (std::size_t r = 0; r < W.size(); ++r)
        for (std::size_t c = 0; c < W[r].size(); ++c) y[r] += W[r][c] * x[c];
    return y;
}

} // namespace testutil
