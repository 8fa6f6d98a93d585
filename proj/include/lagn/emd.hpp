#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lagn/embedding.hpp"

namespace lagn {

// Ground-cost matrix between two token sets. Row/column labels keep the
// original token indices of the sentences the matrix was built from.
struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    std::vector<int> row_tokens;
    std::vector<int> col_tokens;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

struct TransportPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> flow;  // row-major, >= 0
    double total_cost = 0.0;

    double at(std::size_t i, std::size_t j) const { return flow[i * cols + j]; }
    std::vector<double> row_sums() const;
    std::vector<double> col_sums() const;
};

struct ScoreReport {
    std::string system;
    std::vector<std::string> pair_ids;
    std::vector<double> scores;  // higher = more similar
    std::size_t segment_count() const { return scores.size(); }
};

// 1 - cosine over the non-special tokens of both sentences, clamped into
// [0, 2]. Throws on zero-norm non-special vectors and all-special
// sentences.
CostMatrix cost_matrix(const SentenceEmbedding& src, const SentenceEmbedding& tgt);

// Exactly optimal transport between two weight vectors under the given
// cost, via successive shortest paths with node potentials. Weights must
// be non-negative and each sum to 1 within 1e-9.
TransportPlan emd(std::span<const double> weights_a, std::span<const double> weights_b,
                  const CostMatrix& cost);

// Independent verification oracle for square uniform instances: by the
// Birkhoff theorem the optimum is attained at a permutation, so the value
// is min over all n! permutations of the mean assigned cost. n <= 7.
double emd_bruteforce_oracle(const CostMatrix& cost);

using SentenceTransform = std::function<SentenceEmbedding(const SentenceEmbedding&)>;

// Negated EMD between uniform token distributions, so higher = more
// similar; 0 is the maximum, -2 the worst possible. The transforms are
// applied to both sentences in order before scoring.
double xmover_score(const SentenceEmbedding& src, const SentenceEmbedding& tgt,
                    std::span<const SentenceTransform> pipeline = {});

// Scores every pair of a parallel corpus, in pair order.
ScoreReport score_pairs(const ParallelCorpus& pairs, const std::string& system_id,
                        int threads = 1);

} // namespace lagn
