#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagn/embedding.hpp"

namespace lagn {

// Two-stage mean of a language's embeddings: tokens -> sentence mean ->
// unweighted mean over sentences, special tokens excluded.
struct LanguageCentroid {
    std::string lang;
    int layer = 0;
    std::vector<double> vector;
    std::size_t n_sentences = 0;
};

struct WalsProfile {
    std::string lang;
    std::map<std::string, std::string> features;  // feature id -> categorical value
};

struct JudgmentSet {
    std::string task;
    std::vector<std::pair<std::string, double>> judgments;  // (segment id, human score)
};

struct GapReport {
    std::string pivot_lang;
    double pivot_score = 0.0;
    std::map<std::string, double> per_language;  // non-pivot languages
    double gap = 0.0;                            // pivot - mean(per_language)
};

struct DiscriminativenessResult {
    std::vector<double> matched_cosines;
    std::vector<double> random_cosines;
    double separation = 0.0;  // mean(matched) - mean(random)
};

LanguageCentroid language_centroid(const EmbeddingCorpus& corpus, const std::string& lang,
                                   int layer);

// 1 - cosine of the centroid vectors, in [0, 2]. Zero-norm centroids are a
// defined error (standardized spaces can produce them).
double language_distance(const LanguageCentroid& c1, const LanguageCentroid& c2);

struct WalsSimilarity {
    double similarity = 0.0;  // fraction of compared features with equal values
    std::size_t n_compared = 0;
};

// Default denominator: features annotated in both profiles. An explicit
// feature_set forces that denominator instead, counting features missing
// from either profile as mismatches.
WalsSimilarity wals_similarity(const WalsProfile& p1, const WalsProfile& p2,
                               const std::optional<std::vector<std::string>>& feature_set =
                                   std::nullopt);

// Sample Pearson correlation coefficient. Requires equal lengths >= 2 and
// nonzero variance on both sides.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Fig.-2-style separation measurement: cosines of n_samples linked token
// pairs vs. n_samples random non-linked token pairs drawn within the same
// parallel sentences (special tokens excluded from the random draws).
// Deterministic for a fixed (seed, n_samples, input).
DiscriminativenessResult discriminativeness(const ParallelCorpus& pairs, std::size_t n_samples,
                                            std::uint64_t seed);

// Transfer gap: pivot score minus the mean score of all other languages.
GapReport transfer_gap(const std::map<std::string, double>& scores_by_lang,
                       const std::string& pivot);

// WALS profiles from CSV lines "lang,feature_id,value".
std::map<std::string, WalsProfile> load_wals_csv(const std::string& path);
// Human judgments from TSV lines "segment_id<TAB>score".
JudgmentSet load_judgments_tsv(const std::string& path, const std::string& task = "");

double cosine(std::span<const double> a, std::span<const double> b);

} // namespace lagn
