#pragma once

#include <map>
#include <string>
#include <vector>

#include "lagn/embedding.hpp"

namespace lagn {

enum class NormScope { BatchTimestep, Language, Sequence };

// Per-dimension first and second moments actually applied to a group of
// vectors; normalization is (x - mean) / sqrt(variance + epsilon) with
// population (divide-by-count) variance throughout.
struct NormStats {
    NormScope scope = NormScope::BatchTimestep;
    std::vector<double> mean;
    std::vector<double> variance;
    double epsilon = 0.0;
    std::size_t count = 0;  // number of vectors the statistics summarize
};

// A (batch, timestep) cell covered by fewer than two sequences; the cell
// was normalized with the batch's pooled all-timestep statistics instead.
struct BatchNormFallback {
    std::size_t batch_index = 0;
    std::size_t timestep = 0;
    std::size_t covering = 0;
};

struct BatchNormResult {
    EmbeddingCorpus corpus;
    // One entry per (batch, timestep) cell, batch-major then timestep;
    // each batch contributes max-length-in-batch cells. Fallback cells
    // carry the pooled statistics that were applied to them.
    std::vector<NormStats> stats;
    std::vector<BatchNormFallback> fallbacks;
};

struct LanguageStandardizeResult {
    EmbeddingCorpus corpus;
    std::map<std::string, NormStats> stats;
};

inline constexpr double kDefaultEpsilon = 1e-5;
// Tiny guard used by language standardization only: a visible epsilon in
// the denominator would leave the second-pass variance measurably below 1
// and break the idempotence contract (double application must move no
// entry by more than 1e-9).
inline constexpr double kLanguageEpsilon = 1e-12;
inline constexpr std::size_t kDefaultBatchSize = 8;

// Groups sentences into consecutive batches of batch_size in corpus order
// and standardizes each (batch, timestep, dimension) cell over the batch
// members whose length exceeds the timestep. Cells covered by fewer than
// two sequences fall back to the batch's pooled statistics (recorded in
// fallbacks).
BatchNormResult batch_normalize(const EmbeddingCorpus& corpus,
                                std::size_t batch_size = kDefaultBatchSize,
                                double epsilon = kDefaultEpsilon);

enum class LayerNormVariant {
    PerToken,    // each token vector standardized over its D dimensions
    PerSequence  // each sentence standardized over all tokens and dimensions jointly
};

EmbeddingCorpus layer_normalize(const EmbeddingCorpus& corpus, LayerNormVariant variant,
                                double epsilon = kDefaultEpsilon);

// Removes each language's per-dimension mean and variance, computed over
// that language's non-special token vectors and applied to all of its
// tokens (special ones included).
LanguageStandardizeResult language_standardize(const EmbeddingCorpus& corpus,
                                               double epsilon = kLanguageEpsilon);

} // namespace lagn
