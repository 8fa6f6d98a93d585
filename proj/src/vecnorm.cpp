#include "lagn/vecnorm.hpp"

#include <cmath>

#include "lagn/error.hpp"

namespace lagn {

namespace {

// Population mean/variance per dimension over a set of vectors given as
// (sentence index, token index) positions.
struct Moments {
    std::vector<double> mean;
    std::vector<double> var;
    std::size_t count = 0;
};

Moments collect(const EmbeddingCorpus& corpus,
                const std::vector<std::pair<std::size_t, std::size_t>>& positions,
                std::size_t dim) {
    Moments m;
    m.mean.assign(dim, 0.0);
    m.var.assign(dim, 0.0);
    m.count = positions.size();
    for (const auto& [si, ti] : positions) {
        const auto& v = corpus.sentences[si].vectors[ti];
        for (std::size_t d = 0; d < dim; ++d) m.mean[d] += v[d];
    }
    for (double& x : m.mean) x /= static_cast<double>(m.count);
    for (const auto& [si, ti] : positions) {
        const auto& v = corpus.sentences[si].vectors[ti];
        for (std::size_t d = 0; d < dim; ++d) {
            const double delta = v[d] - m.mean[d];
            m.var[d] += delta * delta;
        }
    }
    for (double& x : m.var) x /= static_cast<double>(m.count);
    return m;
}

void apply(EmbeddingCorpus& corpus, const std::vector<std::pair<std::size_t, std::size_t>>& positions,
           const Moments& m, double epsilon) {
    for (const auto& [si, ti] : positions) {
        auto& v = corpus.sentences[si].vectors[ti];
        for (std::size_t d = 0; d < v.size(); ++d)
            v[d] = (v[d] - m.mean[d]) / std::sqrt(m.var[d] + epsilon);
    }
}

} // namespace

BatchNormResult batch_normalize(const EmbeddingCorpus& corpus, std::size_t batch_size,
                                double epsilon) {
    if (batch_size < 1) throw Error("batch_normalize: batch_size must be >= 1");
    if (epsilon <= 0) throw Error("batch_normalize: epsilon must be > 0");

    BatchNormResult result;
    result.corpus = corpus;
    const std::size_t dim = corpus.dim;
    const std::size_t n = corpus.sentences.size();

    for (std::size_t batch_start = 0, batch_index = 0; batch_start < n;
         batch_start += batch_size, ++batch_index) {
        const std::size_t batch_end = std::min(n, batch_start + batch_size);

        std::size_t max_len = 0;
        std::vector<std::pair<std::size_t, std::size_t>> pooled;
        for (std::size_t si = batch_start; si < batch_end; ++si) {
            const std::size_t len = corpus.sentences[si].size();
            max_len = std::max(max_len, len);
            for (std::size_t ti = 0; ti < len; ++ti) pooled.emplace_back(si, ti);
        }
        // Pooled all-timestep statistics, computed lazily on first fallback.
        Moments pooled_moments;
        bool have_pooled = false;

        for (std::size_t t = 0; t < max_len; ++t) {
            std::vector<std::pair<std::size_t, std::size_t>> cell;
            for (std::size_t si = batch_start; si < batch_end; ++si)
                if (corpus.sentences[si].size() > t) cell.emplace_back(si, t);

            NormStats stats;
            stats.scope = NormScope::BatchTimestep;
            stats.epsilon = epsilon;
            if (cell.size() >= 2) {
                const Moments m = collect(corpus, cell, dim);
                apply(result.corpus, cell, m, epsilon);
                stats.mean = m.mean;
                stats.variance = m.var;
                stats.count = m.count;
            } else {
                if (!have_pooled) {
                    pooled_moments = collect(corpus, pooled, dim);
                    have_pooled = true;
                }
                apply(result.corpus, cell, pooled_moments, epsilon);
                stats.mean = pooled_moments.mean;
                stats.variance = pooled_moments.var;
                stats.count = pooled_moments.count;
                result.fallbacks.push_back({batch_index, t, cell.size()});
            }
            result.stats.push_back(std::move(stats));
        }
    }
    return result;
}

EmbeddingCorpus layer_normalize(const EmbeddingCorpus& corpus, LayerNormVariant variant,
                                double epsilon) {
    if (epsilon <= 0) throw Error("layer_normalize: epsilon must be > 0");
    EmbeddingCorpus out = corpus;
    for (auto& s : out.sentences) {
        if (variant == LayerNormVariant::PerToken) {
            for (auto& v : s.vectors) {
                double mean = 0.0;
                for (double x : v) mean += x;
                mean /= static_cast<double>(v.size());
                double var = 0.0;
                for (double x : v) var += (x - mean) * (x - mean);
                var /= static_cast<double>(v.size());
                const double denom = std::sqrt(var + epsilon);
                for (double& x : v) x = (x - mean) / denom;
            }
        } else {
            // All tokens and dimensions of the sentence jointly.
            double mean = 0.0;
            std::size_t count = 0;
            for (const auto& v : s.vectors)
                for (double x : v) {
                    mean += x;
                    ++count;
                }
            mean /= static_cast<double>(count);
            double var = 0.0;
            for (const auto& v : s.vectors)
                for (double x : v) var += (x - mean) * (x - mean);
            var /= static_cast<double>(count);
            const double denom = std::sqrt(var + epsilon);
            for (auto& v : s.vectors)
                for (double& x : v) x = (x - mean) / denom;
        }
    }
    return out;
}

LanguageStandardizeResult language_standardize(const EmbeddingCorpus& corpus, double epsilon) {
    if (epsilon <= 0) throw Error("language_standardize: epsilon must be > 0");

    // Statistics over non-special tokens, one pass per language.
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> non_special;
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> all_tokens;
    for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
        const auto& s = corpus.sentences[si];
        for (std::size_t ti = 0; ti < s.size(); ++ti) {
            all_tokens[s.lang].emplace_back(si, ti);
            if (!s.special_mask[ti]) non_special[s.lang].emplace_back(si, ti);
        }
    }

    LanguageStandardizeResult result;
    result.corpus = corpus;
    for (const auto& [lang, positions] : non_special) {
        if (positions.size() < 2)
            throw Error("language_standardize: language " + lang + " has " +
                        std::to_string(positions.size()) +
                        " non-special tokens; need at least 2 for statistics");
        const Moments m = collect(corpus, positions, corpus.dim);
        apply(result.corpus, all_tokens[lang], m, epsilon);

        NormStats stats;
        stats.scope = NormScope::Language;
        stats.mean = m.mean;
        stats.variance = m.var;
        stats.epsilon = epsilon;
        stats.count = m.count;
        result.stats.emplace(lang, std::move(stats));
    }
    return result;
}

} // namespace lagn
