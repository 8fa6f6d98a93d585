#pragma once

// Synthetic corpora for the direction-check analyses: a two-language
// fixture whose languages differ by a shared offset plus a rotation, and a
// family-structured multi-language fixture with matching WALS profiles.

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lagn/analysis.hpp"
#include "lagn/embedding.hpp"
#include "test_util.hpp"

namespace testutil {

// Rotation acting on consecutive coordinate pairs (dim must be even).
inline std::vector<double> rotate_pairs(const std::vector<double>& x, double angle) {
    std::vector<double> y(x.size());
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t d = 0; d + 1 < x.size(); d += 2) {
        y[d] = c * x[d] - s * x[d + 1];
        y[d + 1] = s * x[d] + c * x[d + 1];
    }
    return y;
}

// Two languages sharing a dominating common component: the pivot holds
// m + x, the target m + R x for matched tokens. Raw cosines are all close
// to one; standardization exposes the rotation; re-alignment removes it.
struct OffsetPairFixture {
    std::unique_ptr<lagn::EmbeddingCorpus> src = std::make_unique<lagn::EmbeddingCorpus>();
    std::unique_ptr<lagn::EmbeddingCorpus> tgt = std::make_unique<lagn::EmbeddingCorpus>();
    lagn::ParallelCorpus parallel;

    lagn::ParallelCorpus rebound(const lagn::EmbeddingCorpus& new_src,
                                 const lagn::EmbeddingCorpus& new_tgt) const {
        return parallel.rebind(new_src, new_tgt);
    }
};

inline OffsetPairFixture offset_pair_fixture(std::uint64_t seed, std::size_t n_sentences = 12,
                                             std::size_t tokens_per_sentence = 6,
                                             std::size_t dim = 8, double angle = 0.5) {
    std::mt19937_64 rng(seed);
    OffsetPairFixture fx;
    std::vector<double> common(dim);
    for (double& v : common) v = uniform(rng, 8.0, 12.0);

    fx.src->dim = dim;
    fx.tgt->dim = dim;
    for (std::size_t k = 0; k < n_sentences; ++k) {
        std::vector<std::vector<double>> src_vecs, tgt_vecs;
        std::vector<std::pair<int, int>> links;
        for (std::size_t t = 0; t < tokens_per_sentence; ++t) {
            const std::vector<double> x = random_vector(rng, dim, -1.0, 1.0);
            const std::vector<double> rx = rotate_pairs(x, angle);
            std::vector<double> sv(dim), tv(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                sv[d] = common[d] + x[d];
                tv[d] = common[d] + rx[d];
            }
            src_vecs.push_back(std::move(sv));
            tgt_vecs.push_back(std::move(tv));
            links.emplace_back(static_cast<int>(t), static_cast<int>(t));
        }
        fx.src->sentences.push_back(make_sentence("en", "e" + std::to_string(k), src_vecs));
        fx.tgt->sentences.push_back(make_sentence("de", "d" + std::to_string(k), tgt_vecs));
        lagn::AlignedSentencePair pair;
        pair.id = "p" + std::to_string(k);
        pair.src_index = k;
        pair.tgt_index = k;
        pair.links = std::move(links);
        fx.parallel.pairs.push_back(std::move(pair));
    }
    fx.parallel.pivot_lang = "en";
    fx.parallel.src_corpus = fx.src.get();
    fx.parallel.tgt_corpus = fx.tgt.get();
    return fx;
}

// Six languages in two families. Language offsets cluster by family and
// the synthetic WALS profiles agree within families, so centroid-based
// similarity correlates with WALS similarity until standardization
// removes the offsets.
struct FamilyFixture {
    lagn::EmbeddingCorpus corpus;
    std::map<std::string, lagn::WalsProfile> wals;
    std::vector<std::string> languages;
};

inline FamilyFixture family_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FamilyFixture fx;
    fx.languages = {"aa", "ab", "ac", "ba", "bb", "bc"};
    const std::size_t dim = 12;
    fx.corpus.dim = dim;

    const std::vector<double> base_a = random_vector(rng, dim, -6.0, 6.0);
    const std::vector<double> base_b = random_vector(rng, dim, -6.0, 6.0);

    for (std::size_t li = 0; li < fx.languages.size(); ++li) {
        const std::string& lang = fx.languages[li];
        const bool family_a = lang[0] == 'a';
        std::vector<double> offset = family_a ? base_a : base_b;
        for (double& v : offset) v += uniform(rng, -0.8, 0.8);

        for (int k = 0; k < 8; ++k) {
            const std::size_t len = 3 + rng() % 5;  // varying lengths
            std::vector<std::vector<double>> vecs;
            for (std::size_t t = 0; t < len; ++t) {
                std::vector<double> v = random_vector(rng, dim, -1.0, 1.0);
                for (std::size_t d = 0; d < dim; ++d) v[d] += offset[d];
                vecs.push_back(std::move(v));
            }
            fx.corpus.sentences.push_back(
                make_sentence(lang, lang + std::to_string(k), vecs));
        }

        lagn::WalsProfile profile;
        profile.lang = lang;
        for (int f = 1; f <= 20; ++f) {
            std::string value = family_a ? "A" : "B";
            if (rng() % 10 < 2) value = lang;  // per-language idiosyncrasy
            profile.features.emplace("f" + std::to_string(f), value);
        }
        fx.wals.emplace(lang, std::move(profile));
    }
    return fx;
}

// Pearson correlation between centroid-cosine similarity and WALS
// similarity over all language pairs of a family fixture.
inline double family_wals_correlation(const FamilyFixture& fx,
                                      const lagn::EmbeddingCorpus& corpus) {
    std::vector<lagn::LanguageCentroid> centroids;
    for (const auto& lang : fx.languages)
        centroids.push_back(lagn::language_centroid(corpus, lang, 0));
    std::vector<double> emb_sim, wals_sim;
    for (std::size_t i = 0; i < fx.languages.size(); ++i)
        for (std::size_t j = i + 1; j < fx.languages.size(); ++j) {
            emb_sim.push_back(1.0 - lagn::language_distance(centroids[i], centroids[j]));
            wals_sim.push_back(
                lagn::wals_similarity(fx.wals.at(fx.languages[i]), fx.wals.at(fx.languages[j]))
                    .similarity);
        }
    return lagn::pearson(emb_sim, wals_sim);
}

} // namespace testutil
