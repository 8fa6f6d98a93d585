#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "lagn/analysis.hpp"
#include "lagn/error.hpp"
#include "lagn/realign.hpp"
#include "lagn/vecnorm.hpp"
#include "test_util.hpp"

using namespace lagn;

TEST_CASE("language_centroid: hand means") {
    SUBCASE("token-level mean within one sentence") {
        const EmbeddingCorpus corpus = testutil::make_corpus(
            {testutil::make_sentence("de", "a", {{1.0, 1.0}, {3.0, 3.0}})});
        const LanguageCentroid c = language_centroid(corpus, "de", 0);
        CHECK(c.vector == std::vector<double>{2.0, 2.0});
        CHECK(c.n_sentences == 1);
    }
    SUBCASE("sentence-level averaging, not token-level") {
        // Sentence 1 has centroid [0,0] from 3 tokens, sentence 2 centroid
        // [2,2] from 1 token; the language centroid weights sentences
        // equally.
        const EmbeddingCorpus corpus = testutil::make_corpus(
            {testutil::make_sentence("de", "a", {{-1.0, 1.0}, {1.0, -1.0}, {0.0, 0.0}}),
             testutil::make_sentence("de", "b", {{2.0, 2.0}})});
        const LanguageCentroid c = language_centroid(corpus, "de", 0);
        CHECK(c.vector == std::vector<double>{1.0, 1.0});
        CHECK(c.n_sentences == 2);
    }
    SUBCASE("special tokens are excluded") {
        const EmbeddingCorpus corpus = testutil::make_corpus({testutil::make_sentence(
            "de", "a", {{100.0, 100.0}, {1.0, 1.0}, {3.0, 3.0}}, 0, {true, false, false})});
        CHECK(language_centroid(corpus, "de", 0).vector == std::vector<double>{2.0, 2.0});
    }
    SUBCASE("missing language or layer") {
        const EmbeddingCorpus corpus =
            testutil::make_corpus({testutil::make_sentence("de", "a", {{1.0}})});
        CHECK_THROWS_AS(language_centroid(corpus, "fr", 0), Error);
        CHECK_THROWS_AS(language_centroid(corpus, "de", 3), Error);
    }
}

TEST_CASE("language_centroid: 100-sentence fixture matches an independent two-stage mean") {
    std::mt19937_64 rng(12);
    std::vector<SentenceEmbedding> sents;
    for (int k = 0; k < 100; ++k) {
        const std::size_t len = 1 + rng() % 6;
        std::vector<std::vector<double>> vecs;
        for (std::size_t t = 0; t < len; ++t)
            vecs.push_back(testutil::random_vector(rng, 5, -2.0, 2.0));
        std::vector<bool> special(len, false);
        if (len > 2) special[len - 1] = true;
        sents.push_back(testutil::make_sentence("de", "s" + std::to_string(k), vecs, 0, special));
    }
    const EmbeddingCorpus corpus = testutil::make_corpus(std::move(sents));

    // Independent pooling: per-sentence mean over unmasked tokens, then a
    // plain mean of those means.
    std::vector<double> expected(5, 0.0);
    for (const auto& s : corpus.sentences) {
        std::vector<double> sm(5, 0.0);
        std::size_t cnt = 0;
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (s.special_mask[t]) continue;
            for (std::size_t d = 0; d < 5; ++d) sm[d] += s.vectors[t][d];
            ++cnt;
        }
        for (std::size_t d = 0; d < 5; ++d) expected[d] += sm[d] / static_cast<double>(cnt);
    }
    for (double& x : expected) x /= 100.0;

    const LanguageCentroid c = language_centroid(corpus, "de", 0);
    for (std::size_t d = 0; d < 5; ++d)
        CHECK(c.vector[d] == doctest::Approx(expected[d]).epsilon(1e-12));
}

TEST_CASE("language_distance endpoints") {
    const auto centroid = [](std::vector<double> v) {
        LanguageCentroid c;
        c.vector = std::move(v);
        c.n_sentences = 1;
        return c;
    };
    CHECK(language_distance(centroid({1, 0}), centroid({2, 0})) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(language_distance(centroid({1, 0}), centroid({0, 3})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(language_distance(centroid({1, 0}), centroid({-2, 0})) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(language_distance(centroid({0, 0}), centroid({1, 0})), Error);

    // Symmetry and identity on random vectors.
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        const auto a = centroid(testutil::random_vector(rng, 6, -1, 1));
        const auto b = centroid(testutil::random_vector(rng, 6, -1, 1));
        CHECK(language_distance(a, b) == doctest::Approx(language_distance(b, a)).epsilon(1e-15));
        CHECK(language_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("wals_similarity: hand counts") {
    WalsProfile p1{"de", {{"81A", "SVO"}, {"87A", "AdjN"}, {"88A", "DemN"}, {"89A", "NumN"}, {"92A", "Final"}}};
    WalsProfile p2 = p1;
    p2.lang = "nl";

    SUBCASE("identical profiles") {
        const WalsSimilarity sim = wals_similarity(p1, p2);
        CHECK(sim.similarity == 1.0);
        CHECK(sim.n_compared == 5);
    }
    SUBCASE("3 of 4 shared features agree") {
        p2.features.erase("92A");           // only 4 shared
        p2.features.at("87A") = "NAdj";     // one disagreement
        const WalsSimilarity sim = wals_similarity(p1, p2);
        CHECK(sim.similarity == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(sim.n_compared == 4);
    }
    SUBCASE("fixed feature set counts missing features as mismatches") {
        p2.features.erase("92A");
        const std::vector<std::string> fixed{"81A", "87A", "92A", "999Z"};
        const WalsSimilarity sim = wals_similarity(p1, p2, fixed);
        CHECK(sim.n_compared == 4);
        CHECK(sim.similarity == doctest::Approx(0.5).epsilon(1e-12));  // 81A, 87A match
    }
    SUBCASE("no shared features is an error, not zero") {
        WalsProfile q{"xx", {{"999Z", "v"}}};
        CHECK_THROWS_AS(wals_similarity(p1, q), Error);
    }
}

TEST_CASE("wals_similarity: 30-feature fixture matches a set-logic oracle") {
    std::mt19937_64 rng(9);
    WalsProfile p1{"l1", {}}, p2{"l2", {}};
    std::size_t expected_shared = 0, expected_matches = 0;
    for (int f = 0; f < 30; ++f) {
        const std::string id = "f" + std::to_string(f);
        const bool in1 = rng() % 4 != 0, in2 = rng() % 4 != 0;
        const std::string v1 = std::to_string(rng() % 3), v2 = std::to_string(rng() % 3);
        if (in1) p1.features.emplace(id, v1);
        if (in2) p2.features.emplace(id, v2);
        if (in1 && in2) {
            ++expected_shared;
            if (v1 == v2) ++expected_matches;
        }
    }
    const WalsSimilarity sim = wals_similarity(p1, p2);
    CHECK(sim.n_compared == expected_shared);
    CHECK(sim.similarity == doctest::Approx(static_cast<double>(expected_matches) /
                                            static_cast<double>(expected_shared))
                                .epsilon(1e-12));

    // Symmetry.
    const WalsSimilarity rev = wals_similarity(p2, p1);
    CHECK(rev.similarity == sim.similarity);
    CHECK(rev.n_compared == sim.n_compared);
}

TEST_CASE("pearson: closed-form cases") {
    const std::vector<double> xs{1, 2, 3, 4};
    SUBCASE("perfect positive and negative correlation") {
        CHECK(pearson(xs, std::vector<double>{2, 4, 6, 8}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pearson(xs, std::vector<double>{-1, -2, -3, -4}) ==
              doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("hand-computed 0.6") {
        // Deviations (-1.5,-0.5,0.5,1.5) vs (-0.5,-1.5,1.5,0.5):
        // cov = 3, var = 5 each, r = 3/5.
        CHECK(pearson(xs, std::vector<double>{2, 1, 4, 3}) == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(pearson(xs, std::vector<double>{1, 2, 3}), Error);
        CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), Error);
        CHECK_THROWS_AS(pearson(xs, std::vector<double>{7, 7, 7, 7}), Error);
    }
    SUBCASE("affine invariance and sign flip") {
        std::mt19937_64 rng(5);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> x = testutil::random_vector(rng, 10, -3, 3);
            std::vector<double> y = testutil::random_vector(rng, 10, -3, 3);
            const double r = pearson(x, y);
            std::vector<double> scaled = x;
            for (double& v : scaled) v = 2.5 * v + 7.0;
            CHECK(std::abs(pearson(scaled, y) - r) < 1e-12);
            for (double& v : scaled) v = -v;
            CHECK(std::abs(pearson(scaled, y) + r) < 1e-12);
        }
    }
}

TEST_CASE("discriminativeness: constructed extremes") {
    SUBCASE("matched identical, random orthogonal: separation 1") {
        auto src = std::make_unique<EmbeddingCorpus>(testutil::make_corpus(
            {testutil::make_sentence("en", "e0", {{1, 0, 0, 0}, {0, 1, 0, 0}})}));
        auto tgt = std::make_unique<EmbeddingCorpus>(testutil::make_corpus(
            {testutil::make_sentence("de", "d0", {{1, 0, 0, 0}, {0, 1, 0, 0}})}));
        ParallelCorpus pc;
        pc.pivot_lang = "en";
        pc.src_corpus = src.get();
        pc.tgt_corpus = tgt.get();
        pc.pairs.push_back({"p0", 0, 0, {{0, 0}, {1, 1}}});

        const DiscriminativenessResult r = discriminativeness(pc, 2, 1);
        CHECK(r.separation == doctest::Approx(1.0).epsilon(1e-12));
        for (const double c : r.matched_cosines) CHECK(c == doctest::Approx(1.0));
        for (const double c : r.random_cosines) CHECK(c == doctest::Approx(0.0));
    }
    SUBCASE("degenerate space: constant vectors, separation 0") {
        auto src = std::make_unique<EmbeddingCorpus>(testutil::make_corpus(
            {testutil::make_sentence("en", "e0", {{1, 1}, {1, 1}, {1, 1}})}));
        auto tgt = std::make_unique<EmbeddingCorpus>(testutil::make_corpus(
            {testutil::make_sentence("de", "d0", {{1, 1}, {1, 1}, {1, 1}})}));
        ParallelCorpus pc;
        pc.pivot_lang = "en";
        pc.src_corpus = src.get();
        pc.tgt_corpus = tgt.get();
        pc.pairs.push_back({"p0", 0, 0, {{0, 0}, {1, 1}}});
        const DiscriminativenessResult r = discriminativeness(pc, 2, 1);
        CHECK(r.separation == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("errors: not enough links, no free cells") {
        auto src = std::make_unique<EmbeddingCorpus>(
            testutil::make_corpus({testutil::make_sentence("en", "e0", {{1.0, 0.0}})}));
        auto tgt = std::make_unique<EmbeddingCorpus>(
            testutil::make_corpus({testutil::make_sentence("de", "d0", {{1.0, 0.0}})}));
        ParallelCorpus pc;
        pc.pivot_lang = "en";
        pc.src_corpus = src.get();
        pc.tgt_corpus = tgt.get();
        pc.pairs.push_back({"p0", 0, 0, {{0, 0}}});
        CHECK_THROWS_WITH_AS(discriminativeness(pc, 5, 1), doctest::Contains("links"), Error);
        // The single 1x1 cell is linked: no random pair can be drawn.
        CHECK_THROWS_WITH_AS(discriminativeness(pc, 1, 1), doctest::Contains("non-linked"), Error);
    }
}

TEST_CASE("discriminativeness is reproducible bit for bit") {
    testutil::OffsetPairFixture fx = testutil::offset_pair_fixture(77);
    const DiscriminativenessResult a = discriminativeness(fx.parallel, 30, 123);
    const DiscriminativenessResult b = discriminativeness(fx.parallel, 30, 123);
    CHECK(a.matched_cosines == b.matched_cosines);
    CHECK(a.random_cosines == b.random_cosines);
    CHECK(a.separation == b.separation);
    const DiscriminativenessResult c = discriminativeness(fx.parallel, 30, 124);
    CHECK(a.random_cosines != c.random_cosines);
}

TEST_CASE("discriminativeness separation rises after language standardization") {
    testutil::OffsetPairFixture fx = testutil::offset_pair_fixture(2024);

    const DiscriminativenessResult before = discriminativeness(fx.parallel, 50, 9);

    // Standardize the union so each language's statistics come from its
    // own tokens, then rebind the pairs to the standardized corpora.
    EmbeddingCorpus merged = *fx.src;
    merged.sentences.insert(merged.sentences.end(), fx.tgt->sentences.begin(),
                            fx.tgt->sentences.end());
    const EmbeddingCorpus standardized = language_standardize(merged).corpus;
    EmbeddingCorpus std_src, std_tgt;
    std_src.dim = std_tgt.dim = merged.dim;
    for (const auto& s : standardized.sentences)
        (s.lang == "en" ? std_src : std_tgt).sentences.push_back(s);
    const ParallelCorpus rebound = fx.parallel.rebind(std_src, std_tgt);

    const DiscriminativenessResult after = discriminativeness(rebound, 50, 9);
    CHECK(after.separation > before.separation);
    CHECK(before.separation < 0.2);  // the offset masks everything
    CHECK(after.separation > 0.5);   // the rotation alone separates pairs
}

TEST_CASE("family fixture: WALS correlation drops after standardization") {
    const testutil::FamilyFixture fx = testutil::family_fixture(31);
    const double before = testutil::family_wals_correlation(fx, fx.corpus);
    const EmbeddingCorpus standardized = language_standardize(fx.corpus).corpus;
    const double after = testutil::family_wals_correlation(fx, standardized);
    CHECK(before > 0.8);  // family structure dominates the raw space
    CHECK(after < before);
}

TEST_CASE("transfer_gap: hand arithmetic") {
    SUBCASE("pivot 0.8 vs {0.6, 0.4}") {
        const GapReport r = transfer_gap({{"en", 0.8}, {"de", 0.6}, {"fi", 0.4}}, "en");
        CHECK(r.gap == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(r.pivot_score == 0.8);
        CHECK(r.per_language.size() == 2);
    }
    SUBCASE("all equal scores: zero gap") {
        const GapReport r = transfer_gap({{"en", 0.5}, {"de", 0.5}, {"fi", 0.5}}, "en");
        CHECK(r.gap == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("18-language fixture matches an independent mean") {
        std::mt19937_64 rng(8);
        std::map<std::string, double> scores;
        scores["en"] = 0.9;
        double sum = 0.0;
        for (int k = 0; k < 18; ++k) {
            const double v = testutil::uniform(rng, 0.2, 0.8);
            scores["l" + std::to_string(k)] = v;
            sum += v;
        }
        const GapReport r = transfer_gap(scores, "en");
        CHECK(r.gap == doctest::Approx(0.9 - sum / 18.0).epsilon(1e-12));
        // The stored report satisfies its own invariant.
        double mean = 0.0;
        for (const auto& [lang, v] : r.per_language) mean += v;
        mean /= static_cast<double>(r.per_language.size());
        CHECK(std::abs(r.gap - (r.pivot_score - mean)) < 1e-12);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(transfer_gap({{"de", 0.5}}, "en"), Error);
        CHECK_THROWS_AS(transfer_gap({{"en", 0.5}}, "en"), Error);
    }
}

TEST_CASE("WALS CSV and judgments TSV ingestion") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lagn_analysis_io";
    fs::create_directories(dir);

    {
        std::ofstream out(dir / "wals.csv");
        out << "lang,feature_id,value\n";
        out << "de,81A,SOV-mixed\n";
        out << "de,87A,AdjN\n";
        out << "fr,81A,SVO\n";
        out << "fr,87A,NAdj\n";
    }
    const auto profiles = load_wals_csv((dir / "wals.csv").string());
    CHECK(profiles.size() == 2);
    CHECK(profiles.at("de").features.at("87A") == "AdjN");
    const WalsSimilarity sim = wals_similarity(profiles.at("de"), profiles.at("fr"));
    CHECK(sim.n_compared == 2);
    CHECK(sim.similarity == 0.0);

    {
        std::ofstream out(dir / "j.tsv");
        out << "seg1\t0.5\nseg2\t-1.25\n";
    }
    const JudgmentSet set = load_judgments_tsv((dir / "j.tsv").string(), "wmt");
    CHECK(set.judgments.size() == 2);
    CHECK(set.judgments[1].second == -1.25);

    {
        std::ofstream out(dir / "dup.tsv");
        out << "seg1\t0.5\nseg1\t0.7\n";
    }
    CHECK_THROWS_WITH_AS(load_judgments_tsv((dir / "dup.tsv").string()),
                         doctest::Contains("duplicate"), Error);
    fs::remove_all(dir);
}
