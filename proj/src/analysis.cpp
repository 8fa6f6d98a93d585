#include "lagn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "lagn/error.hpp"

namespace lagn {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += a[d] * b[d];
        na += a[d] * a[d];
        nb += b[d] * b[d];
    }
    if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm vector");
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

LanguageCentroid language_centroid(const EmbeddingCorpus& corpus, const std::string& lang,
                                   int layer) {
    LanguageCentroid centroid;
    centroid.lang = lang;
    centroid.layer = layer;
    centroid.vector.assign(corpus.dim, 0.0);
    for (const auto& s : corpus.sentences) {
        if (s.lang != lang || s.layer != layer) continue;
        const std::vector<double> sent_mean = s.mean_non_special();
        for (std::size_t d = 0; d < corpus.dim; ++d) centroid.vector[d] += sent_mean[d];
        ++centroid.n_sentences;
    }
    if (centroid.n_sentences == 0)
        throw Error("language_centroid: no sentences for " + lang + " at layer " +
                    std::to_string(layer));
    for (double& x : centroid.vector) x /= static_cast<double>(centroid.n_sentences);
    return centroid;
}

double language_distance(const LanguageCentroid& c1, const LanguageCentroid& c2) {
    if (c1.vector.size() != c2.vector.size())
        throw Error("language_distance: centroid dimensions differ");
    return 1.0 - cosine(c1.vector, c2.vector);
}

WalsSimilarity wals_similarity(const WalsProfile& p1, const WalsProfile& p2,
                               const std::optional<std::vector<std::string>>& feature_set) {
    WalsSimilarity result;
    std::size_t matches = 0;
    if (feature_set) {
        // Fixed denominator; a feature missing from either profile counts
        // as a mismatch.
        result.n_compared = feature_set->size();
        for (const auto& f : *feature_set) {
            const auto a = p1.features.find(f);
            const auto b = p2.features.find(f);
            if (a != p1.features.end() && b != p2.features.end() && a->second == b->second)
                ++matches;
        }
    } else {
        for (const auto& [f, va] : p1.features) {
            const auto b = p2.features.find(f);
            if (b == p2.features.end()) continue;
            ++result.n_compared;
            if (va == b->second) ++matches;
        }
    }
    if (result.n_compared == 0)
        throw Error("wals_similarity: no features to compare between " + p1.lang + " and " +
                    p2.lang);
    result.similarity = static_cast<double>(matches) / static_cast<double>(result.n_compared);
    return result;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw Error("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " +
                    std::to_string(ys.size()) + ")");
    const std::size_t n = xs.size();
    if (n < 2) throw Error("pearson: need at least 2 observations");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Explicit bounded draw so sampling is pinned by this code, not by the
// standard library's distribution implementations.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

std::vector<int> non_special_indices(const SentenceEmbedding& s) {
    std::vector<int> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.special_mask[i]) out.push_back(static_cast<int>(i));
    return out;
}

} // namespace

DiscriminativenessResult discriminativeness(const ParallelCorpus& pairs, std::size_t n_samples,
                                            std::uint64_t seed) {
    struct LinkRef {
        std::size_t pair_idx;
        int i, j;
    };
    std::vector<LinkRef> all_links;
    for (std::size_t p = 0; p < pairs.pairs.size(); ++p)
        for (const auto& [i, j] : pairs.pairs[p].links) all_links.push_back({p, i, j});
    if (all_links.size() < n_samples)
        throw Error("discriminativeness: requested " + std::to_string(n_samples) +
                    " samples but only " + std::to_string(all_links.size()) + " links exist");

    // Per pair: non-special token index lists and the linked cells to skip.
    struct PairCells {
        std::size_t pair_idx;
        std::vector<int> src_tokens, tgt_tokens;
        std::set<std::pair<int, int>> linked;
        std::size_t free_cells;
    };
    std::vector<PairCells> eligible;
    for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
        PairCells pc;
        pc.pair_idx = p;
        pc.src_tokens = non_special_indices(pairs.src(pairs.pairs[p]));
        pc.tgt_tokens = non_special_indices(pairs.tgt(pairs.pairs[p]));
        pc.linked.insert(pairs.pairs[p].links.begin(), pairs.pairs[p].links.end());
        std::size_t linked_cells = 0;
        for (const int i : pc.src_tokens)
            for (const int j : pc.tgt_tokens)
                if (pc.linked.count({i, j})) ++linked_cells;
        pc.free_cells = pc.src_tokens.size() * pc.tgt_tokens.size() - linked_cells;
        if (pc.free_cells > 0) eligible.push_back(std::move(pc));
    }
    if (eligible.empty())
        throw Error("discriminativeness: no sentence pair has a non-linked token pair to draw");

    std::mt19937_64 rng(seed);
    DiscriminativenessResult result;

    // Matched pairs: partial Fisher-Yates draw without replacement.
    {
        std::vector<std::size_t> order(all_links.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        for (std::size_t k = 0; k < n_samples; ++k) {
            const std::size_t pick =
                k + static_cast<std::size_t>(uniform_index(rng, order.size() - k));
            std::swap(order[k], order[pick]);
            const LinkRef& link = all_links[order[k]];
            const auto& pair = pairs.pairs[link.pair_idx];
            result.matched_cosines.push_back(
                cosine(pairs.src(pair).vectors[static_cast<std::size_t>(link.i)],
                       pairs.tgt(pair).vectors[static_cast<std::size_t>(link.j)]));
        }
    }

    // Random pairs: uniform eligible pair, then the k-th non-linked cell.
    for (std::size_t k = 0; k < n_samples; ++k) {
        const PairCells& pc = eligible[uniform_index(rng, eligible.size())];
        std::size_t cell = static_cast<std::size_t>(uniform_index(rng, pc.free_cells));
        int pick_i = -1, pick_j = -1;
        for (const int i : pc.src_tokens) {
            for (const int j : pc.tgt_tokens) {
                if (pc.linked.count({i, j})) continue;
                if (cell == 0) {
                    pick_i = i;
                    pick_j = j;
                    break;
                }
                --cell;
            }
            if (pick_i >= 0) break;
        }
        const auto& pair = pairs.pairs[pc.pair_idx];
        result.random_cosines.push_back(
            cosine(pairs.src(pair).vectors[static_cast<std::size_t>(pick_i)],
                   pairs.tgt(pair).vectors[static_cast<std::size_t>(pick_j)]));
    }

    double matched_mean = 0.0, random_mean = 0.0;
    for (double c : result.matched_cosines) matched_mean += c;
    for (double c : result.random_cosines) random_mean += c;
    if (n_samples > 0) {
        matched_mean /= static_cast<double>(n_samples);
        random_mean /= static_cast<double>(n_samples);
    }
    result.separation = matched_mean - random_mean;
    return result;
}

GapReport transfer_gap(const std::map<std::string, double>& scores_by_lang,
                       const std::string& pivot) {
    const auto pivot_it = scores_by_lang.find(pivot);
    if (pivot_it == scores_by_lang.end())
        throw Error("transfer_gap: pivot language " + pivot + " has no score");
    GapReport report;
    report.pivot_lang = pivot;
    report.pivot_score = pivot_it->second;
    double sum = 0.0;
    for (const auto& [lang, score] : scores_by_lang) {
        if (lang == pivot) continue;
        report.per_language.emplace(lang, score);
        sum += score;
    }
    if (report.per_language.empty())
        throw Error("transfer_gap: no non-pivot languages");
    report.gap = report.pivot_score - sum / static_cast<double>(report.per_language.size());
    return report;
}

std::map<std::string, WalsProfile> load_wals_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open WALS file: " + path);
    std::map<std::string, WalsProfile> profiles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line == "lang,feature_id,value") continue;  // optional header
        std::istringstream ss(line);
        std::string lang, feature, value;
        if (!std::getline(ss, lang, ',') || !std::getline(ss, feature, ',') ||
            !std::getline(ss, value))
            throw Error(path + ": line " + std::to_string(line_no) +
                        ": expected \"lang,feature_id,value\"");
        auto& profile = profiles[lang];
        profile.lang = lang;
        if (!profile.features.emplace(feature, value).second)
            throw Error(path + ": line " + std::to_string(line_no) + ": duplicate feature " +
                        feature + " for language " + lang);
    }
    return profiles;
}

JudgmentSet load_judgments_tsv(const std::string& path, const std::string& task) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open judgments file: " + path);
    JudgmentSet set;
    set.task = task;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(path + ": line " + std::to_string(line_no) +
                        ": expected \"segment_id<TAB>score\"");
        const std::string id = line.substr(0, tab);
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("trailing garbage");
        } catch (const std::exception&) {
            throw Error(path + ": line " + std::to_string(line_no) + ": malformed score");
        }
        if (!std::isfinite(score))
            throw Error(path + ": line " + std::to_string(line_no) + ": non-finite score");
        if (!seen.insert(id).second)
            throw Error(path + ": line " + std::to_string(line_no) + ": duplicate segment id " + id);
        set.judgments.emplace_back(id, score);
    }
    return set;
}

} // namespace lagn
