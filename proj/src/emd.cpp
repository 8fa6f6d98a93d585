#include "lagn/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "lagn/error.hpp"
#include "lagn/parallel_for.hpp"

namespace lagn {

std::vector<double> TransportPlan::row_sums() const {
    std::vector<double> sums(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) sums[i] += at(i, j);
    return sums;
}

std::vector<double> TransportPlan::col_sums() const {
    std::vector<double> sums(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) sums[j] += at(i, j);
    return sums;
}

namespace {

struct UnitRows {
    std::vector<std::vector<double>> unit;  // non-special vectors, L2-normalized
    std::vector<int> token_index;
};

UnitRows unit_non_special(const SentenceEmbedding& s) {
    UnitRows out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.special_mask[i]) continue;
        double norm2 = 0.0;
        for (double x : s.vectors[i]) norm2 += x * x;
        if (norm2 == 0.0)
            throw Error("cost_matrix: zero-norm vector at token " + std::to_string(i) + " of " +
                        s.lang + "/" + s.sent_id + " (cosine undefined)");
        const double inv = 1.0 / std::sqrt(norm2);
        std::vector<double> u = s.vectors[i];
        for (double& x : u) x *= inv;
        out.unit.push_back(std::move(u));
        out.token_index.push_back(static_cast<int>(i));
    }
    if (out.unit.empty())
        throw Error("cost_matrix: all tokens of " + s.lang + "/" + s.sent_id + " are special");
    return out;
}

} // namespace

CostMatrix cost_matrix(const SentenceEmbedding& src, const SentenceEmbedding& tgt) {
    const UnitRows a = unit_non_special(src);
    const UnitRows b = unit_non_special(tgt);

    CostMatrix cm;
    cm.rows = a.unit.size();
    cm.cols = b.unit.size();
    cm.row_tokens = a.token_index;
    cm.col_tokens = b.token_index;
    cm.values.resize(cm.rows * cm.cols);
    for (std::size_t i = 0; i < cm.rows; ++i)
        for (std::size_t j = 0; j < cm.cols; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < a.unit[i].size(); ++d) dot += a.unit[i][d] * b.unit[j][d];
            cm.at(i, j) = std::clamp(1.0 - dot, 0.0, 2.0);
        }
    return cm;
}

TransportPlan emd(std::span<const double> weights_a, std::span<const double> weights_b,
                  const CostMatrix& cost) {
    const std::size_t n = weights_a.size();
    const std::size_t m = weights_b.size();
    if (n != cost.rows || m != cost.cols)
        throw Error("emd: weight lengths (" + std::to_string(n) + ", " + std::to_string(m) +
                    ") do not match cost matrix (" + std::to_string(cost.rows) + " x " +
                    std::to_string(cost.cols) + ")");
    double sum_a = 0.0, sum_b = 0.0;
    for (double w : weights_a) {
        if (w < 0.0) throw Error("emd: negative source weight");
        sum_a += w;
    }
    for (double w : weights_b) {
        if (w < 0.0) throw Error("emd: negative target weight");
        sum_b += w;
    }
    if (std::abs(sum_a - 1.0) > 1e-9)
        throw Error("emd: source weights sum to " + std::to_string(sum_a) + ", expected 1");
    if (std::abs(sum_b - 1.0) > 1e-9)
        throw Error("emd: target weights sum to " + std::to_string(sum_b) + ", expected 1");

    // Successive shortest paths on the complete bipartite residual graph.
    // Nodes 0..n-1 are sources, n..n+m-1 sinks. Johnson potentials keep
    // reduced costs non-negative so plain Dijkstra applies throughout.
    const std::size_t nodes = n + m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> rem_a(weights_a.begin(), weights_a.end());
    std::vector<double> rem_b(weights_b.begin(), weights_b.end());
    std::vector<double> pot(nodes, 0.0);
    std::vector<double> dist(nodes);
    std::vector<int> parent(nodes);

    TransportPlan plan;
    plan.rows = n;
    plan.cols = m;
    plan.flow.assign(n * m, 0.0);

    const auto active = [](double rem) { return rem > 0.0; };
    const std::size_t max_augmentations = 4 * nodes * nodes + 64;
    std::size_t augmentations = 0;

    while (true) {
        const bool supply_left = std::any_of(rem_a.begin(), rem_a.end(), active);
        const bool demand_left = std::any_of(rem_b.begin(), rem_b.end(), active);
        if (!supply_left || !demand_left) break;
        if (++augmentations > max_augmentations)
            throw std::logic_error("emd: augmentation limit exceeded (solver bug)");

        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), -1);
        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
        for (std::size_t i = 0; i < n; ++i)
            if (active(rem_a[i])) {
                dist[i] = 0.0;
                pq.push({0.0, i});
            }

        std::ptrdiff_t target = -1;
        double target_dist = inf;
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            if (d != dist[u]) continue;  // stale queue entry
            if (u >= n && active(rem_b[u - n])) {
                target = static_cast<std::ptrdiff_t>(u);
                target_dist = d;
                break;
            }
            if (u < n) {
                for (std::size_t j = 0; j < m; ++j) {
                    const std::size_t v = n + j;
                    // Clamp at zero: roundoff may leave tiny negatives.
                    const double rc = std::max(0.0, cost.at(u, j) + pot[u] - pot[v]);
                    if (d + rc < dist[v]) {
                        dist[v] = d + rc;
                        parent[v] = static_cast<int>(u);
                        pq.push({dist[v], v});
                    }
                }
            } else {
                const std::size_t j = u - n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (plan.flow[i * m + j] <= 0.0) continue;
                    const double rc = std::max(0.0, -cost.at(i, j) + pot[u] - pot[i]);
                    if (d + rc < dist[i]) {
                        dist[i] = d + rc;
                        parent[i] = static_cast<int>(u);
                        pq.push({dist[i], i});
                    }
                }
            }
        }
        if (target < 0)
            throw std::logic_error("emd: no augmenting path although demand remains (solver bug)");

        for (std::size_t v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], target_dist);

        // Bottleneck along the path: remaining demand at the sink, remaining
        // supply at the path's origin, and flow on every backward arc used.
        double delta = rem_b[static_cast<std::size_t>(target) - n];
        for (std::size_t v = static_cast<std::size_t>(target); parent[v] >= 0;
             v = static_cast<std::size_t>(parent[v])) {
            const std::size_t u = static_cast<std::size_t>(parent[v]);
            if (u >= n) delta = std::min(delta, plan.flow[v * m + (u - n)]);  // backward arc
        }
        {
            std::size_t origin = static_cast<std::size_t>(target);
            while (parent[origin] >= 0) origin = static_cast<std::size_t>(parent[origin]);
            delta = std::min(delta, rem_a[origin]);

            for (std::size_t v = static_cast<std::size_t>(target); parent[v] >= 0;
                 v = static_cast<std::size_t>(parent[v])) {
                const std::size_t u = static_cast<std::size_t>(parent[v]);
                if (u < n)
                    plan.flow[u * m + (v - n)] += delta;  // forward arc source->sink
                else
                    plan.flow[v * m + (u - n)] -= delta;  // backward arc sink->source
            }
            rem_a[origin] -= delta;
            rem_b[static_cast<std::size_t>(target) - n] -= delta;
            if (rem_a[origin] < 1e-15) rem_a[origin] = 0.0;
            if (rem_b[static_cast<std::size_t>(target) - n] < 1e-15)
                rem_b[static_cast<std::size_t>(target) - n] = 0.0;
        }
    }

    plan.total_cost = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan.total_cost += plan.flow[i * m + j] * cost.at(i, j);
    return plan;
}

double emd_bruteforce_oracle(const CostMatrix& cost) {
    if (cost.rows != cost.cols) throw Error("emd_bruteforce_oracle: cost matrix must be square");
    const std::size_t n = cost.rows;
    if (n == 0 || n > 7) throw Error("emd_bruteforce_oracle: n must be in 1..7");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += cost.at(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

double xmover_score(const SentenceEmbedding& src, const SentenceEmbedding& tgt,
                    std::span<const SentenceTransform> pipeline) {
    SentenceEmbedding s = src;
    SentenceEmbedding t = tgt;
    for (const auto& step : pipeline) {
        s = step(s);
        t = step(t);
    }
    const CostMatrix cm = cost_matrix(s, t);
    const std::vector<double> wa(cm.rows, 1.0 / static_cast<double>(cm.rows));
    const std::vector<double> wb(cm.cols, 1.0 / static_cast<double>(cm.cols));
    return -emd(wa, wb, cm).total_cost;
}

ScoreReport score_pairs(const ParallelCorpus& pairs, const std::string& system_id, int threads) {
    ScoreReport report;
    report.system = system_id;
    report.pair_ids.resize(pairs.pairs.size());
    report.scores.resize(pairs.pairs.size());
    parallel_for(pairs.pairs.size(), threads, [&](std::size_t k) {
        const auto& p = pairs.pairs[k];
        report.pair_ids[k] = p.id;
        report.scores[k] = xmover_score(pairs.src(p), pairs.tgt(p));
    });
    return report;
}

} // namespace lagn
