#include "lagn/realign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "lagn/error.hpp"
#include "lagn/parallel_for.hpp"

namespace lagn {

using nlohmann::json;

AffineMap AffineMap::identity(std::size_t dim) {
    AffineMap m;
    m.W.assign(dim * dim, 0.0);
    m.b.assign(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) m.W[d * dim + d] = 1.0;
    return m;
}

std::vector<double> AffineMap::operator()(const std::vector<double>& x) const {
    const std::size_t dim = b.size();
    std::vector<double> y(dim, 0.0);
    for (std::size_t r = 0; r < dim; ++r) {
        double acc = b[r];
        const double* row = &W[r * dim];
        for (std::size_t c = 0; c < dim; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

double AffineMap::frobenius_distance_to_identity() const {
    const std::size_t dim = b.size();
    double acc = 0.0;
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            const double delta = W[r * dim + c] - (r == c ? 1.0 : 0.0);
            acc += delta * delta;
        }
    return std::sqrt(acc);
}

double AffineMap::offset_norm() const {
    double acc = 0.0;
    for (double x : b) acc += x * x;
    return std::sqrt(acc);
}

const AffineMap* AffineAlignmentModel::map_for(const std::string& lang) const {
    if (mode == AlignMode::Shared) return &shared;
    if (lang == pivot_lang) return nullptr;
    const auto it = per_language.find(lang);
    if (it == per_language.end())
        throw Error("alignment model has no map for language " + lang);
    return &it->second;
}

namespace {

constexpr const char* kSharedVariant = "shared-map, drift over pivot-side tokens";
constexpr const char* kPerLanguageVariant = "per-language maps, drift over target-side tokens";

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double delta = a[d] - b[d];
        acc += delta * delta;
    }
    return acc;
}

// The objective is quadratic in M = [W b]: every term is
// w * ||M xt - y||^2 with xt = [x; c], c in {0, 1}. Accumulating
// A = sum w xt xt', B = sum w y xt', k = sum w ||y||^2 lets both solvers
// work on (D+1)-sized matrices regardless of corpus size.
struct Quadratic {
    Eigen::MatrixXd A;  // (D+1) x (D+1)
    Eigen::MatrixXd B;  // D x (D+1)
    double k = 0.0;

    explicit Quadratic(std::size_t dim)
        : A(Eigen::MatrixXd::Zero(dim + 1, dim + 1)), B(Eigen::MatrixXd::Zero(dim, dim + 1)) {}

    void add(const Eigen::VectorXd& xt, const Eigen::VectorXd& y, double w) {
        A.noalias() += w * xt * xt.transpose();
        B.noalias() += w * y * xt.transpose();
        k += w * y.squaredNorm();
    }

    double value(const Eigen::MatrixXd& M) const {
        const double v = (M * A).cwiseProduct(M).sum() - 2.0 * (M.cwiseProduct(B)).sum() + k;
        return std::max(v, 0.0);  // clamp roundoff near a perfect fit
    }

    Eigen::MatrixXd gradient(const Eigen::MatrixXd& M) const {
        return 2.0 * (M * A - B);
    }
};

struct Problem {
    Quadratic align;  // L
    Quadratic drift;  // R
    explicit Problem(std::size_t dim) : align(dim), drift(dim) {}
};

Eigen::VectorXd homogeneous(const std::vector<double>& x, double c) {
    Eigen::VectorXd xt(x.size() + 1);
    for (std::size_t d = 0; d < x.size(); ++d) xt[d] = x[d];
    xt[x.size()] = c;
    return xt;
}

Eigen::VectorXd to_eigen(const std::vector<double>& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

// Builds the per-map quadratic problems. Shared mode yields one problem
// under the empty key; per-language mode one per non-pivot language.
std::map<std::string, Problem> build_problems(const ParallelCorpus& corpus, AlignMode mode,
                                              std::size_t dim) {
    std::map<std::string, Problem> problems;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));

    for (const auto& pair : corpus.pairs) {
        const SentenceEmbedding& src = corpus.src(pair);
        const SentenceEmbedding& tgt = corpus.tgt(pair);
        const std::string key = mode == AlignMode::Shared ? std::string() : tgt.lang;
        auto it = problems.find(key);
        if (it == problems.end()) it = problems.emplace(key, Problem(dim)).first;
        Problem& prob = it->second;

        if (mode == AlignMode::Shared) {
            // ||W(s - t)||^2: the offset cancels, so the homogeneous
            // coordinate is zero.
            for (const auto& [i, j] : pair.links) {
                std::vector<double> diff(dim);
                for (std::size_t d = 0; d < dim; ++d)
                    diff[d] = src.vectors[static_cast<std::size_t>(i)][d] -
                              tgt.vectors[static_cast<std::size_t>(j)][d];
                prob.align.add(homogeneous(diff, 0.0), zero, 1.0);
            }
            for (const auto& u : src.vectors) prob.drift.add(homogeneous(u, 1.0), to_eigen(u), 1.0);
        } else {
            for (const auto& [i, j] : pair.links)
                prob.align.add(homogeneous(tgt.vectors[static_cast<std::size_t>(j)], 1.0),
                               to_eigen(src.vectors[static_cast<std::size_t>(i)]), 1.0);
            for (const auto& u : tgt.vectors) prob.drift.add(homogeneous(u, 1.0), to_eigen(u), 1.0);
        }
    }
    return problems;
}

Eigen::MatrixXd identity_params(std::size_t dim) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim + 1));
    M.leftCols(static_cast<Eigen::Index>(dim)).setIdentity();
    return M;
}

AffineMap to_affine_map(const Eigen::MatrixXd& M, std::size_t dim) {
    AffineMap map;
    map.W.resize(dim * dim);
    map.b.resize(dim);
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c)
            map.W[r * dim + c] = M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        map.b[r] = M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(dim));
    }
    for (double x : map.W)
        if (!std::isfinite(x)) throw Error("fit_alignment: solver produced non-finite parameters");
    for (double x : map.b)
        if (!std::isfinite(x)) throw Error("fit_alignment: solver produced non-finite parameters");
    return map;
}

Eigen::MatrixXd solve_closed_form(const Problem& prob, double lambda, const SolverOpts& opts) {
    Eigen::MatrixXd A = prob.align.A + lambda * prob.drift.A;
    const Eigen::MatrixXd B = prob.align.B + lambda * prob.drift.B;

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.rows()) {
        if (opts.damping <= 0.0)
            throw Error("fit_alignment: normal equations are rank-deficient and damping is disabled");
        A.diagonal().array() += opts.damping;
    }
    return A.ldlt().solve(B.transpose()).transpose();
}

} // namespace

LossValue alignment_loss(const AffineAlignmentModel& model, const ParallelCorpus& corpus,
                         double lambda) {
    if (lambda < 0) throw Error("alignment_loss: lambda must be >= 0");
    if (corpus.src_corpus->dim != model.dim || corpus.tgt_corpus->dim != model.dim)
        throw Error("alignment_loss: corpus dimension does not match model dimension " +
                    std::to_string(model.dim));
    if (!corpus.pairs.empty() && corpus.pivot_lang != model.pivot_lang)
        throw Error("alignment_loss: corpus pivot " + corpus.pivot_lang +
                    " does not match model pivot " + model.pivot_lang);

    LossValue loss;
    for (const auto& pair : corpus.pairs) {
        const SentenceEmbedding& src = corpus.src(pair);
        const SentenceEmbedding& tgt = corpus.tgt(pair);
        const AffineMap* src_map = model.map_for(src.lang);
        const AffineMap* tgt_map = model.map_for(tgt.lang);

        for (const auto& [i, j] : pair.links) {
            const auto& s = src.vectors[static_cast<std::size_t>(i)];
            const auto& t = tgt.vectors[static_cast<std::size_t>(j)];
            const std::vector<double> ms = src_map ? (*src_map)(s) : s;
            const std::vector<double> mt = tgt_map ? (*tgt_map)(t) : t;
            loss.align += sq_distance(ms, mt);
        }

        if (model.mode == AlignMode::Shared) {
            for (const auto& u : src.vectors) loss.drift += sq_distance((*src_map)(u), u);
        } else if (tgt_map) {
            for (const auto& u : tgt.vectors) loss.drift += sq_distance((*tgt_map)(u), u);
        }
    }
    return loss;
}

AffineAlignmentModel fit_alignment(const ParallelCorpus& corpus, AlignMode mode, double lambda,
                                   AlignSolver solver, const SolverOpts& opts) {
    if (lambda < 0) throw Error("fit_alignment: lambda must be >= 0");
    if (corpus.pairs.empty()) throw Error("fit_alignment: empty parallel corpus");
    const std::size_t dim = corpus.src_corpus->dim;
    if (corpus.tgt_corpus->dim != dim)
        throw Error("fit_alignment: source and target corpora have different dimensions");

    AffineAlignmentModel model;
    model.mode = mode;
    model.pivot_lang = corpus.pivot_lang;
    model.dim = dim;
    model.lambda = lambda;
    model.regularizer_variant =
        mode == AlignMode::Shared ? kSharedVariant : kPerLanguageVariant;

    std::map<std::string, Problem> problems = build_problems(corpus, mode, dim);

    // Per-language closed form needs dim+1 links to determine an affine map.
    AlignSolver effective = solver;
    if (solver == AlignSolver::ClosedForm && mode == AlignMode::PerLanguage) {
        std::map<std::string, std::size_t> link_counts;
        for (const auto& pair : corpus.pairs)
            link_counts[corpus.tgt(pair).lang] += pair.links.size();
        for (const auto& [lang, count] : link_counts) {
            if (count < dim + 1) {
                effective = AlignSolver::Gradient;
                model.notes.push_back("language " + lang + " has " + std::to_string(count) +
                                      " links (< dim+1 = " + std::to_string(dim + 1) +
                                      "); closed form replaced by gradient descent");
            }
        }
    }

    if (effective == AlignSolver::ClosedForm) {
        // One-entry log so closed-form runs are also inspectable.
        LossValue at_solution;
        for (const auto& [key, prob] : problems) {
            const Eigen::MatrixXd M = solve_closed_form(prob, lambda, opts);
            at_solution.align += prob.align.value(M);
            at_solution.drift += prob.drift.value(M);
            if (mode == AlignMode::Shared)
                model.shared = to_affine_map(M, dim);
            else
                model.per_language.emplace(key, to_affine_map(M, dim));
        }
        model.training_log.push_back({0, at_solution.align, at_solution.drift});
        return model;
    }

    // Fixed-step gradient descent from the identity, all maps in lockstep;
    // the blocks are independent so this is descent on the joint objective.
    std::map<std::string, Eigen::MatrixXd> params;
    for (const auto& [key, prob] : problems) params.emplace(key, identity_params(dim));

    const auto evaluate = [&](LossValue& out) {
        out = {};
        for (const auto& [key, prob] : problems) {
            const Eigen::MatrixXd& M = params.at(key);
            out.align += prob.align.value(M);
            out.drift += prob.drift.value(M);
        }
    };

    LossValue current;
    evaluate(current);
    model.training_log.push_back({0, current.align, current.drift});
    double prev_total = current.align + lambda * current.drift;

    model.converged = false;
    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        for (auto& [key, M] : params) {
            const Problem& prob = problems.at(key);
            const Eigen::MatrixXd grad =
                prob.align.gradient(M) + lambda * prob.drift.gradient(M);
            M.noalias() -= opts.step_size * grad;
        }
        evaluate(current);
        model.training_log.push_back({epoch, current.align, current.drift});
        const double total = current.align + lambda * current.drift;
        if (!std::isfinite(total))
            throw Error("fit_alignment: gradient descent diverged; lower the step size");
        const double denom = std::max(std::abs(prev_total), 1e-30);
        if (total < 1e-15 || std::abs(prev_total - total) / denom < opts.tol) {
            model.converged = true;
            break;
        }
        prev_total = total;
    }
    if (!model.converged)
        model.notes.push_back("gradient descent did not reach tol=" + std::to_string(opts.tol) +
                              " within " + std::to_string(opts.max_epochs) + " epochs");

    for (const auto& [key, M] : params) {
        if (mode == AlignMode::Shared)
            model.shared = to_affine_map(M, dim);
        else
            model.per_language.emplace(key, to_affine_map(M, dim));
    }
    return model;
}

EmbeddingCorpus apply_alignment(const AffineAlignmentModel& model, const EmbeddingCorpus& corpus,
                                int threads) {
    if (corpus.dim != model.dim)
        throw Error("apply_alignment: corpus dimension " + std::to_string(corpus.dim) +
                    " does not match model dimension " + std::to_string(model.dim));
    // Resolve maps up front so unknown languages fail before any work.
    std::map<std::string, const AffineMap*> maps;
    for (const auto& lang : corpus.languages()) maps.emplace(lang, model.map_for(lang));

    EmbeddingCorpus out = corpus;
    parallel_for(out.sentences.size(), threads, [&](std::size_t si) {
        auto& s = out.sentences[si];
        const AffineMap* map = maps.at(s.lang);
        if (!map) return;  // pivot under a per-language model
        for (auto& v : s.vectors) v = (*map)(v);
    });
    return out;
}

namespace {

json map_to_json(const AffineMap& map) {
    const std::size_t dim = map.b.size();
    json rows = json::array();
    for (std::size_t r = 0; r < dim; ++r)
        rows.push_back(std::vector<double>(map.W.begin() + static_cast<std::ptrdiff_t>(r * dim),
                                           map.W.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim)));
    return json{{"W", rows}, {"b", map.b}};
}

AffineMap map_from_json(const json& j, std::size_t dim) {
    AffineMap map;
    map.b = j.at("b").get<std::vector<double>>();
    if (map.b.size() != dim) throw Error("model file: offset dimension mismatch");
    map.W.reserve(dim * dim);
    for (const auto& row : j.at("W")) {
        const auto r = row.get<std::vector<double>>();
        if (r.size() != dim) throw Error("model file: matrix row dimension mismatch");
        map.W.insert(map.W.end(), r.begin(), r.end());
    }
    if (map.W.size() != dim * dim) throw Error("model file: matrix row count mismatch");
    for (double x : map.W)
        if (!std::isfinite(x)) throw Error("model file: non-finite matrix entry");
    for (double x : map.b)
        if (!std::isfinite(x)) throw Error("model file: non-finite offset entry");
    return map;
}

} // namespace

std::string model_to_json(const AffineAlignmentModel& model) {
    json j;
    j["mode"] = model.mode == AlignMode::Shared ? "shared" : "per-language";
    j["pivot"] = model.pivot_lang;
    j["dim"] = model.dim;
    j["lambda"] = model.lambda;
    j["regularizer"] = model.regularizer_variant;
    j["converged"] = model.converged;
    j["notes"] = model.notes;
    if (model.mode == AlignMode::Shared) {
        j["shared"] = map_to_json(model.shared);
    } else {
        json maps = json::object();
        for (const auto& [lang, map] : model.per_language) maps[lang] = map_to_json(map);
        j["maps"] = maps;
    }
    return j.dump(2);
}

void save_model(const AffineAlignmentModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out << model_to_json(model) << '\n';
}

namespace {

AffineAlignmentModel model_from_parsed(const json& j, const std::string& where) {
    AffineAlignmentModel model;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "shared")
        model.mode = AlignMode::Shared;
    else if (mode == "per-language")
        model.mode = AlignMode::PerLanguage;
    else
        throw Error(where + ": unknown mode \"" + mode + "\"");
    model.pivot_lang = j.at("pivot").get<std::string>();
    model.dim = j.at("dim").get<std::size_t>();
    model.lambda = j.at("lambda").get<double>();
    model.regularizer_variant = j.value("regularizer", "");
    model.converged = j.value("converged", true);
    if (j.contains("notes")) model.notes = j.at("notes").get<std::vector<std::string>>();
    if (model.mode == AlignMode::Shared) {
        model.shared = map_from_json(j.at("shared"), model.dim);
    } else {
        for (const auto& [lang, mj] : j.at("maps").items())
            model.per_language.emplace(lang, map_from_json(mj, model.dim));
    }
    return model;
}

} // namespace

AffineAlignmentModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model JSON: ") + e.what());
    }
    return model_from_parsed(j, "model JSON");
}

AffineAlignmentModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(path + ": malformed model JSON: " + e.what());
    }
    return model_from_parsed(j, path);
}

} // namespace lagn
