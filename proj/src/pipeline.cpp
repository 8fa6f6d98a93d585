#include "lagn/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "lagn/analysis.hpp"
#include "lagn/embedding.hpp"
#include "lagn/emd.hpp"
#include "lagn/error.hpp"
#include "lagn/realign.hpp"
#include "lagn/textnorm.hpp"
#include "lagn/vecnorm.hpp"

namespace lagn {

using nlohmann::json;

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t hash = 14695981039346656037ull;
    for (const char c : data) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

const std::set<std::string> kKnownOps = {
    "load-embeddings", "load-alignments", "validate",  "normalize", "align-fit",
    "align-apply",     "score",           "pearson",   "centroids", "distance-matrix",
    "wals",            "discrim",         "gap",       "textnorm",
};

// Full-precision, locale-independent double rendering for artifacts.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string require_string(const json& stage, const char* key) {
    if (!stage.contains(key) || !stage.at(key).is_string())
        throw Error(std::string("missing or non-string parameter \"") + key + "\"");
    return stage.at(key).get<std::string>();
}

} // namespace

RunConfig RunConfig::parse(const json& doc) {
    if (!doc.is_object()) throw Error("run config must be a JSON object");
    RunConfig config;
    config.seed = doc.value("seed", std::uint64_t{0});
    config.threads = doc.value("threads", 1);
    config.out_dir = doc.value("out_dir", std::string("."));
    if (!doc.contains("stages") || !doc.at("stages").is_array())
        throw Error("run config needs a \"stages\" array");

    for (const auto& stage : doc.at("stages")) {
        if (!stage.is_object() || !stage.contains("op") || !stage.at("op").is_string())
            throw Error("every stage needs an \"op\" name");
        const std::string op = stage.at("op").get<std::string>();
        if (!kKnownOps.count(op)) throw Error("unknown stage \"" + op + "\"");
        config.stages.push_back(stage);
        config.stage_names.push_back(op);
    }
    if (config.stages.empty()) throw Error("run config has no stages");

    // Hash only what determines artifact content: thread count and output
    // directory must not change a single byte.
    json hashed;
    hashed["seed"] = config.seed;
    hashed["stages"] = doc.at("stages");
    config.config_hash = fnv1a_hex(hashed.dump());
    return config;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(path + ": malformed config JSON: " + e.what());
    }
    try {
        return parse(doc);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

namespace {

struct Workspace {
    std::map<std::string, EmbeddingCorpus> corpora;  // node addresses are stable
    std::optional<ParallelCorpus> parallel;
    std::optional<AffineAlignmentModel> model;
    std::optional<ScoreReport> scores;

    EmbeddingCorpus& corpus(const std::string& name) {
        const auto it = corpora.find(name);
        if (it == corpora.end()) throw Error("no corpus named \"" + name + "\" has been loaded");
        return it->second;
    }
};

class Emitter {
public:
    Emitter(const RunConfig& config, PipelineResult& result)
        : config_(config), result_(result) {}

    void note_variant(const std::string& v) { variants_.insert(v); }

    std::string header() const {
        std::string stages;
        for (std::size_t i = 0; i < config_.stage_names.size(); ++i) {
            if (i) stages += ',';
            stages += config_.stage_names[i];
        }
        std::string variants;
        for (const auto& v : variants_) {
            if (!variants.empty()) variants += ';';
            variants += v;
        }
        std::string h;
        h += "# tool=lingua-agnostic\n";
        h += "# config_hash=" + config_.config_hash + "\n";
        h += "# seed=" + std::to_string(config_.seed) + "\n";
        h += "# stages=" + stages + "\n";
        h += "# variants=" + variants + "\n";
        return h;
    }

    // Text artifact with the reproducibility header.
    void write_text(const std::string& name, const std::string& body) {
        const std::string path = resolve(name);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write artifact: " + path);
        out << header() << body;
        result_.artifacts.push_back(path);
    }

    // JSON artifact; the header becomes a "_meta" object.
    void write_json(const std::string& name, json doc) {
        const std::string path = resolve(name);
        json meta;
        meta["config_hash"] = config_.config_hash;
        meta["seed"] = config_.seed;
        meta["stages"] = config_.stage_names;
        meta["variants"] = std::vector<std::string>(variants_.begin(), variants_.end());
        doc["_meta"] = meta;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write artifact: " + path);
        out << doc.dump(2) << '\n';
        result_.artifacts.push_back(path);
    }

    std::string resolve(const std::string& name) const {
        const std::filesystem::path p(name);
        if (p.is_absolute()) return name;
        return (std::filesystem::path(config_.out_dir) / p).string();
    }

private:
    const RunConfig& config_;
    PipelineResult& result_;
    std::set<std::string> variants_;  // ordered, so headers are deterministic
};

void stage_load_embeddings(Workspace& ws, const json& stage) {
    const std::string into = require_string(stage, "into");
    const std::string path = require_string(stage, "path");
    std::optional<std::size_t> expected;
    if (stage.contains("expected-dim")) expected = stage.at("expected-dim").get<std::size_t>();
    EmbeddingCorpus corpus = load_embeddings(path, expected);
    if (stage.contains("layer")) corpus = filter_layer(corpus, stage.at("layer").get<int>());
    // Replacing a corpus invalidates pair references into it.
    if (ws.corpora.count(into)) ws.parallel.reset();
    ws.corpora[into] = std::move(corpus);
}

void stage_load_alignments(Workspace& ws, const json& stage) {
    const std::string src = stage.value("src", "src");
    const std::string tgt = stage.value("tgt", "tgt");
    ws.parallel = load_alignments(require_string(stage, "pharaoh"), require_string(stage, "index"),
                                  ws.corpus(src), ws.corpus(tgt));
}

void stage_validate(Workspace& ws, const json& stage, Emitter& emit) {
    const std::string name = require_string(stage, "corpus");
    const ValidationReport report = validate_corpus(ws.corpus(name));
    std::string body;
    body += "corpus\t" + name + "\n";
    body += "violations\t" + std::to_string(report.issues.size()) + "\n";
    for (const auto& issue : report.issues)
        body += issue.sent_key + "\t" + issue.message + "\n";
    if (stage.contains("out")) emit.write_text(stage.at("out").get<std::string>(), body);
    if (!report.ok() && stage.value("strict", true))
        throw Error("corpus \"" + name + "\" has " + std::to_string(report.issues.size()) +
                    " invariant violations");
}

void stage_normalize(Workspace& ws, const json& stage, Emitter& emit) {
    const std::string name = require_string(stage, "corpus");
    const std::string mode = require_string(stage, "mode");
    EmbeddingCorpus& corpus = ws.corpus(name);

    json stats_doc;
    if (mode == "batch") {
        const auto batch_size = stage.value("batch-size", kDefaultBatchSize);
        const double epsilon = stage.value("epsilon", kDefaultEpsilon);
        BatchNormResult result = batch_normalize(corpus, batch_size, epsilon);
        corpus = std::move(result.corpus);
        emit.note_variant("batchnorm-degenerate-cell=pooled-fallback");
        stats_doc["mode"] = "batch";
        stats_doc["batch_size"] = batch_size;
        stats_doc["epsilon"] = epsilon;
        stats_doc["cells"] = result.stats.size();
        json fallbacks = json::array();
        for (const auto& f : result.fallbacks)
            fallbacks.push_back({{"batch", f.batch_index}, {"timestep", f.timestep},
                                 {"covering", f.covering}});
        stats_doc["fallback_cells"] = fallbacks;
        if (stage.value("full-stats", false)) {
            json cells = json::array();
            for (const auto& s : result.stats)
                cells.push_back({{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}});
            stats_doc["cell_stats"] = cells;
        }
    } else if (mode == "layer-token" || mode == "layer-seq") {
        const double epsilon = stage.value("epsilon", kDefaultEpsilon);
        corpus = layer_normalize(corpus,
                                 mode == "layer-token" ? LayerNormVariant::PerToken
                                                       : LayerNormVariant::PerSequence,
                                 epsilon);
        stats_doc["mode"] = mode;
        stats_doc["epsilon"] = epsilon;
    } else if (mode == "language") {
        const double epsilon = stage.value("epsilon", kLanguageEpsilon);
        LanguageStandardizeResult result = language_standardize(corpus, epsilon);
        corpus = std::move(result.corpus);
        emit.note_variant("language-standardize-epsilon=" + fmt_double(epsilon));
        stats_doc["mode"] = "language";
        stats_doc["epsilon"] = epsilon;
        json langs = json::object();
        for (const auto& [lang, s] : result.stats)
            langs[lang] = {{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}};
        stats_doc["languages"] = langs;
    } else {
        throw Error("unknown normalize mode \"" + mode +
                    "\" (expected batch|layer-token|layer-seq|language)");
    }
    if (stage.contains("stats-out")) emit.write_json(stage.at("stats-out").get<std::string>(), stats_doc);
}

AlignMode parse_align_mode(const std::string& mode) {
    if (mode == "shared") return AlignMode::Shared;
    if (mode == "per-language") return AlignMode::PerLanguage;
    throw Error("unknown alignment mode \"" + mode + "\" (expected shared|per-language)");
}

void stage_align_fit(Workspace& ws, const json& stage, Emitter& emit) {
    if (!ws.parallel) throw Error("align-fit needs load-alignments first");
    const AlignMode mode = parse_align_mode(stage.value("mode", "per-language"));
    const double lambda = stage.value("lambda", 1.0);
    const std::string solver_name = stage.value("solver", "closed-form");
    AlignSolver solver;
    if (solver_name == "closed-form")
        solver = AlignSolver::ClosedForm;
    else if (solver_name == "gradient")
        solver = AlignSolver::Gradient;
    else
        throw Error("unknown solver \"" + solver_name + "\" (expected closed-form|gradient)");

    SolverOpts opts;
    opts.step_size = stage.value("step-size", opts.step_size);
    opts.max_epochs = stage.value("max-epochs", opts.max_epochs);
    opts.tol = stage.value("tol", opts.tol);
    opts.damping = stage.value("damping", opts.damping);

    ws.model = fit_alignment(*ws.parallel, mode, lambda, solver, opts);
    emit.note_variant("realign=" + ws.model->regularizer_variant);
    if (stage.contains("out"))
        emit.write_json(stage.at("out").get<std::string>(), json::parse(model_to_json(*ws.model)));
}

void stage_align_apply(Workspace& ws, const json& stage, Emitter& emit, int threads) {
    const std::string name = require_string(stage, "corpus");
    if (stage.contains("model")) ws.model = load_model(stage.at("model").get<std::string>());
    if (!ws.model) throw Error("align-apply needs a fitted model (align-fit) or a \"model\" file");
    emit.note_variant("realign=" + ws.model->regularizer_variant);
    EmbeddingCorpus& corpus = ws.corpus(name);
    corpus = apply_alignment(*ws.model, corpus, threads);
}

void stage_score(Workspace& ws, const json& stage, Emitter& emit, int threads) {
    if (!ws.parallel) throw Error("score needs load-alignments first");
    emit.note_variant("emd=1-cosine-cost,uniform-weights,exact");
    ws.scores = score_pairs(*ws.parallel, stage.value("system", std::string("default")), threads);
    std::string body;
    for (std::size_t k = 0; k < ws.scores->scores.size(); ++k)
        body += ws.scores->pair_ids[k] + "\t" + fmt_double(ws.scores->scores[k]) + "\n";
    emit.write_text(require_string(stage, "out"), body);
}

void stage_pearson(Workspace& ws, const json& stage, Emitter& emit) {
    if (!ws.scores) throw Error("pearson needs a score stage first");
    const JudgmentSet judgments = load_judgments_tsv(require_string(stage, "judgments"));
    std::map<std::string, double> by_id(judgments.judgments.begin(), judgments.judgments.end());

    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < ws.scores->scores.size(); ++k) {
        const auto it = by_id.find(ws.scores->pair_ids[k]);
        if (it == by_id.end()) continue;
        xs.push_back(ws.scores->scores[k]);
        ys.push_back(it->second);
    }
    const double r = pearson(xs, ys);
    std::string body;
    body += "pearson\t" + fmt_double(r) + "\n";
    body += "segments\t" + std::to_string(xs.size()) + "\n";
    emit.write_text(require_string(stage, "out"), body);
}

void stage_centroids(Workspace& ws, const json& stage, Emitter& emit) {
    const EmbeddingCorpus& corpus = ws.corpus(require_string(stage, "corpus"));
    const int layer = stage.value("layer", 0);
    std::string body = "lang,n_sentences,components\n";
    for (const auto& lang : corpus.languages()) {
        const LanguageCentroid c = language_centroid(corpus, lang, layer);
        body += lang + "," + std::to_string(c.n_sentences);
        for (const double x : c.vector) body += "," + fmt_double(x);
        body += "\n";
    }
    emit.write_text(require_string(stage, "out"), body);
}

void stage_distance_matrix(Workspace& ws, const json& stage, Emitter& emit) {
    const EmbeddingCorpus& corpus = ws.corpus(require_string(stage, "corpus"));
    const int layer = stage.value("layer", 0);
    const std::vector<std::string> langs = corpus.languages();
    std::vector<LanguageCentroid> centroids;
    centroids.reserve(langs.size());
    for (const auto& lang : langs) centroids.push_back(language_centroid(corpus, lang, layer));

    std::string body = "lang";
    for (const auto& lang : langs) body += "," + lang;
    body += "\n";
    for (std::size_t i = 0; i < langs.size(); ++i) {
        body += langs[i];
        for (std::size_t j = 0; j < langs.size(); ++j)
            body += "," + fmt_double(i == j ? 0.0 : language_distance(centroids[i], centroids[j]));
        body += "\n";
    }
    emit.write_text(require_string(stage, "out"), body);
}

void stage_wals(const json& stage, Emitter& emit) {
    const auto profiles = load_wals_csv(require_string(stage, "profiles"));
    std::optional<std::vector<std::string>> feature_set;
    if (stage.contains("feature-set"))
        feature_set = stage.at("feature-set").get<std::vector<std::string>>();

    std::string body = "lang1,lang2,similarity,n_compared\n";
    for (auto it1 = profiles.begin(); it1 != profiles.end(); ++it1)
        for (auto it2 = std::next(it1); it2 != profiles.end(); ++it2) {
            const WalsSimilarity sim = wals_similarity(it1->second, it2->second, feature_set);
            body += it1->first + "," + it2->first + "," + fmt_double(sim.similarity) + "," +
                    std::to_string(sim.n_compared) + "\n";
        }
    emit.write_text(require_string(stage, "out"), body);
}

void stage_discrim(Workspace& ws, const json& stage, Emitter& emit, std::uint64_t seed) {
    if (!ws.parallel) throw Error("discrim needs load-alignments first");
    const std::size_t n_samples = stage.at("n-samples").get<std::size_t>();
    const DiscriminativenessResult result =
        discriminativeness(*ws.parallel, n_samples, stage.value("seed", seed));
    std::string body;
    body += "separation\t" + fmt_double(result.separation) + "\n";
    for (std::size_t k = 0; k < result.matched_cosines.size(); ++k)
        body += "matched\t" + fmt_double(result.matched_cosines[k]) + "\n";
    for (std::size_t k = 0; k < result.random_cosines.size(); ++k)
        body += "random\t" + fmt_double(result.random_cosines[k]) + "\n";
    emit.write_text(require_string(stage, "out"), body);
}

void stage_gap(const json& stage, Emitter& emit) {
    std::map<std::string, double> scores;
    if (stage.contains("scores")) {
        for (const auto& [lang, v] : stage.at("scores").items()) scores[lang] = v.get<double>();
    } else if (stage.contains("scores-file")) {
        std::ifstream in(stage.at("scores-file").get<std::string>());
        if (!in) throw Error("cannot open scores file");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const std::size_t tab = line.find('\t');
            if (tab == std::string::npos) throw Error("scores file: expected \"lang<TAB>score\"");
            scores[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
        }
    } else {
        throw Error("gap needs \"scores\" (inline map) or \"scores-file\"");
    }
    const GapReport report = transfer_gap(scores, require_string(stage, "pivot"));
    std::string body;
    body += "pivot\t" + report.pivot_lang + "\t" + fmt_double(report.pivot_score) + "\n";
    for (const auto& [lang, score] : report.per_language)
        body += "lang\t" + lang + "\t" + fmt_double(score) + "\n";
    body += "gap\t" + fmt_double(report.gap) + "\n";
    emit.write_text(require_string(stage, "out"), body);
}

void stage_textnorm(const json& stage, Emitter& emit) {
    const std::vector<ConlluSentence> sentences = load_conllu(require_string(stage, "in"));
    TypologyTarget target;
    const std::string adj = stage.value("adj-order", "adj-noun");
    if (adj == "adj-noun")
        target.adj_order = AdjOrder::AdjNoun;
    else if (adj == "noun-adj")
        target.adj_order = AdjOrder::NounAdj;
    else
        throw Error("unknown adj-order \"" + adj + "\"");
    const std::string obj = stage.value("obj-order", "verb-obj");
    if (obj == "verb-obj")
        target.obj_order = ObjOrder::VerbObj;
    else if (obj == "obj-verb")
        target.obj_order = ObjOrder::ObjVerb;
    else
        throw Error("unknown obj-order \"" + obj + "\"");

    const bool expand = stage.value("expand-contractions", true);
    const bool reorder_adj = stage.value("reorder-adjectives", true);
    const bool reorder_obj = stage.value("reorder-objects", true);
    const bool strip_punct = stage.value("strip-punct", true);

    ReorderLog log;
    std::string body;
    for (const auto& sentence : sentences) {
        ConlluSentence s = sentence;
        if (expand) s = expand_contractions(s);
        if (reorder_adj) s = reorder_adjectives(s, target, &log);
        if (reorder_obj) s = reorder_object_verb(s, target, &log);
        body += render_text(s, strip_punct) + "\n";
    }
    emit.write_text(require_string(stage, "out"), body);
    if (stage.contains("skip-log")) {
        std::string skips;
        for (const auto& msg : log.skips) skips += msg + "\n";
        emit.write_text(stage.at("skip-log").get<std::string>(), skips);
    }
}

} // namespace

PipelineResult run(const RunConfig& config) {
    PipelineResult result;
    Workspace ws;
    Emitter emit(config, result);
    std::filesystem::create_directories(config.out_dir);

    for (std::size_t idx = 0; idx < config.stages.size(); ++idx) {
        const json& stage = config.stages[idx];
        const std::string& op = config.stage_names[idx];
        try {
            if (op == "load-embeddings")
                stage_load_embeddings(ws, stage);
            else if (op == "load-alignments")
                stage_load_alignments(ws, stage);
            else if (op == "validate")
                stage_validate(ws, stage, emit);
            else if (op == "normalize")
                stage_normalize(ws, stage, emit);
            else if (op == "align-fit")
                stage_align_fit(ws, stage, emit);
            else if (op == "align-apply")
                stage_align_apply(ws, stage, emit, config.threads);
            else if (op == "score")
                stage_score(ws, stage, emit, config.threads);
            else if (op == "pearson")
                stage_pearson(ws, stage, emit);
            else if (op == "centroids")
                stage_centroids(ws, stage, emit);
            else if (op == "distance-matrix")
                stage_distance_matrix(ws, stage, emit);
            else if (op == "wals")
                stage_wals(stage, emit);
            else if (op == "discrim")
                stage_discrim(ws, stage, emit, config.seed);
            else if (op == "gap")
                stage_gap(stage, emit);
            else if (op == "textnorm")
                stage_textnorm(stage, emit);
        } catch (const Error& e) {
            throw Error("stage " + std::to_string(idx + 1) + " (" + op + "): " + e.what());
        }
    }
    return result;
}

} // namespace lagn
