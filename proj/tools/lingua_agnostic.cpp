// Command-line front end composing the library's pipeline stages:
// validate, normalize, align, score, textnorm, analyze, run.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "lagn/analysis.hpp"
#include "lagn/embedding.hpp"
#include "lagn/emd.hpp"
#include "lagn/error.hpp"
#include "lagn/pipeline.hpp"
#include "lagn/realign.hpp"
#include "lagn/textnorm.hpp"
#include "lagn/vecnorm.hpp"

namespace {

using nlohmann::json;

int g_verbosity = [] {
    const char* env = std::getenv("LAGN_LOG");
    return env ? std::atoi(env) : 0;
}();

void log_info(const std::string& msg) {
    if (g_verbosity > 0) std::cerr << "[lingua-agnostic] " << msg << '\n';
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw lagn::Error("cannot write output file: " + path);
    return out;
}

// Builds a one-off run config from CLI flags and executes it, so the
// standalone subcommands and `run` share one execution path.
int run_stages(json stages, std::uint64_t seed, int threads, const std::string& out_dir) {
    json doc;
    doc["seed"] = seed;
    doc["threads"] = threads;
    doc["out_dir"] = out_dir;
    doc["stages"] = std::move(stages);
    const lagn::RunConfig config = lagn::RunConfig::parse(doc);
    const lagn::PipelineResult result = lagn::run(config);
    for (const auto& artifact : result.artifacts) log_info("wrote " + artifact);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Language-agnostic embedding toolkit: normalization, re-alignment, "
                 "EMD scoring and typology-driven text normalization"};
    app.require_subcommand(1);

    int threads = 1;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker threads for embarrassingly parallel stages");
    app.add_option("--seed", seed, "seed for sampling operations");

    // validate ---------------------------------------------------------
    auto* cmd_validate = app.add_subcommand("validate", "check an embedding file's invariants");
    std::string v_in, v_out;
    cmd_validate->add_option("--in", v_in, "embedding JSONL file")->required();
    cmd_validate->add_option("--out", v_out, "violation report (default: stdout)");

    // normalize --------------------------------------------------------
    auto* cmd_norm = app.add_subcommand("normalize", "vector-space normalization");
    std::string n_mode = "batch", n_in, n_out, n_stats;
    std::size_t n_batch = lagn::kDefaultBatchSize;
    double n_eps = -1.0;
    cmd_norm->add_option("--mode", n_mode, "batch|layer-token|layer-seq|language")->required();
    cmd_norm->add_option("--batch-size", n_batch, "batch size (batch mode)");
    cmd_norm->add_option("--epsilon", n_eps, "variance stabilizer (default 1e-5; 1e-12 for language)");
    cmd_norm->add_option("--in", n_in, "embedding JSONL in")->required();
    cmd_norm->add_option("--out", n_out, "embedding JSONL out")->required();
    cmd_norm->add_option("--stats-out", n_stats, "statistics JSON out");

    // align ------------------------------------------------------------
    auto* cmd_align = app.add_subcommand("align", "fit or apply affine re-alignment");
    cmd_align->require_subcommand(1);
    auto* cmd_fit = cmd_align->add_subcommand("fit", "fit maps on aligned word pairs");
    std::string f_mode = "per-language", f_solver = "closed-form";
    std::string f_pairs, f_index, f_src, f_tgt, f_out;
    double f_lambda = 1.0, f_step = 1e-3, f_tol = 1e-6, f_damping = 1e-8;
    int f_epochs = 200;
    std::optional<int> f_layer;
    cmd_fit->add_option("--mode", f_mode, "shared|per-language");
    cmd_fit->add_option("--lambda", f_lambda, "drift regularizer weight");
    cmd_fit->add_option("--solver", f_solver, "closed-form|gradient");
    cmd_fit->add_option("--step-size", f_step, "gradient step size");
    cmd_fit->add_option("--max-epochs", f_epochs, "gradient epoch cap");
    cmd_fit->add_option("--tol", f_tol, "relative objective change to stop at");
    cmd_fit->add_option("--damping", f_damping, "ridge damping for the normal equations");
    cmd_fit->add_option("--pairs", f_pairs, "Pharaoh alignment file")->required();
    cmd_fit->add_option("--pair-index", f_index, "pair index sidecar")->required();
    cmd_fit->add_option("--src-emb", f_src, "pivot-side embeddings")->required();
    cmd_fit->add_option("--tgt-emb", f_tgt, "target-side embeddings")->required();
    cmd_fit->add_option("--layer", f_layer, "restrict both corpora to one layer");
    cmd_fit->add_option("--out", f_out, "model JSON out")->required();

    auto* cmd_apply = cmd_align->add_subcommand("apply", "apply a fitted model");
    std::string a_model, a_in, a_out;
    cmd_apply->add_option("--model", a_model, "model JSON")->required();
    cmd_apply->add_option("--in", a_in, "embedding JSONL in")->required();
    cmd_apply->add_option("--out", a_out, "embedding JSONL out")->required();

    // score ------------------------------------------------------------
    auto* cmd_score = app.add_subcommand("score", "EMD-based cross-lingual similarity per pair");
    std::string s_src, s_tgt, s_pairs, s_index, s_out, s_model, s_normalize;
    std::optional<int> s_layer;
    cmd_score->add_option("--src-emb", s_src)->required();
    cmd_score->add_option("--tgt-emb", s_tgt)->required();
    cmd_score->add_option("--pairs", s_pairs, "Pharaoh alignment file")->required();
    cmd_score->add_option("--pair-index", s_index, "pair index sidecar")->required();
    cmd_score->add_option("--out", s_out, "TSV of pair_id<TAB>score")->required();
    cmd_score->add_option("--apply-model", s_model, "apply this model before scoring");
    cmd_score->add_option("--normalize", s_normalize, "language|batch normalization before scoring");
    cmd_score->add_option("--layer", s_layer, "restrict both corpora to one layer");

    // textnorm ---------------------------------------------------------
    auto* cmd_text = app.add_subcommand("textnorm", "typology-driven input normalization");
    std::string t_in, t_out, t_skiplog, t_adj = "adj-noun", t_obj = "verb-obj";
    bool t_expand = false, t_strip = false, t_no_adj = false, t_no_obj = false;
    cmd_text->add_option("--in", t_in, "CoNLL-U input")->required();
    cmd_text->add_option("--out", t_out, "plain-text output")->required();
    cmd_text->add_flag("--expand-contractions", t_expand, "render multiword tokens as syntactic words");
    cmd_text->add_option("--adj-order", t_adj, "adj-noun|noun-adj");
    cmd_text->add_option("--obj-order", t_obj, "verb-obj|obj-verb");
    cmd_text->add_flag("--no-reorder-adjectives", t_no_adj, "keep adjective order");
    cmd_text->add_flag("--no-reorder-objects", t_no_obj, "keep object order");
    cmd_text->add_flag("--strip-punct", t_strip, "drop punctuation tokens");
    cmd_text->add_option("--skip-log", t_skiplog, "sidecar file for skipped moves");

    // analyze ----------------------------------------------------------
    auto* cmd_analyze = app.add_subcommand("analyze", "centroid, WALS, correlation and gap analyses");
    cmd_analyze->require_subcommand(1);

    auto* cmd_centroids = cmd_analyze->add_subcommand("centroids", "per-language centroid vectors");
    std::string c_in, c_out;
    int c_layer = 0;
    cmd_centroids->add_option("--in", c_in)->required();
    cmd_centroids->add_option("--layer", c_layer);
    cmd_centroids->add_option("--out", c_out)->required();

    auto* cmd_dist = cmd_analyze->add_subcommand("distance", "pairwise language distance matrix");
    std::string d_in, d_out;
    int d_layer = 0;
    cmd_dist->add_option("--in", d_in)->required();
    cmd_dist->add_option("--layer", d_layer);
    cmd_dist->add_option("--out", d_out)->required();

    auto* cmd_wals = cmd_analyze->add_subcommand("wals", "pairwise WALS structural similarity");
    std::string w_profiles, w_out;
    std::vector<std::string> w_features;
    cmd_wals->add_option("--profiles", w_profiles, "CSV lang,feature_id,value")->required();
    cmd_wals->add_option("--feature-set", w_features, "fixed feature ids (missing = mismatch)");
    cmd_wals->add_option("--out", w_out)->required();

    auto* cmd_pearson = cmd_analyze->add_subcommand("pearson", "correlate scores with judgments");
    std::string p_scores, p_judgments, p_out;
    cmd_pearson->add_option("--scores", p_scores, "TSV pair_id<TAB>score")->required();
    cmd_pearson->add_option("--judgments", p_judgments, "TSV segment_id<TAB>score")->required();
    cmd_pearson->add_option("--out", p_out, "(default: stdout)");

    auto* cmd_discrim = cmd_analyze->add_subcommand("discrim", "matched vs random pair separation");
    std::string di_src, di_tgt, di_pairs, di_index, di_out;
    std::size_t di_samples = 500;
    cmd_discrim->add_option("--src-emb", di_src)->required();
    cmd_discrim->add_option("--tgt-emb", di_tgt)->required();
    cmd_discrim->add_option("--pairs", di_pairs)->required();
    cmd_discrim->add_option("--pair-index", di_index)->required();
    cmd_discrim->add_option("--n-samples", di_samples);
    cmd_discrim->add_option("--out", di_out)->required();

    auto* cmd_gap = cmd_analyze->add_subcommand("gap", "pivot-vs-rest transfer gap");
    std::string g_scores, g_pivot, g_out;
    cmd_gap->add_option("--scores", g_scores, "TSV lang<TAB>score")->required();
    cmd_gap->add_option("--pivot", g_pivot)->required();
    cmd_gap->add_option("--out", g_out, "(default: stdout)");

    // run ----------------------------------------------------------------
    auto* cmd_run = app.add_subcommand("run", "execute a declarative pipeline config");
    std::string r_config, r_outdir;
    std::optional<std::uint64_t> r_seed;
    std::optional<int> r_threads;
    cmd_run->add_option("config", r_config, "pipeline JSON")->required();
    cmd_run->add_option("--out-dir", r_outdir, "override the config's out_dir");
    cmd_run->add_option("--seed", r_seed, "override the config's seed");
    cmd_run->add_option("--threads", r_threads, "override the config's thread count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_validate) {
            const lagn::EmbeddingCorpus corpus = lagn::load_embeddings(v_in);
            const lagn::ValidationReport report = lagn::validate_corpus(corpus);
            std::string body;
            body += "violations\t" + std::to_string(report.issues.size()) + "\n";
            for (const auto& issue : report.issues) body += issue.sent_key + "\t" + issue.message + "\n";
            if (v_out.empty())
                std::cout << body;
            else
                open_out(v_out) << body;
            return report.ok() ? 0 : 1;
        }

        if (*cmd_norm) {
            // Standalone mode: load, normalize, save without pipeline headers.
            lagn::EmbeddingCorpus corpus = lagn::load_embeddings(n_in);
            if (n_mode == "batch") {
                const double eps = n_eps > 0 ? n_eps : lagn::kDefaultEpsilon;
                auto result = lagn::batch_normalize(corpus, n_batch, eps);
                corpus = std::move(result.corpus);
                for (const auto& f : result.fallbacks)
                    log_info("batch " + std::to_string(f.batch_index) + " timestep " +
                             std::to_string(f.timestep) + ": " + std::to_string(f.covering) +
                             " covering sequence(s); pooled statistics applied");
                if (!n_stats.empty()) {
                    json stats{{"mode", "batch"}, {"batch_size", n_batch}, {"epsilon", eps}};
                    json cells = json::array();
                    for (const auto& s : result.stats)
                        cells.push_back({{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}});
                    stats["cell_stats"] = cells;
                    open_out(n_stats) << stats.dump(2) << '\n';
                }
            } else if (n_mode == "layer-token" || n_mode == "layer-seq") {
                const double eps = n_eps > 0 ? n_eps : lagn::kDefaultEpsilon;
                corpus = lagn::layer_normalize(corpus,
                                               n_mode == "layer-token"
                                                   ? lagn::LayerNormVariant::PerToken
                                                   : lagn::LayerNormVariant::PerSequence,
                                               eps);
            } else if (n_mode == "language") {
                const double eps = n_eps > 0 ? n_eps : lagn::kLanguageEpsilon;
                auto result = lagn::language_standardize(corpus, eps);
                corpus = std::move(result.corpus);
                if (!n_stats.empty()) {
                    json stats{{"mode", "language"}, {"epsilon", eps}};
                    json langs = json::object();
                    for (const auto& [lang, s] : result.stats)
                        langs[lang] = {{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}};
                    stats["languages"] = langs;
                    open_out(n_stats) << stats.dump(2) << '\n';
                }
            } else {
                throw lagn::Error("unknown normalize mode \"" + n_mode + "\"");
            }
            lagn::save_embeddings(corpus, n_out);
            return 0;
        }

        if (*cmd_fit) {
            lagn::EmbeddingCorpus src = lagn::load_embeddings(f_src);
            lagn::EmbeddingCorpus tgt = lagn::load_embeddings(f_tgt);
            if (f_layer) {
                src = lagn::filter_layer(src, *f_layer);
                tgt = lagn::filter_layer(tgt, *f_layer);
            }
            const lagn::ParallelCorpus pairs = lagn::load_alignments(f_pairs, f_index, src, tgt);
            lagn::SolverOpts opts;
            opts.step_size = f_step;
            opts.max_epochs = f_epochs;
            opts.tol = f_tol;
            opts.damping = f_damping;
            const lagn::AffineAlignmentModel model = lagn::fit_alignment(
                pairs,
                f_mode == "shared" ? lagn::AlignMode::Shared : lagn::AlignMode::PerLanguage,
                f_lambda,
                f_solver == "gradient" ? lagn::AlignSolver::Gradient : lagn::AlignSolver::ClosedForm,
                opts);
            lagn::save_model(model, f_out);
            const auto& last = model.training_log.back();
            log_info("fit: L=" + fmt_double(last.loss_align) + " R=" + fmt_double(last.loss_drift) +
                     (model.converged ? "" : " (not converged)"));
            for (const auto& note : model.notes) log_info("note: " + note);
            return 0;
        }

        if (*cmd_apply) {
            const lagn::AffineAlignmentModel model = lagn::load_model(a_model);
            const lagn::EmbeddingCorpus corpus = lagn::load_embeddings(a_in);
            lagn::save_embeddings(lagn::apply_alignment(model, corpus, threads), a_out);
            return 0;
        }

        if (*cmd_score) {
            lagn::EmbeddingCorpus src = lagn::load_embeddings(s_src);
            lagn::EmbeddingCorpus tgt = lagn::load_embeddings(s_tgt);
            if (s_layer) {
                src = lagn::filter_layer(src, *s_layer);
                tgt = lagn::filter_layer(tgt, *s_layer);
            }
            // Pipeline steps in declared order: model first, then normalization.
            if (!s_model.empty()) {
                const lagn::AffineAlignmentModel model = lagn::load_model(s_model);
                src = lagn::apply_alignment(model, src, threads);
                tgt = lagn::apply_alignment(model, tgt, threads);
            }
            if (!s_normalize.empty()) {
                if (s_normalize == "language") {
                    src = lagn::language_standardize(src).corpus;
                    tgt = lagn::language_standardize(tgt).corpus;
                } else if (s_normalize == "batch") {
                    src = lagn::batch_normalize(src).corpus;
                    tgt = lagn::batch_normalize(tgt).corpus;
                } else {
                    throw lagn::Error("unknown --normalize mode \"" + s_normalize + "\"");
                }
            }
            const lagn::ParallelCorpus pairs = lagn::load_alignments(s_pairs, s_index, src, tgt);
            const lagn::ScoreReport report = lagn::score_pairs(pairs, "cli", threads);
            auto out = open_out(s_out);
            for (std::size_t k = 0; k < report.scores.size(); ++k)
                out << report.pair_ids[k] << '\t' << fmt_double(report.scores[k]) << '\n';
            return 0;
        }

        if (*cmd_text) {
            // Standalone: clean text output, no pipeline header.
            const auto sentences = lagn::load_conllu(t_in);
            lagn::TypologyTarget target;
            target.adj_order = t_adj == "noun-adj" ? lagn::AdjOrder::NounAdj : lagn::AdjOrder::AdjNoun;
            target.obj_order = t_obj == "obj-verb" ? lagn::ObjOrder::ObjVerb : lagn::ObjOrder::VerbObj;
            lagn::ReorderLog log;
            auto out = open_out(t_out);
            for (const auto& sentence : sentences) {
                lagn::ConlluSentence s = sentence;
                if (t_expand) s = lagn::expand_contractions(s);
                if (!t_no_adj) s = lagn::reorder_adjectives(s, target, &log);
                if (!t_no_obj) s = lagn::reorder_object_verb(s, target, &log);
                out << lagn::render_text(s, t_strip) << '\n';
            }
            if (!t_skiplog.empty()) {
                auto slog = open_out(t_skiplog);
                for (const auto& msg : log.skips) slog << msg << '\n';
            }
            return 0;
        }

        if (*cmd_centroids)
            return run_stages(json::array({json{{"op", "load-embeddings"}, {"into", "main"}, {"path", c_in}},
                                           json{{"op", "centroids"}, {"corpus", "main"},
                                                {"layer", c_layer}, {"out", c_out}}}),
                              seed, threads, ".");
        if (*cmd_dist)
            return run_stages(json::array({json{{"op", "load-embeddings"}, {"into", "main"}, {"path", d_in}},
                                           json{{"op", "distance-matrix"}, {"corpus", "main"},
                                                {"layer", d_layer}, {"out", d_out}}}),
                              seed, threads, ".");
        if (*cmd_wals) {
            json stage{{"op", "wals"}, {"profiles", w_profiles}, {"out", w_out}};
            if (!w_features.empty()) stage["feature-set"] = w_features;
            return run_stages(json::array({stage}), seed, threads, ".");
        }

        if (*cmd_pearson) {
            const lagn::JudgmentSet judgments = lagn::load_judgments_tsv(p_judgments);
            const lagn::JudgmentSet scores = lagn::load_judgments_tsv(p_scores);
            std::map<std::string, double> by_id(judgments.judgments.begin(), judgments.judgments.end());
            std::vector<double> xs, ys;
            for (const auto& [id, score] : scores.judgments) {
                const auto it = by_id.find(id);
                if (it == by_id.end()) continue;
                xs.push_back(score);
                ys.push_back(it->second);
            }
            const double r = lagn::pearson(xs, ys);
            const std::string body =
                "pearson\t" + fmt_double(r) + "\nsegments\t" + std::to_string(xs.size()) + "\n";
            if (p_out.empty())
                std::cout << body;
            else
                open_out(p_out) << body;
            return 0;
        }

        if (*cmd_discrim) {
            const lagn::EmbeddingCorpus src = lagn::load_embeddings(di_src);
            const lagn::EmbeddingCorpus tgt = lagn::load_embeddings(di_tgt);
            const lagn::ParallelCorpus pairs = lagn::load_alignments(di_pairs, di_index, src, tgt);
            const lagn::DiscriminativenessResult result =
                lagn::discriminativeness(pairs, di_samples, seed);
            auto out = open_out(di_out);
            out << "separation\t" << fmt_double(result.separation) << '\n';
            for (const double c : result.matched_cosines) out << "matched\t" << fmt_double(c) << '\n';
            for (const double c : result.random_cosines) out << "random\t" << fmt_double(c) << '\n';
            return 0;
        }

        if (*cmd_gap) {
            json stage{{"op", "gap"}, {"scores-file", g_scores}, {"pivot", g_pivot},
                       {"out", g_out.empty() ? "gap.tsv" : g_out}};
            return run_stages(json::array({stage}), seed, threads, ".");
        }

        if (*cmd_run) {
            std::ifstream in(r_config);
            if (!in) throw lagn::Error("cannot open config file: " + r_config);
            json doc;
            try {
                in >> doc;
            } catch (const json::exception& e) {
                throw lagn::Error(r_config + ": malformed config JSON: " + std::string(e.what()));
            }
            // Flags override config fields.
            if (!r_outdir.empty()) doc["out_dir"] = r_outdir;
            if (r_seed) doc["seed"] = *r_seed;
            if (r_threads) doc["threads"] = *r_threads;
            const lagn::RunConfig config = lagn::RunConfig::parse(doc);
            const lagn::PipelineResult result = lagn::run(config);
            for (const auto& artifact : result.artifacts) log_info("wrote " + artifact);
            return 0;
        }
    } catch (const lagn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
