#include "lagn/embedding.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lagn/error.hpp"

namespace lagn {

using nlohmann::json;

std::size_t SentenceEmbedding::n_non_special() const {
    std::size_t n = 0;
    for (bool s : special_mask)
        if (!s) ++n;
    return n;
}

std::vector<double> SentenceEmbedding::mean_non_special() const {
    const std::size_t n = n_non_special();
    if (n == 0) throw Error("sentence " + lang + "/" + sent_id + " has no non-special token");
    std::vector<double> mean(vectors.empty() ? 0 : vectors.front().size(), 0.0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (special_mask[i]) continue;
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += vectors[i][d];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    return mean;
}

std::vector<std::string> EmbeddingCorpus::languages() const {
    std::set<std::string> langs;
    for (const auto& s : sentences) langs.insert(s.lang);
    return {langs.begin(), langs.end()};
}

std::optional<std::size_t> EmbeddingCorpus::find(const std::string& lang, int layer,
                                                 const std::string& sent_id) const {
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& s = sentences[i];
        if (s.lang == lang && s.layer == layer && s.sent_id == sent_id) return i;
    }
    return std::nullopt;
}

ParallelCorpus ParallelCorpus::rebind(const EmbeddingCorpus& new_src,
                                      const EmbeddingCorpus& new_tgt) const {
    if (new_src.sentences.size() != src_corpus->sentences.size() ||
        new_tgt.sentences.size() != tgt_corpus->sentences.size())
        throw Error("rebind: corpus sizes differ from the originally loaded corpora");
    ParallelCorpus out = *this;
    out.src_corpus = &new_src;
    out.tgt_corpus = &new_tgt;
    return out;
}

std::size_t ParallelCorpus::total_links() const {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.links.size();
    return n;
}

namespace {

std::string sent_key(const SentenceEmbedding& s) {
    return s.lang + "/" + std::to_string(s.layer) + "/" + s.sent_id;
}

SentenceEmbedding parse_record(const json& j, std::size_t line_no) {
    const auto fail = [line_no](const std::string& msg) -> Error {
        return Error("line " + std::to_string(line_no) + ": " + msg);
    };
    if (!j.is_object()) throw fail("record is not a JSON object");
    for (const char* key : {"lang", "sent_id", "layer", "tokens", "special", "vectors"})
        if (!j.contains(key)) throw fail(std::string("missing field \"") + key + "\"");

    SentenceEmbedding s;
    s.lang = j.at("lang").get<std::string>();
    s.sent_id = j.at("sent_id").get<std::string>();
    s.layer = j.at("layer").get<int>();
    if (s.layer < 0) throw fail("layer must be >= 0");
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (s.tokens.empty()) throw fail("empty token list");
    s.special_mask = j.at("special").get<std::vector<bool>>();
    if (s.special_mask.size() != s.tokens.size())
        throw fail("special mask length differs from token count");
    if (s.n_non_special() == 0) throw fail("all tokens are marked special");

    const auto& vecs = j.at("vectors");
    if (!vecs.is_array() || vecs.size() != s.tokens.size())
        throw fail("vectors row count differs from token count");
    s.vectors.reserve(vecs.size());
    for (const auto& row : vecs) {
        std::vector<double> v = row.get<std::vector<double>>();
        for (double x : v)
            if (!std::isfinite(x)) throw fail("non-finite vector entry");
        s.vectors.push_back(std::move(v));
    }
    return s;
}

} // namespace

EmbeddingCorpus load_embeddings(const std::string& path,
                                std::optional<std::size_t> expected_dim) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file: " + path);

    EmbeddingCorpus corpus;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(path + ": line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        SentenceEmbedding s;
        try {
            s = parse_record(j, line_no);
        } catch (const Error& e) {
            throw Error(path + ": " + e.what());
        } catch (const json::exception& e) {
            throw Error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }

        const std::size_t d = s.vectors.front().size();
        for (const auto& row : s.vectors)
            if (row.size() != d)
                throw Error(path + ": line " + std::to_string(line_no) +
                            ": ragged vector rows within one sentence");
        if (corpus.sentences.empty()) {
            corpus.dim = expected_dim.value_or(d);
        }
        if (d != corpus.dim)
            throw Error(path + ": line " + std::to_string(line_no) + ": dimension mismatch (got " +
                        std::to_string(d) + ", expected " + std::to_string(corpus.dim) + ")");

        const std::string key = sent_key(s);
        if (!seen.insert(key).second)
            throw Error(path + ": line " + std::to_string(line_no) + ": duplicate sentence key " + key);
        corpus.sentences.push_back(std::move(s));
    }
    return corpus;
}

std::string serialize_sentence(const SentenceEmbedding& s) {
    json j;
    j["lang"] = s.lang;
    j["layer"] = s.layer;
    j["sent_id"] = s.sent_id;
    j["special"] = s.special_mask;
    j["tokens"] = s.tokens;
    j["vectors"] = s.vectors;
    return j.dump();
}

void save_embeddings(const EmbeddingCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write embedding file: " + path);
    for (const auto& s : corpus.sentences) out << serialize_sentence(s) << '\n';
}

ParallelCorpus load_alignments(const std::string& pharaoh_path,
                               const std::string& index_path,
                               const EmbeddingCorpus& src_corpus,
                               const EmbeddingCorpus& tgt_corpus) {
    // Sidecar: pair_id -> (src lang, src sent_id, tgt lang, tgt sent_id).
    std::ifstream idx(index_path);
    if (!idx) throw Error("cannot open pair index: " + index_path);
    struct PairRef {
        std::string src_lang, src_id, tgt_lang, tgt_id;
    };
    std::map<std::string, PairRef> refs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(idx, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string pair_id;
        PairRef r;
        if (!(ss >> pair_id >> r.src_lang >> r.src_id >> r.tgt_lang >> r.tgt_id))
            throw Error(index_path + ": line " + std::to_string(line_no) +
                        ": expected 5 columns (pair_id src_lang src_sent_id tgt_lang tgt_sent_id)");
        if (!refs.emplace(pair_id, r).second)
            throw Error(index_path + ": line " + std::to_string(line_no) + ": duplicate pair id " + pair_id);
    }

    // Resolve a (lang, sent_id) against a corpus; the match must be unique,
    // so multi-layer corpora have to be filtered to one layer first.
    const auto resolve = [](const EmbeddingCorpus& c, const std::string& lang,
                            const std::string& id, const std::string& what) {
        std::optional<std::size_t> found;
        for (std::size_t i = 0; i < c.sentences.size(); ++i) {
            if (c.sentences[i].lang == lang && c.sentences[i].sent_id == id) {
                if (found)
                    throw Error(what + " sentence " + lang + "/" + id +
                                " is ambiguous (several layers present; apply a layer filter first)");
                found = i;
            }
        }
        if (!found) throw Error("unknown " + what + " sentence " + lang + "/" + id);
        return *found;
    };

    std::ifstream in(pharaoh_path);
    if (!in) throw Error("cannot open alignment file: " + pharaoh_path);

    ParallelCorpus out;
    out.src_corpus = &src_corpus;
    out.tgt_corpus = &tgt_corpus;
    line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string pair_id;
        ss >> pair_id;
        const auto ref_it = refs.find(pair_id);
        if (ref_it == refs.end())
            throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": pair id " + pair_id +
                        " not in index " + index_path);
        const PairRef& ref = ref_it->second;

        AlignedSentencePair pair;
        pair.id = pair_id;
        pair.src_index = resolve(src_corpus, ref.src_lang, ref.src_id, "source");
        pair.tgt_index = resolve(tgt_corpus, ref.tgt_lang, ref.tgt_id, "target");
        const auto& src = src_corpus.sentences[pair.src_index];
        const auto& tgt = tgt_corpus.sentences[pair.tgt_index];

        std::set<std::pair<int, int>> seen;
        std::string tok;
        while (ss >> tok) {
            const auto dash = tok.find('-');
            int i = -1, j = -1;
            try {
                if (dash == std::string::npos) throw std::invalid_argument("no dash");
                std::size_t used_i = 0, used_j = 0;
                const std::string left = tok.substr(0, dash), right = tok.substr(dash + 1);
                i = std::stoi(left, &used_i);
                j = std::stoi(right, &used_j);
                if (used_i != left.size() || used_j != right.size())
                    throw std::invalid_argument("trailing garbage");
            } catch (const std::exception&) {
                throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": malformed link \"" +
                            tok + "\"");
            }
            if (i < 0 || static_cast<std::size_t>(i) >= src.size() || j < 0 ||
                static_cast<std::size_t>(j) >= tgt.size())
                throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": link " + tok +
                            " out of range for pair " + pair_id + " (src " + std::to_string(src.size()) +
                            " tokens, tgt " + std::to_string(tgt.size()) + " tokens)");
            if (!seen.insert({i, j}).second)
                throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": duplicate link " + tok);
            pair.links.emplace_back(i, j);
        }
        if (pair.links.empty())
            throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": pair " + pair_id +
                        " has no links");

        if (out.pairs.empty()) {
            out.pivot_lang = src.lang;
        } else if (src.lang != out.pivot_lang) {
            throw Error(pharaoh_path + ": line " + std::to_string(line_no) + ": source language " +
                        src.lang + " differs from pivot " + out.pivot_lang);
        }
        out.pairs.push_back(std::move(pair));
    }
    return out;
}

ValidationReport validate_corpus(const EmbeddingCorpus& corpus) {
    ValidationReport report;
    std::set<std::string> seen;
    for (const auto& s : corpus.sentences) {
        const std::string key = sent_key(s);
        const auto add = [&](const std::string& msg) { report.issues.push_back({key, msg}); };

        if (s.tokens.empty()) add("empty token list");
        if (s.layer < 0) add("negative layer id");
        if (s.vectors.size() != s.tokens.size())
            add("vector row count " + std::to_string(s.vectors.size()) + " != token count " +
                std::to_string(s.tokens.size()));
        if (s.special_mask.size() != s.tokens.size())
            add("special mask length " + std::to_string(s.special_mask.size()) + " != token count " +
                std::to_string(s.tokens.size()));
        else if (!s.tokens.empty() && s.n_non_special() == 0)
            add("no non-special token");
        for (std::size_t i = 0; i < s.vectors.size(); ++i) {
            if (s.vectors[i].size() != corpus.dim)
                add("row " + std::to_string(i) + " has dimension " + std::to_string(s.vectors[i].size()) +
                    ", corpus dimension is " + std::to_string(corpus.dim));
            for (std::size_t d = 0; d < s.vectors[i].size(); ++d)
                if (!std::isfinite(s.vectors[i][d]))
                    add("non-finite value at token " + std::to_string(i) + " dim " + std::to_string(d));
        }
        if (!seen.insert(key).second) report.issues.push_back({key, "duplicate sentence key"});
    }
    return report;
}

EmbeddingCorpus filter_layer(const EmbeddingCorpus& corpus, int layer) {
    EmbeddingCorpus out;
    out.dim = corpus.dim;
    for (const auto& s : corpus.sentences)
        if (s.layer == layer) out.sentences.push_back(s);
    return out;
}

} // namespace lagn
