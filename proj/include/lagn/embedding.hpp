#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lagn {

// One sentence worth of token vectors dumped from some encoder layer.
// `vectors[i]` is the D-dimensional embedding of `tokens[i]`; entries of
// `special_mask` mark sequence-start/end style tokens that pooling and
// transport exclude.
struct SentenceEmbedding {
    std::string lang;     // ISO-639 code
    std::string sent_id;  // unique within (lang, layer)
    int layer = 0;
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> vectors;
    std::vector<bool> special_mask;

    std::size_t size() const { return tokens.size(); }
    std::size_t n_non_special() const;
    // Mean over non-special token vectors. Throws if none exist.
    std::vector<double> mean_non_special() const;
};

struct EmbeddingCorpus {
    std::size_t dim = 0;
    std::vector<SentenceEmbedding> sentences;

    std::vector<std::string> languages() const;
    // Index of the sentence with the given key, or nullopt.
    std::optional<std::size_t> find(const std::string& lang, int layer,
                                    const std::string& sent_id) const;
};

// Word-alignment links between a source and a target sentence, both
// identified by index into their corpora. links are (src token, tgt token).
struct AlignedSentencePair {
    std::string id;
    std::size_t src_index = 0;
    std::size_t tgt_index = 0;
    std::vector<std::pair<int, int>> links;
};

// Sentence pairs whose source side is all in one pivot language. The
// corpus pointers are non-owning; the referenced corpora must outlive the
// ParallelCorpus. rebind() re-targets the same pair structure at
// transformed copies of the corpora (all transforms preserve order).
struct ParallelCorpus {
    std::string pivot_lang;
    const EmbeddingCorpus* src_corpus = nullptr;
    const EmbeddingCorpus* tgt_corpus = nullptr;
    std::vector<AlignedSentencePair> pairs;

    const SentenceEmbedding& src(const AlignedSentencePair& p) const {
        return src_corpus->sentences[p.src_index];
    }
    const SentenceEmbedding& tgt(const AlignedSentencePair& p) const {
        return tgt_corpus->sentences[p.tgt_index];
    }
    ParallelCorpus rebind(const EmbeddingCorpus& new_src,
                          const EmbeddingCorpus& new_tgt) const;
    std::size_t total_links() const;
};

struct ValidationIssue {
    std::string sent_key;  // "lang/layer/sent_id", empty for corpus-level issues
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

// Reads a line-delimited JSON embedding file (one sentence object per
// line). Validates dimensions, finiteness and key uniqueness; error
// messages name the offending line.
EmbeddingCorpus load_embeddings(const std::string& path,
                                std::optional<std::size_t> expected_dim = std::nullopt);

// Writes the canonical line-delimited JSON form; load_embeddings of the
// result reproduces the corpus exactly.
void save_embeddings(const EmbeddingCorpus& corpus, const std::string& path);
std::string serialize_sentence(const SentenceEmbedding& s);

// Reads Pharaoh-format alignments ("<pair_id> <i-j> <i-j> ...") plus a
// sidecar index file with tab-separated columns
//   pair_id  src_lang  src_sent_id  tgt_lang  tgt_sent_id
// resolving each pair against the two corpora. Link indices are validated
// against the referenced sentences' token counts.
ParallelCorpus load_alignments(const std::string& pharaoh_path,
                               const std::string& index_path,
                               const EmbeddingCorpus& src_corpus,
                               const EmbeddingCorpus& tgt_corpus);

// Scans a corpus for invariant violations. Violations are returned as
// data, not thrown.
ValidationReport validate_corpus(const EmbeddingCorpus& corpus);

// Keeps only sentences dumped from the given layer.
EmbeddingCorpus filter_layer(const EmbeddingCorpus& corpus, int layer);

} // namespace lagn
