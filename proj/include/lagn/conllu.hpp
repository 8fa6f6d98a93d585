#pragma once

#include <map>
#include <string>
#include <vector>

namespace lagn {

struct ConlluToken {
    int id = 0;  // 1-based position within the sentence
    std::string form;
    std::string lemma;
    std::string upos;
    std::map<std::string, std::string> feats;
    int head = 0;  // 0 = root
    std::string deprel;
};

// An orthographic token covering the syntactic words start_id..end_id
// (e.g. "del" over "de" + "il").
struct MwtRange {
    int start_id = 0;
    int end_id = 0;
    std::string surface;
};

struct ConlluSentence {
    std::string sent_id;
    std::vector<ConlluToken> tokens;
    std::vector<MwtRange> mwt_ranges;

    const ConlluToken& by_id(int id) const { return tokens[static_cast<std::size_t>(id - 1)]; }
    // Token positions (0-based) of the full subtree rooted at the token at
    // position `pos`, in document order.
    std::vector<std::size_t> subtree_positions(std::size_t pos) const;
};

// Parses CoNLL-U text: 10 tab-separated columns per token, `#` comment
// lines, blank-line sentence separators, `a-b` ids introducing multiword
// tokens. Enforces the tree invariants (single root, acyclic, in-range
// heads) and multiword-range consistency; errors name the offending line.
std::vector<ConlluSentence> parse_conllu(const std::string& text);
std::vector<ConlluSentence> load_conllu(const std::string& path);

// Throws when the sentence violates an invariant; used by parse_conllu
// and by the reorder transformations on their outputs.
void check_sentence(const ConlluSentence& sentence);

} // namespace lagn
