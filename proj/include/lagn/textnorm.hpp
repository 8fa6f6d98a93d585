#pragma once

#include <string>
#include <vector>

#include "lagn/conllu.hpp"

namespace lagn {

enum class AdjOrder { AdjNoun, NounAdj };
enum class ObjOrder { VerbObj, ObjVerb };

// The word orders a run normalizes toward, typically the pivot language's
// WALS profile (English: adjective-noun, verb-object).
struct TypologyTarget {
    AdjOrder adj_order = AdjOrder::AdjNoun;
    ObjOrder obj_order = ObjOrder::VerbObj;
};

// Dependents that could not be moved, with the reason (non-contiguous
// subtree, or a move that would split a multiword range).
struct ReorderLog {
    std::vector<std::string> skips;
};

// Removes all multiword ranges so rendering uses the syntactic word forms
// ("del" -> "de il"). Tokens and tree structure are unchanged.
ConlluSentence expand_contractions(const ConlluSentence& sentence);

// Moves each contiguous `amod` adjective subtree that sits on the wrong
// side of its NOUN head to the position immediately adjacent to the head
// on the required side. Several adjectives of one noun keep their
// relative order; non-contiguous subtrees are skipped and logged.
ConlluSentence reorder_adjectives(const ConlluSentence& sentence, const TypologyTarget& target,
                                  ReorderLog* log = nullptr);

// Same movement rule for `obj` dependents of VERB heads. Clausal objects
// (ccomp/xcomp) are left alone.
ConlluSentence reorder_object_verb(const ConlluSentence& sentence, const TypologyTarget& target,
                                   ReorderLog* log = nullptr);

// Surface string in current token order, single-space joined. Multiword
// ranges still present render as their surface form; strip_punct drops
// UPOS=PUNCT tokens (and ranges covering only such tokens).
std::string render_text(const ConlluSentence& sentence, bool strip_punct);

} // namespace lagn
