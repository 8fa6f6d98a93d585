#include "lagn/textnorm.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "lagn/error.hpp"

namespace lagn {

ConlluSentence expand_contractions(const ConlluSentence& sentence) {
    ConlluSentence out = sentence;
    out.mwt_ranges.clear();
    return out;
}

namespace {

struct MoveRule {
    std::string deprel;
    std::optional<std::string> child_upos;  // unset = any
    std::string head_upos;
    bool move_before;  // required side of the head
    const char* what;  // for skip messages
};

bool contiguous(const std::vector<std::size_t>& positions) {
    return positions.back() - positions.front() + 1 == positions.size();
}

// True when the id interval [lo, hi] partially overlaps some multiword
// range (moving it would tear the range apart).
bool splits_mwt(const ConlluSentence& s, int lo, int hi) {
    for (const auto& r : s.mwt_ranges) {
        const bool inside = r.start_id >= lo && r.end_id <= hi;
        const bool outside = r.end_id < lo || r.start_id > hi;
        if (!inside && !outside) return true;
    }
    return false;
}

// Splices the token positions [span_lo, span_hi] out and reinserts them
// adjacent to the head on the required side, then renumbers ids and
// remaps heads and multiword ranges through the permutation.
ConlluSentence move_span(const ConlluSentence& s, std::size_t span_lo, std::size_t span_hi,
                         std::size_t head_pos, bool before) {
    const std::size_t n = s.tokens.size();
    std::vector<std::size_t> order;  // new position -> old position
    order.reserve(n);
    const auto in_span = [&](std::size_t p) { return p >= span_lo && p <= span_hi; };
    for (std::size_t p = 0; p < n; ++p) {
        if (in_span(p)) continue;
        if (p == head_pos && before)
            for (std::size_t q = span_lo; q <= span_hi; ++q) order.push_back(q);
        order.push_back(p);
        if (p == head_pos && !before)
            for (std::size_t q = span_lo; q <= span_hi; ++q) order.push_back(q);
    }

    std::vector<int> new_id_of_old(n + 1, 0);  // old id -> new id
    for (std::size_t new_pos = 0; new_pos < n; ++new_pos)
        new_id_of_old[order[new_pos] + 1] = static_cast<int>(new_pos + 1);

    ConlluSentence out;
    out.sent_id = s.sent_id;
    out.tokens.reserve(n);
    for (std::size_t new_pos = 0; new_pos < n; ++new_pos) {
        ConlluToken t = s.tokens[order[new_pos]];
        t.id = static_cast<int>(new_pos + 1);
        t.head = t.head == 0 ? 0 : new_id_of_old[static_cast<std::size_t>(t.head)];
        out.tokens.push_back(std::move(t));
    }
    for (const auto& r : s.mwt_ranges) {
        // The caller guarantees the covered ids stay consecutive; they may
        // land in reversed id order only if the range itself moved, which a
        // whole-range move cannot cause.
        MwtRange nr = r;
        nr.start_id = new_id_of_old[static_cast<std::size_t>(r.start_id)];
        nr.end_id = new_id_of_old[static_cast<std::size_t>(r.end_id)];
        out.mwt_ranges.push_back(std::move(nr));
    }
    std::sort(out.mwt_ranges.begin(), out.mwt_ranges.end(),
              [](const MwtRange& a, const MwtRange& b) { return a.start_id < b.start_id; });
    return out;
}

ConlluSentence reorder(const ConlluSentence& sentence, const MoveRule& rule, ReorderLog* log) {
    ConlluSentence cur = sentence;
    // Skips are remembered by (form, head form) so a skipped dependent is
    // reported once even though the scan restarts after every move.
    std::vector<std::string> skipped;
    const auto note_skip = [&](const std::string& msg) {
        if (std::find(skipped.begin(), skipped.end(), msg) != skipped.end()) return;
        skipped.push_back(msg);
        if (log) log->skips.push_back(msg);
    };

    // Each move turns one violating dependent into a conforming one and
    // cannot flip any other dependent to the wrong side, so this scan
    // terminates after at most one move per candidate.
    while (true) {
        bool moved = false;
        std::vector<std::size_t> candidates;
        for (std::size_t pos = 0; pos < cur.tokens.size(); ++pos) {
            const ConlluToken& t = cur.tokens[pos];
            if (t.deprel != rule.deprel || t.head == 0) continue;
            if (rule.child_upos && t.upos != *rule.child_upos) continue;
            if (cur.by_id(t.head).upos != rule.head_upos) continue;
            candidates.push_back(pos);
        }
        // Moving toward "after the head" must fix the rightmost violator
        // first so same-head dependents keep their relative order.
        if (!rule.move_before) std::reverse(candidates.begin(), candidates.end());

        for (const std::size_t pos : candidates) {
            const ConlluToken& t = cur.tokens[pos];
            const std::size_t head_pos = static_cast<std::size_t>(t.head - 1);
            const std::vector<std::size_t> span = cur.subtree_positions(pos);
            const std::size_t lo = span.front(), hi = span.back();
            const bool violates = rule.move_before ? lo > head_pos : hi < head_pos;
            if (!violates) continue;

            if (!contiguous(span)) {
                note_skip(std::string(rule.what) + " \"" + t.form + "\" of \"" +
                          cur.by_id(t.head).form + "\": non-contiguous subtree");
                continue;
            }
            if (splits_mwt(cur, static_cast<int>(lo + 1), static_cast<int>(hi + 1))) {
                note_skip(std::string(rule.what) + " \"" + t.form + "\" of \"" +
                          cur.by_id(t.head).form + "\": move would split a multiword token");
                continue;
            }
            cur = move_span(cur, lo, hi, head_pos, rule.move_before);
            moved = true;
            break;  // positions changed; rescan
        }
        if (!moved) break;
    }
    check_sentence(cur);
    return cur;
}

} // namespace

ConlluSentence reorder_adjectives(const ConlluSentence& sentence, const TypologyTarget& target,
                                  ReorderLog* log) {
    MoveRule rule;
    rule.deprel = "amod";
    rule.child_upos = "ADJ";
    rule.head_upos = "NOUN";
    rule.move_before = target.adj_order == AdjOrder::AdjNoun;
    rule.what = "adjective";
    return reorder(sentence, rule, log);
}

ConlluSentence reorder_object_verb(const ConlluSentence& sentence, const TypologyTarget& target,
                                   ReorderLog* log) {
    MoveRule rule;
    rule.deprel = "obj";
    rule.child_upos = std::nullopt;
    rule.head_upos = "VERB";
    rule.move_before = target.obj_order == ObjOrder::ObjVerb;
    rule.what = "object";
    return reorder(sentence, rule, log);
}

std::string render_text(const ConlluSentence& sentence, bool strip_punct) {
    const std::size_t n = sentence.tokens.size();
    // Multiword surface forms replace their covered tokens when present.
    std::vector<const MwtRange*> range_at(n + 1, nullptr);
    for (const auto& r : sentence.mwt_ranges)
        for (int id = r.start_id; id <= r.end_id; ++id)
            range_at[static_cast<std::size_t>(id)] = &r;

    std::string out;
    const auto emit = [&](const std::string& piece) {
        if (!out.empty()) out += ' ';
        out += piece;
    };

    for (std::size_t pos = 0; pos < n; ++pos) {
        const ConlluToken& t = sentence.tokens[pos];
        const MwtRange* range = range_at[static_cast<std::size_t>(t.id)];
        if (range) {
            if (t.id != range->start_id) continue;  // emitted with the first covered token
            bool any_non_punct = false;
            for (int id = range->start_id; id <= range->end_id; ++id)
                if (sentence.by_id(id).upos != "PUNCT") any_non_punct = true;
            if (!strip_punct || any_non_punct) emit(range->surface);
            continue;
        }
        if (strip_punct && t.upos == "PUNCT") continue;
        emit(t.form);
    }
    return out;
}

} // namespace lagn
