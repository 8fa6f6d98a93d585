#include "lagn/conllu.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lagn/error.hpp"

namespace lagn {

std::vector<std::size_t> ConlluSentence::subtree_positions(std::size_t pos) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{pos};
    std::vector<bool> in_subtree(tokens.size(), false);
    in_subtree[pos] = true;
    while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        const int cur_id = tokens[cur].id;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i].head == cur_id && !in_subtree[i]) {
                in_subtree[i] = true;
                stack.push_back(i);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void check_sentence(const ConlluSentence& s) {
    const std::string where = s.sent_id.empty() ? "sentence" : "sentence " + s.sent_id;
    if (s.tokens.empty()) throw Error(where + ": no tokens");

    const int n = static_cast<int>(s.tokens.size());
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const ConlluToken& t = s.tokens[static_cast<std::size_t>(i)];
        if (t.id != i + 1)
            throw Error(where + ": token ids must be consecutive from 1 (found " +
                        std::to_string(t.id) + " at position " + std::to_string(i + 1) + ")");
        if (t.head == t.id) throw Error(where + ": token " + std::to_string(t.id) + " heads itself");
        if (t.head < 0 || t.head > n)
            throw Error(where + ": token " + std::to_string(t.id) + " has head " +
                        std::to_string(t.head) + " outside 0.." + std::to_string(n));
        if (t.head == 0) ++roots;
    }
    if (roots != 1)
        throw Error(where + ": expected exactly one root, found " + std::to_string(roots));

    // Every token must reach the root; with one parent per token this
    // rules out cycles.
    for (int i = 0; i < n; ++i) {
        int cur = s.tokens[static_cast<std::size_t>(i)].head;
        int steps = 0;
        while (cur != 0) {
            if (++steps > n) throw Error(where + ": dependency graph contains a cycle");
            cur = s.tokens[static_cast<std::size_t>(cur - 1)].head;
        }
    }

    std::vector<std::pair<int, int>> spans;
    for (const auto& r : s.mwt_ranges) {
        if (r.start_id > r.end_id)
            throw Error(where + ": multiword range " + std::to_string(r.start_id) + "-" +
                        std::to_string(r.end_id) + " has start > end");
        if (r.start_id < 1 || r.end_id > n)
            throw Error(where + ": multiword range " + std::to_string(r.start_id) + "-" +
                        std::to_string(r.end_id) + " references missing ids");
        spans.emplace_back(r.start_id, r.end_id);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first <= spans[i - 1].second)
            throw Error(where + ": overlapping multiword ranges");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

std::map<std::string, std::string> parse_feats(const std::string& field) {
    std::map<std::string, std::string> feats;
    if (field == "_" || field.empty()) return feats;
    std::istringstream ss(field);
    std::string item;
    while (std::getline(ss, item, '|')) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            feats.emplace(item, "");
        else
            feats.emplace(item.substr(0, eq), item.substr(eq + 1));
    }
    return feats;
}

bool parse_int(const std::string& text, int& out) {
    try {
        std::size_t used = 0;
        out = std::stoi(text, &used);
        return used == text.size();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

std::vector<ConlluSentence> parse_conllu(const std::string& text) {
    std::vector<ConlluSentence> sentences;
    ConlluSentence current;

    const auto flush = [&] {
        if (current.tokens.empty() && current.mwt_ranges.empty()) {
            current = {};
            return;
        }
        check_sentence(current);
        sentences.push_back(std::move(current));
        current = {};
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            // Honor "# sent_id = ..." comments.
            const std::string body = line.substr(1);
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                std::string key = body.substr(0, eq);
                key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
                if (key == "sent_id") {
                    std::string value = body.substr(eq + 1);
                    const std::size_t first = value.find_first_not_of(" \t");
                    const std::size_t last = value.find_last_not_of(" \t");
                    if (first != std::string::npos)
                        current.sent_id = value.substr(first, last - first + 1);
                }
            }
            continue;
        }

        const std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 10)
            throw Error("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, got " +
                        std::to_string(cols.size()));

        const std::string& id_field = cols[0];
        const std::size_t dash = id_field.find('-');
        if (dash != std::string::npos) {
            MwtRange range;
            if (!parse_int(id_field.substr(0, dash), range.start_id) ||
                !parse_int(id_field.substr(dash + 1), range.end_id))
                throw Error("line " + std::to_string(line_no) + ": malformed multiword id \"" +
                            id_field + "\"");
            range.surface = cols[1];
            current.mwt_ranges.push_back(std::move(range));
            continue;
        }
        if (id_field.find('.') != std::string::npos)
            throw Error("line " + std::to_string(line_no) +
                        ": empty nodes (decimal ids) are not supported");

        ConlluToken tok;
        if (!parse_int(id_field, tok.id) || tok.id < 1)
            throw Error("line " + std::to_string(line_no) + ": malformed token id \"" + id_field + "\"");
        tok.form = cols[1];
        tok.lemma = cols[2];
        tok.upos = cols[3];
        tok.feats = parse_feats(cols[5]);
        if (!parse_int(cols[6], tok.head))
            throw Error("line " + std::to_string(line_no) + ": malformed head \"" + cols[6] + "\"");
        tok.deprel = cols[7];
        current.tokens.push_back(std::move(tok));
    }
    flush();
    return sentences;
}

std::vector<ConlluSentence> load_conllu(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open CoNLL-U file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_conllu(buf.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

} // namespace lagn
