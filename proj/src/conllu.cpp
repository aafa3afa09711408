#include "fgt2m/conllu.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fgt2m {

namespace {

const char* kUniversalRelations[] = {
    "acl",       "advcl",    "advmod",  "amod",   "appos",  "aux",        "case",   "cc",
    "ccomp",     "clf",      "compound", "conj",  "cop",    "csubj",      "dep",    "det",
    "discourse", "dislocated", "expl",  "fixed",  "flat",   "goeswith",   "iobj",   "list",
    "mark",      "nmod",     "nsubj",   "nummod", "obj",    "obl",        "orphan", "parataxis",
    "punct",     "reparandum", "root",  "vocative", "xcomp"};

const char* kUposTags[] = {"ADJ",  "ADP",  "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
                           "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB", "X"};

std::vector<std::string> read_label_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open label file '" + path.string() + "'");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (std::find(labels.begin(), labels.end(), line) != labels.end())
            throw FormatError("duplicate label '" + line + "' in '" + path.string() + "'");
        labels.push_back(line);
    }
    return labels;
}

void ensure_label(std::vector<std::string>& labels, const char* name) {
    if (std::find(labels.begin(), labels.end(), name) == labels.end()) labels.emplace_back(name);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = line.find('\t', start);
        if (at == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, at - start));
        start = at + 1;
    }
}

} // namespace

int RelationVocab::relation_id(const std::string& label) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
        if (relations[i] == label) return static_cast<int>(i);
    for (std::size_t i = 0; i < relations.size(); ++i)
        if (relations[i] == "UNK") return static_cast<int>(i);
    throw ContractError("relation vocabulary is missing the UNK label");
}

int RelationVocab::upos_id(const std::string& tag) const {
    for (std::size_t i = 0; i < upos_tags.size(); ++i)
        if (upos_tags[i] == tag) return static_cast<int>(i);
    for (std::size_t i = 0; i < upos_tags.size(); ++i)
        if (upos_tags[i] == "UNK") return static_cast<int>(i);
    throw ContractError("UPOS vocabulary is missing the UNK tag");
}

RelationVocab RelationVocab::universal() {
    RelationVocab v;
    for (const char* r : kUniversalRelations) v.relations.emplace_back(r);
    v.relations.emplace_back("SELF");
    v.relations.emplace_back("UNK");
    for (const char* u : kUposTags) v.upos_tags.emplace_back(u);
    v.upos_tags.emplace_back("UNK");
    return v;
}

RelationVocab RelationVocab::load(const std::filesystem::path& relations_file,
                                  const std::filesystem::path& upos_file) {
    RelationVocab v;
    v.relations = read_label_file(relations_file);
    v.upos_tags = read_label_file(upos_file);
    ensure_label(v.relations, "SELF");
    ensure_label(v.relations, "UNK");
    ensure_label(v.upos_tags, "UNK");
    return v;
}

void RelationVocab::save(const std::filesystem::path& relations_file,
                         const std::filesystem::path& upos_file) const {
    std::ofstream rel(relations_file), up(upos_file);
    if (!rel || !up) throw FormatError("cannot write vocabulary files");
    for (const auto& r : relations) rel << r << '\n';
    for (const auto& u : upos_tags) up << u << '\n';
}

int DependencyParse::root_index() const {
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i].head < 0) return static_cast<int>(i);
    return -1;
}

void DependencyParse::validate() const {
    const int n = size();
    if (n == 0) throw MalformedParseError("parse has no tokens");
    int roots = 0;
    for (const auto& tok : tokens) {
        if (tok.head < 0) {
            ++roots;
        } else if (tok.head >= n) {
            throw MalformedParseError("head index " + std::to_string(tok.head) + " out of range");
        }
    }
    if (roots != 1) throw MalformedParseError("parse must have exactly one ROOT, found " + std::to_string(roots));
    // Following head links from any token must reach ROOT in at most n hops.
    for (int i = 0; i < n; ++i) {
        int at = i, hops = 0;
        while (tokens[static_cast<std::size_t>(at)].head >= 0) {
            at = tokens[static_cast<std::size_t>(at)].head;
            if (++hops > n) throw MalformedParseError("head links contain a cycle through token " + std::to_string(i + 1));
        }
    }
}

DependencyParse load_conllu(const std::string& text, const RelationVocab& vocab) {
    DependencyParse parse;
    std::istringstream in(text);
    std::string line;
    int expected_id = 1;
    bool saw_token = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (saw_token) break; // blank line terminates the first sentence
            continue;
        }
        if (line[0] == '#') continue; // comment rows
        const auto cols = split_tabs(line);
        if (cols.size() < 5)
            throw FormatError("CoNLL-U row needs 5 tab-separated columns (ID FORM UPOS HEAD DEPREL), got " +
                              std::to_string(cols.size()));
        int id = 0, head = 0;
        try {
            id = std::stoi(cols[0]);
            head = std::stoi(cols[3]);
        } catch (const std::exception&) {
            throw FormatError("non-numeric ID or HEAD in CoNLL-U row: " + line);
        }
        if (id != expected_id)
            throw FormatError("CoNLL-U token IDs must be consecutive from 1; expected " +
                              std::to_string(expected_id) + ", got " + std::to_string(id));
        if (head < 0) throw FormatError("negative HEAD in CoNLL-U row: " + line);
        ParsedToken tok;
        tok.form = cols[1];
        tok.upos_id = vocab.upos_id(cols[2]);
        tok.head = head - 1; // HEAD=0 marks ROOT
        tok.deprel_id = vocab.relation_id(cols[4]);
        parse.tokens.push_back(std::move(tok));
        ++expected_id;
        saw_token = true;
    }
    if (!saw_token) throw FormatError("no CoNLL-U token rows found");
    parse.validate();
    return parse;
}

std::string render_conllu(const DependencyParse& parse, const RelationVocab& vocab) {
    std::ostringstream out;
    for (std::size_t i = 0; i < parse.tokens.size(); ++i) {
        const auto& tok = parse.tokens[i];
        out << (i + 1) << '\t' << tok.form << '\t' << vocab.upos_tags[static_cast<std::size_t>(tok.upos_id)]
            << '\t' << (tok.head + 1) << '\t' << vocab.relations[static_cast<std::size_t>(tok.deprel_id)]
            << '\n';
    }
    return out.str();
}

} // namespace fgt2m
