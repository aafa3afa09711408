#pragma once

#include "fgt2m/errors.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fgt2m {

// Dependency relation and part-of-speech label spaces. The reserved SELF
// relation marks self-loops added during graph construction; UNK absorbs
// labels outside the vocabulary.
struct RelationVocab {
    std::vector<std::string> relations;
    std::vector<std::string> upos_tags;

    int relation_id(const std::string& label) const;
    int upos_id(const std::string& tag) const;
    int self_relation_id() const { return relation_id("SELF"); }
    int unk_relation_id() const { return relation_id("UNK"); }
    int unk_upos_id() const { return upos_id("UNK"); }
    int relation_count() const { return static_cast<int>(relations.size()); }
    int upos_count() const { return static_cast<int>(upos_tags.size()); }

    // Universal Dependencies v2 label set plus SELF/UNK.
    static RelationVocab universal();

    // One label per line, UTF-8. SELF/UNK are appended if absent so the
    // type invariant holds for hand-edited files.
    static RelationVocab load(const std::filesystem::path& relations_file,
                              const std::filesystem::path& upos_file);
    void save(const std::filesystem::path& relations_file,
              const std::filesystem::path& upos_file) const;
};

struct ParsedToken {
    std::string form;
    int upos_id = -1;
    int head = -1; // 0-based index of the governing token; -1 marks ROOT
    int deprel_id = -1;
};

// A single-sentence dependency tree: exactly one ROOT, head links acyclic.
struct DependencyParse {
    std::vector<ParsedToken> tokens;

    int size() const { return static_cast<int>(tokens.size()); }
    int root_index() const;
    void validate() const; // throws MalformedParseError on violations
};

// Reads the first sentence block of a CoNLL-U subset: tab-separated
// ID FORM UPOS HEAD DEPREL columns, blank-line terminated, HEAD=0 = ROOT.
// Unknown deprel/UPOS labels map to UNK.
DependencyParse load_conllu(const std::string& text, const RelationVocab& vocab);

// Inverse of load_conllu for vocabulary labels (UNK renders as "UNK").
std::string render_conllu(const DependencyParse& parse, const RelationVocab& vocab);

} // namespace fgt2m
