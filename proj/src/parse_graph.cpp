#include "fgt2m/parse_graph.hpp"

namespace fgt2m {

ParseGraph build_graph(const DependencyParse& parse, const Eigen::MatrixXd& word_embeddings,
                       const RelationVocab& vocab) {
    parse.validate();
    const int n = parse.size();
    if (word_embeddings.rows() != n)
        throw ContractError("build_graph: embedding rows (" + std::to_string(word_embeddings.rows()) +
                            ") must equal token count (" + std::to_string(n) + ")");

    ParseGraph g;
    g.n_nodes = n;
    g.node_features = word_embeddings;
    g.adjacency.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    g.upos_ids.reserve(static_cast<std::size_t>(n));

    auto mark = [&](int i, int j) {
        g.adjacency[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = 1;
    };

    const int self_rel = vocab.self_relation_id();
    for (int i = 0; i < n; ++i) {
        g.upos_ids.push_back(parse.tokens[static_cast<std::size_t>(i)].upos_id);
        g.edges.push_back({i, i, self_rel});
        mark(i, i);
    }
    for (int i = 0; i < n; ++i) {
        const auto& tok = parse.tokens[static_cast<std::size_t>(i)];
        if (tok.head < 0) continue; // ROOT has no governing edge
        const int rel = tok.deprel_id;
        if (rel < 0 || rel >= vocab.relation_count())
            throw ContractError("build_graph: relation id out of vocabulary range");
        g.edges.push_back({i, tok.head, rel});
        g.edges.push_back({tok.head, i, rel});
        mark(i, tok.head);
        mark(tok.head, i);
    }
    return g;
}

} // namespace fgt2m
