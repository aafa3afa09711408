#pragma once

#include "fgt2m/conllu.hpp"

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace fgt2m {

// Relation-typed graph over sentence tokens: every dependency edge appears
// in both directions carrying its deprel, and each node carries a SELF
// self-loop. Node features are the word embeddings at construction time.
struct ParseGraph {
    struct Edge {
        int dst = 0; // receiver
        int src = 0; // sender
        int relation_id = 0;
    };

    int n_nodes = 0;
    Eigen::MatrixXd node_features;       // N×L
    std::vector<std::uint8_t> adjacency; // N×N row-major booleans, self-loops included
    std::vector<Edge> edges;             // directed entries, self-loops included
    std::vector<int> upos_ids;           // N

    bool adjacent(int i, int j) const {
        return adjacency[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_nodes) +
                         static_cast<std::size_t>(j)] != 0;
    }
    std::vector<std::pair<int, int>> edge_endpoints() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(edges.size());
        for (const auto& e : edges) out.emplace_back(e.dst, e.src);
        return out;
    }
};

ParseGraph build_graph(const DependencyParse& parse, const Eigen::MatrixXd& word_embeddings,
                       const RelationVocab& vocab);

} // namespace fgt2m
