#pragma once

#include "fgt2m/autodiff.hpp"
#include "fgt2m/parse_graph.hpp"
#include "fgt2m/rng.hpp"

#include <string>
#include <vector>

namespace fgt2m {

struct GatConfig {
    int layers = 3;
    int heads = 1;
    int width = 64;    // node feature width, kept equal across layers
    int edge_dim = 16; // relation embedding width
    double leaky_slope = 0.2;
    bool upos_gains = true;
};

// Parameter handles for the stacked edge-featured graph-attention encoder.
// The relation embedding table and its per-relation gains are shared across
// layers; attention/transform weights are per layer and head.
struct GatParams {
    GatConfig cfg;
    int edge_table = -1; // |relations| × edge_dim
    int rel_gain = -1;   // |relations| × 1
    int upos_gain = -1;  // |upos| × 1 (only when cfg.upos_gains)

    struct Head {
        int theta = -1;   // head_width × width
        int theta_e = -1; // head_width × edge_dim
        int w_dst = -1;   // head_width × 1, attention term for the receiver
        int w_src = -1;   // head_width × 1, attention term for the sender
        int w_edge = -1;  // head_width × 1, attention term for the edge
    };
    std::vector<std::vector<Head>> layers; // [layer][head]

    int head_width() const { return cfg.width / cfg.heads; }

    static GatParams create(ParamStore& store, const GatConfig& cfg, int n_relations, int n_upos,
                            Rng& rng, const std::string& prefix = "lsam");
};

// Hierarchical word features: one matrix per GAT layer (shallow first),
// padded to n_max rows with zero vectors and a mask marking real words.
struct HierarchicalTextFeatures {
    std::vector<Mat> layer_features; // each n_max × width
    std::vector<std::uint8_t> word_mask;
    int n_words = 0;

    int n_max() const { return static_cast<int>(word_mask.size()); }
};

// v_e = β_r · φ_e(onehot(relation)); one row per directed edge.
Var edge_feature_vars(Tape& tape, const ParseGraph& graph, const GatParams& params,
                      const ParamStore& store);

// One edge-featured attention layer over the closed neighborhoods.
Var gat_layer_vars(Tape& tape, Var node_feats, const ParseGraph& graph, Var edge_feats,
                   const GatParams& params, int layer, const ParamStore& store);

// Full stack: optional per-UPOS input gains, then `layers` attention passes,
// collecting every layer's output (unpadded, N × width).
std::vector<Var> gat_stack_vars(Tape& tape, const ParseGraph& graph, Var node_feats,
                                const GatParams& params, const ParamStore& store);

// Forward-only wrappers over the tape path.
Mat edge_features(const ParseGraph& graph, const GatParams& params, const ParamStore& store);
Mat gat_layer(const Mat& node_feats, const ParseGraph& graph, const Mat& edge_feats,
              const GatParams& params, int layer, const ParamStore& store);
HierarchicalTextFeatures gat_stack(const ParseGraph& graph, const GatParams& params,
                                   const ParamStore& store, int n_max);

// Pads unmasked per-layer features to n_max rows.
HierarchicalTextFeatures pad_features(const std::vector<Mat>& layer_feats, int n_words, int n_max);

} // namespace fgt2m
