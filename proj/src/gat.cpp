#include "fgt2m/gat.hpp"

namespace fgt2m {

namespace {
constexpr double kMaskedLogit = -1e30;

// Additive mask excluding non-neighbors from each receiver's softmax.
Mat adjacency_mask(const ParseGraph& graph) {
    const int n = graph.n_nodes;
    Mat m = Mat::Constant(n, n, kMaskedLogit);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (graph.adjacent(i, j)) m(i, j) = 0.0;
    return m;
}
} // namespace

GatParams GatParams::create(ParamStore& store, const GatConfig& cfg, int n_relations, int n_upos,
                            Rng& rng, const std::string& prefix) {
    if (cfg.layers < 1) throw ParameterError("GAT stack needs at least one layer");
    if (cfg.heads < 1 || cfg.width % cfg.heads != 0)
        throw ParameterError("GAT width must be divisible by the head count");

    GatParams p;
    p.cfg = cfg;
    p.edge_table = store.add(prefix + ".edge_table", normal_init(n_relations, cfg.edge_dim, 0.1, rng));
    p.rel_gain = store.add(prefix + ".rel_gain", Mat::Ones(n_relations, 1));
    if (cfg.upos_gains) p.upos_gain = store.add(prefix + ".upos_gain", Mat::Ones(n_upos, 1));

    const int hw = cfg.width / cfg.heads;
    for (int l = 0; l < cfg.layers; ++l) {
        std::vector<Head> heads;
        for (int h = 0; h < cfg.heads; ++h) {
            const std::string base = prefix + ".layer" + std::to_string(l) + ".head" + std::to_string(h);
            Head hd;
            hd.theta = store.add(base + ".theta", glorot_uniform(hw, cfg.width, rng));
            hd.theta_e = store.add(base + ".theta_e", glorot_uniform(hw, cfg.edge_dim, rng));
            hd.w_dst = store.add(base + ".w_dst", glorot_uniform(hw, 1, rng));
            hd.w_src = store.add(base + ".w_src", glorot_uniform(hw, 1, rng));
            hd.w_edge = store.add(base + ".w_edge", glorot_uniform(hw, 1, rng));
            heads.push_back(hd);
        }
        p.layers.push_back(std::move(heads));
    }
    return p;
}

Var edge_feature_vars(Tape& tape, const ParseGraph& graph, const GatParams& params,
                      const ParamStore& store) {
    Var table = tape.param(store, params.edge_table);
    Var gains = tape.param(store, params.rel_gain);
    // β_r scales the relation's embedding row.
    Var scaled = tape.mul(table, tape.bcast_colvec(gains, params.cfg.edge_dim));
    std::vector<int> rel_ids;
    rel_ids.reserve(graph.edges.size());
    for (const auto& e : graph.edges) {
        if (e.relation_id < 0 || e.relation_id >= tape.val(table).rows())
            throw IndexError("edge relation id out of embedding-table range");
        rel_ids.push_back(e.relation_id);
    }
    return tape.gather_rows(scaled, std::move(rel_ids));
}

Var gat_layer_vars(Tape& tape, Var node_feats, const ParseGraph& graph, Var edge_feats,
                   const GatParams& params, int layer, const ParamStore& store) {
    if (layer < 0 || layer >= static_cast<int>(params.layers.size()))
        throw IndexError("GAT layer index out of range");
    const int n = graph.n_nodes;
    if (tape.val(node_feats).rows() != n) throw ContractError("gat_layer: node feature rows must equal node count");
    const Mat mask = adjacency_mask(graph);
    const auto edge_list = graph.edge_endpoints();

    std::vector<Var> head_outputs;
    for (const auto& head : params.layers[static_cast<std::size_t>(layer)]) {
        Var theta = tape.param(store, head.theta);
        Var theta_e = tape.param(store, head.theta_e);
        Var h = tape.matmul_nt(node_feats, theta);      // N × hw
        Var he = tape.matmul_nt(edge_feats, theta_e);   // M × hw
        Var s_dst = tape.matmul(h, tape.param(store, head.w_dst));   // N × 1
        Var s_src = tape.matmul(h, tape.param(store, head.w_src));   // N × 1
        Var s_edge = tape.matmul(he, tape.param(store, head.w_edge)); // M × 1

        // logits(i,j) = LeakyReLU(s_dst[i] + s_src[j] + s_edge[i,j]) over present edges
        Var logits = tape.add(tape.bcast_colvec(s_dst, n), tape.bcast_rowvec(tape.transpose(s_src), n));
        logits = tape.add(logits, tape.scatter_edge_bias(s_edge, edge_list, n));
        logits = tape.leaky_relu(logits, params.cfg.leaky_slope);
        Var attn = tape.softmax_rows(logits, &mask);
        if (!tape.val(attn).allFinite()) throw NumericError("gat_layer: non-finite attention");
        head_outputs.push_back(tape.matmul(attn, h));
    }
    return head_outputs.size() == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
}

std::vector<Var> gat_stack_vars(Tape& tape, const ParseGraph& graph, Var node_feats,
                                const GatParams& params, const ParamStore& store) {
    Var x = node_feats;
    if (params.cfg.upos_gains) {
        Var gains = tape.param(store, params.upos_gain);
        Var node_gain = tape.gather_rows(gains, graph.upos_ids); // N × 1
        x = tape.mul(x, tape.bcast_colvec(node_gain, params.cfg.width));
    }
    Var edge_feats = edge_feature_vars(tape, graph, params, store);
    std::vector<Var> outputs;
    for (int l = 0; l < params.cfg.layers; ++l) {
        x = gat_layer_vars(tape, x, graph, edge_feats, params, l, store);
        outputs.push_back(x);
    }
    return outputs;
}

Mat edge_features(const ParseGraph& graph, const GatParams& params, const ParamStore& store) {
    Tape tape;
    return tape.val(edge_feature_vars(tape, graph, params, store));
}

Mat gat_layer(const Mat& node_feats, const ParseGraph& graph, const Mat& edge_feats,
              const GatParams& params, int layer, const ParamStore& store) {
    Tape tape;
    return tape.val(gat_layer_vars(tape, tape.constant(node_feats), graph, tape.constant(edge_feats),
                                   params, layer, store));
}

HierarchicalTextFeatures pad_features(const std::vector<Mat>& layer_feats, int n_words, int n_max) {
    if (n_words > n_max) throw ContractError("pad_features: sentence longer than n_max");
    HierarchicalTextFeatures out;
    out.n_words = n_words;
    out.word_mask.assign(static_cast<std::size_t>(n_max), 0);
    for (int i = 0; i < n_words; ++i) out.word_mask[static_cast<std::size_t>(i)] = 1;
    for (const Mat& f : layer_feats) {
        Mat padded = Mat::Zero(n_max, f.cols());
        padded.topRows(f.rows()) = f;
        out.layer_features.push_back(std::move(padded));
    }
    return out;
}

HierarchicalTextFeatures gat_stack(const ParseGraph& graph, const GatParams& params,
                                   const ParamStore& store, int n_max) {
    Tape tape;
    auto vars = gat_stack_vars(tape, graph, tape.constant(graph.node_features), params, store);
    std::vector<Mat> feats;
    feats.reserve(vars.size());
    for (Var v : vars) feats.push_back(tape.val(v));
    return pad_features(feats, graph.n_nodes, n_max);
}

} // namespace fgt2m
