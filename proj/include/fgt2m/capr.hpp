#pragma once

#include "fgt2m/autodiff.hpp"
#include "fgt2m/gat.hpp"
#include "fgt2m/rng.hpp"

#include <string>
#include <vector>

namespace fgt2m {

struct DenoiserConfig {
    int width = 64;      // model width
    int heads = 4;       // self/cross attention heads
    int blocks = 3;      // stacked reasoning blocks (equals GAT depth)
    int channels = 8;    // motion channel count D
    int text_width = 64; // word feature width; must equal `width` since the
                         // timestep embedding is added to both streams
    double lambda = 0.1; // sentence-fusion gain
    int mlp_mult = 4;
    bool deep_first = true;         // block 1 consumes the deepest GAT layer
    bool sentence_fusion_on = true; // CAPR-1 toggle
    bool cross_attention_on = true; // CAPR-2 toggle
};

struct AttentionParams {
    int wq = -1, wk = -1, wv = -1, wo = -1; // width × in_width maps
    int bq = -1, bk = -1, bv = -1, bo = -1; // 1 × width biases
};

struct CaprBlockParams {
    // Sentence feature: width-preserving 1-d conv over the word axis
    // (kernel 3, circular), masked mean pool, then a width-matching linear.
    int conv_km1 = -1, conv_k0 = -1, conv_kp1 = -1, conv_b = -1;
    int sent_w = -1, sent_b = -1;
    AttentionParams self_attn;
    AttentionParams cross_attn;
    int ln1_g = -1, ln1_b = -1; // before self-attention
    int ln2_g = -1, ln2_b = -1; // before cross-attention
    int ln3_g = -1, ln3_b = -1; // before the MLP
    int mlp_w1 = -1, mlp_b1 = -1, mlp_w2 = -1, mlp_b2 = -1;
};

struct DenoiserParams {
    DenoiserConfig cfg;
    int in_w = -1, in_b = -1;
    int time_w1 = -1, time_b1 = -1, time_w2 = -1, time_b2 = -1;
    std::vector<CaprBlockParams> blocks;
    int out_ln_g = -1, out_ln_b = -1, out_w = -1, out_b = -1;

    static DenoiserParams create(ParamStore& store, const DenoiserConfig& cfg, Rng& rng,
                                 const std::string& prefix = "denoiser");
};

// Sinusoidal position encoding; index 2k holds sin, 2k+1 holds cos.
Eigen::RowVectorXd sinusoidal_encoding(double position, int width);

// emb_t: base sinusoid passed through two linear layers with a nonlinearity.
Var timestep_embedding_vars(Tape& tape, int t, const DenoiserParams& params, const ParamStore& store);
Mat timestep_embedding(int t, const DenoiserParams& params, const ParamStore& store);

// S_i from one GAT layer's word features. The mask must cover a prefix of
// the rows; at least one word must be unmasked.
Var sentence_feature_vars(Tape& tape, Var words, const std::vector<std::uint8_t>& mask,
                          const CaprBlockParams& block, const ParamStore& store);
Mat sentence_feature(const Mat& words, const std::vector<std::uint8_t>& mask,
                     const CaprBlockParams& block, const ParamStore& store);

// X + λ(X ⊙ σ(X·Sᵀ)) with the per-frame relevance broadcast across channels.
Var sentence_fusion_vars(Tape& tape, Var x, Var sentence, double lambda);
Mat sentence_fusion(const Mat& x, const Mat& sentence, double lambda);

// Residual multi-head attention; softmax(QKᵀ/√d)V with keys/values from
// `kv`. A null `key_mask` attends everywhere.
Var residual_attention_vars(Tape& tape, Var x, Var kv, const std::vector<std::uint8_t>* key_mask,
                            const AttentionParams& attn, int heads, const ParamStore& store);

Mat fused_self_attention(const Mat& x, const CaprBlockParams& block, int heads, const ParamStore& store);
Mat word_cross_attention(const Mat& x, const Mat& words, const std::vector<std::uint8_t>& mask,
                         const CaprBlockParams& block, int heads, const ParamStore& store);

// Full denoiser: input projection + frame position encoding, then per block
// sentence fusion → self-attention → word cross-attention → MLP, then the
// output head. `word_feats` holds one matrix per GAT layer, shallow first.
Var denoiser_forward_vars(Tape& tape, const Mat& x_t, int t, const std::vector<Var>& word_feats,
                          const std::vector<std::uint8_t>& word_mask, const DenoiserParams& params,
                          const ParamStore& store);
Mat denoiser_forward(const Mat& x_t, int t, const HierarchicalTextFeatures& feats,
                     const DenoiserParams& params, const ParamStore& store);

} // namespace fgt2m
