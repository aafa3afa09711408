#include "fgt2m/capr.hpp"

#include <cmath>

namespace fgt2m {

namespace {

constexpr double kMaskedLogit = -1e30;

int prefix_count(const std::vector<std::uint8_t>& mask) {
    int n = 0;
    while (n < static_cast<int>(mask.size()) && mask[static_cast<std::size_t>(n)]) ++n;
    for (int i = n; i < static_cast<int>(mask.size()); ++i)
        if (mask[static_cast<std::size_t>(i)])
            throw ContractError("word mask must cover a prefix of the rows");
    return n;
}

AttentionParams make_attention(ParamStore& store, const std::string& base, int width, int kv_width,
                               Rng& rng) {
    AttentionParams a;
    a.wq = store.add(base + ".wq", glorot_uniform(width, width, rng));
    a.wk = store.add(base + ".wk", glorot_uniform(width, kv_width, rng));
    a.wv = store.add(base + ".wv", glorot_uniform(width, kv_width, rng));
    a.wo = store.add(base + ".wo", glorot_uniform(width, width, rng));
    a.bq = store.add(base + ".bq", Mat::Zero(1, width));
    a.bk = store.add(base + ".bk", Mat::Zero(1, width));
    a.bv = store.add(base + ".bv", Mat::Zero(1, width));
    a.bo = store.add(base + ".bo", Mat::Zero(1, width));
    return a;
}

Var linear(Tape& tape, Var x, const ParamStore& store, int w, int b) {
    return tape.add_rowvec(tape.matmul_nt(x, tape.param(store, w)), tape.param(store, b));
}

} // namespace

DenoiserParams DenoiserParams::create(ParamStore& store, const DenoiserConfig& cfg, Rng& rng,
                                      const std::string& prefix) {
    if (cfg.width % cfg.heads != 0) throw ParameterError("model width must be divisible by the head count");
    if (cfg.text_width != cfg.width)
        throw ConfigError("text feature width must equal the model width (timestep embedding is shared)");
    if (cfg.blocks < 1) throw ParameterError("the denoiser needs at least one block");
    if (cfg.lambda < 0.0) throw ParameterError("lambda must be nonnegative");

    DenoiserParams p;
    p.cfg = cfg;
    p.in_w = store.add(prefix + ".in.w", glorot_uniform(cfg.width, cfg.channels, rng));
    p.in_b = store.add(prefix + ".in.b", Mat::Zero(1, cfg.width));
    p.time_w1 = store.add(prefix + ".time.w1", glorot_uniform(cfg.width, cfg.width, rng));
    p.time_b1 = store.add(prefix + ".time.b1", Mat::Zero(1, cfg.width));
    p.time_w2 = store.add(prefix + ".time.w2", glorot_uniform(cfg.width, cfg.width, rng));
    p.time_b2 = store.add(prefix + ".time.b2", Mat::Zero(1, cfg.width));

    for (int b = 0; b < cfg.blocks; ++b) {
        const std::string base = prefix + ".block" + std::to_string(b);
        CaprBlockParams blk;
        blk.conv_km1 = store.add(base + ".conv.km1", glorot_uniform(cfg.width, cfg.text_width, rng));
        blk.conv_k0 = store.add(base + ".conv.k0", glorot_uniform(cfg.width, cfg.text_width, rng));
        blk.conv_kp1 = store.add(base + ".conv.kp1", glorot_uniform(cfg.width, cfg.text_width, rng));
        blk.conv_b = store.add(base + ".conv.b", Mat::Zero(1, cfg.width));
        blk.sent_w = store.add(base + ".sent.w", glorot_uniform(cfg.width, cfg.width, rng));
        blk.sent_b = store.add(base + ".sent.b", Mat::Zero(1, cfg.width));
        blk.self_attn = make_attention(store, base + ".self", cfg.width, cfg.width, rng);
        blk.cross_attn = make_attention(store, base + ".cross", cfg.width, cfg.text_width, rng);
        blk.ln1_g = store.add(base + ".ln1.g", Mat::Ones(1, cfg.width));
        blk.ln1_b = store.add(base + ".ln1.b", Mat::Zero(1, cfg.width));
        blk.ln2_g = store.add(base + ".ln2.g", Mat::Ones(1, cfg.width));
        blk.ln2_b = store.add(base + ".ln2.b", Mat::Zero(1, cfg.width));
        blk.ln3_g = store.add(base + ".ln3.g", Mat::Ones(1, cfg.width));
        blk.ln3_b = store.add(base + ".ln3.b", Mat::Zero(1, cfg.width));
        blk.mlp_w1 = store.add(base + ".mlp.w1", glorot_uniform(cfg.width * cfg.mlp_mult, cfg.width, rng));
        blk.mlp_b1 = store.add(base + ".mlp.b1", Mat::Zero(1, cfg.width * cfg.mlp_mult));
        blk.mlp_w2 = store.add(base + ".mlp.w2", glorot_uniform(cfg.width, cfg.width * cfg.mlp_mult, rng));
        blk.mlp_b2 = store.add(base + ".mlp.b2", Mat::Zero(1, cfg.width));
        p.blocks.push_back(blk);
    }
    p.out_ln_g = store.add(prefix + ".out.ln.g", Mat::Ones(1, cfg.width));
    p.out_ln_b = store.add(prefix + ".out.ln.b", Mat::Zero(1, cfg.width));
    p.out_w = store.add(prefix + ".out.w", glorot_uniform(cfg.channels, cfg.width, rng));
    p.out_b = store.add(prefix + ".out.b", Mat::Zero(1, cfg.channels));
    return p;
}

Eigen::RowVectorXd sinusoidal_encoding(double position, int width) {
    Eigen::RowVectorXd enc(width);
    const int pairs = width / 2;
    for (int k = 0; k < pairs; ++k) {
        const double freq = std::exp(-std::log(10000.0) * (2.0 * k) / width);
        enc[2 * k] = std::sin(position * freq);
        enc[2 * k + 1] = std::cos(position * freq);
    }
    if (width % 2 == 1) enc[width - 1] = std::sin(position * std::exp(-std::log(10000.0)));
    return enc;
}

Var timestep_embedding_vars(Tape& tape, int t, const DenoiserParams& params, const ParamStore& store) {
    if (t < 0) throw IndexError("timestep must be nonnegative");
    Var base = tape.constant(sinusoidal_encoding(static_cast<double>(t), params.cfg.width));
    Var h = tape.gelu(linear(tape, base, store, params.time_w1, params.time_b1));
    return linear(tape, h, store, params.time_w2, params.time_b2);
}

Mat timestep_embedding(int t, const DenoiserParams& params, const ParamStore& store) {
    Tape tape;
    return tape.val(timestep_embedding_vars(tape, t, params, store));
}

Var sentence_feature_vars(Tape& tape, Var words, const std::vector<std::uint8_t>& mask,
                          const CaprBlockParams& block, const ParamStore& store) {
    if (static_cast<Eigen::Index>(mask.size()) != tape.val(words).rows())
        throw ContractError("sentence_feature: mask length must match word rows");
    const int n = prefix_count(mask);
    if (n < 1) throw ContractError("sentence_feature: all words are masked");

    std::vector<int> cur(static_cast<std::size_t>(n)), prev(static_cast<std::size_t>(n)),
        next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cur[static_cast<std::size_t>(i)] = i;
        prev[static_cast<std::size_t>(i)] = (i - 1 + n) % n; // circular padding along the word axis
        next[static_cast<std::size_t>(i)] = (i + 1) % n;
    }
    Var w0 = tape.gather_rows(words, cur);
    Var wm = tape.gather_rows(words, prev);
    Var wp = tape.gather_rows(words, next);
    Var conv = tape.matmul_nt(w0, tape.param(store, block.conv_k0));
    conv = tape.add(conv, tape.matmul_nt(wm, tape.param(store, block.conv_km1)));
    conv = tape.add(conv, tape.matmul_nt(wp, tape.param(store, block.conv_kp1)));
    conv = tape.add_rowvec(conv, tape.param(store, block.conv_b));
    // masked mean pool over the real words
    Var pool = tape.scale(tape.matmul(tape.constant(Mat::Ones(1, n)), conv), 1.0 / n);
    return linear(tape, pool, store, block.sent_w, block.sent_b);
}

Mat sentence_feature(const Mat& words, const std::vector<std::uint8_t>& mask,
                     const CaprBlockParams& block, const ParamStore& store) {
    Tape tape;
    return tape.val(sentence_feature_vars(tape, tape.constant(words), mask, block, store));
}

Var sentence_fusion_vars(Tape& tape, Var x, Var sentence, double lambda) {
    if (tape.val(sentence).rows() != 1 || tape.val(sentence).cols() != tape.val(x).cols())
        throw ContractError("sentence_fusion: sentence feature must be 1x" +
                            std::to_string(tape.val(x).cols()));
    Var relevance = tape.matmul_nt(x, sentence); // T×1 frame relevance
    Var gate = tape.bcast_colvec(tape.sigmoid(relevance), static_cast<int>(tape.val(x).cols()));
    return tape.add(x, tape.scale(tape.mul(x, gate), lambda));
}

Mat sentence_fusion(const Mat& x, const Mat& sentence, double lambda) {
    Tape tape;
    return tape.val(sentence_fusion_vars(tape, tape.constant(x), tape.constant(sentence), lambda));
}

namespace {

// Attention output before the residual connection.
Var attention_core_vars(Tape& tape, Var x, Var kv, const std::vector<std::uint8_t>* key_mask,
                        const AttentionParams& attn, int heads, const ParamStore& store) {
    const int width = static_cast<int>(tape.val(x).cols());
    if (width % heads != 0) throw ContractError("attention width must be divisible by the head count");
    const int d = width / heads;
    const auto n_keys = tape.val(kv).rows();

    Mat mask_mat;
    const Mat* mask_ptr = nullptr;
    if (key_mask) {
        if (static_cast<Eigen::Index>(key_mask->size()) != n_keys)
            throw ContractError("attention key mask length must match key rows");
        bool any = false;
        for (auto m : *key_mask) any = any || m;
        if (!any) throw ContractError("attention over fully masked keys");
        mask_mat = Mat::Zero(tape.val(x).rows(), n_keys);
        for (Eigen::Index j = 0; j < n_keys; ++j)
            if (!(*key_mask)[static_cast<std::size_t>(j)]) mask_mat.col(j).setConstant(kMaskedLogit);
        mask_ptr = &mask_mat;
    }

    Var q = linear(tape, x, store, attn.wq, attn.bq);
    Var k = linear(tape, kv, store, attn.wk, attn.bk);
    Var v = linear(tape, kv, store, attn.wv, attn.bv);

    std::vector<Var> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = tape.cols(q, h * d, d);
        Var kh = tape.cols(k, h * d, d);
        Var vh = tape.cols(v, h * d, d);
        Var logits = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(d)));
        Var weights = tape.softmax_rows(logits, mask_ptr);
        head_outs.push_back(tape.matmul(weights, vh));
    }
    Var merged = heads == 1 ? head_outs[0] : tape.concat_cols(head_outs);
    return linear(tape, merged, store, attn.wo, attn.bo);
}

} // namespace

Var residual_attention_vars(Tape& tape, Var x, Var kv, const std::vector<std::uint8_t>* key_mask,
                            const AttentionParams& attn, int heads, const ParamStore& store) {
    return tape.add(x, attention_core_vars(tape, x, kv, key_mask, attn, heads, store));
}

Mat fused_self_attention(const Mat& x, const CaprBlockParams& block, int heads, const ParamStore& store) {
    Tape tape;
    Var xv = tape.constant(x);
    return tape.val(residual_attention_vars(tape, xv, xv, nullptr, block.self_attn, heads, store));
}

Mat word_cross_attention(const Mat& x, const Mat& words, const std::vector<std::uint8_t>& mask,
                         const CaprBlockParams& block, int heads, const ParamStore& store) {
    Tape tape;
    return tape.val(residual_attention_vars(tape, tape.constant(x), tape.constant(words), &mask,
                                            block.cross_attn, heads, store));
}

Var denoiser_forward_vars(Tape& tape, const Mat& x_t, int t, const std::vector<Var>& word_feats,
                          const std::vector<std::uint8_t>& word_mask, const DenoiserParams& params,
                          const ParamStore& store) {
    const DenoiserConfig& cfg = params.cfg;
    if (x_t.cols() != cfg.channels)
        throw ContractError("denoiser: motion has " + std::to_string(x_t.cols()) + " channels, expected " +
                            std::to_string(cfg.channels));
    if (static_cast<int>(word_feats.size()) != cfg.blocks)
        throw ConfigError("denoiser: got " + std::to_string(word_feats.size()) +
                          " text feature levels for " + std::to_string(cfg.blocks) + " blocks");

    const auto frames = x_t.rows();
    Mat frame_pe(frames, cfg.width);
    for (Eigen::Index i = 0; i < frames; ++i)
        frame_pe.row(i) = sinusoidal_encoding(static_cast<double>(i), cfg.width);

    Var h = linear(tape, tape.constant(x_t), store, params.in_w, params.in_b);
    h = tape.add(h, tape.constant(frame_pe));
    Var emb = timestep_embedding_vars(tape, t, params, store);

    for (int b = 0; b < cfg.blocks; ++b) {
        const int level = cfg.deep_first ? cfg.blocks - 1 - b : b;
        const CaprBlockParams& blk = params.blocks[static_cast<std::size_t>(b)];
        // Both streams receive the timestep embedding at every block.
        Var w_cond = tape.add_rowvec(word_feats[static_cast<std::size_t>(level)], emb);
        h = tape.add_rowvec(h, emb);

        if (cfg.sentence_fusion_on) {
            Var s = sentence_feature_vars(tape, w_cond, word_mask, blk, store);
            h = sentence_fusion_vars(tape, h, s, cfg.lambda);
        }
        Var normed = tape.layer_norm(h, tape.param(store, blk.ln1_g), tape.param(store, blk.ln1_b));
        h = tape.add(h, attention_core_vars(tape, normed, normed, nullptr, blk.self_attn, cfg.heads, store));
        if (cfg.cross_attention_on) {
            Var normed2 = tape.layer_norm(h, tape.param(store, blk.ln2_g), tape.param(store, blk.ln2_b));
            h = tape.add(h, attention_core_vars(tape, normed2, w_cond, &word_mask, blk.cross_attn,
                                                cfg.heads, store));
        }
        Var normed3 = tape.layer_norm(h, tape.param(store, blk.ln3_g), tape.param(store, blk.ln3_b));
        Var mid = tape.gelu(linear(tape, normed3, store, blk.mlp_w1, blk.mlp_b1));
        h = tape.add(h, linear(tape, mid, store, blk.mlp_w2, blk.mlp_b2));
    }

    Var out = tape.layer_norm(h, tape.param(store, params.out_ln_g), tape.param(store, params.out_ln_b));
    return linear(tape, out, store, params.out_w, params.out_b);
}

Mat denoiser_forward(const Mat& x_t, int t, const HierarchicalTextFeatures& feats,
                     const DenoiserParams& params, const ParamStore& store) {
    Tape tape;
    std::vector<Var> word_feats;
    word_feats.reserve(feats.layer_features.size());
    for (const Mat& f : feats.layer_features) word_feats.push_back(tape.constant(f));
    Var out = denoiser_forward_vars(tape, x_t, t, word_feats, feats.word_mask, params, store);
    const Mat& y = tape.val(out);
    if (!y.allFinite()) throw NumericError("denoiser produced non-finite values");
    return y;
}

} // namespace fgt2m
