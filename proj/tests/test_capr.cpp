#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/model.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace fgt2m;
using fgt2m::testing::finite_difference_check;

namespace {

const RelationVocab kVocab = RelationVocab::universal();
const ToyGrammar kGrammar = ToyGrammar::standard();

DenoiserConfig tiny_cfg() {
    DenoiserConfig cfg;
    cfg.width = 8;
    cfg.heads = 2;
    cfg.blocks = 2;
    cfg.channels = 2;
    cfg.text_width = 8;
    cfg.mlp_mult = 2;
    cfg.lambda = 0.1;
    return cfg;
}

struct Fixture {
    ParamStore store;
    DenoiserParams params;
    explicit Fixture(DenoiserConfig cfg = tiny_cfg(), std::uint64_t seed = 5) : params(make(cfg, seed)) {}

private:
    DenoiserParams make(const DenoiserConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        return DenoiserParams::create(store, cfg, rng);
    }
};

ModelConfig tiny_model_cfg() {
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.n_max = 12;
    cfg.frames = 4;
    cfg.channels = 2;
    cfg.gat.layers = 2;
    cfg.gat.width = 8;
    cfg.gat.edge_dim = 4;
    cfg.den = tiny_cfg();
    return cfg;
}

} // namespace

TEST_CASE("sinusoidal base encoding") {
    const auto enc = sinusoidal_encoding(0.0, 8);
    for (int k = 0; k < 4; ++k) {
        CHECK(enc[2 * k] == doctest::Approx(0.0));     // sin(0)
        CHECK(enc[2 * k + 1] == doctest::Approx(1.0)); // cos(0)
    }
    // distinct steps differ in at least one coordinate over the step range
    for (int t = 2; t <= 1000; t *= 3) {
        const auto a = sinusoidal_encoding(static_cast<double>(t), 16);
        const auto b = sinusoidal_encoding(static_cast<double>(t - 1), 16);
        CHECK((a - b).cwiseAbs().maxCoeff() > 1e-6);
    }
}

TEST_CASE("timestep embedding is deterministic and step-sensitive") {
    Fixture f;
    const Mat a = timestep_embedding(7, f.params, f.store);
    const Mat b = timestep_embedding(7, f.params, f.store);
    const Mat c = timestep_embedding(8, f.params, f.store);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 1e-9);
    CHECK(a.rows() == 1);
    CHECK(a.cols() == 8);
    CHECK_THROWS_AS(timestep_embedding(-1, f.params, f.store), IndexError);
}

TEST_CASE("sentence feature contracts") {
    Fixture f;
    const auto& blk = f.params.blocks[0];
    Rng rng(9);

    SUBCASE("singleton pooling is the word's conv response") {
        const Mat w = rng.normal_mat(1, 8);
        const std::vector<std::uint8_t> mask = {1};
        const Mat s = sentence_feature(w, mask, blk, f.store);
        // with one word the circular window is (w, w, w)
        const Mat conv = w * (f.store.value(blk.conv_km1) + f.store.value(blk.conv_k0) +
                              f.store.value(blk.conv_kp1))
                                 .transpose() +
                         f.store.value(blk.conv_b);
        const Mat expect = conv * f.store.value(blk.sent_w).transpose() + f.store.value(blk.sent_b);
        CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("appending masked pad rows changes nothing") {
        const Mat w = rng.normal_mat(3, 8);
        const Mat s1 = sentence_feature(w, {1, 1, 1}, blk, f.store);
        Mat padded = Mat::Zero(6, 8);
        padded.topRows(3) = w;
        const Mat s2 = sentence_feature(padded, {1, 1, 1, 0, 0, 0}, blk, f.store);
        CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("duplicating every word keeps the mean pool fixed") {
        const Mat w = rng.normal_mat(3, 8);
        Mat dup(6, 8);
        dup.topRows(3) = w;
        dup.bottomRows(3) = w;
        const Mat s1 = sentence_feature(w, {1, 1, 1}, blk, f.store);
        const Mat s2 = sentence_feature(dup, {1, 1, 1, 1, 1, 1}, blk, f.store);
        CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("all-masked input is a contract error") {
        const Mat w = rng.normal_mat(2, 8);
        CHECK_THROWS_AS(sentence_feature(w, {0, 0}, blk, f.store), ContractError);
    }
    SUBCASE("non-prefix masks are rejected") {
        const Mat w = rng.normal_mat(3, 8);
        CHECK_THROWS_AS(sentence_feature(w, {1, 0, 1}, blk, f.store), ContractError);
    }
}

TEST_CASE("sentence fusion arithmetic") {
    SUBCASE("lambda=0 is the identity") {
        Rng rng(3);
        const Mat x = rng.normal_mat(5, 4);
        const Mat s = rng.normal_mat(1, 4);
        CHECK((sentence_fusion(x, s, 0.0) - x).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("documented relevance product") {
        Mat x(3, 2), s(1, 2);
        x << 1, 0, 0, 1, 1, 1;
        s << 2, 3;
        // A = X·Sᵀ = [2, 3, 5]
        const Mat a = x * s.transpose();
        CHECK(a(0, 0) == doctest::Approx(2.0));
        CHECK(a(1, 0) == doctest::Approx(3.0));
        CHECK(a(2, 0) == doctest::Approx(5.0));
    }
    SUBCASE("scalar oracle value") {
        Mat x(1, 2), s(1, 2);
        x << 1, 0;
        s << 1, 1;
        const Mat out = sentence_fusion(x, s, 0.1);
        CHECK(out(0, 0) == doctest::Approx(1.0731058578630004).epsilon(1e-12));
        CHECK(out(0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("shape mismatch raises") {
        CHECK_THROWS_AS(sentence_fusion(Mat::Zero(2, 3), Mat::Zero(1, 2), 0.1), ContractError);
    }
}

TEST_CASE("self attention: singleton frame and row stochasticity") {
    Fixture f;
    auto& blk = f.params.blocks[0];
    Rng rng(11);

    SUBCASE("one frame attends to itself") {
        // make the output projection transparent
        f.store.value(blk.self_attn.wo) = Mat::Identity(8, 8);
        const Mat x = rng.normal_mat(1, 8);
        const Mat out = fused_self_attention(x, blk, 2, f.store);
        const Mat v = x * f.store.value(blk.self_attn.wv).transpose() + f.store.value(blk.self_attn.bv);
        CHECK((out - (x + v)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("attention rows sum to one, observed through all-ones values") {
        f.store.value(blk.self_attn.wv).setZero();
        f.store.value(blk.self_attn.bv).setOnes();
        f.store.value(blk.self_attn.wo) = Mat::Identity(8, 8);
        f.store.value(blk.self_attn.bo).setZero();
        const Mat x = rng.normal_mat(7, 8);
        const Mat out = fused_self_attention(x, blk, 2, f.store);
        // per head, readout = Σ_j α_ij · 1 = row sum of the attention matrix
        CHECK((out - x - Mat::Ones(7, 8)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("word cross attention contracts") {
    Fixture f;
    auto& blk = f.params.blocks[1];
    Rng rng(13);
    const Mat x = rng.normal_mat(4, 8);

    SUBCASE("single unmasked word: every frame reads its value projection") {
        f.store.value(blk.cross_attn.wo) = Mat::Identity(8, 8);
        const Mat words = rng.normal_mat(1, 8);
        const Mat out = word_cross_attention(x, words, {1}, blk, 2, f.store);
        const Mat v = words * f.store.value(blk.cross_attn.wv).transpose() + f.store.value(blk.cross_attn.bv);
        for (int i = 0; i < 4; ++i) CHECK((out.row(i) - x.row(i) - v.row(0)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("masked pad words change nothing") {
        const Mat words = rng.normal_mat(3, 8);
        const Mat out1 = word_cross_attention(x, words, {1, 1, 1}, blk, 2, f.store);
        Mat padded = Mat::Zero(5, 8);
        padded.topRows(3) = words;
        const Mat out2 = word_cross_attention(x, padded, {1, 1, 1, 0, 0}, blk, 2, f.store);
        CHECK((out1 - out2).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("zeroed value projection returns the input") {
        f.store.value(blk.cross_attn.wv).setZero();
        f.store.value(blk.cross_attn.bv).setZero();
        f.store.value(blk.cross_attn.bo).setZero();
        const Mat words = rng.normal_mat(3, 8);
        const Mat out = word_cross_attention(x, words, {1, 1, 1}, blk, 2, f.store);
        CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("fully masked text is a contract error") {
        const Mat words = rng.normal_mat(2, 8);
        CHECK_THROWS_AS(word_cross_attention(x, words, {0, 0}, blk, 2, f.store), ContractError);
    }
    SUBCASE("cross-attention rows sum to one under masking") {
        f.store.value(blk.cross_attn.wv).setZero();
        f.store.value(blk.cross_attn.bv).setOnes();
        f.store.value(blk.cross_attn.wo) = Mat::Identity(8, 8);
        f.store.value(blk.cross_attn.bo).setZero();
        const Mat words = rng.normal_mat(5, 8);
        const Mat out = word_cross_attention(x, words, {1, 1, 1, 0, 0}, blk, 2, f.store);
        CHECK((out - x - Mat::Ones(4, 8)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("denoiser forward shape, toggles, and depth checks") {
    Fixture f;
    Rng rng(17);
    const Mat x_t = rng.normal_mat(4, 2);
    HierarchicalTextFeatures feats;
    feats.n_words = 3;
    feats.word_mask = {1, 1, 1};
    feats.layer_features = {rng.normal_mat(3, 8), rng.normal_mat(3, 8)};

    SUBCASE("shape and finiteness") {
        const Mat out = denoiser_forward(x_t, 3, feats, f.params, f.store);
        CHECK(out.rows() == 4);
        CHECK(out.cols() == 2);
        CHECK(out.allFinite());
    }
    SUBCASE("sentence fusion ablation still runs with the same shape") {
        Fixture g;
        g.params.cfg.sentence_fusion_on = false;
        const Mat out = denoiser_forward(x_t, 3, feats, g.params, g.store);
        CHECK(out.rows() == 4);
        CHECK(out.cols() == 2);
    }
    SUBCASE("cross attention ablation still runs") {
        Fixture g;
        g.params.cfg.cross_attention_on = false;
        const Mat out = denoiser_forward(x_t, 3, feats, g.params, g.store);
        CHECK(out.allFinite());
    }
    SUBCASE("depth mismatch is a configuration error") {
        HierarchicalTextFeatures wrong = feats;
        wrong.layer_features.pop_back();
        CHECK_THROWS_AS(denoiser_forward(x_t, 3, wrong, f.params, f.store), ConfigError);
    }
    SUBCASE("block order flag changes the output") {
        Fixture g(tiny_cfg(), 5); // same seed, same weights as f
        g.params.cfg.deep_first = false;
        const Mat deep = denoiser_forward(x_t, 3, feats, f.params, f.store);
        const Mat shallow = denoiser_forward(x_t, 3, feats, g.params, g.store);
        CHECK((deep - shallow).cwiseAbs().maxCoeff() > 1e-9);
    }
}

TEST_CASE("pad invariance of the full denoiser") {
    Fixture f;
    Rng rng(19);
    const Mat x_t = rng.normal_mat(4, 2);
    HierarchicalTextFeatures feats;
    feats.n_words = 3;
    feats.word_mask = {1, 1, 1};
    feats.layer_features = {rng.normal_mat(3, 8), rng.normal_mat(3, 8)};

    HierarchicalTextFeatures padded;
    padded.n_words = 3;
    padded.word_mask = {1, 1, 1, 0, 0, 0, 0};
    for (const auto& l : feats.layer_features) {
        Mat p = Mat::Zero(7, 8);
        p.topRows(3) = l;
        padded.layer_features.push_back(p);
    }
    const Mat a = denoiser_forward(x_t, 5, feats, f.params, f.store);
    const Mat b = denoiser_forward(x_t, 5, padded, f.params, f.store);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("full-model gradient check on a tiny instance") {
    auto model = TextMotionModel::create(tiny_model_cfg(), {"a", "person", "walks"}, kVocab, 23);
    const auto parse = load_conllu("1\ta\tDET\t3\tdet\n2\tperson\tNOUN\t3\tnsubj\n3\twalks\tVERB\t0\troot\n",
                                   kVocab);
    const auto enc = model.encode_record(parse);
    Rng rng(29);
    const Mat x0 = rng.normal_mat(4, 2);
    const Mat eps = rng.normal_mat(4, 2);
    const auto sched = make_linear_schedule(10, 1e-2, 0.2);

    auto build = [&](Tape& t) { return model.build_loss(t, enc, x0, 6, eps, sched); };
    std::vector<int> ids;
    for (int i = 0; i < model.params.count(); ++i) ids.push_back(i);
    const auto r = finite_difference_check(model.params, build, ids);
    CAPTURE(r.worst);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("text path can be fully disabled") {
    // λ = 0 and zeroed cross-attention value projections make the output
    // text-independent.
    ModelConfig cfg = tiny_model_cfg();
    cfg.den.lambda = 0.0;
    auto model = TextMotionModel::create(cfg, kGrammar.lexicon(), kVocab, 31);
    for (int b = 0; b < cfg.den.blocks; ++b) {
        model.params.value(model.den.blocks[static_cast<std::size_t>(b)].cross_attn.wv).setZero();
        model.params.value(model.den.blocks[static_cast<std::size_t>(b)].cross_attn.bv).setZero();
    }
    const auto feats1 = model.encode_parse(kGrammar.parse("a person walks forward", kVocab));
    const auto feats2 = model.encode_parse(kGrammar.parse("a person turns right", kVocab));
    Rng rng(37);
    const Mat x_t = rng.normal_mat(4, 2);
    const Mat o1 = model.denoise(x_t, 3, feats1);
    const Mat o2 = model.denoise(x_t, 3, feats2);
    CHECK((o1 - o2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("conditioning is live for nonzero lambda even at initialization") {
    auto model = TextMotionModel::create(tiny_model_cfg(), kGrammar.lexicon(), kVocab, 41);
    const auto feats1 = model.encode_parse(kGrammar.parse("a person walks forward", kVocab));
    const auto feats2 = model.encode_parse(kGrammar.parse("a person turns right", kVocab));
    Rng rng(43);
    const Mat x_t = rng.normal_mat(4, 2);
    CHECK((model.denoise(x_t, 3, feats1) - model.denoise(x_t, 3, feats2)).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("lsam ablation feeds one repeated sentence embedding") {
    ModelConfig cfg = tiny_model_cfg();
    cfg.lsam_enabled = false;
    cfg.den.blocks = 3; // block count is free once the GAT is bypassed
    auto model = TextMotionModel::create(cfg, kGrammar.lexicon(), kVocab, 47);
    const auto feats = model.encode_parse(kGrammar.parse("a person walks forward", kVocab));
    REQUIRE(feats.layer_features.size() == 3);
    CHECK(feats.n_words == 1);
    // all levels carry the same single sentence embedding
    CHECK((feats.layer_features[0] - feats.layer_features[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((feats.layer_features[0] - feats.layer_features[2]).cwiseAbs().maxCoeff() == 0.0);
    Rng rng(49);
    const Mat out = model.denoise(rng.normal_mat(4, 2), 2, feats);
    CHECK(out.allFinite());
}

TEST_CASE("checkpoints round-trip bit-exact model behavior") {
    namespace fs = std::filesystem;
    auto model = TextMotionModel::create(tiny_model_cfg(), kGrammar.lexicon(), kVocab, 53);
    const auto dir = fs::temp_directory_path() / "fgt2m_ckpt_test";
    fs::create_directories(dir);
    save_checkpoint(dir / "m.ckpt", model);
    const auto loaded = load_checkpoint(dir / "m.ckpt");

    const auto parse = kGrammar.parse("a person waves the left hand", kVocab);
    const auto f1 = model.encode_parse(parse);
    const auto f2 = loaded.encode_parse(parse);
    Rng rng(59);
    const Mat x_t = rng.normal_mat(4, 2);
    CHECK((model.denoise(x_t, 4, f1) - loaded.denoise(x_t, 4, f2)).cwiseAbs().maxCoeff() == 0.0);

    // corrupting the file surfaces a format error
    std::string bytes;
    {
        std::ifstream in(dir / "m.ckpt", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    bytes.resize(bytes.size() / 2);
    {
        std::ofstream out(dir / "bad.ckpt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("hierarchical mode requires matching depths") {
    ModelConfig cfg = tiny_model_cfg();
    cfg.den.blocks = 3; // but gat.layers stays 2
    CHECK_THROWS_AS(TextMotionModel::create(cfg, kGrammar.lexicon(), kVocab, 61), ConfigError);
}
