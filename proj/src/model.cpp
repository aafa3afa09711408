#include "fgt2m/model.hpp"
#include "fgt2m/binio.hpp"

#include <nlohmann/json.hpp>

namespace fgt2m {

using nlohmann::json;

TextMotionModel TextMotionModel::create(ModelConfig cfg, const std::vector<std::string>& lexicon,
                                        const RelationVocab& vocab, std::uint64_t init_seed) {
    cfg.gat.width = cfg.embed_dim;
    cfg.den.text_width = cfg.embed_dim;
    cfg.den.channels = cfg.channels;
    if (cfg.lsam_enabled && cfg.den.blocks != cfg.gat.layers)
        throw ConfigError("hierarchical conditioning requires one denoiser block per GAT layer (got " +
                          std::to_string(cfg.den.blocks) + " blocks for " + std::to_string(cfg.gat.layers) +
                          " layers)");

    TextMotionModel m;
    m.cfg = cfg;
    m.vocab = vocab;
    Rng rng(init_seed);
    m.provider = EmbeddingProvider::trainable(m.params, lexicon, cfg.embed_dim, rng);
    m.gat = GatParams::create(m.params, cfg.gat, vocab.relation_count(), vocab.upos_count(), rng);
    m.den = DenoiserParams::create(m.params, cfg.den, rng);
    return m;
}

TextMotionModel::Encoded TextMotionModel::encode_record(const DependencyParse& parse) const {
    Encoded enc;
    std::vector<std::string> forms;
    forms.reserve(parse.tokens.size());
    for (const auto& tok : parse.tokens) forms.push_back(tok.form);
    if (static_cast<int>(forms.size()) > cfg.n_max)
        throw ContractError("sentence has more tokens than n_max=" + std::to_string(cfg.n_max));
    for (const auto& f : forms) enc.token_ids.push_back(provider.token_id(f));
    // Graph node features live on the tape (gathered per forward pass);
    // store a zero placeholder of the right shape.
    enc.graph = build_graph(parse, Mat::Zero(static_cast<Eigen::Index>(forms.size()), cfg.embed_dim), vocab);
    return enc;
}

std::vector<Var> TextMotionModel::text_feature_vars(Tape& tape, const Encoded& enc,
                                                    std::vector<std::uint8_t>& mask_out) const {
    Var table = tape.param(params, provider.table_param());
    Var words = tape.gather_rows(table, enc.token_ids);
    if (cfg.lsam_enabled) {
        mask_out.assign(enc.token_ids.size(), 1);
        return gat_stack_vars(tape, enc.graph, words, gat, params);
    }
    // LSAM ablated: every block consumes the same single mean-pooled
    // sentence embedding.
    const int n = static_cast<int>(enc.token_ids.size());
    Var mean = tape.scale(tape.matmul(tape.constant(Mat::Ones(1, n)), words), 1.0 / n);
    mask_out.assign(1, 1);
    return std::vector<Var>(static_cast<std::size_t>(cfg.den.blocks), mean);
}

HierarchicalTextFeatures TextMotionModel::encode_parse(const DependencyParse& parse) const {
    const Encoded enc = encode_record(parse);
    Tape tape;
    std::vector<std::uint8_t> mask;
    auto vars = text_feature_vars(tape, enc, mask);
    std::vector<Mat> feats;
    feats.reserve(vars.size());
    for (Var v : vars) feats.push_back(tape.val(v));
    const int n_words = static_cast<int>(mask.size());
    return pad_features(feats, n_words, cfg.lsam_enabled ? cfg.n_max : n_words);
}

Mat TextMotionModel::denoise(const Mat& x_t, int t, const HierarchicalTextFeatures& feats) const {
    return denoiser_forward(x_t, t, feats, den, params);
}

DenoiserFn TextMotionModel::denoiser_for(const HierarchicalTextFeatures& feats) const {
    return [this, feats](const Mat& x_t, int t) { return denoise(x_t, t, feats); };
}

Var TextMotionModel::build_denoiser_output(Tape& tape, const Encoded& enc, const Mat& x_t, int t) const {
    std::vector<std::uint8_t> mask;
    auto feats = text_feature_vars(tape, enc, mask);
    return denoiser_forward_vars(tape, x_t, t, feats, mask, den, params);
}

Var TextMotionModel::build_loss(Tape& tape, const Encoded& enc, const Mat& x0, int t, const Mat& eps,
                                const NoiseSchedule& sched) const {
    const Mat x_t = q_sample(x0, t, eps, sched);
    Var pred = build_denoiser_output(tape, enc, x_t, t);
    return tape.mse(pred, tape.constant(x0));
}

// ------------------------------------------------------------- checkpoints

namespace {
constexpr char kCkptMagic[8] = {'F', 'G', 'T', '2', 'M', 'C', 'K', 'P'};
constexpr std::uint8_t kCkptVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"embed_dim", c.embed_dim},
                {"n_max", c.n_max},
                {"lsam_enabled", c.lsam_enabled},
                {"frames", c.frames},
                {"channels", c.channels},
                {"gat",
                 {{"layers", c.gat.layers},
                  {"heads", c.gat.heads},
                  {"edge_dim", c.gat.edge_dim},
                  {"leaky_slope", c.gat.leaky_slope},
                  {"upos_gains", c.gat.upos_gains}}},
                {"den",
                 {{"width", c.den.width},
                  {"heads", c.den.heads},
                  {"blocks", c.den.blocks},
                  {"lambda", c.den.lambda},
                  {"mlp_mult", c.den.mlp_mult},
                  {"deep_first", c.den.deep_first},
                  {"sentence_fusion_on", c.den.sentence_fusion_on},
                  {"cross_attention_on", c.den.cross_attention_on}}}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.embed_dim = j.at("embed_dim").get<int>();
    c.n_max = j.at("n_max").get<int>();
    c.lsam_enabled = j.at("lsam_enabled").get<bool>();
    c.frames = j.at("frames").get<int>();
    c.channels = j.at("channels").get<int>();
    const json& g = j.at("gat");
    c.gat.layers = g.at("layers").get<int>();
    c.gat.heads = g.at("heads").get<int>();
    c.gat.edge_dim = g.at("edge_dim").get<int>();
    c.gat.leaky_slope = g.at("leaky_slope").get<double>();
    c.gat.upos_gains = g.at("upos_gains").get<bool>();
    const json& d = j.at("den");
    c.den.width = d.at("width").get<int>();
    c.den.heads = d.at("heads").get<int>();
    c.den.blocks = d.at("blocks").get<int>();
    c.den.lambda = d.at("lambda").get<double>();
    c.den.mlp_mult = d.at("mlp_mult").get<int>();
    c.den.deep_first = d.at("deep_first").get<bool>();
    c.den.sentence_fusion_on = d.at("sentence_fusion_on").get<bool>();
    c.den.cross_attention_on = d.at("cross_attention_on").get<bool>();
    return c;
}

void write_string_list(BinWriter& w, const std::vector<std::string>& items) {
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(items.size()));
    for (const auto& s : items) w.prefixed_string(s);
}

std::vector<std::string> read_string_list(BinReader& r) {
    const auto n = r.scalar<std::uint32_t>();
    std::vector<std::string> items;
    items.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) items.push_back(r.prefixed_string());
    return items;
}
} // namespace

void save_checkpoint(const std::filesystem::path& path, const TextMotionModel& model) {
    BinWriter w;
    w.raw(kCkptMagic, sizeof(kCkptMagic));
    w.scalar<std::uint8_t>(kCkptVersion);
    w.prefixed_string(config_to_json(model.cfg).dump());
    write_string_list(w, model.vocab.relations);
    write_string_list(w, model.vocab.upos_tags);
    // Lexicon minus the reserved UNK row, in table order.
    std::vector<std::string> lexicon(model.provider.ordered_tokens().begin() + 1,
                                     model.provider.ordered_tokens().end());
    write_string_list(w, lexicon);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(model.params.count()));
    for (int i = 0; i < model.params.count(); ++i) {
        const Mat& v = model.params.value(i);
        w.prefixed_string(model.params.name(i));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(v.rows()));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(v.cols()));
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            for (Eigen::Index rr = 0; rr < v.rows(); ++rr) w.scalar<double>(v(rr, c));
    }
    atomic_write_file(path, w.bytes());
}

TextMotionModel load_checkpoint(const std::filesystem::path& path) {
    BinReader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0) r.fail("bad checkpoint magic");
    const auto version = r.scalar<std::uint8_t>();
    if (version != kCkptVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

    ModelConfig cfg;
    try {
        cfg = config_from_json(json::parse(r.prefixed_string()));
    } catch (const json::exception& e) {
        r.fail(std::string("invalid checkpoint config: ") + e.what());
    }
    RelationVocab vocab;
    vocab.relations = read_string_list(r);
    vocab.upos_tags = read_string_list(r);
    const auto lexicon = read_string_list(r);

    TextMotionModel model = TextMotionModel::create(cfg, lexicon, vocab, /*init_seed=*/0);
    const auto n_params = r.scalar<std::uint32_t>();
    if (n_params != static_cast<std::uint32_t>(model.params.count()))
        r.fail("checkpoint holds " + std::to_string(n_params) + " parameter arrays, model expects " +
               std::to_string(model.params.count()));
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = r.prefixed_string();
        const int id = model.params.find(name);
        if (id < 0) r.fail("unknown parameter '" + name + "'");
        Mat& v = model.params.value(id);
        const auto rows = r.scalar<std::uint32_t>();
        const auto cols = r.scalar<std::uint32_t>();
        if (rows != static_cast<std::uint32_t>(v.rows()) || cols != static_cast<std::uint32_t>(v.cols()))
            r.fail("parameter '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                   ", expected " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            for (Eigen::Index rr = 0; rr < v.rows(); ++rr) v(rr, c) = r.scalar<double>();
    }
    return model;
}

} // namespace fgt2m
