#include "fgt2m/joint_embedder.hpp"
#include "fgt2m/adam.hpp"
#include "fgt2m/binio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

namespace fgt2m {

using nlohmann::json;

Eigen::RowVectorXd motion_statistics(const Mat& motion) {
    const Eigen::Index d = motion.cols();
    Eigen::RowVectorXd stats(2 * d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double mean = motion.col(c).mean();
        const double var = (motion.col(c).array() - mean).square().mean();
        stats[c] = mean;
        stats[d + c] = std::sqrt(var);
    }
    return stats;
}

JointEmbedder JointEmbedder::create(const EmbedderConfig& cfg, const std::vector<std::string>& lexicon,
                                    const RelationVocab& vocab, std::uint64_t init_seed) {
    JointEmbedder e;
    e.cfg = cfg;
    e.vocab = vocab;
    Rng rng(init_seed);
    e.provider = EmbeddingProvider::trainable(e.params, lexicon, cfg.text_width, rng, "emb.text.table");
    GatConfig gcfg;
    gcfg.layers = 1;
    gcfg.heads = 1;
    gcfg.width = cfg.text_width;
    gcfg.edge_dim = 8;
    gcfg.upos_gains = false;
    e.gat = GatParams::create(e.params, gcfg, vocab.relation_count(), vocab.upos_count(), rng, "emb.gat");
    e.t_w1 = e.params.add("emb.text.w1", glorot_uniform(cfg.hidden, cfg.text_width, rng));
    e.t_b1 = e.params.add("emb.text.b1", Mat::Zero(1, cfg.hidden));
    e.t_w2 = e.params.add("emb.text.w2", glorot_uniform(cfg.out_dim, cfg.hidden, rng));
    e.t_b2 = e.params.add("emb.text.b2", Mat::Zero(1, cfg.out_dim));
    e.m_w1 = e.params.add("emb.motion.w1", glorot_uniform(cfg.hidden, 2 * kMotionChannels, rng));
    e.m_b1 = e.params.add("emb.motion.b1", Mat::Zero(1, cfg.hidden));
    e.m_w2 = e.params.add("emb.motion.w2", glorot_uniform(cfg.out_dim, cfg.hidden, rng));
    e.m_b2 = e.params.add("emb.motion.b2", Mat::Zero(1, cfg.out_dim));
    return e;
}

Var JointEmbedder::text_vars(Tape& tape, const ParseGraph& graph, const std::vector<int>& token_ids) const {
    Var table = tape.param(params, provider.table_param());
    Var words = tape.gather_rows(table, token_ids);
    Var encoded = gat_layer_vars(tape, words, graph, edge_feature_vars(tape, graph, gat, params), gat, 0,
                                 params);
    const int n = graph.n_nodes;
    Var bag = tape.scale(tape.matmul(tape.constant(Mat::Ones(1, n)), encoded), 1.0 / n);
    Var h = tape.gelu(tape.add_rowvec(tape.matmul_nt(bag, tape.param(params, t_w1)), tape.param(params, t_b1)));
    Var out = tape.add_rowvec(tape.matmul_nt(h, tape.param(params, t_w2)), tape.param(params, t_b2));
    return tape.normalize_rows(out);
}

Var JointEmbedder::motion_vars(Tape& tape, const Mat& motion) const {
    Var stats = tape.constant(motion_statistics(motion));
    Var h = tape.gelu(
        tape.add_rowvec(tape.matmul_nt(stats, tape.param(params, m_w1)), tape.param(params, m_b1)));
    Var out = tape.add_rowvec(tape.matmul_nt(h, tape.param(params, m_w2)), tape.param(params, m_b2));
    return tape.normalize_rows(out);
}

Eigen::RowVectorXd JointEmbedder::embed_text(const DependencyParse& parse) const {
    std::vector<int> ids;
    ids.reserve(parse.tokens.size());
    for (const auto& tok : parse.tokens) ids.push_back(provider.token_id(tok.form));
    const ParseGraph graph =
        build_graph(parse, Mat::Zero(static_cast<Eigen::Index>(ids.size()), cfg.text_width), vocab);
    Tape tape;
    return tape.val(text_vars(tape, graph, ids)).row(0);
}

Eigen::RowVectorXd JointEmbedder::embed_motion(const Mat& motion) const {
    Tape tape;
    return tape.val(motion_vars(tape, motion)).row(0);
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

JointEmbedder train_joint_embedder(const std::vector<DatasetRecord>& records, const EmbedderConfig& cfg,
                                   const RelationVocab& vocab, std::uint64_t seed,
                                   EmbedderTrainReport* report) {
    if (records.size() < 512)
        throw InputError("joint embedder training needs at least 512 records, got " +
                         std::to_string(records.size()));

    // The grammar's lexicon is recoverable from the records themselves.
    std::vector<std::string> lexicon;
    for (const auto& r : records)
        for (const auto& tok : r.parse.tokens)
            if (std::find(lexicon.begin(), lexicon.end(), tok.form) == lexicon.end())
                lexicon.push_back(tok.form);

    JointEmbedder emb = JointEmbedder::create(cfg, lexicon, vocab, derive_seed(seed, 0xe3bedd));

    // Held-out tail for the separation criterion.
    const std::size_t holdout = std::max<std::size_t>(64, records.size() / 10);
    const std::size_t n_train = records.size() - holdout;

    // Group training rows by caption so a batch never carries duplicate
    // captions (duplicates would be false negatives for the contrastive loss).
    std::map<std::string, std::vector<int>> by_caption;
    for (std::size_t i = 0; i < n_train; ++i)
        by_caption[records[i].caption].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> groups;
    groups.reserve(by_caption.size());
    for (auto& [_, rows] : by_caption) groups.push_back(std::move(rows));
    const int batch = std::min<int>(cfg.batch, static_cast<int>(groups.size()));
    if (batch < 4) throw InputError("joint embedder training needs at least 4 distinct captions");

    struct Enc {
        ParseGraph graph;
        std::vector<int> token_ids;
    };
    std::vector<Enc> encoded;
    encoded.reserve(records.size());
    for (const auto& r : records) {
        Enc e;
        for (const auto& tok : r.parse.tokens) e.token_ids.push_back(emb.provider.token_id(tok.form));
        e.graph = build_graph(r.parse, Mat::Zero(static_cast<Eigen::Index>(e.token_ids.size()), cfg.text_width),
                              vocab);
        encoded.push_back(std::move(e));
    }

    Adam adam(emb.params, {.lr = cfg.lr});
    GradBuffer grads(emb.params);
    Rng rng(derive_seed(seed, 0x7a17));
    double final_loss = 0.0;

    std::vector<int> group_order(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) group_order[i] = static_cast<int>(i);

    for (int iter = 1; iter <= cfg.iters; ++iter) {
        // sample `batch` distinct caption groups, then one row from each
        for (int k = static_cast<int>(group_order.size()) - 1; k > 0; --k)
            std::swap(group_order[static_cast<std::size_t>(k)],
                      group_order[static_cast<std::size_t>(rng.uniform_int(0, k))]);

        grads.zero();
        Tape tape(&grads);
        std::vector<Var> text_rows, motion_rows;
        for (int b = 0; b < batch; ++b) {
            const auto& rows = groups[static_cast<std::size_t>(group_order[static_cast<std::size_t>(b)])];
            const int row = rows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(rows.size()) - 1))];
            const auto& enc = encoded[static_cast<std::size_t>(row)];
            text_rows.push_back(emb.text_vars(tape, enc.graph, enc.token_ids));
            motion_rows.push_back(emb.motion_vars(tape, records[static_cast<std::size_t>(row)].motion));
        }
        Var text_mat = tape.concat_rows(text_rows);
        Var motion_mat = tape.concat_rows(motion_rows);
        Var logits = tape.scale(tape.matmul_nt(text_mat, motion_mat), 1.0 / cfg.tau);
        Var loss = tape.scale(tape.add(tape.softmax_cross_entropy_diagonal(logits),
                                       tape.softmax_cross_entropy_diagonal(tape.transpose(logits))),
                              0.5);
        tape.backward(loss);
        adam.step(emb.params, grads);
        final_loss = tape.val(loss)(0, 0);
    }

    // Separation criterion on the held-out tail.
    std::vector<double> matched, mismatched;
    Rng mm_rng(derive_seed(seed, 0x5e9a7a7e));
    for (std::size_t i = n_train; i < records.size(); ++i) {
        const auto u = emb.embed_text(records[i].parse);
        const auto v = emb.embed_motion(records[i].motion);
        matched.push_back((u - v).norm());
        // a mismatched partner with a different caption
        for (int tries = 0; tries < 64; ++tries) {
            const auto j = static_cast<std::size_t>(
                mm_rng.uniform_int(static_cast<int>(n_train), static_cast<int>(records.size()) - 1));
            if (records[j].caption == records[i].caption) continue;
            mismatched.push_back((u - emb.embed_motion(records[j].motion)).norm());
            break;
        }
    }
    EmbedderTrainReport rep;
    rep.matched_median = median_of(matched);
    rep.mismatched_median = median_of(mismatched);
    rep.final_loss = final_loss;
    if (report) *report = rep;
    if (!(rep.matched_median < rep.mismatched_median))
        throw TrainingError("joint embedder failed the separation criterion: matched median " +
                            std::to_string(rep.matched_median) + " vs mismatched median " +
                            std::to_string(rep.mismatched_median) + " after " + std::to_string(cfg.iters) +
                            " iterations");
    return emb;
}

// ---------------------------------------------------------------- persistence

namespace {
constexpr char kEmbMagic[8] = {'F', 'G', 'T', '2', 'M', 'E', 'M', 'B'};
constexpr std::uint8_t kEmbVersion = 1;
} // namespace

void save_embedder(const std::filesystem::path& path, const JointEmbedder& emb) {
    BinWriter w;
    w.raw(kEmbMagic, sizeof(kEmbMagic));
    w.scalar<std::uint8_t>(kEmbVersion);
    json cfg{{"text_width", emb.cfg.text_width}, {"hidden", emb.cfg.hidden}, {"out_dim", emb.cfg.out_dim},
             {"iters", emb.cfg.iters},           {"batch", emb.cfg.batch},   {"lr", emb.cfg.lr},
             {"tau", emb.cfg.tau}};
    w.prefixed_string(cfg.dump());
    auto write_list = [&](const std::vector<std::string>& items) {
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(items.size()));
        for (const auto& s : items) w.prefixed_string(s);
    };
    write_list(emb.vocab.relations);
    write_list(emb.vocab.upos_tags);
    std::vector<std::string> lexicon(emb.provider.ordered_tokens().begin() + 1,
                                     emb.provider.ordered_tokens().end());
    write_list(lexicon);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(emb.params.count()));
    for (int i = 0; i < emb.params.count(); ++i) {
        const Mat& v = emb.params.value(i);
        w.prefixed_string(emb.params.name(i));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(v.rows()));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(v.cols()));
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            for (Eigen::Index r = 0; r < v.rows(); ++r) w.scalar<double>(v(r, c));
    }
    atomic_write_file(path, w.bytes());
}

JointEmbedder load_embedder(const std::filesystem::path& path) {
    BinReader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kEmbMagic, sizeof(kEmbMagic)) != 0) r.fail("bad embedder magic");
    if (r.scalar<std::uint8_t>() != kEmbVersion) r.fail("unsupported embedder version");
    EmbedderConfig cfg;
    try {
        const json j = json::parse(r.prefixed_string());
        cfg.text_width = j.at("text_width").get<int>();
        cfg.hidden = j.at("hidden").get<int>();
        cfg.out_dim = j.at("out_dim").get<int>();
        cfg.iters = j.at("iters").get<int>();
        cfg.batch = j.at("batch").get<int>();
        cfg.lr = j.at("lr").get<double>();
        cfg.tau = j.at("tau").get<double>();
    } catch (const json::exception& e) {
        r.fail(std::string("invalid embedder config: ") + e.what());
    }
    auto read_list = [&] {
        const auto n = r.scalar<std::uint32_t>();
        std::vector<std::string> items;
        for (std::uint32_t i = 0; i < n; ++i) items.push_back(r.prefixed_string());
        return items;
    };
    RelationVocab vocab;
    vocab.relations = read_list();
    vocab.upos_tags = read_list();
    const auto lexicon = read_list();
    JointEmbedder emb = JointEmbedder::create(cfg, lexicon, vocab, 0);
    const auto n_params = r.scalar<std::uint32_t>();
    if (n_params != static_cast<std::uint32_t>(emb.params.count())) r.fail("embedder parameter count mismatch");
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = r.prefixed_string();
        const int id = emb.params.find(name);
        if (id < 0) r.fail("unknown embedder parameter '" + name + "'");
        Mat& v = emb.params.value(id);
        const auto rows = r.scalar<std::uint32_t>();
        const auto cols = r.scalar<std::uint32_t>();
        if (rows != static_cast<std::uint32_t>(v.rows()) || cols != static_cast<std::uint32_t>(v.cols()))
            r.fail("embedder parameter '" + name + "' shape mismatch");
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            for (Eigen::Index rr = 0; rr < v.rows(); ++rr) v(rr, c) = r.scalar<double>();
    }
    return emb;
}

} // namespace fgt2m
