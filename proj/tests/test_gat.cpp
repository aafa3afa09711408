#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/gat.hpp"
#include "oracles.hpp"

using namespace fgt2m;
using fgt2m::testing::finite_difference_check;

namespace {

const RelationVocab kVocab = RelationVocab::universal();

DependencyParse chain_parse(int n) {
    // token i depends on token i+1; the last token is ROOT
    DependencyParse p;
    for (int i = 0; i < n; ++i) {
        ParsedToken tok;
        tok.form = "w" + std::to_string(i);
        tok.upos_id = kVocab.upos_id(i % 2 ? "NOUN" : "VERB");
        tok.head = i + 1 < n ? i + 1 : -1;
        tok.deprel_id = kVocab.relation_id(i + 1 < n ? (i % 2 ? "nsubj" : "obj") : "root");
        p.tokens.push_back(tok);
    }
    return p;
}

struct Fixture {
    GatConfig cfg;
    ParamStore store;
    GatParams params;
    Fixture(int layers, int width, int heads = 1, bool upos = true, std::uint64_t seed = 21)
        : params(make(layers, width, heads, upos, seed)) {}

private:
    GatParams make(int layers, int width, int heads, bool upos, std::uint64_t seed) {
        cfg.layers = layers;
        cfg.width = width;
        cfg.heads = heads;
        cfg.edge_dim = 6;
        cfg.upos_gains = upos;
        Rng rng(seed);
        return GatParams::create(store, cfg, kVocab.relation_count(), kVocab.upos_count(), rng);
    }
};

} // namespace

TEST_CASE("edge features select and scale relation embedding rows") {
    Fixture f(1, 8);
    const auto parse = chain_parse(3);
    Rng rng(2);
    const auto graph = build_graph(parse, rng.normal_mat(3, 8), kVocab);

    SUBCASE("one-hot row selection") {
        const Mat feats = edge_features(graph, f.params, f.store);
        REQUIRE(feats.rows() == static_cast<Eigen::Index>(graph.edges.size()));
        const Mat& table = f.store.value(f.params.edge_table);
        for (std::size_t e = 0; e < graph.edges.size(); ++e)
            CHECK((feats.row(static_cast<Eigen::Index>(e)) - table.row(graph.edges[e].relation_id))
                      .cwiseAbs()
                      .maxCoeff() < 1e-12); // gains start at 1
    }
    SUBCASE("zero gain zeroes its edges") {
        f.store.value(f.params.rel_gain)(kVocab.self_relation_id(), 0) = 0.0;
        const Mat feats = edge_features(graph, f.params, f.store);
        for (std::size_t e = 0; e < graph.edges.size(); ++e)
            if (graph.edges[e].relation_id == kVocab.self_relation_id())
                CHECK(feats.row(static_cast<Eigen::Index>(e)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("gain 2 doubles the embedding row") {
        const int rel = graph.edges[1].relation_id;
        f.store.value(f.params.rel_gain)(rel, 0) = 2.0;
        const Mat feats = edge_features(graph, f.params, f.store);
        const Mat& table = f.store.value(f.params.edge_table);
        CHECK((feats.row(1) - 2.0 * table.row(rel)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("isolated node: softmax over a singleton returns its transform") {
    Fixture f(1, 8);
    const auto parse = load_conllu("1\twalks\tVERB\t0\troot\n", kVocab);
    Rng rng(3);
    const Mat emb = rng.normal_mat(1, 8);
    const auto graph = build_graph(parse, emb, kVocab);
    const Mat ef = edge_features(graph, f.params, f.store);
    const Mat out = gat_layer(emb, graph, ef, f.params, 0, f.store);
    const Mat expect = emb * f.store.value(f.params.layers[0][0].theta).transpose();
    CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two identical mutually linked nodes split attention evenly") {
    Fixture f(1, 8);
    // two tokens, same form/upos, linked by one relation
    DependencyParse p;
    for (int i = 0; i < 2; ++i) {
        ParsedToken tok;
        tok.form = "same";
        tok.upos_id = kVocab.upos_id("NOUN");
        tok.head = i == 0 ? 1 : -1;
        tok.deprel_id = kVocab.relation_id(i == 0 ? "compound" : "root");
        p.tokens.push_back(tok);
    }
    Rng rng(4);
    Mat emb(2, 8);
    emb.row(0) = rng.normal_mat(1, 8);
    emb.row(1) = emb.row(0);
    // make the self-loop carry the same relation as the link so all logits tie
    const auto graph = [&] {
        auto g = build_graph(p, emb, kVocab);
        for (auto& e : g.edges) e.relation_id = kVocab.relation_id("compound");
        return g;
    }();
    const Mat ef = edge_features(graph, f.params, f.store);
    const Mat out = gat_layer(emb, graph, ef, f.params, 0, f.store);
    // α = 0.5 for both entries of each neighborhood: output is the average
    // of the two (identical) transformed features, i.e. the transform itself
    const Mat h = emb * f.store.value(f.params.layers[0][0].theta).transpose();
    CHECK((out - h).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("attention rows are stochastic on a random tree") {
    Fixture f(2, 8, /*heads=*/2);
    const auto parse = chain_parse(6);
    Rng rng(5);
    const auto graph = build_graph(parse, rng.normal_mat(6, 8), kVocab);

    // Row-stochasticity holds for any layer output expressed via the
    // attention weights; check it through a probe: for constant ones input
    // transformed by theta=I the output would be the row sums. Here we
    // instead validate the published invariant through gradients-free
    // forward reconstruction: sum of attention per receiver equals 1 within
    // 1e-6, exposed by feeding basis vectors through a single layer.
    const Mat ef = edge_features(graph, f.params, f.store);
    // Recover attention row sums: out = A·H. With H columns spanned by a
    // known invertible matrix this is overkill; simply rebuild A from the
    // layer by differencing is fragile. Use the direct route instead:
    Tape tape;
    Var nf = tape.constant(graph.node_features);
    Var layer_out = gat_layer_vars(tape, nf, graph, tape.constant(ef), f.params, 0, f.store);
    CHECK(tape.val(layer_out).allFinite());

    // The library computes softmax over the closed neighborhood; verify via
    // the public invariant that every row of exp-normalized logits sums to 1
    // by reconstructing with a hand-rolled reference on the same parameters.
    const auto& head = f.params.layers[0][0];
    const Mat h = graph.node_features * f.store.value(head.theta).transpose();
    const Mat he = ef * f.store.value(head.theta_e).transpose();
    const Eigen::VectorXd s_dst = h * f.store.value(head.w_dst);
    const Eigen::VectorXd s_src = h * f.store.value(head.w_src);
    const Eigen::VectorXd s_edge = he * f.store.value(head.w_edge);
    Mat logits = Mat::Constant(6, 6, -1e30);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto [dst, src] = std::pair{graph.edges[e].dst, graph.edges[e].src};
        double v = s_dst[dst] + s_src[src] + s_edge[static_cast<Eigen::Index>(e)];
        v = v > 0 ? v : f.cfg.leaky_slope * v;
        logits(dst, src) = v;
    }
    Mat attn(6, 6);
    for (int r = 0; r < 6; ++r) {
        Eigen::ArrayXd ex = (logits.row(r).array() - logits.row(r).maxCoeff()).exp();
        attn.row(r) = (ex / ex.sum()).matrix();
        CHECK(std::abs(attn.row(r).sum() - 1.0) < 1e-6);
    }
    // reference aggregation must match the first head's slice of the output
    const Mat expect = attn * h;
    const Mat got = tape.val(layer_out).leftCols(4);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gat gradients match finite differences on a 6-node tree") {
    Fixture f(2, 6);
    const auto parse = chain_parse(6);
    Rng rng(6);
    const Mat emb = rng.normal_mat(6, 6);
    const auto graph = build_graph(parse, emb, kVocab);
    const Mat target = rng.normal_mat(6, 6);

    auto build = [&](Tape& t) {
        Var nf = t.constant(emb);
        auto outs = gat_stack_vars(t, graph, nf, f.params, f.store);
        return t.mse(outs.back(), t.constant(target));
    };
    const auto r = finite_difference_check(f.store, build, [&] {
        std::vector<int> ids;
        for (int i = 0; i < f.store.count(); ++i) ids.push_back(i);
        return ids;
    }());
    CAPTURE(r.worst);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("stack output count and single-layer equivalence") {
    Fixture f(1, 8, 1, /*upos=*/false);
    const auto parse = chain_parse(4);
    Rng rng(7);
    const auto graph = build_graph(parse, rng.normal_mat(4, 8), kVocab);
    const auto feats = gat_stack(graph, f.params, f.store, 8);
    REQUIRE(feats.layer_features.size() == 1);
    CHECK(feats.n_words == 4);
    CHECK(feats.n_max() == 8);
    // padded rows carry zeros
    CHECK(feats.layer_features[0].bottomRows(4).cwiseAbs().maxCoeff() == 0.0);
    const Mat ef = edge_features(graph, f.params, f.store);
    const Mat single = gat_layer(graph.node_features, graph, ef, f.params, 0, f.store);
    CHECK((feats.layer_features[0].topRows(4) - single).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("receptive field grows one hop per layer on a chain") {
    Fixture f(2, 8, 1, /*upos=*/false);
    const auto parse = chain_parse(5); // chain a-b-c-d-e
    Rng rng(8);
    const Mat emb = rng.normal_mat(5, 8);
    Mat emb2 = emb;
    emb2.row(4) += Mat::Ones(1, 8); // perturb the far end

    const auto g1 = build_graph(parse, emb, kVocab);
    const auto g2 = build_graph(parse, emb2, kVocab);
    const auto f1 = gat_stack(g1, f.params, f.store, 5);
    const auto f2 = gat_stack(g2, f.params, f.store, 5);

    // layer 1 at node 0 sees only {0,1}: unchanged (exactly)
    CHECK((f1.layer_features[0].row(0) - f2.layer_features[0].row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((f1.layer_features[0].row(1) - f2.layer_features[0].row(1)).cwiseAbs().maxCoeff() == 0.0);
    // node 3 is adjacent to 4: changed at layer 1
    CHECK((f1.layer_features[0].row(3) - f2.layer_features[0].row(3)).cwiseAbs().maxCoeff() > 1e-8);
    // layer 2 at node 0 still outside the 2-hop ball of node 4: unchanged
    CHECK((f1.layer_features[1].row(0) - f2.layer_features[1].row(0)).cwiseAbs().maxCoeff() == 0.0);
    // layer 2 at node 2 is within two hops of node 4: changed
    CHECK((f1.layer_features[1].row(2) - f2.layer_features[1].row(2)).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("permutation equivariance of the full stack") {
    Fixture f(3, 8);
    const auto parse = chain_parse(6);
    Rng rng(9);
    const Mat emb = rng.normal_mat(6, 8);
    const std::vector<int> p = {3, 0, 5, 1, 4, 2};

    DependencyParse permuted;
    permuted.tokens.resize(6);
    for (int i = 0; i < 6; ++i) {
        ParsedToken tok = parse.tokens[static_cast<std::size_t>(i)];
        tok.head = tok.head < 0 ? -1 : p[static_cast<std::size_t>(tok.head)];
        permuted.tokens[static_cast<std::size_t>(p[static_cast<std::size_t>(i)])] = tok;
    }
    Mat emb_p(6, 8);
    for (int i = 0; i < 6; ++i) emb_p.row(p[static_cast<std::size_t>(i)]) = emb.row(i);

    const auto feats = gat_stack(build_graph(parse, emb, kVocab), f.params, f.store, 6);
    const auto feats_p = gat_stack(build_graph(permuted, emb_p, kVocab), f.params, f.store, 6);
    for (std::size_t l = 0; l < feats.layer_features.size(); ++l)
        for (int i = 0; i < 6; ++i)
            CHECK((feats.layer_features[l].row(i) -
                   feats_p.layer_features[l].row(p[static_cast<std::size_t>(i)]))
                      .cwiseAbs()
                      .maxCoeff() < 1e-5);
}

TEST_CASE("upos gains scale input features before layer 1") {
    Fixture f(1, 8, 1, /*upos=*/true);
    const auto parse = chain_parse(3);
    Rng rng(10);
    const Mat emb = rng.normal_mat(3, 8);
    const auto graph = build_graph(parse, emb, kVocab);

    // doubling every UPOS gain must equal doubling the input features
    auto& gains = f.store.value(f.params.upos_gain);
    const auto base = gat_stack(graph, f.params, f.store, 4);
    gains *= 2.0;
    const auto scaled = gat_stack(graph, f.params, f.store, 4);
    gains /= 2.0;
    const auto doubled_in = gat_stack(build_graph(parse, (2.0 * emb).eval(), kVocab), f.params, f.store, 4);
    CHECK((scaled.layer_features[0] - doubled_in.layer_features[0]).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((base.layer_features[0] - scaled.layer_features[0]).cwiseAbs().maxCoeff() > 1e-8);
}
