#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/parse_graph.hpp"
#include "fgt2m/rng.hpp"

#include <filesystem>

using namespace fgt2m;
using Mat = Eigen::MatrixXd;

namespace {
const RelationVocab kVocab = RelationVocab::universal();
}

TEST_CASE("three-token sentence maps fields directly") {
    const std::string text = "1\ta\tDET\t3\tdet\n"
                             "2\tperson\tNOUN\t3\tnsubj\n"
                             "3\twalks\tVERB\t0\troot\n";
    const auto parse = load_conllu(text, kVocab);
    REQUIRE(parse.size() == 3);
    CHECK(parse.tokens[0].form == "a");
    CHECK(parse.tokens[0].head == 2);
    CHECK(parse.tokens[1].head == 2);
    CHECK(parse.tokens[2].head == -1);
    CHECK(parse.root_index() == 2);
    CHECK(parse.tokens[2].deprel_id == kVocab.relation_id("root"));
    CHECK(parse.tokens[0].upos_id == kVocab.upos_id("DET"));
    CHECK(render_conllu(parse, kVocab) == text);
}

TEST_CASE("head cycles are rejected") {
    const std::string text = "1\tx\tNOUN\t2\tdep\n"
                             "2\ty\tNOUN\t1\tdep\n"
                             "3\tz\tVERB\t0\troot\n";
    CHECK_THROWS_AS(load_conllu(text, kVocab), MalformedParseError);
}

TEST_CASE("multiple or missing roots are rejected") {
    CHECK_THROWS_AS(load_conllu("1\tx\tVERB\t0\troot\n2\ty\tVERB\t0\troot\n", kVocab),
                    MalformedParseError);
    CHECK_THROWS_AS(load_conllu("1\tx\tVERB\t2\tdep\n2\ty\tVERB\t1\tdep\n", kVocab),
                    MalformedParseError);
}

TEST_CASE("format errors") {
    CHECK_THROWS_AS(load_conllu("1\tonly\tthree\n", kVocab), FormatError);
    CHECK_THROWS_AS(load_conllu("", kVocab), FormatError);
    CHECK_THROWS_AS(load_conllu("2\tx\tVERB\t0\troot\n", kVocab), FormatError); // IDs must start at 1
    CHECK_THROWS_AS(load_conllu("1\tx\tVERB\tzz\troot\n", kVocab), FormatError);
}

TEST_CASE("unknown labels fall back to UNK") {
    const auto parse = load_conllu("1\tblorp\tZZZ\t0\tzzz\n", kVocab);
    CHECK(parse.tokens[0].upos_id == kVocab.unk_upos_id());
    CHECK(parse.tokens[0].deprel_id == kVocab.unk_relation_id());
}

TEST_CASE("only the first sentence block is read") {
    const std::string text = "# caption: one\n"
                             "1\tx\tVERB\t0\troot\n"
                             "\n"
                             "1\ty\tVERB\t0\troot\n";
    const auto parse = load_conllu(text, kVocab);
    CHECK(parse.size() == 1);
    CHECK(parse.tokens[0].form == "x");
}

TEST_CASE("vocabulary files round-trip and keep reserved labels") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fgt2m_vocab_test";
    fs::create_directories(dir);
    kVocab.save(dir / "relations.txt", dir / "upos.txt");
    const auto loaded = RelationVocab::load(dir / "relations.txt", dir / "upos.txt");
    CHECK(loaded.relations == kVocab.relations);
    CHECK(loaded.upos_tags == kVocab.upos_tags);
    CHECK(loaded.relation_id("SELF") == loaded.self_relation_id());
    fs::remove_all(dir);
}

TEST_CASE("build_graph symmetrizes edges and adds SELF loops") {
    const auto parse = load_conllu("1\ta\tDET\t3\tdet\n"
                                   "2\tperson\tNOUN\t3\tnsubj\n"
                                   "3\twalks\tVERB\t0\troot\n",
                                   kVocab);
    Rng rng(4);
    const Mat emb = rng.normal_mat(3, 5);
    const auto g = build_graph(parse, emb, kVocab);

    CHECK(g.n_nodes == 3);
    CHECK(g.node_features == emb);
    CHECK(g.edges.size() == 7); // 2 tree edges both ways + 3 self-loops
    int self_loops = 0, directed = 0;
    for (const auto& e : g.edges) {
        if (e.dst == e.src) {
            ++self_loops;
            CHECK(e.relation_id == kVocab.self_relation_id());
        } else {
            ++directed;
        }
    }
    CHECK(self_loops == 3);
    CHECK(directed == 4);
    for (int i = 0; i < 3; ++i) CHECK(g.adjacent(i, i));
    CHECK(g.adjacent(0, 2));
    CHECK(g.adjacent(2, 0));
    CHECK_FALSE(g.adjacent(0, 1)); // "a" and "person" are not linked
}

TEST_CASE("single-token sentence yields a pure self-loop graph") {
    const auto parse = load_conllu("1\twalks\tVERB\t0\troot\n", kVocab);
    const auto g = build_graph(parse, Mat::Zero(1, 4), kVocab);
    CHECK(g.n_nodes == 1);
    CHECK(g.edges.size() == 1);
    CHECK(g.edges[0].relation_id == kVocab.self_relation_id());
    CHECK(g.adjacent(0, 0));
}

TEST_CASE("embedding row count must match tokens") {
    const auto parse = load_conllu("1\twalks\tVERB\t0\troot\n", kVocab);
    CHECK_THROWS_AS(build_graph(parse, Mat::Zero(2, 4), kVocab), ContractError);
}

TEST_CASE("permuting tokens with remapped heads gives an isomorphic graph") {
    const std::string text = "1\ta\tDET\t3\tdet\n"
                             "2\tperson\tNOUN\t3\tnsubj\n"
                             "3\twalks\tVERB\t0\troot\n"
                             "4\tforward\tADV\t3\tadvmod\n";
    const auto parse = load_conllu(text, kVocab);
    // permutation p maps old index -> new index
    const std::vector<int> p = {2, 0, 3, 1};
    DependencyParse permuted;
    permuted.tokens.resize(4);
    for (int i = 0; i < 4; ++i) {
        ParsedToken tok = parse.tokens[static_cast<std::size_t>(i)];
        tok.head = tok.head < 0 ? -1 : p[static_cast<std::size_t>(tok.head)];
        permuted.tokens[static_cast<std::size_t>(p[static_cast<std::size_t>(i)])] = tok;
    }
    Rng rng(11);
    const Mat emb = rng.normal_mat(4, 6);
    Mat emb_p(4, 6);
    for (int i = 0; i < 4; ++i) emb_p.row(p[static_cast<std::size_t>(i)]) = emb.row(i);

    const auto g = build_graph(parse, emb, kVocab);
    const auto gp = build_graph(permuted, emb_p, kVocab);
    for (int i = 0; i < 4; ++i) {
        CHECK(gp.upos_ids[static_cast<std::size_t>(p[static_cast<std::size_t>(i)])] ==
              g.upos_ids[static_cast<std::size_t>(i)]);
        for (int j = 0; j < 4; ++j)
            CHECK(gp.adjacent(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]) ==
                  g.adjacent(i, j));
    }
}
