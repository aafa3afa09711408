#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/joint_embedder.hpp"
#include "fgt2m/metrics.hpp"

#include <filesystem>

using namespace fgt2m;

namespace {
const RelationVocab kVocab = RelationVocab::universal();
const ToyGrammar kGrammar = ToyGrammar::standard();

std::vector<DatasetRecord> corpus(int n, std::uint64_t seed) {
    return generate_dataset(kGrammar, kVocab, n, 64, seed, 0.05, {ExecPolicy::Serial, 0});
}

EmbedderConfig quick_cfg() {
    EmbedderConfig cfg;
    cfg.iters = 220;
    cfg.batch = 48;
    return cfg;
}
} // namespace

TEST_CASE("motion statistics carry per-channel mean and std") {
    Mat m(4, 8);
    m.setZero();
    m.col(0) << 1, 1, 1, 1;
    m.col(2) << 0, 2, 0, 2;
    const auto stats = motion_statistics(m);
    REQUIRE(stats.size() == 16);
    CHECK(stats[0] == doctest::Approx(1.0));
    CHECK(stats[8] == doctest::Approx(0.0));  // std of a constant channel
    CHECK(stats[2] == doctest::Approx(1.0));  // mean of 0,2,0,2
    CHECK(stats[10] == doctest::Approx(1.0)); // population std of 0,2,0,2
}

TEST_CASE("untrained embedder retrieves at chance level") {
    const auto records = corpus(640, 3);
    const auto emb = JointEmbedder::create(quick_cfg(), kGrammar.lexicon(), kVocab, 5);

    const auto pool = [&] {
        std::vector<const DatasetRecord*> out;
        std::set<std::string> seen;
        for (const auto& r : records)
            if (seen.insert(r.caption).second) out.push_back(&r);
        return out;
    }();
    const int n = static_cast<int>(pool.size());
    REQUIRE(n >= 64);
    Mat text(n, emb.cfg.out_dim), motion(n, emb.cfg.out_dim);
    for (int i = 0; i < n; ++i) {
        text.row(i) = emb.embed_text(pool[static_cast<std::size_t>(i)]->parse);
        motion.row(i) = emb.embed_motion(pool[static_cast<std::size_t>(i)]->motion);
    }
    Rng rng(7);
    const auto r = r_precision(text, motion, rng);
    const double p = 1.0 / 32.0;
    const double se = std::sqrt(p * (1 - p) / n);
    // random-projection features are not literally independent; allow a
    // generous band around chance
    CHECK(r.top1 < p + 6.0 * se + 0.05);
}

TEST_CASE("trained embedder separates matched from mismatched pairs") {
    const auto records = corpus(768, 11);
    EmbedderTrainReport report;
    const auto emb = train_joint_embedder(records, quick_cfg(), kVocab, 13, &report);
    CHECK(report.matched_median < report.mismatched_median);

    // and the separation is visible on fresh data
    const auto fresh = corpus(64, 99);
    double matched = 0.0, mismatched = 0.0;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        const auto u = emb.embed_text(fresh[i].parse);
        matched += (u - emb.embed_motion(fresh[i].motion)).norm();
        mismatched += (u - emb.embed_motion(fresh[(i + 7) % fresh.size()].motion)).norm();
    }
    CHECK(matched < mismatched);
}

TEST_CASE("embedder training is deterministic under a fixed seed") {
    const auto records = corpus(640, 17);
    EmbedderConfig cfg = quick_cfg();
    cfg.iters = 60;
    const auto a = train_joint_embedder(records, cfg, kVocab, 19);
    const auto b = train_joint_embedder(records, cfg, kVocab, 19);
    REQUIRE(a.params.count() == b.params.count());
    for (int i = 0; i < a.params.count(); ++i)
        CHECK((a.params.value(i) - b.params.value(i)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("too-small corpora are rejected") {
    const auto records = corpus(100, 23);
    CHECK_THROWS_AS(train_joint_embedder(records, quick_cfg(), kVocab, 29), InputError);
}

TEST_CASE("embedder checkpoints round-trip") {
    namespace fs = std::filesystem;
    const auto records = corpus(640, 31);
    EmbedderConfig cfg = quick_cfg();
    cfg.iters = 60;
    const auto emb = train_joint_embedder(records, cfg, kVocab, 37);
    const auto dir = fs::temp_directory_path() / "fgt2m_emb_ckpt";
    fs::create_directories(dir);
    save_embedder(dir / "e.bin", emb);
    const auto loaded = load_embedder(dir / "e.bin");
    const auto u1 = emb.embed_text(records[0].parse);
    const auto u2 = loaded.embed_text(records[0].parse);
    CHECK((u1 - u2).cwiseAbs().maxCoeff() == 0.0);
    const auto v1 = emb.embed_motion(records[0].motion);
    const auto v2 = loaded.embed_motion(records[0].motion);
    CHECK((v1 - v2).cwiseAbs().maxCoeff() == 0.0);
    fs::remove_all(dir);
}
