#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/binio.hpp"
#include "fgt2m/toy_dataset.hpp"
#include "oracles.hpp"

#include <filesystem>

using namespace fgt2m;
using namespace fgt2m::testing;

namespace {
const RelationVocab kVocab = RelationVocab::universal();
const ToyGrammar kGrammar = ToyGrammar::standard();

ToyMotionSpec make_spec(Action a, Direction d, Side s, int count,
                        Connective c = Connective::None, std::optional<Action> second = {}) {
    ToyMotionSpec spec;
    spec.action = a;
    spec.direction = d;
    spec.side = s;
    spec.count = count;
    spec.connective = c;
    spec.second_action = second;
    return spec;
}
} // namespace

TEST_CASE("channel statistics encode the attributes by construction") {
    Rng rng(1);
    SUBCASE("forward walk has positive mean forward velocity") {
        const Mat m = synth_motion(make_spec(Action::Walk, Direction::Forward, Side::None, 1), 64, rng);
        CHECK(m.col(0).mean() > 0.15);
    }
    SUBCASE("backward jump has negative mean forward velocity") {
        const Mat m = synth_motion(make_spec(Action::Jump, Direction::Backward, Side::None, 2), 64, rng);
        CHECK(m.col(0).mean() < -0.15);
    }
    SUBCASE("left wave raises the left arm above the right") {
        const Mat m = synth_motion(make_spec(Action::Wave, Direction::None, Side::Left, 1), 64, rng);
        CHECK(m.col(2).mean() > m.col(3).mean());
    }
    SUBCASE("right turn raises the right lead arm") {
        const Mat m = synth_motion(make_spec(Action::Turn, Direction::None, Side::Right, 1), 64, rng);
        CHECK(m.col(3).mean() > m.col(2).mean());
        CHECK(m.col(5).mean() < 0.0);
    }
}

TEST_CASE("noiseless envelope peak counts match the oracle exactly") {
    Rng rng(2);
    for (int count = 1; count <= 4; ++count) {
        const Mat m =
            synth_motion(make_spec(Action::Jump, Direction::Forward, Side::None, count), 64, rng,
                         /*jitter_sigma=*/0.0);
        CHECK(count_peaks(m.col(7)) == count);
    }
    // the 'then' form keeps the envelope global
    const Mat m = synth_motion(make_spec(Action::Walk, Direction::Forward, Side::None, 3,
                                         Connective::Then, Action::Wave),
                               64, rng, 0.0);
    CHECK(count_peaks(m.col(7)) == 3);
}

TEST_CASE("while overlaps signatures, then splits halves") {
    Rng rng(3);
    const auto spec_while = make_spec(Action::Walk, Direction::Forward, Side::None, 1,
                                      Connective::While, Action::Wave);
    const Mat mw = synth_motion(spec_while, 64, rng, 0.0);
    // overlapped: both arms raised across the whole clip and walking throughout
    CHECK(mw.col(0).mean() > 0.5);
    CHECK(mw.topRows(32).col(2).mean() > 0.3);
    CHECK(mw.bottomRows(32).col(2).mean() > 0.3);

    const auto spec_then = make_spec(Action::Walk, Direction::Forward, Side::None, 1,
                                     Connective::Then, Action::Wave);
    const Mat mt = synth_motion(spec_then, 64, rng, 0.0);
    // sequential: walking only in the first half, waving only in the second
    CHECK(mt.topRows(32).col(0).mean() > 0.5);
    CHECK(mt.bottomRows(32).col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(mt.topRows(32).col(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(mt.bottomRows(32).col(2).mean() > 0.3);
}

TEST_CASE("synth_motion validates inputs") {
    Rng rng(4);
    CHECK_THROWS_AS(synth_motion(make_spec(Action::Walk, Direction::Forward, Side::None, 1), 8, rng),
                    ContractError);
    ToyMotionSpec bad = make_spec(Action::Walk, Direction::Forward, Side::None, 9);
    CHECK_THROWS_AS(synth_motion(bad, 64, rng), ContractError);
}

TEST_CASE("decision stumps recover labels") {
    SUBCASE("100% on noiseless motions") {
        Rng rng(5);
        for (const auto& spec : kGrammar.all_specs()) {
            const Mat m = synth_motion(spec, 64, rng, 0.0);
            CHECK(stump_direction(m) == spec.direction);
            CHECK(stump_side(m) == spec.side);
            CHECK(stump_count(m) == spec.count);
        }
    }
    SUBCASE("at least 99% with jitter") {
        Rng rng(6);
        int total = 0, correct = 0;
        for (int rep = 0; rep < 52; ++rep) { // 52 × 192 specs ≈ 10k motions
            for (const auto& spec : kGrammar.all_specs()) {
                const Mat m = synth_motion(spec, 64, rng, 0.05);
                const bool ok = stump_direction(m) == spec.direction &&
                                stump_side(m) == spec.side && stump_count(m) == spec.count;
                ++total;
                correct += ok ? 1 : 0;
            }
        }
        CHECK(static_cast<double>(correct) / total >= 0.99);
    }
}

TEST_CASE("generation is reproducible and policy-invariant") {
    const auto a = generate_dataset(kGrammar, kVocab, 64, 64, 42, 0.05, {ExecPolicy::Serial, 0});
    const auto b = generate_dataset(kGrammar, kVocab, 64, 64, 42, 0.05, {ExecPolicy::OpenMP, 3});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].caption == b[i].caption);
        CHECK((a[i].motion - b[i].motion).cwiseAbs().maxCoeff() == 0.0); // byte-identical
    }
    const auto c = generate_dataset(kGrammar, kVocab, 64, 64, 43, 0.05, {ExecPolicy::Serial, 0});
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].caption != c[i].caption;
    CHECK(any_diff); // a different seed changes the draw
}

TEST_CASE("dataset file round-trip is lossless") {
    const auto records = generate_dataset(kGrammar, kVocab, 100, 64, 7, 0.05, {ExecPolicy::Serial, 0});
    const std::string bytes = serialize_dataset(records, kVocab);
    const auto loaded = deserialize_dataset(bytes, kVocab);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].caption == records[i].caption);
        CHECK(loaded[i].spec == records[i].spec);
        REQUIRE(loaded[i].parse.size() == records[i].parse.size());
        for (int k = 0; k < records[i].parse.size(); ++k) {
            CHECK(loaded[i].parse.tokens[static_cast<std::size_t>(k)].form ==
                  records[i].parse.tokens[static_cast<std::size_t>(k)].form);
            CHECK(loaded[i].parse.tokens[static_cast<std::size_t>(k)].head ==
                  records[i].parse.tokens[static_cast<std::size_t>(k)].head);
        }
        // motions were float32-quantized at generation: exact equality
        CHECK((loaded[i].motion - records[i].motion).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("empty dataset round-trips with count zero") {
    const std::string bytes = serialize_dataset({}, kVocab);
    CHECK(deserialize_dataset(bytes, kVocab).empty());
}

TEST_CASE("truncated files fail with a byte offset and return nothing") {
    const auto records = generate_dataset(kGrammar, kVocab, 3, 64, 9, 0.05, {ExecPolicy::Serial, 0});
    const std::string bytes = serialize_dataset(records, kVocab);
    const std::string cut = bytes.substr(0, bytes.size() / 2);
    try {
        deserialize_dataset(cut, kVocab);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
    // corrupt magic
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(deserialize_dataset(bad, kVocab), FormatError);
    // trailing garbage
    CHECK_THROWS_AS(deserialize_dataset(bytes + "zz", kVocab), FormatError);
}

TEST_CASE("save_dataset leaves no partial files behind") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fgt2m_ds_test";
    fs::create_directories(dir);
    const auto records = generate_dataset(kGrammar, kVocab, 5, 64, 3, 0.05, {ExecPolicy::Serial, 0});
    save_dataset(dir / "data.bin", records, kVocab);
    CHECK(fs::exists(dir / "data.bin"));
    CHECK_FALSE(fs::exists(dir / "data.bin.tmp"));
    const auto loaded = load_dataset(dir / "data.bin", kVocab);
    CHECK(loaded.size() == 5);
    fs::remove_all(dir);
}
