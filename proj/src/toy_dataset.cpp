#include "fgt2m/toy_dataset.hpp"
#include "fgt2m/binio.hpp"

#include <cmath>
#include <numbers>

namespace fgt2m {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

// Adds one action's signature over the frame window [w0, w1); v is the
// action-local phase in [0, 1]. `neutral` renders the attribute-free form
// used for second actions.
void add_action(Mat& m, Action action, Direction dir, Side side, bool neutral, int w0, int w1) {
    const int span = w1 - w0;
    if (span <= 0) return;
    for (int i = w0; i < w1; ++i) {
        const double v = span == 1 ? 0.0 : static_cast<double>(i - w0) / (span - 1);
        switch (action) {
            case Action::Walk: {
                const double sign = dir == Direction::Backward ? -1.0 : 1.0;
                m(i, 0) += sign * 0.8;
                m(i, 1) += 0.10 * std::sin(kTwoPi * 2.0 * v);
                m(i, 4) += 0.08 * std::sin(kTwoPi * 8.0 * v);
                m(i, 6) += std::sin(kTwoPi * 4.0 * v);
                break;
            }
            case Action::Jump: {
                if (!neutral) {
                    const double sign = dir == Direction::Backward ? -1.0 : 1.0;
                    m(i, 0) += sign * 0.6;
                }
                m(i, 4) += 0.9 * std::max(0.0, std::sin(kTwoPi * 2.0 * v));
                m(i, 6) += std::sin(kTwoPi * 4.0 * v);
                break;
            }
            case Action::Wave: {
                const double lift = 0.9 + 0.15 * std::sin(kTwoPi * 3.0 * v);
                if (neutral) {
                    m(i, 2) += 0.6 + 0.15 * std::sin(kTwoPi * 3.0 * v);
                    m(i, 3) += 0.6 + 0.15 * std::sin(kTwoPi * 3.0 * v);
                } else if (side == Side::Left) {
                    m(i, 2) += lift;
                } else {
                    m(i, 3) += lift;
                }
                m(i, 6) += 0.3 * std::sin(kTwoPi * 3.0 * v);
                break;
            }
            case Action::Turn: {
                if (neutral) {
                    m(i, 5) += 0.7;
                } else {
                    const double sign = side == Side::Left ? 1.0 : -1.0;
                    m(i, 5) += sign * 0.8;
                    // lead arm slightly raised so the side statistic holds
                    m(i, side == Side::Left ? 2 : 3) += 0.4;
                }
                m(i, 6) += 0.2 * std::sin(kTwoPi * 2.0 * v);
                break;
            }
        }
    }
}

float to_f32(double v) { return static_cast<float>(v); }

} // namespace

Mat synth_motion(const ToyMotionSpec& spec, int frames, Rng& rng, double jitter_sigma) {
    spec.validate();
    if (frames < 16) throw ContractError("synth_motion requires at least 16 frames");

    Mat m = Mat::Zero(frames, kMotionChannels);
    if (spec.connective == Connective::Then) {
        const int half = frames / 2;
        add_action(m, spec.action, spec.direction, spec.side, false, 0, half);
        add_action(m, *spec.second_action, Direction::None, Side::None, true, half, frames);
    } else {
        add_action(m, spec.action, spec.direction, spec.side, false, 0, frames);
        if (spec.connective == Connective::While)
            add_action(m, *spec.second_action, Direction::None, Side::None, true, 0, frames);
    }

    // Step-count envelope: `count` well-separated bumps across the full clip.
    const double sigma_b = 1.0 / (8.0 * spec.count);
    for (int i = 0; i < frames; ++i) {
        const double u = static_cast<double>(i) / (frames - 1);
        double env = 0.0;
        for (int k = 1; k <= spec.count; ++k) {
            const double c = (2.0 * k - 1.0) / (2.0 * spec.count);
            env += std::exp(-0.5 * (u - c) * (u - c) / (sigma_b * sigma_b));
        }
        m(i, 7) += env;
    }

    if (jitter_sigma > 0.0) {
        for (int i = 0; i < frames; ++i)
            for (int d = 0; d < kMotionChannels; ++d) m(i, d) += jitter_sigma * rng.normal();
    }
    // Keep stored values float32-exact so file round-trips compare equal.
    for (int i = 0; i < frames; ++i)
        for (int d = 0; d < kMotionChannels; ++d) m(i, d) = static_cast<double>(to_f32(m(i, d)));
    return m;
}

std::vector<DatasetRecord> generate_dataset(const ToyGrammar& grammar, const RelationVocab& vocab,
                                            int n_records, int frames, std::uint64_t seed,
                                            double jitter_sigma, const ExecOptions& exec) {
    std::vector<DatasetRecord> records(static_cast<std::size_t>(n_records));
    parallel_for(n_records, exec, [&](int i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        DatasetRecord& r = records[static_cast<std::size_t>(i)];
        r.spec = grammar.sample_spec(rng);
        r.caption = grammar.render(r.spec);
        r.parse = grammar.parse(r.caption, vocab);
        r.motion = synth_motion(r.spec, frames, rng, jitter_sigma);
    });
    return records;
}

namespace {
constexpr char kMagic[8] = {'F', 'G', 'T', '2', 'M', 'D', 'A', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kNoSecondAction = 0xff;
} // namespace

std::string serialize_dataset(const std::vector<DatasetRecord>& records, const RelationVocab& vocab) {
    BinWriter w;
    w.raw(kMagic, sizeof(kMagic));
    w.scalar<std::uint8_t>(kVersion);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        w.prefixed_string(r.caption);
        w.prefixed_string(render_conllu(r.parse, vocab));
        w.scalar<std::uint8_t>(static_cast<std::uint8_t>(r.spec.action));
        w.scalar<std::uint8_t>(static_cast<std::uint8_t>(r.spec.direction));
        w.scalar<std::uint8_t>(static_cast<std::uint8_t>(r.spec.side));
        w.scalar<std::uint8_t>(static_cast<std::uint8_t>(r.spec.count));
        w.scalar<std::uint8_t>(static_cast<std::uint8_t>(r.spec.connective));
        w.scalar<std::uint8_t>(r.spec.second_action ? static_cast<std::uint8_t>(*r.spec.second_action)
                                                    : kNoSecondAction);
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(r.motion.rows()));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(r.motion.cols()));
        for (Eigen::Index i = 0; i < r.motion.rows(); ++i)
            for (Eigen::Index d = 0; d < r.motion.cols(); ++d)
                w.scalar<float>(static_cast<float>(r.motion(i, d)));
    }
    return w.bytes();
}

std::vector<DatasetRecord> deserialize_dataset(const std::string& bytes, const RelationVocab& vocab,
                                               const std::string& name) {
    BinReader r(bytes, name);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad dataset magic");
    const auto version = r.scalar<std::uint8_t>();
    if (version != kVersion) r.fail("unsupported dataset version " + std::to_string(version));
    const auto count = r.scalar<std::uint32_t>();

    std::vector<DatasetRecord> records;
    records.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        DatasetRecord rec;
        rec.caption = r.prefixed_string();
        const std::string conllu = r.prefixed_string();
        rec.parse = load_conllu(conllu, vocab);
        rec.spec.action = static_cast<Action>(r.scalar<std::uint8_t>());
        rec.spec.direction = static_cast<Direction>(r.scalar<std::uint8_t>());
        rec.spec.side = static_cast<Side>(r.scalar<std::uint8_t>());
        rec.spec.count = r.scalar<std::uint8_t>();
        rec.spec.connective = static_cast<Connective>(r.scalar<std::uint8_t>());
        const auto second = r.scalar<std::uint8_t>();
        if (second != kNoSecondAction) rec.spec.second_action = static_cast<Action>(second);
        rec.spec.validate();
        const auto frames = r.scalar<std::uint32_t>();
        const auto channels = r.scalar<std::uint32_t>();
        if (frames == 0 || channels == 0 || frames > (1u << 20) || channels > (1u << 10))
            r.fail("implausible motion shape " + std::to_string(frames) + "x" + std::to_string(channels));
        rec.motion.resize(frames, channels);
        for (std::uint32_t i = 0; i < frames; ++i)
            for (std::uint32_t d = 0; d < channels; ++d)
                rec.motion(i, d) = static_cast<double>(r.scalar<float>());
        records.push_back(std::move(rec));
    }
    if (!r.at_end()) r.fail("trailing bytes after last record");
    return records;
}

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records,
                  const RelationVocab& vocab) {
    atomic_write_file(path, serialize_dataset(records, vocab));
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, const RelationVocab& vocab) {
    BinReader probe(path); // loads the file; reuse its buffer through deserialize
    std::string bytes = probe.bytes(probe.size());
    return deserialize_dataset(bytes, vocab, path.string());
}

} // namespace fgt2m
