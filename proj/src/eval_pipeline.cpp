#include "fgt2m/eval_pipeline.hpp"
#include "fgt2m/binio.hpp"

#include <algorithm>
#include <set>

namespace fgt2m {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double half_spread(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return 0.5 * (*mx - *mn);
}

Mat generate_for(const TextMotionModel& model, const HierarchicalTextFeatures& feats, int frames,
                 const NoiseSchedule& sched, std::uint64_t seed, const SampleOptions& opt) {
    Rng rng(seed);
    return sample_loop(model.denoiser_for(feats), frames, model.cfg.channels, sched, rng, opt);
}

} // namespace

std::vector<const DatasetRecord*> distinct_captions(const std::vector<DatasetRecord>& records,
                                                    int max_captions) {
    std::vector<const DatasetRecord*> out;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (seen.insert(r.caption).second) out.push_back(&r);
        if (max_captions > 0 && static_cast<int>(out.size()) >= max_captions) break;
    }
    return out;
}

EvalOutputs evaluate_model(const TextMotionModel& model, const JointEmbedder& embedder,
                           const NoiseSchedule& sched, const std::vector<DatasetRecord>& heldout,
                           const EvalConfig& cfg) {
    const auto pool = distinct_captions(heldout, cfg.max_captions);
    const int n = static_cast<int>(pool.size());
    if (n < 32) throw InputError("evaluation needs at least 32 distinct held-out captions, got " +
                                 std::to_string(n));
    const int frames = model.cfg.frames;
    const int e_dim = embedder.cfg.out_dim;

    // Text features and real-motion features are repeat-independent.
    Mat text_feats(n, e_dim), real_feats(n, e_dim);
    std::vector<HierarchicalTextFeatures> conds(static_cast<std::size_t>(n));
    parallel_for(n, cfg.exec, [&](int i) {
        const DatasetRecord& r = *pool[static_cast<std::size_t>(i)];
        conds[static_cast<std::size_t>(i)] = model.encode_parse(r.parse);
        text_feats.row(i) = embedder.embed_text(r.parse);
        real_feats.row(i) = embedder.embed_motion(r.motion);
    });
    const GaussianStats real_stats = gaussian_stats(real_feats);

    EvalOutputs out;
    std::vector<double> r2s, mmds, divs, mmods;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, 0xe7a1, static_cast<std::uint64_t>(rep));

        Mat gen_feats(n, e_dim);
        parallel_for(n, cfg.exec, [&](int i) {
            const Mat m = generate_for(model, conds[static_cast<std::size_t>(i)], frames, sched,
                                       derive_seed(rep_seed, static_cast<std::uint64_t>(i)), cfg.sample_opt);
            gen_feats.row(i) = embedder.embed_motion(m);
        });

        Mat noise_feats(n, e_dim);
        Rng noise_rng(derive_seed(rep_seed, 0x0153));
        for (int i = 0; i < n; ++i)
            noise_feats.row(i) = embedder.embed_motion(noise_rng.normal_mat(frames, model.cfg.channels));

        if (rep == 0) {
            out.text_features = text_feats;
            out.real_features = real_feats;
            out.gen_features = gen_feats;
        }
        Rng metric_rng(derive_seed(rep_seed, 0x3e7));
        const auto rp = r_precision(text_feats, gen_feats, metric_rng);
        out.r_top1.push_back(rp.top1);
        r2s.push_back(rp.top2);
        out.r_top3.push_back(rp.top3);
        out.fid_gen.push_back(fid(real_stats, gaussian_stats(gen_feats)));
        out.fid_noise.push_back(fid(real_stats, gaussian_stats(noise_feats)));
        mmds.push_back(mm_dist(text_feats, gen_feats));
        const int subset = std::min(cfg.diversity_subset, n / 2);
        divs.push_back(diversity(gen_feats, subset, metric_rng));

        if (cfg.mm_texts > 0 && cfg.mm_repeats > 1) {
            const int texts = std::min(cfg.mm_texts, n);
            std::vector<Mat> per_text(static_cast<std::size_t>(texts));
            parallel_for(texts, cfg.exec, [&](int i) {
                Mat feats(cfg.mm_repeats, e_dim);
                for (int k = 0; k < cfg.mm_repeats; ++k) {
                    const Mat m = generate_for(model, conds[static_cast<std::size_t>(i)], frames, sched,
                                               derive_seed(rep_seed, 0x4d0000 + static_cast<std::uint64_t>(i),
                                                           static_cast<std::uint64_t>(k) + 1),
                                               cfg.sample_opt);
                    feats.row(k) = embedder.embed_motion(m);
                }
                per_text[static_cast<std::size_t>(i)] = std::move(feats);
            });
            mmods.push_back(multimodality(per_text, cfg.mm_pairs, metric_rng));
        }
    }

    out.report.set("captions", n);
    out.report.set("repeats", cfg.repeats);
    out.report.set("r_top1", median_of(out.r_top1));
    out.report.set("r_top1_pm", half_spread(out.r_top1));
    out.report.set("r_top2", median_of(r2s));
    out.report.set("r_top3", median_of(out.r_top3));
    out.report.set("r_top3_pm", half_spread(out.r_top3));
    out.report.set("fid", median_of(out.fid_gen));
    out.report.set("fid_pm", half_spread(out.fid_gen));
    out.report.set("fid_noise", median_of(out.fid_noise));
    out.report.set("mm_dist", median_of(mmds));
    out.report.set("diversity", median_of(divs));
    if (!mmods.empty()) out.report.set("multimodality", median_of(mmods));
    return out;
}

EvalPoint quick_eval(const TextMotionModel& model, const JointEmbedder& embedder,
                     const NoiseSchedule& sched, const std::vector<DatasetRecord>& heldout,
                     int max_captions, std::uint64_t seed, const ExecOptions& exec) {
    EvalConfig cfg;
    cfg.seed = seed;
    cfg.repeats = 1;
    cfg.max_captions = max_captions;
    cfg.mm_texts = 0;
    cfg.exec = exec;
    const auto out = evaluate_model(model, embedder, sched, heldout, cfg);
    EvalPoint p;
    p.r_top1 = out.r_top1.front();
    p.r_top3 = out.r_top3.front();
    p.fid = out.fid_gen.front();
    return p;
}

namespace {
constexpr char kMotMagic[8] = {'F', 'G', 'T', '2', 'M', 'M', 'O', 'T'};
constexpr std::uint8_t kMotVersion = 1;
} // namespace

void save_motions(const std::filesystem::path& path, const std::vector<GeneratedMotion>& motions) {
    BinWriter w;
    w.raw(kMotMagic, sizeof(kMotMagic));
    w.scalar<std::uint8_t>(kMotVersion);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(motions.size()));
    for (const auto& m : motions) {
        w.prefixed_string(m.caption);
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(m.motion.rows()));
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(m.motion.cols()));
        for (Eigen::Index i = 0; i < m.motion.rows(); ++i)
            for (Eigen::Index j = 0; j < m.motion.cols(); ++j)
                w.scalar<float>(static_cast<float>(m.motion(i, j)));
    }
    atomic_write_file(path, w.bytes());
}

std::vector<GeneratedMotion> load_motions(const std::filesystem::path& path) {
    BinReader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMotMagic, sizeof(kMotMagic)) != 0) r.fail("bad motions magic");
    if (r.scalar<std::uint8_t>() != kMotVersion) r.fail("unsupported motions version");
    const auto count = r.scalar<std::uint32_t>();
    std::vector<GeneratedMotion> motions;
    motions.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        GeneratedMotion g;
        g.caption = r.prefixed_string();
        const auto rows = r.scalar<std::uint32_t>();
        const auto cols = r.scalar<std::uint32_t>();
        g.motion.resize(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) g.motion(i, j) = static_cast<double>(r.scalar<float>());
        motions.push_back(std::move(g));
    }
    if (!r.at_end()) r.fail("trailing bytes after last motion");
    return motions;
}

} // namespace fgt2m
