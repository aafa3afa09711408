#pragma once

#include "fgt2m/diffusion.hpp"
#include "fgt2m/joint_embedder.hpp"
#include "fgt2m/metrics.hpp"
#include "fgt2m/model.hpp"
#include "fgt2m/parallel.hpp"
#include "fgt2m/trainer.hpp"

namespace fgt2m {

struct EvalConfig {
    std::uint64_t seed = 17;
    int repeats = 5;        // seeded metric repeats
    int max_captions = 0;   // cap on distinct held-out captions (0 = all)
    int diversity_subset = 50;
    int mm_texts = 8;       // multimodality: captions…
    int mm_repeats = 32;    // …generations per caption…
    int mm_pairs = 8;       // …sampled pairs per caption
    SampleOptions sample_opt;
    ExecOptions exec;
};

struct EvalOutputs {
    MetricReport report; // medians plus half-spreads over the repeats
    // per-repeat traces for the headline metrics
    std::vector<double> r_top1, r_top3, fid_gen, fid_noise;
    // embedded features from the first repeat (rows match the caption pool)
    Mat text_features, real_features, gen_features;
};

// Generates one motion per distinct held-out caption (per repeat), embeds
// texts, real and generated motions with the joint embedder, and computes
// the metric suite. Deterministic for a fixed (seed, thread-count) pair;
// generation chains use per-caption derived seeds and are policy-invariant.
EvalOutputs evaluate_model(const TextMotionModel& model, const JointEmbedder& embedder,
                           const NoiseSchedule& sched, const std::vector<DatasetRecord>& heldout,
                           const EvalConfig& cfg);

// Small eval (R-precision and FID only) for in-training logging.
EvalPoint quick_eval(const TextMotionModel& model, const JointEmbedder& embedder,
                     const NoiseSchedule& sched, const std::vector<DatasetRecord>& heldout,
                     int max_captions, std::uint64_t seed, const ExecOptions& exec);

// Generated-motions container for the `sample` subcommand.
struct GeneratedMotion {
    std::string caption;
    Mat motion;
};
void save_motions(const std::filesystem::path& path, const std::vector<GeneratedMotion>& motions);
std::vector<GeneratedMotion> load_motions(const std::filesystem::path& path);

// Deduplicate by caption, keeping the first record of each.
std::vector<const DatasetRecord*> distinct_captions(const std::vector<DatasetRecord>& records,
                                                    int max_captions = 0);

} // namespace fgt2m
