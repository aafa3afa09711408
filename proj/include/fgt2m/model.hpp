#pragma once

#include "fgt2m/capr.hpp"
#include "fgt2m/diffusion.hpp"
#include "fgt2m/embedding.hpp"
#include "fgt2m/gat.hpp"
#include "fgt2m/toy_grammar.hpp"

#include <filesystem>

namespace fgt2m {

struct ModelConfig {
    int embed_dim = 64; // word embedding width L (equals the GAT width)
    int n_max = 16;     // padded word positions
    GatConfig gat;      // gat.width is forced to embed_dim
    bool lsam_enabled = true; // off = single repeated sentence embedding
    DenoiserConfig den;
    int frames = 64;
    int channels = 8;
};

// Text encoder + motion denoiser with one shared parameter store.
class TextMotionModel {
public:
    static TextMotionModel create(ModelConfig cfg, const std::vector<std::string>& lexicon,
                                  const RelationVocab& vocab, std::uint64_t init_seed);

    // --- inference path (no gradients) ---
    HierarchicalTextFeatures encode_parse(const DependencyParse& parse) const;
    Mat denoise(const Mat& x_t, int t, const HierarchicalTextFeatures& feats) const;
    DenoiserFn denoiser_for(const HierarchicalTextFeatures& feats) const;

    // --- training path ---
    struct Encoded {
        ParseGraph graph;          // topology + upos; node features unused on the tape
        std::vector<int> token_ids;
    };
    Encoded encode_record(const DependencyParse& parse) const;
    // x̂₀ prediction with gradients flowing through the GAT and embeddings.
    Var build_denoiser_output(Tape& tape, const Encoded& enc, const Mat& x_t, int t) const;
    // Eq.-5 style x₀-prediction loss on one record.
    Var build_loss(Tape& tape, const Encoded& enc, const Mat& x0, int t, const Mat& eps,
                   const NoiseSchedule& sched) const;

    ModelConfig cfg;
    RelationVocab vocab;
    ParamStore params;
    EmbeddingProvider provider;
    GatParams gat;
    DenoiserParams den;

private:
    std::vector<Var> text_feature_vars(Tape& tape, const Encoded& enc,
                                       std::vector<std::uint8_t>& mask_out) const;
};

void save_checkpoint(const std::filesystem::path& path, const TextMotionModel& model);
TextMotionModel load_checkpoint(const std::filesystem::path& path);

} // namespace fgt2m
