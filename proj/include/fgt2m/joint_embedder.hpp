#pragma once

#include "fgt2m/embedding.hpp"
#include "fgt2m/gat.hpp"
#include "fgt2m/toy_dataset.hpp"

#include <filesystem>

namespace fgt2m {

struct EmbedderConfig {
    int text_width = 32; // embedder-side embedding / GAT width
    int hidden = 64;
    int out_dim = 32; // shared metric space width E
    int iters = 600;
    int batch = 64;
    double lr = 1e-3;
    double tau = 0.07; // contrastive temperature
};

// Paired text/motion encoders mapping into one L2-normalized metric space.
// The text side runs its own single-layer GAT over the dependency parse; the
// motion side encodes per-channel temporal mean+std statistics. Trained with
// a symmetric contrastive objective over in-batch pairs.
class JointEmbedder {
public:
    static JointEmbedder create(const EmbedderConfig& cfg, const std::vector<std::string>& lexicon,
                                const RelationVocab& vocab, std::uint64_t init_seed);

    Eigen::RowVectorXd embed_text(const DependencyParse& parse) const;
    Eigen::RowVectorXd embed_motion(const Mat& motion) const;

    EmbedderConfig cfg;
    RelationVocab vocab;
    ParamStore params;
    EmbeddingProvider provider;
    GatParams gat;
    int t_w1 = -1, t_b1 = -1, t_w2 = -1, t_b2 = -1; // text MLP
    int m_w1 = -1, m_b1 = -1, m_w2 = -1, m_b2 = -1; // motion MLP

    Var text_vars(Tape& tape, const ParseGraph& graph, const std::vector<int>& token_ids) const;
    Var motion_vars(Tape& tape, const Mat& motion) const;
};

// Per-channel temporal mean and population standard deviation (1 × 2D).
Eigen::RowVectorXd motion_statistics(const Mat& motion);

struct EmbedderTrainReport {
    double matched_median = 0.0;
    double mismatched_median = 0.0;
    double final_loss = 0.0;
};

// Trains until `cfg.iters` and verifies the held-out separation criterion
// (matched-pair median distance < mismatched median). Throws TrainingError
// with both medians in the message when the criterion is unmet. Requires at
// least 512 records. Deterministic given the seed (single-threaded).
JointEmbedder train_joint_embedder(const std::vector<DatasetRecord>& records, const EmbedderConfig& cfg,
                                   const RelationVocab& vocab, std::uint64_t seed,
                                   EmbedderTrainReport* report = nullptr);

void save_embedder(const std::filesystem::path& path, const JointEmbedder& embedder);
JointEmbedder load_embedder(const std::filesystem::path& path);

} // namespace fgt2m
