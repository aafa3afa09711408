#pragma once

#include "fgt2m/parallel.hpp"
#include "fgt2m/toy_grammar.hpp"

#include <Eigen/Core>
#include <filesystem>

namespace fgt2m {

using Mat = Eigen::MatrixXd;

// Channel layout of synthesized motions:
//   0 root forward velocity   (sign encodes direction)
//   1 lateral velocity
//   2 left-arm elevation      (argmax of 2 vs 3 encodes side)
//   3 right-arm elevation
//   4 vertical displacement
//   5 heading rate
//   6 phase sinusoid
//   7 step-count envelope     (peak count encodes count)
inline constexpr int kMotionChannels = 8;

struct DatasetRecord {
    std::string caption;
    DependencyParse parse;
    Mat motion; // frames × kMotionChannels, float32-exact values
    ToyMotionSpec spec;
};

// Deterministic attribute-bearing signature plus Gaussian jitter; values are
// quantized to float32 so dataset round-trips are bit-exact.
Mat synth_motion(const ToyMotionSpec& spec, int frames, Rng& rng, double jitter_sigma = 0.05);

// Per-record seeds derive from (seed, index), so output is byte-identical
// under any execution policy or thread count.
std::vector<DatasetRecord> generate_dataset(const ToyGrammar& grammar, const RelationVocab& vocab,
                                            int n_records, int frames, std::uint64_t seed,
                                            double jitter_sigma = 0.05, const ExecOptions& exec = {});

std::string serialize_dataset(const std::vector<DatasetRecord>& records, const RelationVocab& vocab);
std::vector<DatasetRecord> deserialize_dataset(const std::string& bytes, const RelationVocab& vocab,
                                               const std::string& name = "<memory>");

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records,
                  const RelationVocab& vocab);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, const RelationVocab& vocab);

} // namespace fgt2m
