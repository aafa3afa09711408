#pragma once

#include "fgt2m/autodiff.hpp"
#include "fgt2m/rng.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace fgt2m {

enum class EmbeddingMode { TrainableTable, Hashed, ExternalFile };

// Lowercased whitespace/punctuation tokenization; the toy grammar controls
// the lexicon so no subword machinery is needed.
std::vector<std::string> tokenize(const std::string& caption);

// Pluggable word-embedding source. Trainable mode owns a ParamStore table
// (row 0 = UNK); hashed mode derives a fixed pseudo-random row per token;
// external-file mode loads a token→vector table from disk.
class EmbeddingProvider {
public:
    static EmbeddingProvider trainable(ParamStore& store, const std::vector<std::string>& lexicon,
                                       int dim, Rng& rng, const std::string& name = "text.table");
    static EmbeddingProvider hashed(int dim, std::uint64_t seed = 0x5eedULL);
    static EmbeddingProvider external_file(const std::filesystem::path& path);

    EmbeddingMode mode() const { return mode_; }
    int dim() const { return dim_; }
    int table_param() const { return table_param_; }

    // Token row index. Trainable/external fall back to UNK; hashed maps to
    // a deterministic bucket.
    int token_id(const std::string& token) const;
    Eigen::RowVectorXd embed_token(const std::string& token, const ParamStore& store) const;
    int vocab_size() const;
    const std::vector<std::string>& ordered_tokens() const { return ordered_tokens_; }

    // Fixed table for hashed/external modes (unused in trainable mode).
    const Mat& fixed_table() const { return fixed_table_; }

private:
    EmbeddingMode mode_ = EmbeddingMode::TrainableTable;
    int dim_ = 0;
    int table_param_ = -1;
    std::unordered_map<std::string, int> vocab_;
    std::vector<std::string> ordered_tokens_;
    Mat fixed_table_;
    int hash_buckets_ = 0;
    std::uint64_t hash_seed_ = 0;
};

struct EmbeddedCaption {
    std::vector<std::string> tokens;
    std::vector<int> token_ids;
    Mat embeddings; // N × dim
    bool truncated = false;
};

// Tokenize, map to ids, and materialize the embedding rows. Captions longer
// than n_max are truncated with the flag set so callers can warn.
EmbeddedCaption tokenize_and_embed(const std::string& caption, const EmbeddingProvider& provider,
                                   const ParamStore& store, int n_max);

} // namespace fgt2m
