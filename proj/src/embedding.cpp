#include "fgt2m/embedding.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace fgt2m {

std::vector<std::string> tokenize(const std::string& caption) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : caption) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isalnum(uc) || ch == '\'' || ch == '-') {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

EmbeddingProvider EmbeddingProvider::trainable(ParamStore& store, const std::vector<std::string>& lexicon,
                                               int dim, Rng& rng, const std::string& name) {
    EmbeddingProvider p;
    p.mode_ = EmbeddingMode::TrainableTable;
    p.dim_ = dim;
    p.ordered_tokens_.push_back("<unk>");
    p.vocab_["<unk>"] = 0;
    for (const auto& tok : lexicon) {
        if (p.vocab_.count(tok)) continue;
        p.vocab_[tok] = static_cast<int>(p.ordered_tokens_.size());
        p.ordered_tokens_.push_back(tok);
    }
    p.table_param_ = store.add(name, normal_init(static_cast<Eigen::Index>(p.ordered_tokens_.size()), dim,
                                                 1.0 / std::sqrt(static_cast<double>(dim)), rng));
    return p;
}

EmbeddingProvider EmbeddingProvider::hashed(int dim, std::uint64_t seed) {
    EmbeddingProvider p;
    p.mode_ = EmbeddingMode::Hashed;
    p.dim_ = dim;
    p.hash_buckets_ = 4096;
    p.hash_seed_ = seed;
    Rng rng(seed);
    p.fixed_table_ = normal_init(p.hash_buckets_, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
    return p;
}

EmbeddingProvider EmbeddingProvider::external_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open embedding file '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header)) throw FormatError("embedding file '" + path.string() + "' is empty");
    std::istringstream hs(header);
    long count = 0, dim = 0;
    if (!(hs >> count >> dim) || count < 1 || dim < 1)
        throw FormatError("embedding file header must be '<token_count> <dim>'");

    EmbeddingProvider p;
    p.mode_ = EmbeddingMode::ExternalFile;
    p.dim_ = static_cast<int>(dim);
    p.fixed_table_ = Mat::Zero(count + 1, dim); // row 0 reserved for UNK
    p.ordered_tokens_.push_back("<unk>");
    p.vocab_["<unk>"] = 0;
    std::string line;
    long row = 0;
    while (row < count) {
        if (!std::getline(in, line)) throw FormatError("embedding file truncated after " + std::to_string(row) + " rows");
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        for (long j = 0; j < dim; ++j) {
            double v = 0;
            if (!(ls >> v)) throw FormatError("embedding row for '" + tok + "' has fewer than " + std::to_string(dim) + " values");
            p.fixed_table_(row + 1, j) = v;
        }
        if (p.vocab_.count(tok)) throw FormatError("duplicate token '" + tok + "' in embedding file");
        p.vocab_[tok] = static_cast<int>(row + 1);
        p.ordered_tokens_.push_back(tok);
        ++row;
    }
    return p;
}

int EmbeddingProvider::token_id(const std::string& token) const {
    if (mode_ == EmbeddingMode::Hashed) {
        std::uint64_t h = hash_seed_;
        for (char c : token) h = (h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c))) * 0x100000001b3ULL;
        return static_cast<int>(h % static_cast<std::uint64_t>(hash_buckets_));
    }
    auto it = vocab_.find(token);
    return it == vocab_.end() ? 0 : it->second;
}

int EmbeddingProvider::vocab_size() const {
    if (mode_ == EmbeddingMode::Hashed) return hash_buckets_;
    return static_cast<int>(ordered_tokens_.size());
}

Eigen::RowVectorXd EmbeddingProvider::embed_token(const std::string& token, const ParamStore& store) const {
    const int id = token_id(token);
    if (mode_ == EmbeddingMode::TrainableTable) return store.value(table_param_).row(id);
    return fixed_table_.row(id);
}

EmbeddedCaption tokenize_and_embed(const std::string& caption, const EmbeddingProvider& provider,
                                   const ParamStore& store, int n_max) {
    EmbeddedCaption out;
    out.tokens = tokenize(caption);
    if (out.tokens.empty()) throw InputError("caption is empty after tokenization");
    if (static_cast<int>(out.tokens.size()) > n_max) {
        out.tokens.resize(static_cast<std::size_t>(n_max));
        out.truncated = true;
    }
    const auto n = static_cast<Eigen::Index>(out.tokens.size());
    out.embeddings.resize(n, provider.dim());
    out.token_ids.reserve(out.tokens.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& tok = out.tokens[static_cast<std::size_t>(i)];
        out.token_ids.push_back(provider.token_id(tok));
        out.embeddings.row(i) = provider.embed_token(tok, store);
    }
    return out;
}

} // namespace fgt2m
