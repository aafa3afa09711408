#pragma once

#include "fgt2m/errors.hpp"
#include "fgt2m/rng.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace fgt2m {

using Mat = Eigen::MatrixXd;

// Gaussian fit of a feature set (unbiased covariance).
struct GaussianStats {
    Eigen::VectorXd mean;
    Mat covariance;
};

GaussianStats gaussian_stats(const Mat& features); // rows are samples

// Fréchet distance ‖μ₁−μ₂‖² + Tr(Σ₁+Σ₂−2(Σ₁Σ₂)^{1/2}); the matrix square
// root is taken by eigendecomposition with small negative eigenvalues
// clipped to zero. Throws NumericError when a covariance is indefinite
// beyond tolerance.
double fid(const GaussianStats& real, const GaussianStats& generated);

struct RPrecisionResult {
    double top1 = 0.0, top2 = 0.0, top3 = 0.0;
};

// For each motion, rank its own text among 31 sampled distractor texts by
// Euclidean distance. Rows of the two matrices are matched pairs.
RPrecisionResult r_precision(const Mat& text_feats, const Mat& motion_feats, Rng& rng,
                             int pool_size = 32);

// Mean Euclidean distance over matched pairs.
double mm_dist(const Mat& text_feats, const Mat& motion_feats);

// Mean distance between two disjoint random subsets, position-paired.
double diversity(const Mat& motion_feats, int subset_size, Rng& rng);

// Mean within-text pairwise distance over sampled generation pairs.
double multimodality(const std::vector<Mat>& per_text_feats, int pairs_per_text, Rng& rng);

// Flat key→value report with deterministic formatting.
struct MetricReport {
    std::vector<std::pair<std::string, double>> items;
    void set(const std::string& key, double value);
    std::string text() const;
    std::string csv() const; // header row + value row
};

// Shape-headed float32 feature dump (rows × cols).
std::string serialize_features(const Mat& features);
Mat deserialize_features(const std::string& bytes, const std::string& name = "<memory>");

} // namespace fgt2m
