#include "fgt2m/metrics.hpp"
#include "fgt2m/binio.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>

namespace fgt2m {

GaussianStats gaussian_stats(const Mat& features) {
    if (features.rows() < 2) throw InputError("gaussian_stats needs at least two samples");
    GaussianStats s;
    s.mean = features.colwise().mean();
    Mat centered = features.rowwise() - s.mean.transpose();
    s.covariance = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
    return s;
}

namespace {

// Symmetric PSD square root with negative-eigenvalue clipping.
Mat sqrt_psd(const Mat& m, const char* what) {
    Mat sym = 0.5 * (m + m.transpose());
    if ((m - sym).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw NumericError(std::string(what) + " is not symmetric within tolerance");
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericError(std::string(what) + ": eigendecomposition failed");
    Eigen::VectorXd vals = eig.eigenvalues();
    const double tol = 1e-8 * std::max(1.0, vals.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals[i] < -tol)
            throw NumericError(std::string(what) + " is indefinite beyond tolerance (eigenvalue " +
                               std::to_string(vals[i]) + ")");
        vals[i] = std::sqrt(std::max(0.0, vals[i]));
    }
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

double fid(const GaussianStats& real, const GaussianStats& generated) {
    if (real.mean.size() != generated.mean.size())
        throw ContractError("fid: feature widths differ");
    const Mat sqrt_a = sqrt_psd(real.covariance, "real covariance");
    // Tr((Σ₁Σ₂)^{1/2}) computed via the symmetric form (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2}.
    const Mat inner = sqrt_a * generated.covariance * sqrt_a;
    const Mat sqrt_inner = sqrt_psd(inner, "covariance product");
    const double mean_term = (real.mean - generated.mean).squaredNorm();
    const double trace_term =
        real.covariance.trace() + generated.covariance.trace() - 2.0 * sqrt_inner.trace();
    return mean_term + trace_term;
}

RPrecisionResult r_precision(const Mat& text_feats, const Mat& motion_feats, Rng& rng, int pool_size) {
    const auto n = text_feats.rows();
    if (motion_feats.rows() != n) throw InputError("r_precision: row counts differ");
    if (pool_size < 2) throw InputError("r_precision: pool size must be at least 2");
    if (n < pool_size)
        throw InputError("r_precision needs at least " + std::to_string(pool_size) + " pairs, got " +
                         std::to_string(n));

    int hits1 = 0, hits2 = 0, hits3 = 0;
    std::vector<int> pool;
    for (Eigen::Index i = 0; i < n; ++i) {
        // sample pool_size−1 distinct distractors j ≠ i
        pool.clear();
        while (static_cast<int>(pool.size()) < pool_size - 1) {
            const int j = rng.uniform_int(0, static_cast<int>(n) - 1);
            if (j == static_cast<int>(i)) continue;
            if (std::find(pool.begin(), pool.end(), j) != pool.end()) continue;
            pool.push_back(j);
        }
        const double own = (motion_feats.row(i) - text_feats.row(i)).norm();
        int closer = 0;
        for (int j : pool)
            if ((motion_feats.row(i) - text_feats.row(j)).norm() < own) ++closer;
        if (closer < 1) ++hits1;
        if (closer < 2) ++hits2;
        if (closer < 3) ++hits3;
    }
    const double denom = static_cast<double>(n);
    return {hits1 / denom, hits2 / denom, hits3 / denom};
}

double mm_dist(const Mat& text_feats, const Mat& motion_feats) {
    if (text_feats.rows() != motion_feats.rows() || text_feats.cols() != motion_feats.cols())
        throw InputError("mm_dist: paired feature shapes differ");
    if (text_feats.rows() == 0) throw InputError("mm_dist: empty input");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < text_feats.rows(); ++i)
        sum += (text_feats.row(i) - motion_feats.row(i)).norm();
    return sum / static_cast<double>(text_feats.rows());
}

double diversity(const Mat& motion_feats, int subset_size, Rng& rng) {
    const auto n = motion_feats.rows();
    if (subset_size < 1) throw InputError("diversity: subset size must be positive");
    if (n < 2 * subset_size)
        throw InputError("diversity needs at least " + std::to_string(2 * subset_size) + " features, got " +
                         std::to_string(n));
    // Draw 2·subset_size distinct indices; halves form the two subsets.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
    for (int k = static_cast<int>(n) - 1; k > 0; --k)
        std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    double sum = 0.0;
    for (int i = 0; i < subset_size; ++i) {
        const int a = order[static_cast<std::size_t>(i)];
        const int b = order[static_cast<std::size_t>(subset_size + i)];
        sum += (motion_feats.row(a) - motion_feats.row(b)).norm();
    }
    return sum / subset_size;
}

double multimodality(const std::vector<Mat>& per_text_feats, int pairs_per_text, Rng& rng) {
    if (per_text_feats.empty()) throw InputError("multimodality: no texts");
    if (pairs_per_text < 1) throw InputError("multimodality: pairs_per_text must be positive");
    double total = 0.0;
    for (const Mat& feats : per_text_feats) {
        const auto m = feats.rows();
        if (m < 2) throw InputError("multimodality: every text needs at least two generated motions");
        double sum = 0.0;
        for (int p = 0; p < pairs_per_text; ++p) {
            const int a = rng.uniform_int(0, static_cast<int>(m) - 1);
            int b = rng.uniform_int(0, static_cast<int>(m) - 2);
            if (b >= a) ++b; // distinct indices
            sum += (feats.row(a) - feats.row(b)).norm();
        }
        total += sum / pairs_per_text;
    }
    return total / static_cast<double>(per_text_feats.size());
}

void MetricReport::set(const std::string& key, double value) { items.emplace_back(key, value); }

namespace {
std::string format_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}
} // namespace

std::string MetricReport::text() const {
    std::string out;
    for (const auto& [k, v] : items) out += k + " " + format_value(v) + "\n";
    return out;
}

std::string MetricReport::csv() const {
    std::string header, row;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) {
            header += ",";
            row += ",";
        }
        header += items[i].first;
        row += format_value(items[i].second);
    }
    return header + "\n" + row + "\n";
}

namespace {
constexpr char kFeatMagic[8] = {'F', 'G', 'T', '2', 'M', 'F', 'E', 'A'};
} // namespace

std::string serialize_features(const Mat& features) {
    BinWriter w;
    w.raw(kFeatMagic, sizeof(kFeatMagic));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(features.rows()));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(features.cols()));
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j)
            w.scalar<float>(static_cast<float>(features(i, j)));
    return w.bytes();
}

Mat deserialize_features(const std::string& bytes, const std::string& name) {
    BinReader r(bytes, name);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kFeatMagic, sizeof(kFeatMagic)) != 0) r.fail("bad feature dump magic");
    const auto rows = r.scalar<std::uint32_t>();
    const auto cols = r.scalar<std::uint32_t>();
    Mat m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = static_cast<double>(r.scalar<float>());
    if (!r.at_end()) r.fail("trailing bytes after feature payload");
    return m;
}

} // namespace fgt2m
