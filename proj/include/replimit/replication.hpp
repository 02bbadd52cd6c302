#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "replimit/image.hpp"

namespace replimit {

// n x d row-major float32 matrix whose rows have unit L2 norm (within 1e-5).
class FeatureMatrix {
public:
    static constexpr double kNormTolerance = 1e-5;
    static constexpr double kRenormalizeTolerance = 1e-3;

    FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> values);
    // Normalizes each row; throws FormatError for a zero row.
    static FeatureMatrix normalized(std::size_t n, std::size_t d, std::vector<float> values);
    static FeatureMatrix from_rows(const std::vector<std::vector<float>>& rows);

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    std::span<const float> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
    const std::vector<float>& values() const { return values_; }

    FeatureMatrix with_row_appended(std::span<const float> row) const;

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<float> values_;
};

// Per-generated-image best match against the training set, sorted ascending.
struct SimilarityDistribution {
    std::vector<double> s_values;
};

struct ReplicationResult {
    double r = 0.0;
    double quantile = 0.95;
    std::size_t n_gen = 0;
    std::size_t n_train = 0;
};

struct GaussianFit {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline constexpr std::size_t kToyFeatureDim = 72;

// 8x8 block-mean downsample (64 values) followed by an 8-bin gradient
// orientation histogram (central differences, magnitude weighted), then
// mean-centered and L2-normalized.
std::vector<float> toy_features(const ToyImage& image);
FeatureMatrix toy_feature_matrix(const std::vector<ToyImage>& images);

SimilarityDistribution similarity_scores(const FeatureMatrix& train, const FeatureMatrix& generated);

// Nearest-rank quantile: the smallest s with #{s_i <= s} / n >= q.
ReplicationResult replication_score(const SimilarityDistribution& s, double q = 0.95);

GaussianFit fit_gaussian(const FeatureMatrix& features);
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

// "RLFT" | u32 version=1 | u32 n | u32 d | n*d float32, little-endian.
std::vector<std::uint8_t> encode_features(const FeatureMatrix& f);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
void save_features(const FeatureMatrix& f, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace replimit
