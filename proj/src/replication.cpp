#include "replimit/replication.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "replimit/errors.hpp"

namespace replimit {

namespace {

double row_norm(std::span<const float> row) {
    double s = 0.0;
    for (float v : row) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> values)
    : n_(n), d_(d), values_(std::move(values)) {
    if (n_ < 1 || d_ < 1) throw ContractError("feature matrix needs n >= 1 and d >= 1");
    if (values_.size() != n_ * d_) throw ContractError("feature matrix payload does not match n x d");
    for (std::size_t i = 0; i < n_; ++i) {
        const double norm = row_norm(row(i));
        if (!(std::abs(norm - 1.0) <= kNormTolerance))
            throw FormatError("feature row " + std::to_string(i) + " has norm " + std::to_string(norm) + ", expected 1");
    }
}

FeatureMatrix FeatureMatrix::normalized(std::size_t n, std::size_t d, std::vector<float> values) {
    if (values.size() != n * d) throw ContractError("feature matrix payload does not match n x d");
    for (std::size_t i = 0; i < n; ++i) {
        std::span<float> r(values.data() + i * d, d);
        const double norm = row_norm(r);
        if (!(norm > 0.0) || !std::isfinite(norm)) throw FormatError("feature row " + std::to_string(i) + " has zero norm");
        for (float& v : r) v = static_cast<float>(v / norm);
    }
    return FeatureMatrix(n, d, std::move(values));
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) throw ContractError("feature matrix needs at least one row");
    const auto d = rows.front().size();
    std::vector<float> values;
    values.reserve(rows.size() * d);
    for (const auto& r : rows) {
        if (r.size() != d) throw ContractError("feature rows differ in dimension");
        values.insert(values.end(), r.begin(), r.end());
    }
    return FeatureMatrix(rows.size(), d, std::move(values));
}

FeatureMatrix FeatureMatrix::with_row_appended(std::span<const float> r) const {
    if (r.size() != d_) throw ContractError("appended row has wrong dimension");
    auto values = values_;
    values.insert(values.end(), r.begin(), r.end());
    return FeatureMatrix(n_ + 1, d_, std::move(values));
}

// ---------------------------------------------------------------------------

std::vector<float> toy_features(const ToyImage& image) {
    if (image.h < 8 || image.w < 8) throw ContractError("toy_features: image smaller than 8x8");
    if (image.pixels.size() != image.h * image.w) throw ContractError("toy_features: pixel count mismatch");
    std::vector<double> f(kToyFeatureDim, 0.0);

    for (std::size_t by = 0; by < 8; ++by) {
        const std::size_t y0 = by * image.h / 8, y1 = (by + 1) * image.h / 8;
        for (std::size_t bx = 0; bx < 8; ++bx) {
            const std::size_t x0 = bx * image.w / 8, x1 = (bx + 1) * image.w / 8;
            double s = 0.0;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) s += image.at(y, x);
            f[by * 8 + bx] = s / static_cast<double>((y1 - y0) * (x1 - x0));
        }
    }

    const double interior = static_cast<double>((image.h - 2) * (image.w - 2));
    for (std::size_t y = 1; y + 1 < image.h; ++y) {
        for (std::size_t x = 1; x + 1 < image.w; ++x) {
            const double gx = 0.5 * (static_cast<double>(image.at(y, x + 1)) - image.at(y, x - 1));
            const double gy = 0.5 * (static_cast<double>(image.at(y + 1, x)) - image.at(y - 1, x));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            const double angle = std::atan2(gy, gx) + std::numbers::pi;  // [0, 2pi]
            auto bin = static_cast<std::size_t>(angle / (2.0 * std::numbers::pi) * 8.0);
            if (bin >= 8) bin = 0;
            f[64 + bin] += mag / interior;
        }
    }

    auto center_and_normalize = [](std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double& x : v) {
            x -= mean;
            ss += x * x;
        }
        return std::sqrt(ss);
    };
    double norm = center_and_normalize(f);
    if (norm < 1e-12) {
        // An all-zero image is the limit of a dim constant image; use that direction.
        std::fill(f.begin(), f.begin() + 64, 1.0);
        std::fill(f.begin() + 64, f.end(), 0.0);
        norm = center_and_normalize(f);
    }
    std::vector<float> out(kToyFeatureDim);
    for (std::size_t i = 0; i < kToyFeatureDim; ++i) out[i] = static_cast<float>(f[i] / norm);
    return out;
}

FeatureMatrix toy_feature_matrix(const std::vector<ToyImage>& images) {
    if (images.empty()) throw ContractError("toy_feature_matrix: no images");
    std::vector<float> values;
    values.reserve(images.size() * kToyFeatureDim);
    for (const auto& img : images) {
        auto f = toy_features(img);
        values.insert(values.end(), f.begin(), f.end());
    }
    return FeatureMatrix(images.size(), kToyFeatureDim, std::move(values));
}

SimilarityDistribution similarity_scores(const FeatureMatrix& train, const FeatureMatrix& generated) {
    if (train.d() != generated.d())
        throw ContractError("similarity_scores: dimension mismatch (" + std::to_string(train.d()) + " vs " +
                            std::to_string(generated.d()) + ")");
    SimilarityDistribution s;
    s.s_values.reserve(generated.n());
    for (std::size_t g = 0; g < generated.n(); ++g) {
        const auto grow = generated.row(g);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < train.n(); ++x) {
            const auto xrow = train.row(x);
            double dot = 0.0;
            for (std::size_t k = 0; k < grow.size(); ++k) dot += static_cast<double>(grow[k]) * xrow[k];
            best = std::max(best, dot);
        }
        s.s_values.push_back(std::clamp(best, -1.0, 1.0));
    }
    std::sort(s.s_values.begin(), s.s_values.end());
    return s;
}

ReplicationResult replication_score(const SimilarityDistribution& s, double q) {
    const auto n = s.s_values.size();
    if (n == 0) throw ContractError("replication_score: empty similarity distribution");
    if (!(q > 0.0 && q <= 1.0)) throw ContractError("replication_score: quantile must be in (0, 1]");
    const double dn = static_cast<double>(n);
    // Smallest rank k with k / n >= q; start from ceil(q n) and correct for rounding.
    auto k = static_cast<std::size_t>(std::ceil(q * dn));
    k = std::clamp<std::size_t>(k, 1, n);
    while (k > 1 && static_cast<double>(k - 1) / dn >= q) --k;
    while (k < n && static_cast<double>(k) / dn < q) ++k;
    return {s.s_values[k - 1], q, n, 0};
}

GaussianFit fit_gaussian(const FeatureMatrix& features) {
    if (features.n() < 2) throw ContractError("fit_gaussian: need at least two rows");
    const auto n = features.n(), d = features.d();
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) x(i, k) = features.row(i)[k];
    GaussianFit fit;
    fit.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - fit.mean.transpose();
    fit.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return fit;
}

namespace {

constexpr double kPsdTolerance = 1e-9;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw ContractError(std::string("eigendecomposition failed for ") + what);
    Eigen::VectorXd vals = eig.eigenvalues();
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    if (vals.minCoeff() < -kPsdTolerance * scale)
        throw ContractError(std::string(what) + " is not positive semidefinite (min eigenvalue " +
                            std::to_string(vals.minCoeff()) + ")");
    vals = vals.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) throw ContractError(std::string(what) + " is not square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw ContractError(std::string(what) + " is not symmetric");
}

}  // namespace

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
    if (a.mean.size() != b.mean.size() || a.cov.rows() != a.mean.size() || b.cov.rows() != b.mean.size())
        throw ContractError("frechet_distance: dimension mismatch");
    check_symmetric(a.cov, "first covariance");
    check_symmetric(b.cov, "second covariance");
    const Eigen::MatrixXd sqrt_a = psd_sqrt(a.cov, "first covariance");
    psd_sqrt(b.cov, "second covariance");  // PSD check only
    Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw ContractError("frechet_distance: eigendecomposition failed");
    const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double fd = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
    return std::max(fd, 0.0);
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kFeatureMagic[4] = {'R', 'L', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureMatrix& f) {
    std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 4);
    detail::put_u32(out, kFeatureVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(f.n()));
    detail::put_u32(out, static_cast<std::uint32_t>(f.d()));
    out.reserve(out.size() + 4 * f.values().size());
    for (float v : f.values()) detail::put_f32(out, v);
    return out;
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
        throw FormatError(origin + ": bad magic, expected RLFT");
    if (bytes.size() < 16)
        throw FormatError(origin + ": truncated header, expected 16 bytes, got " + std::to_string(bytes.size()));
    const auto version = detail::get_u32(bytes, 4);
    if (version != kFeatureVersion) throw FormatError(origin + ": unsupported feature version " + std::to_string(version));
    const std::size_t n = detail::get_u32(bytes, 8), d = detail::get_u32(bytes, 12);
    const std::size_t expected = 16 + 4 * n * d;
    if (bytes.size() != expected)
        throw FormatError(origin + ": payload length mismatch, expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    if (n == 0 || d == 0) throw FormatError(origin + ": empty feature matrix");
    std::vector<float> values(n * d);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = detail::get_f32(bytes, 16 + 4 * i);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<float> r(values.data() + i * d, d);
        const double norm = row_norm(r);
        if (std::abs(norm - 1.0) <= FeatureMatrix::kNormTolerance) continue;
        if (!(std::abs(norm - 1.0) <= FeatureMatrix::kRenormalizeTolerance))
            throw FormatError(origin + ": row " + std::to_string(i) + " has norm " + std::to_string(norm) +
                              ", outside renormalization tolerance");
        for (float& v : r) v = static_cast<float>(v / norm);
    }
    return FeatureMatrix(n, d, std::move(values));
}

void save_features(const FeatureMatrix& f, const std::filesystem::path& path) {
    detail::write_file_bytes(path, encode_features(f));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    return decode_features(detail::read_file_bytes(path), path.string());
}

}  // namespace replimit
