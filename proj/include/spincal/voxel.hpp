#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace spincal {

struct VoxelizationConfig {
    double root_size = 1.0;
    int max_layers = 2;
    double planarity_ratio = 0.01;  // lambda_min / lambda_mid
    int min_points = 10;
};

/// A planar patch extracted from one voxel: member indices into the source
/// cloud, centroid q, population covariance A, and its eigen-decomposition.
struct PlaneFeature {
    std::vector<int> point_indices;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // ascending
    Eigen::Vector3d min_eigenvector = Eigen::Vector3d::UnitZ();
};

using VoxelKey = std::array<std::int64_t, 3>;

inline VoxelKey voxel_key(const Eigen::Vector3d& position, double size) {
    return {static_cast<std::int64_t>(std::floor(position.x() / size)),
            static_cast<std::int64_t>(std::floor(position.y() / size)),
            static_cast<std::int64_t>(std::floor(position.z() / size))};
}

namespace detail {

// Neumaier-compensated accumulator; the lambda_min signal sits many orders
// of magnitude below the squared coordinates being summed.
struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            c += (sum - t) + v;
        else
            c += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

}  // namespace detail

/// Centroid and population covariance (1/N normalization) with ascending
/// eigenvalues, computed with compensated two-pass accumulation.
inline void plane_stats(const std::vector<Eigen::Vector3d>& points,
                        Eigen::Vector3d& centroid, Eigen::Matrix3d& covariance,
                        Eigen::Vector3d& eigenvalues,
                        Eigen::Vector3d& min_eigenvector) {
    if (points.empty()) throw std::invalid_argument("plane_stats: empty input");
    const double n = static_cast<double>(points.size());

    detail::KahanSum cx, cy, cz;
    for (const auto& p : points) {
        cx.add(p.x());
        cy.add(p.y());
        cz.add(p.z());
    }
    centroid = Eigen::Vector3d(cx.value() / n, cy.value() / n, cz.value() / n);

    std::array<detail::KahanSum, 6> acc;  // xx xy xz yy yz zz
    for (const auto& p : points) {
        const Eigen::Vector3d d = p - centroid;
        acc[0].add(d.x() * d.x());
        acc[1].add(d.x() * d.y());
        acc[2].add(d.x() * d.z());
        acc[3].add(d.y() * d.y());
        acc[4].add(d.y() * d.z());
        acc[5].add(d.z() * d.z());
    }
    covariance << acc[0].value(), acc[1].value(), acc[2].value(),
                  acc[1].value(), acc[3].value(), acc[4].value(),
                  acc[2].value(), acc[4].value(), acc[5].value();
    covariance /= n;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(covariance);
    eigenvalues = es.eigenvalues();  // ascending
    min_eigenvector = es.eigenvectors().col(0);
}

inline PlaneFeature make_feature(const std::vector<Eigen::Vector3d>& cloud_pts,
                                 std::vector<int> indices) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(indices.size());
    for (int i : indices) pts.push_back(cloud_pts[static_cast<size_t>(i)]);
    PlaneFeature f;
    plane_stats(pts, f.centroid, f.covariance, f.eigenvalues, f.min_eigenvector);
    f.point_indices = std::move(indices);
    return f;
}

namespace detail {

inline bool passes_planarity(const PlaneFeature& f, const VoxelizationConfig& cfg) {
    if (static_cast<int>(f.point_indices.size()) < cfg.min_points) return false;
    const double lmid = f.eigenvalues(1);
    if (lmid <= 0.0) return f.eigenvalues(0) <= 0.0;  // collapsed voxel
    return f.eigenvalues(0) / lmid < cfg.planarity_ratio;
}

inline void voxelize_recurse(const std::vector<Eigen::Vector3d>& cloud,
                             std::vector<int>& indices, double size, int layer,
                             const VoxelizationConfig& cfg,
                             std::vector<PlaneFeature>& out) {
    if (static_cast<int>(indices.size()) < cfg.min_points) return;
    PlaneFeature f = make_feature(cloud, indices);
    if (passes_planarity(f, cfg)) {
        out.push_back(std::move(f));
        return;
    }
    if (layer >= cfg.max_layers) return;
    const double half = size / 2.0;
    std::map<VoxelKey, std::vector<int>> children;
    for (int i : f.point_indices)
        children[voxel_key(cloud[static_cast<size_t>(i)], half)].push_back(i);
    for (auto& [key, child] : children)
        voxelize_recurse(cloud, child, half, layer + 1, cfg, out);
}

}  // namespace detail

/// Partition the cloud by root voxels; a voxel passing the planarity test
/// (N >= min_points and lambda_min/lambda_mid < planarity_ratio) emits one
/// feature, otherwise it splits into 8 half-size children up to max_layers.
/// Output order is canonical in voxel-key order.
inline std::vector<PlaneFeature> adaptive_voxelize(
    const std::vector<Eigen::Vector3d>& cloud, const VoxelizationConfig& cfg) {
    std::map<VoxelKey, std::vector<int>> buckets;
    for (int i = 0; i < static_cast<int>(cloud.size()); ++i)
        buckets[voxel_key(cloud[static_cast<size_t>(i)], cfg.root_size)].push_back(i);
    std::vector<PlaneFeature> out;
    for (auto& [key, indices] : buckets)
        detail::voxelize_recurse(cloud, indices, cfg.root_size, 1, cfg, out);
    return out;
}

}  // namespace spincal
