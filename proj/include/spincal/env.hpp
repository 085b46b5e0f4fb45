#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <vector>

#include "spincal/voxel.hpp"

namespace spincal {

/// Environmental-analysis configuration. The narrow/wide criteria s1/s2 are
/// deployment-calibrated values, not fixed constants; the defaults below are
/// the ones used throughout this artifact.
struct EnvConfig {
    double downsample_rates[3] = {0.15, 0.20, 0.25};  // V1 < V2 < V3, meters
    double map_root_sizes[3] = {0.25, 0.5, 1.0};
    double eval_voxel = 5.0;  // V_e
    double s1 = 8.0;          // narrow criterion, meters
    double s2 = 20.0;         // wide criterion, meters
    int history_frames = 8;
};

enum class EnvClass { Narrow, Normal, Wide };

struct EnvDecision {
    EnvClass env_class = EnvClass::Normal;
    double selected_rate = 0.0;
    int selected_map_index = 2;  // 1..3
    double spatial_scale = 0.0;
    std::size_t panoramic_count = 0;
};

/// Voxel-centroid downsampling: at most one point per voxel of edge `size`,
/// each the centroid of its voxel's members, in voxel-key order.
inline std::vector<Eigen::Vector3d> grid_downsample(
    const std::vector<Eigen::Vector3d>& points, double size) {
    if (size <= 0.0) throw std::invalid_argument("grid_downsample: size <= 0");
    struct Cell {
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        int count = 0;
    };
    std::map<VoxelKey, Cell> cells;
    for (const auto& p : points) {
        auto& cell = cells[voxel_key(p, size)];
        cell.sum += p;
        cell.count += 1;
    }
    std::vector<Eigen::Vector3d> out;
    out.reserve(cells.size());
    for (const auto& [key, cell] : cells)
        out.push_back(cell.sum / static_cast<double>(cell.count));
    return out;
}

/// Mean Euclidean distance of the points to their centroid.
inline double spatial_scale(const std::vector<Eigen::Vector3d>& map_points) {
    if (map_points.empty())
        throw std::invalid_argument("spatial_scale: empty input");
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : map_points) centroid += p;
    centroid /= static_cast<double>(map_points.size());
    double sum = 0.0;
    for (const auto& p : map_points) sum += (p - centroid).norm();
    return sum / static_cast<double>(map_points.size());
}

/// Merge frame and history into a panoramic map, downsample it with V_e,
/// evaluate the spatial scale, classify (s > s2 wide, s < s1 narrow, else
/// normal), and downsample the frame at the selected rate.
inline EnvDecision classify(const std::vector<Eigen::Vector3d>& frame_points,
                            const std::vector<Eigen::Vector3d>& history_points,
                            const EnvConfig& config,
                            std::vector<Eigen::Vector3d>& downsampled_frame) {
    if (frame_points.empty()) throw std::invalid_argument("classify: empty frame");
    std::vector<Eigen::Vector3d> panoramic = frame_points;
    panoramic.insert(panoramic.end(), history_points.begin(), history_points.end());
    panoramic = grid_downsample(panoramic, config.eval_voxel);

    EnvDecision d;
    d.panoramic_count = panoramic.size();
    d.spatial_scale = spatial_scale(panoramic);
    if (d.spatial_scale > config.s2) {
        d.env_class = EnvClass::Wide;
        d.selected_map_index = 3;
    } else if (d.spatial_scale < config.s1) {
        d.env_class = EnvClass::Narrow;
        d.selected_map_index = 1;
    } else {
        d.env_class = EnvClass::Normal;
        d.selected_map_index = 2;
    }
    d.selected_rate = config.downsample_rates[d.selected_map_index - 1];
    downsampled_frame = grid_downsample(frame_points, d.selected_rate);
    return d;
}

/// ||a|| <= 2 eps_p / T_scan^2.
inline double max_acceleration_bound(double epsilon_p, double t_scan) {
    if (epsilon_p <= 0.0 || t_scan <= 0.0)
        throw std::invalid_argument("max_acceleration_bound: nonpositive input");
    // Left-to-right association keeps round cases like (0.1, 0.1) exact.
    return 2.0 * epsilon_p / t_scan / t_scan;
}

inline const char* env_class_name(EnvClass c) {
    switch (c) {
        case EnvClass::Narrow: return "narrow";
        case EnvClass::Normal: return "normal";
        case EnvClass::Wide: return "wide";
    }
    return "unknown";
}

}  // namespace spincal
