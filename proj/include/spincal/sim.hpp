#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spincal/dh.hpp"
#include "spincal/scan.hpp"

namespace spincal {

/// A finite rectangular plane patch in the world frame.
struct VirtualPlane {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector2d half_extents = Eigen::Vector2d(5.0, 5.0);

    /// In-plane axes, deterministic for a given normal.
    void axes(Eigen::Vector3d& u, Eigen::Vector3d& v) const {
        int least = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(normal(i)) < std::abs(normal(least))) least = i;
        u = Eigen::Vector3d::Unit(least).cross(normal).normalized();
        v = normal.cross(u).normalized();
    }
};

struct SceneSpec {
    std::string name;
    std::vector<VirtualPlane> planes;
};

enum class SensorKind { Mid360Like, AviaLike };

struct SensorModel {
    SensorKind kind = SensorKind::Mid360Like;
    double range_max = 40.0;          // meters
    double points_per_second = 200000.0;
    double fov_h_deg = 360.0;
    double fov_v_deg = 59.0;
    double encoder_rate = 200.0;      // Hz
    double scan_rate = 10.0;          // Hz
    NoiseModel noise;
};

inline SensorModel mid360_sensor() {
    SensorModel s;
    s.kind = SensorKind::Mid360Like;
    s.range_max = 40.0;
    s.points_per_second = 200000.0;
    s.fov_h_deg = 360.0;
    s.fov_v_deg = 59.0;
    return s;
}

inline SensorModel avia_sensor() {
    SensorModel s;
    s.kind = SensorKind::AviaLike;
    s.range_max = 100.0;
    s.points_per_second = 240000.0;
    s.fov_h_deg = 70.4;
    s.fov_v_deg = 77.2;
    return s;
}

struct RayHit {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double range = 0.0;
    int plane_index = -1;
};

/// Nearest intersection of a ray with any finite plane patch within
/// range_max; ties broken by smaller range, then lower plane index.
inline std::optional<RayHit> ray_cast(const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& direction,
                                      const SceneSpec& scene,
                                      double range_max) {
    std::optional<RayHit> best;
    for (int i = 0; i < static_cast<int>(scene.planes.size()); ++i) {
        const VirtualPlane& pl = scene.planes[static_cast<size_t>(i)];
        const double denom = direction.dot(pl.normal);
        if (std::abs(denom) < 1e-12) continue;  // parallel
        const double s = (pl.center - origin).dot(pl.normal) / denom;
        if (s <= 1e-9 || s > range_max) continue;
        const Eigen::Vector3d hit = origin + s * direction;
        Eigen::Vector3d u, v;
        pl.axes(u, v);
        const Eigen::Vector3d rel = hit - pl.center;
        if (std::abs(rel.dot(u)) > pl.half_extents(0) ||
            std::abs(rel.dot(v)) > pl.half_extents(1))
            continue;
        if (!best || s < best->range) best = RayHit{hit, s, i};
    }
    return best;
}

// ---- built-in scenes ------------------------------------------------------

namespace detail {

inline void add_plane(SceneSpec& s, const Eigen::Vector3d& center,
                      const Eigen::Vector3d& normal, double half) {
    VirtualPlane p;
    p.center = center;
    p.normal = normal.normalized();
    p.half_extents = Eigen::Vector2d(half, half);
    s.planes.push_back(p);
}

}  // namespace detail

/// The six identifiability scenes. scene_1 is a box of six 10 m x 10 m
/// planes at 8 m; scenes 2-6 keep the axis-aligned subsets named by their
/// plane-normal distributions (scenes 4-6 are single planes).
inline SceneSpec builtin_scene(int index) {
    const double r = 8.0, half = 5.0;
    SceneSpec s;
    s.name = "scene_" + std::to_string(index);
    const auto x = Eigen::Vector3d::UnitX(), y = Eigen::Vector3d::UnitY(),
               z = Eigen::Vector3d::UnitZ();
    switch (index) {
        case 1:
            detail::add_plane(s, r * x, -x, half);
            detail::add_plane(s, -r * x, x, half);
            detail::add_plane(s, r * y, -y, half);
            detail::add_plane(s, -r * y, y, half);
            detail::add_plane(s, r * z, -z, half);
            detail::add_plane(s, -r * z, z, half);
            break;
        case 2:  // x and z normals
            detail::add_plane(s, r * x, -x, half);
            detail::add_plane(s, -r * x, x, half);
            detail::add_plane(s, r * z, -z, half);
            detail::add_plane(s, -r * z, z, half);
            break;
        case 3:  // y and z normals
            detail::add_plane(s, r * y, -y, half);
            detail::add_plane(s, -r * y, y, half);
            detail::add_plane(s, r * z, -z, half);
            detail::add_plane(s, -r * z, z, half);
            break;
        case 4:
            detail::add_plane(s, r * x, -x, half);
            break;
        case 5:
            detail::add_plane(s, r * y, -y, half);
            break;
        case 6:  // ground plane, close enough to sit inside every FOV
            detail::add_plane(s, -2.0 * z, z, half);
            break;
        default:
            throw std::invalid_argument("builtin_scene: index must be 1..6");
    }
    return s;
}

/// The 40-plane observability scene: patches on a Fibonacci sphere of
/// radius 8 m, normals facing the origin.
inline SceneSpec virtual_plane_scene(int plane_count = 40, double radius = 8.0,
                                     double half_extent = 1.25) {
    SceneSpec s;
    s.name = "virtual_planes_" + std::to_string(plane_count);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < plane_count; ++i) {
        const double zc = 1.0 - 2.0 * (i + 0.5) / plane_count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        const double az = golden * i;
        Eigen::Vector3d dir(rho * std::cos(az), rho * std::sin(az), zc);
        detail::add_plane(s, radius * dir, -dir, half_extent);
    }
    return s;
}

// ---- scan generation ------------------------------------------------------

/// Emit one beam direction in the LiDAR frame. The omni kind sweeps
/// uniformly over azimuth x vertical FOV about its z-axis; the non-omni kind
/// fills its rectangular FOV about the +x optical axis.
inline Eigen::Vector3d sample_beam_direction(const SensorModel& sensor,
                                             std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (sensor.kind == SensorKind::Mid360Like) {
        const double az = (uni(rng) - 0.5) * deg_to_rad(sensor.fov_h_deg);
        const double el = (uni(rng) - 0.5) * deg_to_rad(sensor.fov_v_deg);
        return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                std::sin(el)};
    }
    const double h = (uni(rng) - 0.5) * deg_to_rad(sensor.fov_h_deg);
    const double v = (uni(rng) - 0.5) * deg_to_rad(sensor.fov_v_deg);
    return {std::cos(v) * std::cos(h), std::cos(v) * std::sin(h), std::sin(v)};
}

/// Generate a calibration scan: the base is static, only the motor spins at
/// constant speed. Deterministic for a fixed seed. Noise-free points lie
/// exactly on scene planes when re-transformed at the ground truth.
inline ScanFrame generate_scan(const SceneSpec& scene,
                               const CalibrationVector& gt, double d1,
                               double motor_speed, const SensorModel& sensor,
                               double duration, std::uint64_t seed) {
    ScanFrame frame;
    frame.frame_span = duration;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::int64_t n_beams =
        static_cast<std::int64_t>(sensor.points_per_second * duration);
    frame.points.reserve(static_cast<size_t>(n_beams));
    for (std::int64_t i = 0; i < n_beams; ++i) {
        const double t = (static_cast<double>(i) + 0.5) /
                         sensor.points_per_second;
        const Eigen::Vector3d dir_L = sample_beam_direction(sensor, rng);
        const double theta1 = motor_speed * t;
        const RigidTransform T = motor_transform(to_dh(gt, theta1, d1));
        const Eigen::Vector3d origin_W = T.translation;
        const Eigen::Vector3d dir_W = T.rotation * dir_L;
        const auto hit = ray_cast(origin_W, dir_W, scene, sensor.range_max);
        if (!hit) continue;

        double depth = hit->range;
        Eigen::Vector3d bearing = dir_L;
        if (sensor.noise.sigma_depth > 0.0)
            depth += sensor.noise.sigma_depth * gauss(rng);
        if (sensor.noise.sigma_bearing > 0.0) {
            const auto basis = tangent_basis(bearing);
            bearing = (bearing + sensor.noise.sigma_bearing *
                                     (gauss(rng) * basis.col(0) +
                                      gauss(rng) * basis.col(1)))
                          .normalized();
        }
        LaserPoint p;
        p.position = depth * bearing;
        p.timestamp = t;
        frame.points.push_back(p);
    }
    if (frame.points.empty())
        throw std::runtime_error("generate_scan: scene produced no returns");

    const double dt = 1.0 / sensor.encoder_rate;
    const std::int64_t n_enc =
        static_cast<std::int64_t>(std::ceil(duration / dt)) + 1;
    for (std::int64_t k = 0; k <= n_enc; ++k) {
        EncoderSample s;
        s.timestamp = static_cast<double>(k) * dt;
        double angle = motor_speed * s.timestamp;
        if (sensor.noise.sigma_encoder > 0.0)
            angle += sensor.noise.sigma_encoder * gauss(rng);
        s.angle = wrap_angle(angle);
        frame.encoder_samples.push_back(s);
    }
    return frame;
}

// ---- ground-truth sampling ------------------------------------------------

/// One draw from the ground-truth DH distribution for the mount kind. Omni
/// draws with phi_bar within 5 degrees of {0, pi} are rejected and redrawn
/// (those mounts are unobservable by construction).
inline CalibrationVector sample_ground_truth(MountKind mount,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u_trans(-0.1, 0.1);
    CalibrationVector x;
    x.kind = mount;
    x.d_bar = u_trans(rng);
    x.a_bar = u_trans(rng);
    if (mount == MountKind::SpinningOmni) {
        std::uniform_real_distribution<double> u_theta(-kPi, kPi);
        std::uniform_real_distribution<double> u_phi(0.0, kPi);
        x.theta_bar = u_theta(rng);
        const double guard = deg_to_rad(5.0);
        do {
            x.phi_bar = u_phi(rng);
        } while (x.phi_bar < guard || x.phi_bar > kPi - guard);
    } else {
        std::uniform_real_distribution<double> u_theta(-kPi / 8.0, kPi / 8.0);
        std::uniform_real_distribution<double> u_phi(-kPi, kPi);
        x.theta_bar = u_theta(rng);
        x.phi_bar = u_phi(rng);
    }
    x.normalize_angles();
    return x;
}

/// Gaussian perturbation of each free parameter; angles renormalized.
inline CalibrationVector perturb_initial(const CalibrationVector& gt,
                                         double rot_sigma, double trans_sigma,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CalibrationVector x = gt;
    x.theta_bar += rot_sigma * gauss(rng);
    x.d_bar += trans_sigma * gauss(rng);
    x.a_bar += trans_sigma * gauss(rng);
    x.phi_bar += rot_sigma * gauss(rng);
    x.normalize_angles();
    return x;
}

/// Errors between an estimate and the truth: Euclidean norm over the two
/// translation slots (mm) and over the wrapped angle slots (deg).
inline void calibration_errors(const CalibrationVector& est,
                               const CalibrationVector& gt,
                               double& trans_err_mm, double& angle_err_deg) {
    const double dd = est.d_bar - gt.d_bar;
    const double da = est.a_bar - gt.a_bar;
    trans_err_mm = 1000.0 * std::sqrt(dd * dd + da * da);
    const double dt = angle_diff(est.theta_bar, gt.theta_bar);
    const double dp = angle_diff(est.phi_bar, gt.phi_bar);
    angle_err_deg = rad_to_deg(std::sqrt(dt * dt + dp * dp));
}

}  // namespace spincal
