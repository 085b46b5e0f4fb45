#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "spincal/dh.hpp"

namespace spincal {

/// Sensor noise magnitudes: range std, isotropic tangent-plane bearing std,
/// and encoder angle std.
struct NoiseModel {
    double sigma_depth = 0.0;    // meters
    double sigma_bearing = 0.0;  // radians
    double sigma_encoder = 0.0;  // radians
};

enum class Frame { L, M, W };

struct PointCovariance {
    Frame frame = Frame::L;
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

struct PoseWithCovariance {
    RigidTransform transform;  // R^W_B, t^W_B
    Eigen::Matrix3d rot_cov = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d trans_cov = Eigen::Matrix3d::Zero();
};

/// Uniform-within-interval model of intra-interval motor speed variation:
/// sigma_theta = motor_speed * encoder_period / sqrt(12).
inline double default_encoder_sigma(double motor_speed, double encoder_period) {
    return std::abs(motor_speed) * encoder_period / std::sqrt(12.0);
}

/// Orthonormal basis of the tangent plane at a unit bearing. Built from the
/// axis least aligned with omega; deterministic, not continuous in omega.
inline Eigen::Matrix<double, 3, 2> tangent_basis(const Eigen::Vector3d& omega) {
    if (omega.norm() < 1e-12)
        throw std::invalid_argument("tangent_basis: zero bearing");
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(omega(i)) < std::abs(omega(axis))) axis = i;
    Eigen::Vector3d n1 = Eigen::Vector3d::Unit(axis).cross(omega).normalized();
    Eigen::Vector3d n2 = omega.cross(n1).normalized();
    Eigen::Matrix<double, 3, 2> basis;
    basis.col(0) = n1;
    basis.col(1) = n2;
    return basis;
}

/// Sigma_pL = A diag(sigma_d^2, sigma_w^2 I2) A^T
/// with A = [omega, -d [omega]_x N(omega)].
inline PointCovariance lidar_point_covariance(double depth,
                                              const Eigen::Vector3d& omega,
                                              const NoiseModel& noise) {
    Eigen::Matrix<double, 3, 3> a;
    a.col(0) = omega;
    a.rightCols<2>() = -depth * skew(omega) * tangent_basis(omega);
    Eigen::Vector3d d(noise.sigma_depth * noise.sigma_depth,
                      noise.sigma_bearing * noise.sigma_bearing,
                      noise.sigma_bearing * noise.sigma_bearing);
    PointCovariance out;
    out.frame = Frame::L;
    out.matrix = a * d.asDiagonal() * a.transpose();
    return out;
}

/// Linear interpolation on the unwrapped angle (shortest-path difference),
/// renormalized to (-pi, pi].
inline double interpolate_encoder(double theta_a, double theta_b, double t_a,
                                  double t_b, double t_j) {
    if (!(t_a < t_b)) throw std::invalid_argument("interpolate_encoder: t_b <= t_a");
    if (t_j < t_a || t_j > t_b)
        throw std::invalid_argument("interpolate_encoder: t_j outside [t_a, t_b]");
    const double lambda = (t_j - t_a) / (t_b - t_a);
    return wrap_angle(theta_a + lambda * angle_diff(theta_b, theta_a));
}

/// Sigma_pM = [J_theta, J_pL] diag(sigma_theta^2, Sigma_pL) [J_theta, J_pL]^T
/// with J_theta = [-Rz(theta_j) [Rbar pL + tbar]_x]_3 and J_pL = Rz(theta_j) Rbar.
inline void propagate_to_motor(const Eigen::Vector3d& p_L,
                               const PointCovariance& cov_L,
                               const CalibrationVector& x, double theta_j,
                               double d1, double sigma_encoder,
                               Eigen::Vector3d& p_M, PointCovariance& cov_M) {
    const DhParameterSet dh = to_dh(x, theta_j, d1);
    const Eigen::Matrix3d rz = rot_z(theta_j);
    const Eigen::Matrix3d rbar = rot_x(dh.phi1) * rot_z(dh.theta2) * rot_x(dh.phi2);
    const Eigen::Vector3d tbar =
        rot_x(dh.phi1) * rot_z(dh.theta2) * Eigen::Vector3d(dh.a2, 0.0, dh.d2) +
        Eigen::Vector3d(dh.a1, 0.0, dh.d1);
    p_M = rz * (rbar * p_L + tbar);

    const Eigen::Vector3d j_theta = (-rz * skew(rbar * p_L + tbar)).col(2);
    const Eigen::Matrix3d j_pl = rz * rbar;
    cov_M.frame = Frame::M;
    cov_M.matrix = sigma_encoder * sigma_encoder * j_theta * j_theta.transpose() +
                   j_pl * cov_L.matrix * j_pl.transpose();
    cov_M.matrix = 0.5 * (cov_M.matrix + cov_M.matrix.transpose()).eval();
}

/// Sigma_pW = J_R Sigma_R J_R^T + J_p Sigma_pM J_p^T + Sigma_t with
/// J_R = -R^W_B [R^B_M p^M + t^B_M]_x and J_p = R^W_B R^B_M.
inline void propagate_to_world(const Eigen::Vector3d& p_M,
                               const PointCovariance& cov_M,
                               const RigidTransform& body_extrinsic,
                               const PoseWithCovariance& pose,
                               Eigen::Vector3d& p_W, PointCovariance& cov_W) {
    const Eigen::Vector3d in_body = body_extrinsic.apply(p_M);
    p_W = pose.transform.apply(in_body);

    const Eigen::Matrix3d j_rot = -pose.transform.rotation * skew(in_body);
    const Eigen::Matrix3d j_point = pose.transform.rotation * body_extrinsic.rotation;
    cov_W.frame = Frame::W;
    cov_W.matrix = j_rot * pose.rot_cov * j_rot.transpose() +
                   j_point * cov_M.matrix * j_point.transpose() + pose.trans_cov;
    cov_W.matrix = 0.5 * (cov_W.matrix + cov_W.matrix.transpose()).eval();
}

}  // namespace spincal
