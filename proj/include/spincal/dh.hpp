#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "spincal/angles.hpp"

namespace spincal {

/// Mounting family of the spinning LiDAR. The omni kind spins its mirror
/// about the LiDAR z-axis, the non-omni kind about the x-axis. Each kind
/// pins two of the eight DH parameters to constants.
enum class MountKind { SpinningOmni, SpinningNonOmni };

/// The eight DH parameters [theta1 d1 a1 phi1 theta2 d2 a2 phi2] of the
/// LiDAR-to-motor transform. theta1 is the encoder-measured spin angle and
/// d1 comes from the mechanical drawing; neither is ever optimized.
struct DhParameterSet {
    double theta1 = 0.0;
    double d1 = 0.0;
    double a1 = 0.0;
    double phi1 = 0.0;
    double theta2 = 0.0;
    double d2 = 0.0;
    double a2 = 0.0;
    double phi2 = 0.0;
};

/// The four free calibration parameters x = [theta_bar, d_bar, a_bar,
/// phi_bar] together with the mount kind that maps them into DH slots.
struct CalibrationVector {
    double theta_bar = 0.0;
    double d_bar = 0.0;
    double a_bar = 0.0;
    double phi_bar = 0.0;
    MountKind kind = MountKind::SpinningOmni;

    void normalize_angles() {
        theta_bar = wrap_angle(theta_bar);
        phi_bar = wrap_angle(phi_bar);
    }
};

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return rotation * p + translation;
    }
    RigidTransform inverse() const {
        RigidTransform out;
        out.rotation = rotation.transpose();
        out.translation = -(rotation.transpose() * translation);
        return out;
    }
};

inline Eigen::Matrix3d rot_x(double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    Eigen::Matrix3d m;
    m << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return m;
}

inline Eigen::Matrix3d rot_z(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix3d m;
    m << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return m;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return m;
}

/// Install the mount kind's fixed constants and place the four free values
/// into their DH slots. theta1 and d1 are passed through untouched.
inline DhParameterSet to_dh(const CalibrationVector& x, double theta1, double d1) {
    DhParameterSet dh;
    dh.theta1 = theta1;
    dh.d1 = d1;
    dh.theta2 = x.theta_bar;
    dh.d2 = x.d_bar;
    if (x.kind == MountKind::SpinningOmni) {
        dh.a1 = x.a_bar;
        dh.phi1 = x.phi_bar;
        dh.a2 = 0.0;
        dh.phi2 = 0.0;
    } else {
        dh.a1 = 0.0;
        dh.phi1 = kPi / 2.0;
        dh.a2 = x.a_bar;
        dh.phi2 = x.phi_bar;
    }
    return dh;
}

/// p^M = Rz(theta1) ( Rx(phi1) Rz(theta2) ( Rx(phi2) p^L + t1 ) + t2 )
/// with t1 = (a2, 0, d2) and t2 = (a1, 0, d1).
inline Eigen::Vector3d transform_to_motor(const DhParameterSet& dh,
                                          const Eigen::Vector3d& p_L) {
    const Eigen::Vector3d t1(dh.a2, 0.0, dh.d2);
    const Eigen::Vector3d t2(dh.a1, 0.0, dh.d1);
    return rot_z(dh.theta1) *
           (rot_x(dh.phi1) * (rot_z(dh.theta2) * (rot_x(dh.phi2) * p_L + t1)) + t2);
}

/// The same transform as a rotation/translation pair,
/// p^M = Rz(theta1) (Rbar p^L + tbar).
inline RigidTransform motor_transform(const DhParameterSet& dh) {
    const Eigen::Matrix3d rz1 = rot_z(dh.theta1);
    const Eigen::Matrix3d rbar = rot_x(dh.phi1) * rot_z(dh.theta2) * rot_x(dh.phi2);
    const Eigen::Vector3d tbar =
        rot_x(dh.phi1) * rot_z(dh.theta2) * Eigen::Vector3d(dh.a2, 0.0, dh.d2) +
        Eigen::Vector3d(dh.a1, 0.0, dh.d1);
    RigidTransform t;
    t.rotation = rz1 * rbar;
    t.translation = rz1 * tbar;
    return t;
}

/// Columns: d p^M / d [theta_bar, d_bar, a_bar, phi_bar]. The rotational
/// columns use right-multiplied local perturbations, so they are exact
/// derivatives of the trigonometric parameterization.
inline Eigen::Matrix<double, 3, 4> point_jacobian_wrt_calib(
    const CalibrationVector& x, double theta1, double d1,
    const Eigen::Vector3d& p_L) {
    const DhParameterSet dh = to_dh(x, theta1, d1);
    const Eigen::Matrix3d rz1 = rot_z(dh.theta1);
    const Eigen::Matrix3d rx1 = rot_x(dh.phi1);
    const Eigen::Matrix3d rz2 = rot_z(dh.theta2);
    const Eigen::Matrix3d rx2 = rot_x(dh.phi2);
    const Eigen::Vector3d t1(dh.a2, 0.0, dh.d2);
    const Eigen::Vector3d inner = rx2 * p_L + t1;

    Eigen::Matrix<double, 3, 4> jac;
    jac.col(0) = (-rz1 * rx1 * rz2 * skew(inner)).col(2);
    jac.col(1) = (rz1 * rx1 * rz2).col(2);
    if (x.kind == MountKind::SpinningOmni) {
        jac.col(2) = rz1.col(0);
        jac.col(3) = (-rz1 * rx1 * skew(rz2 * inner)).col(0);
    } else {
        jac.col(2) = (rz1 * rx1 * rz2).col(0);
        jac.col(3) = (-rz1 * rx1 * rz2 * rx2 * skew(p_L)).col(0);
    }
    return jac;
}

}  // namespace spincal
