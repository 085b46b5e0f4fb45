#include <gtest/gtest.h>

#include <random>

#include "spincal/dh.hpp"

using namespace spincal;

namespace {

CalibrationVector random_calib(MountKind kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> trans(-0.2, 0.2);
    CalibrationVector x;
    x.kind = kind;
    x.theta_bar = angle(rng);
    x.phi_bar = angle(rng);
    x.d_bar = trans(rng);
    x.a_bar = trans(rng);
    return x;
}

// Independent oracle: compose Eq. 1 as a chain of 4x4 homogeneous matrices.
Eigen::Vector3d homogeneous_oracle(const DhParameterSet& dh,
                                   const Eigen::Vector3d& p) {
    auto rot4 = [](const Eigen::Matrix3d& r) {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = r;
        return m;
    };
    auto trans4 = [](double x, double y, double z) {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m(0, 3) = x;
        m(1, 3) = y;
        m(2, 3) = z;
        return m;
    };
    const Eigen::Matrix4d t = rot4(rot_z(dh.theta1)) *
                              trans4(dh.a1, 0, dh.d1) * rot4(rot_x(dh.phi1)) *
                              rot4(rot_z(dh.theta2)) * trans4(dh.a2, 0, dh.d2) *
                              rot4(rot_x(dh.phi2));
    return (t * p.homogeneous()).head<3>();
}

}  // namespace

TEST(RotX, ZeroIsIdentity) {
    EXPECT_TRUE(rot_x(0.0).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(RotX, QuarterTurnAxisSwap) {
    const Eigen::Vector3d v = rot_x(kPi / 2) * Eigen::Vector3d(0, 1, 0);
    EXPECT_NEAR((v - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(RotX, InverseSymmetry) {
    EXPECT_TRUE((rot_x(0.3) * rot_x(-0.3))
                    .isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST(RotZ, ZeroIsIdentity) {
    EXPECT_TRUE(rot_z(0.0).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(RotZ, QuarterTurn) {
    const Eigen::Vector3d v = rot_z(kPi / 2) * Eigen::Vector3d(1, 0, 0);
    EXPECT_NEAR((v - Eigen::Vector3d(0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(RotZ, InverseSymmetry) {
    for (double th : {0.1, 1.0, 3.0})
        EXPECT_TRUE((rot_z(th) * rot_z(-th))
                        .isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST(ToDh, OmniSlotMapping) {
    CalibrationVector x{0.2, 0.05, 0.1, 1.0, MountKind::SpinningOmni};
    const DhParameterSet dh = to_dh(x, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(dh.theta1, 0.0);
    EXPECT_DOUBLE_EQ(dh.d1, 0.0);
    EXPECT_DOUBLE_EQ(dh.a1, 0.1);
    EXPECT_DOUBLE_EQ(dh.phi1, 1.0);
    EXPECT_DOUBLE_EQ(dh.theta2, 0.2);
    EXPECT_DOUBLE_EQ(dh.d2, 0.05);
    EXPECT_DOUBLE_EQ(dh.a2, 0.0);
    EXPECT_DOUBLE_EQ(dh.phi2, 0.0);
}

TEST(ToDh, NonOmniSlotMapping) {
    CalibrationVector x{0.2, 0.05, 0.1, 1.0, MountKind::SpinningNonOmni};
    const DhParameterSet dh = to_dh(x, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(dh.a1, 0.0);
    EXPECT_DOUBLE_EQ(dh.phi1, kPi / 2);
    EXPECT_DOUBLE_EQ(dh.theta2, 0.2);
    EXPECT_DOUBLE_EQ(dh.d2, 0.05);
    EXPECT_DOUBLE_EQ(dh.a2, 0.1);
    EXPECT_DOUBLE_EQ(dh.phi2, 1.0);
}

TEST(ToDh, RoundTripFreeSlots) {
    std::mt19937_64 rng(7);
    for (MountKind kind :
         {MountKind::SpinningOmni, MountKind::SpinningNonOmni}) {
        const CalibrationVector x = random_calib(kind, rng);
        const DhParameterSet dh = to_dh(x, 1.2, 0.3);
        const bool omni = kind == MountKind::SpinningOmni;
        EXPECT_DOUBLE_EQ(dh.theta2, x.theta_bar);
        EXPECT_DOUBLE_EQ(dh.d2, x.d_bar);
        EXPECT_DOUBLE_EQ(omni ? dh.a1 : dh.a2, x.a_bar);
        EXPECT_DOUBLE_EQ(omni ? dh.phi1 : dh.phi2, x.phi_bar);
    }
}

TEST(TransformToMotor, IdentityOnAllZeroDh) {
    DhParameterSet dh;
    const Eigen::Vector3d p(1, 2, 3);
    EXPECT_NEAR((transform_to_motor(dh, p) - p).norm(), 0.0, 1e-15);
}

TEST(TransformToMotor, PureSpinRotation) {
    DhParameterSet dh;
    dh.theta1 = kPi / 2;
    const Eigen::Vector3d v = transform_to_motor(dh, {1, 0, 0});
    EXPECT_NEAR((v - Eigen::Vector3d(0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(TransformToMotor, MatchesHomogeneousOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> len(-2.0, 2.0);
    double max_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        DhParameterSet dh{angle(rng), len(rng), len(rng), angle(rng),
                          angle(rng), len(rng), len(rng), angle(rng)};
        const Eigen::Vector3d p(len(rng), len(rng), len(rng));
        max_err = std::max(
            max_err,
            (transform_to_motor(dh, p) - homogeneous_oracle(dh, p)).norm());
        max_err = std::max(
            max_err,
            (motor_transform(dh).apply(p) - homogeneous_oracle(dh, p)).norm());
    }
    EXPECT_LT(max_err, 1e-12);
}

TEST(TransformToMotor, IsIsometry) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> len(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        DhParameterSet dh{angle(rng), len(rng), len(rng), angle(rng),
                          angle(rng), len(rng), len(rng), angle(rng)};
        const Eigen::Vector3d p(len(rng), len(rng), len(rng));
        const Eigen::Vector3d q(len(rng), len(rng), len(rng));
        EXPECT_NEAR((p - q).norm(),
                    (transform_to_motor(dh, p) - transform_to_motor(dh, q)).norm(),
                    1e-12);
    }
}

TEST(TransformToMotor, ToDhComposesToFullExpansion) {
    std::mt19937_64 rng(11);
    for (MountKind kind :
         {MountKind::SpinningOmni, MountKind::SpinningNonOmni}) {
        for (int i = 0; i < 100; ++i) {
            const CalibrationVector x = random_calib(kind, rng);
            std::uniform_real_distribution<double> len(-3.0, 3.0);
            std::uniform_real_distribution<double> angle(-kPi, kPi);
            const double theta1 = angle(rng), d1 = len(rng);
            const Eigen::Vector3d p(len(rng), len(rng), len(rng));
            const DhParameterSet dh = to_dh(x, theta1, d1);
            EXPECT_NEAR((transform_to_motor(dh, p) - homogeneous_oracle(dh, p))
                            .norm(),
                        0.0, 1e-12);
        }
    }
}

TEST(PointJacobian, MatchesCentralFiniteDifferences) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> len(-3.0, 3.0);
    const double h = 1e-6;
    for (MountKind kind :
         {MountKind::SpinningOmni, MountKind::SpinningNonOmni}) {
        for (int trial = 0; trial < 100; ++trial) {
            const CalibrationVector x = random_calib(kind, rng);
            std::uniform_real_distribution<double> angle(-kPi, kPi);
            const double theta1 = angle(rng), d1 = len(rng);
            const Eigen::Vector3d p(len(rng), len(rng), len(rng));
            const auto jac = point_jacobian_wrt_calib(x, theta1, d1, p);
            for (int k = 0; k < 4; ++k) {
                auto shifted = [&](double eps) {
                    CalibrationVector y = x;
                    (k == 0   ? y.theta_bar
                     : k == 1 ? y.d_bar
                     : k == 2 ? y.a_bar
                              : y.phi_bar) += eps;
                    return transform_to_motor(to_dh(y, theta1, d1), p);
                };
                const Eigen::Vector3d fd = (shifted(h) - shifted(-h)) / (2 * h);
                const double scale = std::max(1.0, fd.norm());
                EXPECT_LT((jac.col(k) - fd).norm() / scale, 1e-5)
                    << "kind=" << static_cast<int>(kind) << " param=" << k;
            }
        }
    }
}

TEST(PointJacobian, TranslationColumnsHaveUnitNorm) {
    std::mt19937_64 rng(5);
    for (MountKind kind :
         {MountKind::SpinningOmni, MountKind::SpinningNonOmni}) {
        for (int i = 0; i < 50; ++i) {
            const CalibrationVector x = random_calib(kind, rng);
            const auto jac =
                point_jacobian_wrt_calib(x, 0.7, 0.2, {1.0, -2.0, 0.5});
            EXPECT_NEAR(jac.col(1).norm(), 1.0, 1e-12);  // d_bar
            EXPECT_NEAR(jac.col(2).norm(), 1.0, 1e-12);  // a_bar
        }
    }
}

TEST(WrapAngle, HalfOpenInterval) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_NEAR(wrap_angle(-7 * kPi), kPi, 1e-12);
}
