#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "spincal/uncertainty.hpp"

namespace spincal {

/// One laser return in the LiDAR frame.
struct LaserPoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double timestamp = 0.0;

    double depth() const { return position.norm(); }
    Eigen::Vector3d bearing() const { return position.normalized(); }
};

struct EncoderSample {
    double timestamp = 0.0;
    double angle = 0.0;  // wrapped to (-pi, pi]
};

/// Timestamped laser points plus the encoder angle stream that brackets them.
struct ScanFrame {
    std::vector<LaserPoint> points;
    std::vector<EncoderSample> encoder_samples;
    double frame_span = 0.0;

    /// Interpolated encoder angle at time t. The stream must bracket t.
    double encoder_angle_at(double t) const {
        if (encoder_samples.size() < 2)
            throw std::runtime_error("ScanFrame: encoder stream too short");
        auto it = std::upper_bound(
            encoder_samples.begin(), encoder_samples.end(), t,
            [](double v, const EncoderSample& s) { return v < s.timestamp; });
        if (it == encoder_samples.begin() || it == encoder_samples.end())
            throw std::runtime_error("ScanFrame: timestamp outside encoder stream");
        const EncoderSample& b = *it;
        const EncoderSample& a = *(it - 1);
        return interpolate_encoder(a.angle, b.angle, a.timestamp, b.timestamp, t);
    }
};

}  // namespace spincal
