#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spincal/dh.hpp"
#include "spincal/scan.hpp"
#include "spincal/voxel.hpp"

namespace spincal {

/// One coarse-to-fine stage: `iterations` outer rounds at `root_size`;
/// iterations == 0 means "all remaining rounds".
struct ScheduleStage {
    int iterations = 0;
    double root_size = 0.25;
};

inline std::vector<ScheduleStage> default_schedule() {
    return {{2, 1.0}, {2, 0.5}, {0, 0.25}};
}

inline double root_size_for_iteration(const std::vector<ScheduleStage>& schedule,
                                      int iteration /* 1-based */) {
    int consumed = 0;
    for (const auto& stage : schedule) {
        if (stage.iterations == 0) return stage.root_size;
        consumed += stage.iterations;
        if (iteration <= consumed) return stage.root_size;
    }
    return schedule.back().root_size;
}

struct CalibrationProblem {
    ScanFrame scan;
    CalibrationVector initial;
    double d1 = 0.0;
    std::vector<ScheduleStage> schedule = default_schedule();
    double convergence_tol = 1e-6;
    int max_iterations = 50;
    VoxelizationConfig voxel;  // root_size overridden by the schedule
    double eigengap_floor = 1e-9;
};

struct IterationTrace {
    int iteration = 0;
    double root_size = 0.0;
    double cost = 0.0;        // frozen-feature cost before the step
    double cost_after = 0.0;  // frozen-feature cost after the accepted step
    double mu = 0.0;
    double step_norm = 0.0;
    int feature_count = 0;
    int skipped_features = 0;
    bool accepted = false;
};

struct CalibrationResult {
    CalibrationVector estimate;
    double final_cost = 0.0;
    int iterations = 0;
    Eigen::Matrix4d hessian = Eigen::Matrix4d::Zero();
    double hessian_min_eigenvalue = 0.0;
    Eigen::Vector4d per_parameter_diag = Eigen::Vector4d::Zero();
    bool converged = false;
    std::string message;
    std::vector<IterationTrace> trace;
};

/// Scan prepared for repeated cost evaluations: LiDAR-frame points plus the
/// per-point interpolated encoder angle (constant across the optimization).
struct PreparedScan {
    std::vector<Eigen::Vector3d> points_L;
    std::vector<double> theta;
    std::vector<double> cos_theta, sin_theta;

    static PreparedScan from(const ScanFrame& scan) {
        PreparedScan p;
        p.points_L.reserve(scan.points.size());
        p.theta.reserve(scan.points.size());
        for (const auto& pt : scan.points) {
            p.points_L.push_back(pt.position);
            const double th = scan.encoder_angle_at(pt.timestamp);
            p.theta.push_back(th);
            p.cos_theta.push_back(std::cos(th));
            p.sin_theta.push_back(std::sin(th));
        }
        return p;
    }
};

/// Transform every point into the motor frame at its own encoder angle.
inline std::vector<Eigen::Vector3d> transform_cloud(
    const CalibrationVector& x, double d1, const PreparedScan& prep) {
    const DhParameterSet dh = to_dh(x, 0.0, d1);
    const Eigen::Matrix3d rbar =
        rot_x(dh.phi1) * rot_z(dh.theta2) * rot_x(dh.phi2);
    const Eigen::Vector3d tbar =
        rot_x(dh.phi1) * rot_z(dh.theta2) * Eigen::Vector3d(dh.a2, 0.0, dh.d2) +
        Eigen::Vector3d(dh.a1, 0.0, dh.d1);
    std::vector<Eigen::Vector3d> out(prep.points_L.size());
    for (size_t i = 0; i < prep.points_L.size(); ++i) {
        const Eigen::Vector3d v = rbar * prep.points_L[i] + tbar;
        const double c = prep.cos_theta[i], s = prep.sin_theta[i];
        out[i] = {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
    }
    return out;
}

struct CostEvaluation {
    double cost = 0.0;
    std::vector<PlaneFeature> features;
    std::vector<Eigen::Vector3d> cloud_M;
};

/// Sum of lambda_min over features extracted from the transformed cloud.
inline CostEvaluation total_cost(const CalibrationVector& x, double d1,
                                 const PreparedScan& prep,
                                 const VoxelizationConfig& cfg) {
    CostEvaluation ev;
    ev.cloud_M = transform_cloud(x, d1, prep);
    ev.features = adaptive_voxelize(ev.cloud_M, cfg);
    if (ev.features.empty())
        throw std::runtime_error("total_cost: no plane features extracted");
    for (const auto& f : ev.features) ev.cost += f.eigenvalues(0);
    return ev;
}

/// Cost of a frozen feature set re-evaluated at x (membership fixed). Used
/// by finite-difference checks and nowhere on the solve path.
inline double cost_on_features(const CalibrationVector& x, double d1,
                               const PreparedScan& prep,
                               const std::vector<PlaneFeature>& features) {
    const auto cloud = transform_cloud(x, d1, prep);
    double cost = 0.0;
    for (const auto& f : features) {
        std::vector<Eigen::Vector3d> pts;
        pts.reserve(f.point_indices.size());
        for (int i : f.point_indices) pts.push_back(cloud[static_cast<size_t>(i)]);
        Eigen::Vector3d q, ev, u;
        Eigen::Matrix3d a;
        plane_stats(pts, q, a, ev, u);
        cost += ev(0);
    }
    return cost;
}

/// Gradient and Gauss-Newton Hessian of the cost over the given features.
/// The gradient uses the exact first derivative of lambda_min,
/// d lambda / d p_j = (2/N) ((p_j - q)^T u) u^T, chained through the point
/// Jacobian; the Hessian is the PSD Gauss-Newton contraction of the same
/// per-point terms. Features with eigengap below `eigengap_floor` are
/// skipped and counted.
inline void cost_gradient_hessian(const CalibrationVector& x, double d1,
                                  const PreparedScan& prep,
                                  const std::vector<PlaneFeature>& features,
                                  const std::vector<Eigen::Vector3d>& cloud_M,
                                  double eigengap_floor,
                                  Eigen::Vector4d& gradient,
                                  Eigen::Matrix4d& hessian,
                                  int& skipped_features) {
    gradient.setZero();
    hessian.setZero();
    skipped_features = 0;
    int used = 0;
    for (const auto& f : features) {
        if (f.eigenvalues(1) - f.eigenvalues(0) < eigengap_floor) {
            ++skipped_features;
            continue;
        }
        ++used;
        const double n = static_cast<double>(f.point_indices.size());
        const Eigen::Vector3d& u = f.min_eigenvector;
        Eigen::Vector4d m = Eigen::Vector4d::Zero();
        Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
        for (int idx : f.point_indices) {
            const size_t j = static_cast<size_t>(idx);
            const Eigen::Matrix<double, 3, 4> jac = point_jacobian_wrt_calib(
                x, prep.theta[j], d1, prep.points_L[j]);
            const Eigen::Vector4d v = jac.transpose() * u;
            const double w = u.dot(cloud_M[j] - f.centroid);
            gradient += (2.0 / n) * w * v;
            m += v;
            s += v * v.transpose();
        }
        hessian += (2.0 / n) * (s - m * m.transpose() / n);
    }
    if (used == 0)
        throw std::runtime_error(
            "cost_gradient_hessian: all features degenerate");
    hessian = 0.5 * (hessian + hessian.transpose()).eval();
}

namespace detail {

inline bool is_final_stage(const std::vector<ScheduleStage>& schedule,
                           double root_size) {
    return root_size == schedule.back().root_size;
}

}  // namespace detail

/// Damped LM over the coarse-to-fine schedule: each outer round re-extracts
/// features at the scheduled root size, then runs LM steps on that frozen
/// feature set until inner stall. Steps solve (H + mu diag(H)) delta = -g,
/// accepting on cost decrease (mu /= 3) and rejecting otherwise (mu *= 3).
/// Terminates when the cost change within the final stage drops below the
/// tolerance.
inline CalibrationResult calibrate(const CalibrationProblem& problem) {
    CalibrationResult result;
    result.estimate = problem.initial;
    result.estimate.normalize_angles();

    const PreparedScan prep = PreparedScan::from(problem.scan);
    constexpr double kCostFloor = 1e-10;
    constexpr int kMaxStepAttempts = 10;
    constexpr int kMaxInnerSteps = 30;

    double mu = -1.0;
    bool converged = false;
    std::string message;
    int it = 1;
    for (; it <= problem.max_iterations; ++it) {
        const double root = root_size_for_iteration(problem.schedule, it);
        const bool final_stage = detail::is_final_stage(problem.schedule, root);
        VoxelizationConfig cfg = problem.voxel;
        cfg.root_size = root;

        IterationTrace tr;
        tr.iteration = it;
        tr.root_size = root;
        try {
            CostEvaluation ev =
                total_cost(result.estimate, problem.d1, prep, cfg);
            tr.cost = ev.cost;
            tr.cost_after = ev.cost;
            tr.feature_count = static_cast<int>(ev.features.size());
            if (ev.cost < kCostFloor) {
                converged = true;
                message = "cost below floor";
                result.trace.push_back(tr);
                break;
            }

            // Dimensionless damping: the step solves (H + mu diag(H)) d = -g.
            if (mu < 0.0) mu = 1e-3;

            // Inner LM loop on the frozen feature membership until stall.
            // Acceptance is judged against the frozen set: re-extraction can
            // legitimately add features (and cost) as alignment improves.
            std::vector<Eigen::Vector3d> cloud = std::move(ev.cloud_M);
            std::vector<PlaneFeature> features = std::move(ev.features);
            double round_cost = ev.cost;
            bool any_accepted = false;
            double step_norm_sum = 0.0;
            for (int inner = 0; inner < kMaxInnerSteps; ++inner) {
                Eigen::Vector4d g;
                Eigen::Matrix4d h;
                cost_gradient_hessian(result.estimate, problem.d1, prep,
                                      features, cloud, problem.eigengap_floor,
                                      g, h, tr.skipped_features);
                bool accepted = false;
                double new_cost = round_cost;
                for (int attempt = 0; attempt < kMaxStepAttempts; ++attempt) {
                    Eigen::Matrix4d damped = h;
                    damped.diagonal() += mu * h.diagonal();
                    const Eigen::Vector4d delta = damped.ldlt().solve(-g);
                    CalibrationVector candidate = result.estimate;
                    candidate.theta_bar += delta(0);
                    candidate.d_bar += delta(1);
                    candidate.a_bar += delta(2);
                    candidate.phi_bar += delta(3);
                    candidate.normalize_angles();
                    const double candidate_cost = cost_on_features(
                        candidate, problem.d1, prep, features);
                    if (candidate_cost < round_cost) {
                        result.estimate = candidate;
                        new_cost = candidate_cost;
                        step_norm_sum += delta.norm();
                        mu = std::max(mu / 3.0, 1e-12);
                        accepted = true;
                        break;
                    }
                    mu *= 3.0;
                }
                if (!accepted) break;
                any_accepted = true;
                const double improvement = round_cost - new_cost;
                round_cost = new_cost;
                if (improvement < problem.convergence_tol) break;
                // Refresh plane statistics of the frozen membership at the
                // updated estimate for the next inner step.
                cloud = transform_cloud(result.estimate, problem.d1, prep);
                for (auto& f : features) {
                    std::vector<int> idx = f.point_indices;
                    f = make_feature(cloud, std::move(idx));
                }
            }
            tr.cost_after = round_cost;
            tr.step_norm = step_norm_sum;
            tr.mu = mu;
            tr.accepted = any_accepted;
            result.trace.push_back(tr);

            if (final_stage) {
                if (!any_accepted ||
                    tr.cost - round_cost < problem.convergence_tol) {
                    converged = true;
                    message = any_accepted ? "cost change below tolerance"
                                           : "no improving step at final stage";
                    break;
                }
            }
        } catch (const std::runtime_error& e) {
            message = e.what();
            result.trace.push_back(tr);
            break;
        }
    }
    result.iterations = std::min(it, problem.max_iterations);
    result.converged = converged;
    if (!converged && message.empty()) message = "max iterations reached";
    result.message = message;

    // Report the final cost and Hessian at the finest scheduled root size.
    VoxelizationConfig cfg = problem.voxel;
    cfg.root_size = problem.schedule.back().root_size;
    try {
        CostEvaluation ev = total_cost(result.estimate, problem.d1, prep, cfg);
        result.final_cost = ev.cost;
        Eigen::Vector4d g;
        int skipped = 0;
        cost_gradient_hessian(result.estimate, problem.d1, prep, ev.features,
                              ev.cloud_M, problem.eigengap_floor, g,
                              result.hessian, skipped);
        result.per_parameter_diag = result.hessian.diagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(result.hessian);
        result.hessian_min_eigenvalue = es.eigenvalues()(0);
    } catch (const std::runtime_error& e) {
        result.converged = false;
        if (result.message.empty()) result.message = e.what();
    }
    return result;
}

/// Hessian of the cost evaluated at a fixed x (no optimization), with its
/// minimum eigenvalue; the observability metric.
inline CalibrationResult evaluate_at(const CalibrationVector& x, double d1,
                                     const ScanFrame& scan,
                                     const VoxelizationConfig& cfg,
                                     double eigengap_floor = 1e-9) {
    CalibrationResult result;
    result.estimate = x;
    const PreparedScan prep = PreparedScan::from(scan);
    CostEvaluation ev = total_cost(x, d1, prep, cfg);
    result.final_cost = ev.cost;
    Eigen::Vector4d g;
    int skipped = 0;
    cost_gradient_hessian(x, d1, prep, ev.features, ev.cloud_M, eigengap_floor,
                          g, result.hessian, skipped);
    result.per_parameter_diag = result.hessian.diagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(result.hessian);
    result.hessian_min_eigenvalue = es.eigenvalues()(0);
    result.converged = true;
    return result;
}

}  // namespace spincal
