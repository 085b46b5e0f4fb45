#pragma once

#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "spincal/optimizer.hpp"
#include "spincal/sim.hpp"

namespace spincal {

/// Thread cap for batch harnesses: SPINCAL_THREADS, 0 or unset = auto.
inline unsigned harness_threads() {
    if (const char* env = std::getenv("SPINCAL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Run `jobs(i)` for i in [0, count) on up to harness_threads() workers,
/// collecting results in index order so output is thread-count independent.
template <typename Fn>
auto run_indexed(int count, Fn&& job) {
    using R = decltype(job(0));
    std::vector<R> results(static_cast<size_t>(count));
    const unsigned workers =
        std::min<unsigned>(harness_threads(), static_cast<unsigned>(count));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) results[static_cast<size_t>(i)] = job(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                results[static_cast<size_t>(i)] = job(i);
        });
    for (auto& t : pool) t.join();
    return results;
}

// ---- Monte-Carlo accuracy harness -----------------------------------------

struct MonteCarloConfig {
    int trials = 50;
    MountKind mount = MountKind::SpinningOmni;
    SensorModel sensor = mid360_sensor();
    double motor_speed = 7.85;  // rad/s
    double duration = 1.6;      // seconds (~2 revolutions at 7.85 rad/s)
    double d1 = 0.0;
    double rot_noise = deg_to_rad(5.0);  // initial-guess perturbation
    double trans_noise = 0.05;
    std::uint64_t seed = 1;
    CalibrationProblem problem_template;
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    CalibrationVector ground_truth;
    CalibrationVector initial;
    CalibrationVector estimate;
    double trans_err_mm = 0.0;
    double angle_err_deg = 0.0;
    int iterations = 0;
    bool converged = false;
    double hessian_min_eig = 0.0;
    std::string error;  // non-empty when the trial itself failed
};

inline TrialRecord run_trial(const SceneSpec& scene,
                             const MonteCarloConfig& cfg, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = cfg.seed + static_cast<std::uint64_t>(trial) * 1000003ULL;
    try {
        rec.ground_truth = sample_ground_truth(cfg.mount, rec.seed);
        rec.initial = perturb_initial(rec.ground_truth, cfg.rot_noise,
                                      cfg.trans_noise, rec.seed + 1);
        CalibrationProblem problem = cfg.problem_template;
        problem.scan = generate_scan(scene, rec.ground_truth, cfg.d1,
                                     cfg.motor_speed, cfg.sensor, cfg.duration,
                                     rec.seed + 2);
        problem.initial = rec.initial;
        problem.d1 = cfg.d1;
        const CalibrationResult res = calibrate(problem);
        rec.estimate = res.estimate;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.hessian_min_eig = res.hessian_min_eigenvalue;
        calibration_errors(rec.estimate, rec.ground_truth, rec.trans_err_mm,
                           rec.angle_err_deg);
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.converged = false;
    }
    return rec;
}

/// Independent calibration trials: sample ground truth, generate a scan,
/// perturb the initial guess, calibrate, record errors. Individual trial
/// failures are recorded, never abort the batch.
inline std::vector<TrialRecord> monte_carlo(const SceneSpec& scene,
                                            const MonteCarloConfig& cfg) {
    return run_indexed(cfg.trials,
                       [&](int i) { return run_trial(scene, cfg, i); });
}

// ---- Observability sweep ---------------------------------------------------

struct ObservabilityPoint {
    double theta_bar = 0.0;  // radians
    double phi_bar = 0.0;
    double hessian_min_eig = 0.0;
    Eigen::Vector4d hessian_diag = Eigen::Vector4d::Zero();
};

struct ObservabilityConfig {
    MountKind mount = MountKind::SpinningOmni;
    SensorModel sensor = mid360_sensor();
    double motor_speed = 7.85;
    double duration = 0.8;  // one revolution
    double d1 = 0.0;
    double d_bar = 0.05;
    double a_bar = 0.05;
    double root_size = 0.25;
    VoxelizationConfig voxel;
    std::uint64_t seed = 1;
};

/// Evaluate lambda_min of the Hessian at the ground truth over a grid of
/// mounting angles (theta_bar, phi_bar).
inline std::vector<ObservabilityPoint> observability_sweep(
    const SceneSpec& scene, const ObservabilityConfig& cfg,
    const std::vector<double>& theta_grid, const std::vector<double>& phi_grid) {
    std::vector<std::pair<double, double>> mounts;
    for (double th : theta_grid)
        for (double ph : phi_grid) mounts.emplace_back(th, ph);
    return run_indexed(static_cast<int>(mounts.size()), [&](int i) {
        const auto [th, ph] = mounts[static_cast<size_t>(i)];
        ObservabilityPoint pt;
        pt.theta_bar = th;
        pt.phi_bar = ph;
        CalibrationVector gt;
        gt.kind = cfg.mount;
        gt.theta_bar = th;
        gt.phi_bar = ph;
        gt.d_bar = cfg.d_bar;
        gt.a_bar = cfg.a_bar;
        gt.normalize_angles();
        try {
            const ScanFrame scan =
                generate_scan(scene, gt, cfg.d1, cfg.motor_speed, cfg.sensor,
                              cfg.duration, cfg.seed);
            VoxelizationConfig vox = cfg.voxel;
            vox.root_size = cfg.root_size;
            const CalibrationResult res = evaluate_at(gt, cfg.d1, scan, vox);
            pt.hessian_min_eig = res.hessian_min_eigenvalue;
            pt.hessian_diag = res.per_parameter_diag;
        } catch (const std::exception&) {
            pt.hessian_min_eig = 0.0;
        }
        return pt;
    });
}

// ---- Identifiability analysis ----------------------------------------------

struct IdentifiabilityRecord {
    std::string scene;
    CalibrationVector ground_truth;
    CalibrationVector estimate;
    // Per free parameter [theta_bar, d_bar, a_bar, phi_bar]:
    Eigen::Vector4d errors = Eigen::Vector4d::Zero();  // mm for trans, deg for rot
    Eigen::Vector4d identifiability = Eigen::Vector4d::Zero();  // Hessian diag
    bool converged = false;
    std::string error;
};

struct IdentifiabilityConfig {
    MountKind mount = MountKind::SpinningOmni;
    SensorModel sensor = mid360_sensor();
    CalibrationVector mount_gt;  // the fixed mounting under test
    double motor_speed = 7.85;
    double duration = 1.6;
    double d1 = 0.0;
    double rot_offset = deg_to_rad(10.0);  // initial perturbation
    double trans_offset = 0.1;
    std::uint64_t seed = 1;
    CalibrationProblem problem_template;
};

inline CalibrationVector mid360_identifiability_mount() {
    CalibrationVector x;
    x.kind = MountKind::SpinningOmni;
    x.theta_bar = deg_to_rad(-90.0);
    x.d_bar = 0.5;
    x.a_bar = 0.1;
    x.phi_bar = deg_to_rad(90.0);
    return x;
}

inline CalibrationVector avia_identifiability_mount() {
    CalibrationVector x;
    x.kind = MountKind::SpinningNonOmni;
    x.theta_bar = 0.0;
    x.d_bar = 0.1;
    x.a_bar = 0.5;
    x.phi_bar = deg_to_rad(90.0);
    return x;
}

/// Per-scene calibration under a fixed mount with a fixed initial offset;
/// records per-parameter error and Hessian-diagonal identifiability values.
inline std::vector<IdentifiabilityRecord> identifiability_run(
    const std::vector<SceneSpec>& scenes, const IdentifiabilityConfig& cfg) {
    return run_indexed(static_cast<int>(scenes.size()), [&](int i) {
        const SceneSpec& scene = scenes[static_cast<size_t>(i)];
        IdentifiabilityRecord rec;
        rec.scene = scene.name;
        rec.ground_truth = cfg.mount_gt;
        rec.ground_truth.kind = cfg.mount;
        try {
            CalibrationProblem problem = cfg.problem_template;
            problem.scan =
                generate_scan(scene, rec.ground_truth, cfg.d1, cfg.motor_speed,
                              cfg.sensor, cfg.duration, cfg.seed);
            problem.d1 = cfg.d1;
            problem.initial = rec.ground_truth;
            problem.initial.theta_bar += cfg.rot_offset;
            problem.initial.phi_bar += cfg.rot_offset;
            problem.initial.d_bar += cfg.trans_offset;
            problem.initial.a_bar += cfg.trans_offset;
            problem.initial.normalize_angles();
            const CalibrationResult res = calibrate(problem);
            rec.estimate = res.estimate;
            rec.converged = res.converged;
            rec.identifiability = res.per_parameter_diag;
            rec.errors(0) = std::abs(rad_to_deg(
                angle_diff(res.estimate.theta_bar, rec.ground_truth.theta_bar)));
            rec.errors(1) =
                1000.0 * std::abs(res.estimate.d_bar - rec.ground_truth.d_bar);
            rec.errors(2) =
                1000.0 * std::abs(res.estimate.a_bar - rec.ground_truth.a_bar);
            rec.errors(3) = std::abs(rad_to_deg(
                angle_diff(res.estimate.phi_bar, rec.ground_truth.phi_bar)));
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        return rec;
    });
}

}  // namespace spincal
