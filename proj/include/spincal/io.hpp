#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spincal/harness.hpp"
#include "spincal/scan.hpp"
#include "spincal/sim.hpp"

namespace spincal {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": bad number '" + s + "'");
    }
}

}  // namespace detail

// ---- scene files -----------------------------------------------------------
//
// One plane per non-comment line:
//   plane cx cy cz nx ny nz hx hy
// '#' starts a comment; blank lines are ignored.

inline SceneSpec load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scene file: " + path);
    SceneSpec scene;
    scene.name = std::filesystem::path(path).stem().string();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        const std::string ctx = path + ":" + std::to_string(line_no);
        if (tag != "plane") throw ParseError(ctx + ": expected 'plane', got '" + tag + "'");
        VirtualPlane p;
        double nx, ny, nz;
        if (!(ss >> p.center.x() >> p.center.y() >> p.center.z() >> nx >> ny >>
              nz >> p.half_extents.x() >> p.half_extents.y()))
            throw ParseError(ctx + ": expected 8 numeric fields after 'plane'");
        const double nn = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (nn < 1e-12) throw ParseError(ctx + ": zero normal");
        if (p.half_extents.minCoeff() <= 0.0)
            throw ParseError(ctx + ": half extents must be positive");
        p.normal = Eigen::Vector3d(nx, ny, nz) / nn;
        scene.planes.push_back(p);
    }
    if (scene.planes.empty())
        throw ParseError(path + ": scene file defines no planes");
    return scene;
}

inline void save_scene(const SceneSpec& scene, const std::string& path) {
    std::ofstream out(path);
    out << "# scene: " << scene.name << "\n";
    out << "# plane cx cy cz nx ny nz hx hy\n";
    for (const auto& p : scene.planes) {
        out << "plane";
        for (int i = 0; i < 3; ++i) out << ' ' << detail::format_double(p.center(i));
        for (int i = 0; i < 3; ++i) out << ' ' << detail::format_double(p.normal(i));
        out << ' ' << detail::format_double(p.half_extents.x()) << ' '
            << detail::format_double(p.half_extents.y()) << "\n";
    }
}

// ---- point cloud / encoder CSV --------------------------------------------

inline void save_points_csv(const ScanFrame& frame, const std::string& path) {
    std::ofstream out(path);
    out << "x,y,z,t\n";
    for (const auto& p : frame.points)
        out << detail::format_double(p.position.x()) << ','
            << detail::format_double(p.position.y()) << ','
            << detail::format_double(p.position.z()) << ','
            << detail::format_double(p.timestamp) << "\n";
}

inline void save_encoder_csv(const ScanFrame& frame, const std::string& path) {
    std::ofstream out(path);
    out << "t,theta\n";
    for (const auto& s : frame.encoder_samples)
        out << detail::format_double(s.timestamp) << ','
            << detail::format_double(s.angle) << "\n";
}

inline ScanFrame load_scan(const std::string& points_path,
                           const std::string& encoder_path) {
    ScanFrame frame;
    {
        std::ifstream in(points_path);
        if (!in) throw ParseError("cannot open points file: " + points_path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line_no == 1) {
                if (line != "x,y,z,t")
                    throw ParseError(points_path + ":1: expected header x,y,z,t");
                continue;
            }
            const auto f = detail::split(line, ',');
            const std::string ctx = points_path + ":" + std::to_string(line_no);
            if (f.size() != 4) throw ParseError(ctx + ": expected 4 fields");
            LaserPoint p;
            p.position = {detail::parse_double(f[0], ctx),
                          detail::parse_double(f[1], ctx),
                          detail::parse_double(f[2], ctx)};
            p.timestamp = detail::parse_double(f[3], ctx);
            frame.points.push_back(p);
        }
    }
    {
        std::ifstream in(encoder_path);
        if (!in) throw ParseError("cannot open encoder file: " + encoder_path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line_no == 1) {
                if (line != "t,theta")
                    throw ParseError(encoder_path + ":1: expected header t,theta");
                continue;
            }
            const auto f = detail::split(line, ',');
            const std::string ctx = encoder_path + ":" + std::to_string(line_no);
            if (f.size() != 2) throw ParseError(ctx + ": expected 2 fields");
            EncoderSample s;
            s.timestamp = detail::parse_double(f[0], ctx);
            s.angle = detail::parse_double(f[1], ctx);
            frame.encoder_samples.push_back(s);
        }
    }
    if (!frame.points.empty())
        frame.frame_span = frame.points.back().timestamp;

    // Every point timestamp must be bracketed by the encoder stream.
    if (frame.encoder_samples.size() < 2)
        throw ParseError(encoder_path + ": encoder stream too short");
    const double t0 = frame.encoder_samples.front().timestamp;
    const double t1 = frame.encoder_samples.back().timestamp;
    for (const auto& p : frame.points)
        if (p.timestamp < t0 || p.timestamp > t1)
            throw ParseError("encoder stream does not cover point timestamp " +
                             detail::format_double(p.timestamp));
    return frame;
}

// ---- result / trace / table CSV -------------------------------------------

inline const char* mount_name(MountKind k) {
    return k == MountKind::SpinningOmni ? "omni" : "non-omni";
}

inline void save_trace_csv(const std::vector<IterationTrace>& trace,
                           const std::string& path) {
    std::ofstream out(path);
    out << "iteration,root_size,cost,cost_after,mu,step_norm,feature_count,"
           "skipped_features,accepted\n";
    for (const auto& t : trace)
        out << t.iteration << ',' << detail::format_double(t.root_size) << ','
            << detail::format_double(t.cost) << ','
            << detail::format_double(t.cost_after) << ','
            << detail::format_double(t.mu) << ','
            << detail::format_double(t.step_norm) << ',' << t.feature_count
            << ',' << t.skipped_features << ',' << (t.accepted ? 1 : 0) << "\n";
}

inline void save_result(const CalibrationResult& r, const std::string& path) {
    std::ofstream out(path);
    out << "theta_bar," << detail::format_double(r.estimate.theta_bar) << "\n";
    out << "d_bar," << detail::format_double(r.estimate.d_bar) << "\n";
    out << "a_bar," << detail::format_double(r.estimate.a_bar) << "\n";
    out << "phi_bar," << detail::format_double(r.estimate.phi_bar) << "\n";
    out << "mount," << mount_name(r.estimate.kind) << "\n";
    out << "final_cost," << detail::format_double(r.final_cost) << "\n";
    out << "iterations," << r.iterations << "\n";
    out << "converged," << (r.converged ? 1 : 0) << "\n";
    out << "hessian_min_eigenvalue,"
        << detail::format_double(r.hessian_min_eigenvalue) << "\n";
    for (int i = 0; i < 4; ++i)
        out << "hessian_diag_" << i << ','
            << detail::format_double(r.per_parameter_diag(i)) << "\n";
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out << "hessian_" << i << j << ','
                << detail::format_double(r.hessian(i, j)) << "\n";
    out << "degenerate_warning,"
        << (r.hessian_min_eigenvalue < 1.0 ? 1 : 0) << "\n";
    out << "message," << r.message << "\n";
}

inline void save_trials_csv(const std::vector<TrialRecord>& trials,
                            const std::string& path) {
    std::ofstream out(path);
    out << "trial,seed,gt_theta,gt_d,gt_a,gt_phi,init_theta,init_d,init_a,"
           "init_phi,est_theta,est_d,est_a,est_phi,trans_err_mm,angle_err_deg,"
           "iterations,converged,hessian_min_eig,error\n";
    for (const auto& t : trials) {
        out << t.trial << ',' << t.seed << ','
            << detail::format_double(t.ground_truth.theta_bar) << ','
            << detail::format_double(t.ground_truth.d_bar) << ','
            << detail::format_double(t.ground_truth.a_bar) << ','
            << detail::format_double(t.ground_truth.phi_bar) << ','
            << detail::format_double(t.initial.theta_bar) << ','
            << detail::format_double(t.initial.d_bar) << ','
            << detail::format_double(t.initial.a_bar) << ','
            << detail::format_double(t.initial.phi_bar) << ','
            << detail::format_double(t.estimate.theta_bar) << ','
            << detail::format_double(t.estimate.d_bar) << ','
            << detail::format_double(t.estimate.a_bar) << ','
            << detail::format_double(t.estimate.phi_bar) << ','
            << detail::format_double(t.trans_err_mm) << ','
            << detail::format_double(t.angle_err_deg) << ',' << t.iterations
            << ',' << (t.converged ? 1 : 0) << ','
            << detail::format_double(t.hessian_min_eig) << ',' << t.error
            << "\n";
    }
}

inline void save_observability_csv(const std::vector<ObservabilityPoint>& grid,
                                   const std::string& path) {
    std::ofstream out(path);
    out << "theta_bar_deg,phi_bar_deg,hessian_min_eig,diag_theta,diag_d,"
           "diag_a,diag_phi\n";
    for (const auto& p : grid)
        out << detail::format_double(rad_to_deg(p.theta_bar)) << ','
            << detail::format_double(rad_to_deg(p.phi_bar)) << ','
            << detail::format_double(p.hessian_min_eig) << ','
            << detail::format_double(p.hessian_diag(0)) << ','
            << detail::format_double(p.hessian_diag(1)) << ','
            << detail::format_double(p.hessian_diag(2)) << ','
            << detail::format_double(p.hessian_diag(3)) << "\n";
}

inline void save_identifiability_csv(
    const std::vector<IdentifiabilityRecord>& records,
    const std::string& path) {
    std::ofstream out(path);
    out << "scene,err_theta_deg,err_d_mm,err_a_mm,err_phi_deg,id_theta,id_d,"
           "id_a,id_phi,converged,error\n";
    for (const auto& r : records) {
        out << r.scene;
        for (int i = 0; i < 4; ++i)
            out << ',' << detail::format_double(r.errors(i));
        for (int i = 0; i < 4; ++i)
            out << ',' << detail::format_double(r.identifiability(i));
        out << ',' << (r.converged ? 1 : 0) << ',' << r.error << "\n";
    }
}

/// Manifest: the fully resolved configuration of a run, written next to its
/// outputs so any artifact is re-derivable.
inline void save_manifest(const std::vector<std::pair<std::string, std::string>>& kv,
                          const std::string& path) {
    std::ofstream out(path);
    out << "artifact_version,1\n";
    for (const auto& [k, v] : kv) out << k << ',' << v << "\n";
}

}  // namespace spincal
