// Command-line surface for the spinning-LiDAR calibration toolkit:
// scan simulation, calibration, Monte-Carlo batches, observability and
// identifiability sweeps, environment classification, and the acceleration
// bound calculator.
//
// Exit codes: 0 success, 2 input error, 3 empty output, 4 non-convergence,
// 5 degenerate feature set.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "spincal/spincal.hpp"

namespace fs = std::filesystem;
using namespace spincal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitNotConverged = 4;
constexpr int kExitDegenerate = 5;

MountKind parse_mount(const std::string& s) {
    if (s == "omni") return MountKind::SpinningOmni;
    if (s == "non-omni") return MountKind::SpinningNonOmni;
    throw ParseError("unknown mount kind: " + s + " (expected omni|non-omni)");
}

SensorModel parse_sensor(const std::string& s) {
    if (s == "mid360") return mid360_sensor();
    if (s == "avia") return avia_sensor();
    throw ParseError("unknown sensor: " + s + " (expected mid360|avia)");
}

SceneSpec resolve_scene(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) {
        const std::string name = spec.substr(8);
        if (name == "planes40") return virtual_plane_scene();
        if (name.rfind("scene_", 0) == 0)
            return builtin_scene(std::stoi(name.substr(6)));
        throw ParseError("unknown builtin scene: " + name);
    }
    return load_scene(spec);
}

std::string out_path(const std::string& dir, const std::string& file) {
    fs::create_directories(dir);
    return (fs::path(dir) / file).string();
}

struct CommonFlags {
    std::string mount = "omni";
    std::string sensor = "mid360";
    double motor_speed = 7.85;
    double duration = 1.6;
    double d1 = 0.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

void write_common_manifest(std::vector<std::pair<std::string, std::string>>& kv,
                           const CommonFlags& c) {
    kv.emplace_back("mount", c.mount);
    kv.emplace_back("sensor", c.sensor);
    kv.emplace_back("motor_speed", std::to_string(c.motor_speed));
    kv.emplace_back("duration", std::to_string(c.duration));
    kv.emplace_back("d1", std::to_string(c.d1));
    kv.emplace_back("seed", std::to_string(c.seed));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spincal: spinning actuated LiDAR calibration toolkit"};
    app.require_subcommand(1);

    // ---- simulate ---------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "generate a synthetic scan");
    CommonFlags sim_f;
    std::string sim_scene = "builtin:planes40";
    std::vector<double> sim_gt = {0.3, 0.05, 0.05, 1.2};
    double sim_sigma_depth = 0.0, sim_sigma_bearing = 0.0;
    bool sim_encoder_noise = false;
    sim->add_option("--scene", sim_scene, "scene file or builtin:<name>");
    sim->add_option("--mount", sim_f.mount, "omni|non-omni");
    sim->add_option("--sensor", sim_f.sensor, "mid360|avia");
    sim->add_option("--gt", sim_gt, "ground truth theta d a phi (rad/m)")
        ->expected(4);
    sim->add_option("--motor-speed", sim_f.motor_speed, "rad/s");
    sim->add_option("--duration", sim_f.duration, "seconds");
    sim->add_option("--d1", sim_f.d1, "meters");
    sim->add_option("--sigma-depth", sim_sigma_depth, "range noise std, m");
    sim->add_option("--sigma-bearing", sim_sigma_bearing, "bearing noise std, rad");
    sim->add_flag("--encoder-noise", sim_encoder_noise,
                  "enable the uniform-interval encoder noise model");
    sim->add_option("--seed", sim_f.seed);
    sim->add_option("--out", sim_f.out_dir, "output directory");

    // ---- calibrate --------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "calibrate from a scan");
    std::string cal_points, cal_encoder, cal_mount = "omni",
                            cal_out = ".";
    std::vector<double> cal_initial = {0.0, 0.0, 0.0, 1.0};
    double cal_d1 = 0.0, cal_tol = 1e-6;
    int cal_max_iter = 50;
    cal->add_option("--points", cal_points, "points CSV (x,y,z,t)")->required();
    cal->add_option("--encoder", cal_encoder, "encoder CSV (t,theta)")->required();
    cal->add_option("--mount", cal_mount, "omni|non-omni");
    cal->add_option("--initial", cal_initial, "initial theta d a phi")->expected(4);
    cal->add_option("--d1", cal_d1);
    cal->add_option("--tol", cal_tol, "cost-change convergence threshold");
    cal->add_option("--max-iterations", cal_max_iter);
    cal->add_option("--out", cal_out, "output directory");

    // ---- montecarlo -------------------------------------------------------
    auto* mc = app.add_subcommand("montecarlo", "Monte-Carlo accuracy batch");
    CommonFlags mc_f;
    std::string mc_scene = "builtin:planes40";
    int mc_trials = 50;
    double mc_rot_noise_deg = 5.0, mc_trans_noise = 0.05;
    double mc_sigma_depth = 0.0, mc_sigma_bearing = 0.0;
    bool mc_encoder_noise = false;
    mc->add_option("--scene", mc_scene);
    mc->add_option("--mount", mc_f.mount);
    mc->add_option("--sensor", mc_f.sensor);
    mc->add_option("--trials", mc_trials);
    mc->add_option("--rot-noise-deg", mc_rot_noise_deg, "initial-guess rot noise");
    mc->add_option("--trans-noise", mc_trans_noise, "initial-guess trans noise, m");
    mc->add_option("--sigma-depth", mc_sigma_depth);
    mc->add_option("--sigma-bearing", mc_sigma_bearing);
    mc->add_flag("--encoder-noise", mc_encoder_noise);
    mc->add_option("--motor-speed", mc_f.motor_speed);
    mc->add_option("--duration", mc_f.duration);
    mc->add_option("--seed", mc_f.seed);
    mc->add_option("--out", mc_f.out_dir);

    // ---- observability ----------------------------------------------------
    auto* obs = app.add_subcommand("observability",
                                   "Hessian min-eigenvalue sweep over mounts");
    CommonFlags obs_f;
    std::string obs_scene = "builtin:planes40";
    double obs_step_deg = 10.0;
    obs->add_option("--scene", obs_scene);
    obs->add_option("--mount", obs_f.mount);
    obs->add_option("--sensor", obs_f.sensor);
    obs->add_option("--step-deg", obs_step_deg, "grid step, degrees");
    obs->add_option("--motor-speed", obs_f.motor_speed);
    obs->add_option("--duration", obs_f.duration);
    obs->add_option("--seed", obs_f.seed);
    obs->add_option("--out", obs_f.out_dir);

    // ---- identifiability --------------------------------------------------
    auto* id = app.add_subcommand(
        "identifiability", "six-scene per-parameter identifiability analysis");
    CommonFlags id_f;
    id->add_option("--mount", id_f.mount);
    id->add_option("--sensor", id_f.sensor);
    id->add_option("--motor-speed", id_f.motor_speed);
    id->add_option("--duration", id_f.duration);
    id->add_option("--seed", id_f.seed);
    id->add_option("--out", id_f.out_dir);

    // ---- env-classify -----------------------------------------------------
    auto* env = app.add_subcommand("env-classify",
                                   "classify frames by spatial scale");
    std::string env_points, env_out = ".";
    double env_s1 = 8.0, env_s2 = 20.0;
    env->add_option("--points", env_points, "points CSV (x,y,z,t)")->required();
    env->add_option("--s1", env_s1, "narrow criterion, m");
    env->add_option("--s2", env_s2, "wide criterion, m");
    env->add_option("--out", env_out);

    // ---- accel-bound ------------------------------------------------------
    auto* acc = app.add_subcommand("accel-bound",
                                   "acceleration upper bound calculator");
    double acc_eps = 0.1, acc_tscan = 0.1;
    acc->add_option("--epsilon", acc_eps, "correspondence threshold, m")
        ->required();
    acc->add_option("--t-scan", acc_tscan, "scan period, s")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            SceneSpec scene;
            try {
                scene = resolve_scene(sim_scene);
            } catch (const ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            SensorModel sensor = parse_sensor(sim_f.sensor);
            sensor.noise.sigma_depth = sim_sigma_depth;
            sensor.noise.sigma_bearing = sim_sigma_bearing;
            if (sim_encoder_noise)
                sensor.noise.sigma_encoder = default_encoder_sigma(
                    sim_f.motor_speed, 1.0 / sensor.encoder_rate);
            CalibrationVector gt;
            gt.kind = parse_mount(sim_f.mount);
            gt.theta_bar = sim_gt[0];
            gt.d_bar = sim_gt[1];
            gt.a_bar = sim_gt[2];
            gt.phi_bar = sim_gt[3];
            gt.normalize_angles();
            ScanFrame frame;
            try {
                frame = generate_scan(scene, gt, sim_f.d1, sim_f.motor_speed,
                                      sensor, sim_f.duration, sim_f.seed);
            } catch (const std::runtime_error& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitEmpty;
            }
            save_points_csv(frame, out_path(sim_f.out_dir, "points.csv"));
            save_encoder_csv(frame, out_path(sim_f.out_dir, "encoder.csv"));
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "simulate");
            kv.emplace_back("scene", sim_scene);
            write_common_manifest(kv, sim_f);
            kv.emplace_back("sigma_depth", std::to_string(sim_sigma_depth));
            kv.emplace_back("sigma_bearing", std::to_string(sim_sigma_bearing));
            kv.emplace_back("encoder_noise", sim_encoder_noise ? "1" : "0");
            kv.emplace_back("point_count", std::to_string(frame.points.size()));
            save_manifest(kv, out_path(sim_f.out_dir, "manifest.csv"));
            std::cout << "wrote " << frame.points.size() << " points to "
                      << sim_f.out_dir << "\n";
            return kExitOk;
        }

        if (cal->parsed()) {
            CalibrationProblem problem;
            try {
                problem.scan = load_scan(cal_points, cal_encoder);
                problem.initial.kind = parse_mount(cal_mount);
            } catch (const ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            problem.initial.theta_bar = cal_initial[0];
            problem.initial.d_bar = cal_initial[1];
            problem.initial.a_bar = cal_initial[2];
            problem.initial.phi_bar = cal_initial[3];
            problem.initial.normalize_angles();
            problem.d1 = cal_d1;
            problem.convergence_tol = cal_tol;
            problem.max_iterations = cal_max_iter;
            CalibrationResult result;
            try {
                result = calibrate(problem);
            } catch (const std::runtime_error& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitDegenerate;
            }
            save_result(result, out_path(cal_out, "result.csv"));
            save_trace_csv(result.trace, out_path(cal_out, "trace.csv"));
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "calibrate");
            kv.emplace_back("points", cal_points);
            kv.emplace_back("encoder", cal_encoder);
            kv.emplace_back("mount", cal_mount);
            kv.emplace_back("tol", std::to_string(cal_tol));
            kv.emplace_back("max_iterations", std::to_string(cal_max_iter));
            save_manifest(kv, out_path(cal_out, "manifest.csv"));
            std::cout << (result.converged ? "converged" : "not converged")
                      << " after " << result.iterations
                      << " iterations, cost " << result.final_cost
                      << ", hessian min eig " << result.hessian_min_eigenvalue
                      << "\n";
            if (result.message == "cost_gradient_hessian: all features degenerate" ||
                result.message == "total_cost: no plane features extracted")
                return kExitDegenerate;
            return result.converged ? kExitOk : kExitNotConverged;
        }

        if (mc->parsed()) {
            SceneSpec scene;
            try {
                scene = resolve_scene(mc_scene);
            } catch (const ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            MonteCarloConfig cfg;
            cfg.trials = mc_trials;
            cfg.mount = parse_mount(mc_f.mount);
            cfg.sensor = parse_sensor(mc_f.sensor);
            cfg.sensor.noise.sigma_depth = mc_sigma_depth;
            cfg.sensor.noise.sigma_bearing = mc_sigma_bearing;
            if (mc_encoder_noise)
                cfg.sensor.noise.sigma_encoder = default_encoder_sigma(
                    mc_f.motor_speed, 1.0 / cfg.sensor.encoder_rate);
            cfg.motor_speed = mc_f.motor_speed;
            cfg.duration = mc_f.duration;
            cfg.rot_noise = deg_to_rad(mc_rot_noise_deg);
            cfg.trans_noise = mc_trans_noise;
            cfg.seed = mc_f.seed;
            const auto trials = monte_carlo(scene, cfg);
            save_trials_csv(trials, out_path(mc_f.out_dir, "trials.csv"));
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "montecarlo");
            kv.emplace_back("scene", mc_scene);
            kv.emplace_back("trials", std::to_string(mc_trials));
            write_common_manifest(kv, mc_f);
            save_manifest(kv, out_path(mc_f.out_dir, "manifest.csv"));
            int converged = 0;
            double max_trans = 0.0, max_angle = 0.0;
            for (const auto& t : trials)
                if (t.converged && t.error.empty()) {
                    ++converged;
                    max_trans = std::max(max_trans, t.trans_err_mm);
                    max_angle = std::max(max_angle, t.angle_err_deg);
                }
            std::cout << converged << "/" << trials.size()
                      << " converged, max trans err " << max_trans
                      << " mm, max angle err " << max_angle << " deg\n";
            return kExitOk;
        }

        if (obs->parsed()) {
            SceneSpec scene;
            try {
                scene = resolve_scene(obs_scene);
            } catch (const ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            ObservabilityConfig cfg;
            cfg.mount = parse_mount(obs_f.mount);
            cfg.sensor = parse_sensor(obs_f.sensor);
            cfg.motor_speed = obs_f.motor_speed;
            cfg.duration = obs_f.duration;
            cfg.seed = obs_f.seed;
            std::vector<double> grid;
            for (double a = -180.0; a <= 180.0; a += obs_step_deg)
                grid.push_back(deg_to_rad(a));
            const auto sweep = observability_sweep(scene, cfg, grid, grid);
            save_observability_csv(sweep,
                                   out_path(obs_f.out_dir, "observability.csv"));
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "observability");
            kv.emplace_back("scene", obs_scene);
            kv.emplace_back("step_deg", std::to_string(obs_step_deg));
            write_common_manifest(kv, obs_f);
            save_manifest(kv, out_path(obs_f.out_dir, "manifest.csv"));
            std::cout << "wrote " << sweep.size() << " grid rows\n";
            return kExitOk;
        }

        if (id->parsed()) {
            IdentifiabilityConfig cfg;
            cfg.mount = parse_mount(id_f.mount);
            cfg.sensor = parse_sensor(id_f.sensor);
            cfg.mount_gt = cfg.mount == MountKind::SpinningOmni
                               ? mid360_identifiability_mount()
                               : avia_identifiability_mount();
            cfg.motor_speed = id_f.motor_speed;
            cfg.duration = id_f.duration;
            cfg.seed = id_f.seed;
            std::vector<SceneSpec> scenes;
            for (int i = 1; i <= 6; ++i) scenes.push_back(builtin_scene(i));
            const auto records = identifiability_run(scenes, cfg);
            save_identifiability_csv(
                records, out_path(id_f.out_dir, "identifiability.csv"));
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "identifiability");
            write_common_manifest(kv, id_f);
            save_manifest(kv, out_path(id_f.out_dir, "manifest.csv"));
            std::cout << "wrote " << records.size() << " scene rows\n";
            return kExitOk;
        }

        if (env->parsed()) {
            ScanFrame frame;
            try {
                std::ifstream probe(env_points);
                if (!probe) throw ParseError("cannot open points file: " + env_points);
                // classification needs positions only; a synthetic bracketing
                // encoder stream satisfies the loader.
                frame = ScanFrame{};
                std::string line;
                int line_no = 0;
                while (std::getline(probe, line)) {
                    ++line_no;
                    if (line_no == 1 || line.empty()) continue;
                    std::stringstream ss(line);
                    std::string item;
                    LaserPoint p;
                    int idx = 0;
                    while (std::getline(ss, item, ',') && idx < 4) {
                        const double v = std::stod(item);
                        if (idx < 3) p.position(idx) = v;
                        else p.timestamp = v;
                        ++idx;
                    }
                    if (idx != 4)
                        throw ParseError(env_points + ":" +
                                         std::to_string(line_no) +
                                         ": expected 4 fields");
                    frame.points.push_back(p);
                }
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            if (frame.points.empty()) {
                std::cerr << "error: no points\n";
                return kExitEmpty;
            }
            EnvConfig cfg;
            cfg.s1 = env_s1;
            cfg.s2 = env_s2;
            std::vector<Eigen::Vector3d> pts;
            for (const auto& p : frame.points) pts.push_back(p.position);
            std::vector<Eigen::Vector3d> down;
            const EnvDecision d = classify(pts, {}, cfg, down);
            const std::string path = out_path(env_out, "env.csv");
            std::ofstream out(path);
            out << "frame_id,point_count,panoramic_count,s,class,V_s,map_index\n";
            out << "0," << pts.size() << ',' << d.panoramic_count << ','
                << d.spatial_scale << ',' << env_class_name(d.env_class) << ','
                << d.selected_rate << ',' << d.selected_map_index << "\n";
            std::vector<std::pair<std::string, std::string>> kv;
            kv.emplace_back("command", "env-classify");
            kv.emplace_back("points", env_points);
            kv.emplace_back("s1", std::to_string(env_s1));
            kv.emplace_back("s2", std::to_string(env_s2));
            save_manifest(kv, out_path(env_out, "manifest.csv"));
            std::cout << env_class_name(d.env_class) << " s=" << d.spatial_scale
                      << " V_s=" << d.selected_rate << "\n";
            return kExitOk;
        }

        if (acc->parsed()) {
            double bound;
            try {
                bound = max_acceleration_bound(acc_eps, acc_tscan);
            } catch (const std::invalid_argument& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInput;
            }
            std::cout << bound << "\n";
            return kExitOk;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
