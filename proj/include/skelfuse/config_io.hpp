#pragma once

#include "skelfuse/evaluation.hpp"
#include "skelfuse/sim_network.hpp"
#include "skelfuse/tracker.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// YAML readers for the scenario, evaluation and tracker configuration
// files. Every error message is prefixed with "<source>:<line>:".
//
// Scenario:
//   seed: 7
//   duration: 20.0            # s
//   splat_radius_px: 4        # optional
//   lift_radius_px: 3         # optional
//   persons:
//     - id: walker
//       swing_amplitude: 0.35 # rad, optional
//       swing_frequency: 0.9  # Hz, optional
//       swing_phase: 0.0      # rad, optional
//       waypoints:            # either waypoints ...
//         - {t: 0, x: 0, y: 0, yaw: 0}
//       circle: {center: [0, 0], radius: 1.2, period: 12, phase: 0}   # ... or circle
//   cameras:
//     - id: kinect_0
//       fx: 365.0
//       fy: 365.0
//       cx: 256.0
//       cy: 212.0
//       width: 512
//       height: 424
//       position: [3, 3, 2.5]     # either position + look_at ...
//       look_at: [0, 0, 1]
//       extrinsic: [16 numbers]   # ... or a row-major camera->world matrix
//       frame_rate: 30
//       phase: 0.0                # s, optional
//       latency_jitter: [0.0, 0.02]
//       pixel_noise_sigma: 3.0
//       depth_noise_sigma: 0.03
//       joint_dropout: 0.15
//       detection_dropout: 0.0
//
// Evaluation:
//   reference_camera: kinect_0
//   camera_subsets: [[kinect_0], [kinect_0, kinect_1]]
//   maf_windows: [30, 40]
//   seeds: [1, 2, 3]          # or seed_count: 10 (seeds 1..10)
//   warmup: 1.0
//   tracker: {...}            # as the tracker file
//
// Tracker:
//   gating_eps: 9.49
//   max_track_age: 1.0
//   min_hits_to_confirm: 3
//   staleness_tolerance: 0.5
//   merge_distance: 0.3
//   process_accel_sigma: 2.0
//   meas_sigma: 0.05
//   init_velocity_sigma: 1.0
//   ukf_alpha: 0.1
//   ukf_beta: 2.0
//   ukf_kappa: 0.0

namespace skelfuse::config {

namespace detail {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        const int line = at.IsDefined() ? at.Mark().line + 1 : 0;
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    YAML::Node require(const YAML::Node& map, const std::string& key) const {
        const YAML::Node n = map[key];
        if (!n) fail(map, "missing required key '" + key + "'");
        return n;
    }

    template <typename T>
    T as(const YAML::Node& n, const std::string& what) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "'" + what + "' has the wrong type");
        }
    }

    template <typename T>
    T get(const YAML::Node& map, const std::string& key) const {
        return as<T>(require(map, key), key);
    }

    template <typename T>
    T get(const YAML::Node& map, const std::string& key, T fallback) const {
        const YAML::Node n = map[key];
        return n ? as<T>(n, key) : fallback;
    }

    Vec3 vec3(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence() || n.size() != 3) fail(n, "'" + what + "' must be a list of 3 numbers");
        return {as<double>(n[0], what), as<double>(n[1], what), as<double>(n[2], what)};
    }

    void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed) const {
        if (!map.IsMap()) fail(map, "expected a mapping");
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

inline YAML::Node load(const std::string& text, const std::string& source) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TrackerConfig tracker_from_node(const Reader& r, const YAML::Node& n) {
    TrackerConfig t;
    if (!n || n.IsNull()) return t;
    r.check_keys(n, {"gating_eps", "max_track_age", "min_hits_to_confirm", "staleness_tolerance",
                     "merge_distance", "process_accel_sigma", "meas_sigma", "init_velocity_sigma", "ukf_alpha",
                     "ukf_beta", "ukf_kappa"});
    t.gating.epsilon = r.get<double>(n, "gating_eps", t.gating.epsilon);
    t.max_track_age = r.get<double>(n, "max_track_age", t.max_track_age);
    t.min_hits_to_confirm = r.get<std::uint32_t>(n, "min_hits_to_confirm", t.min_hits_to_confirm);
    t.staleness_tolerance = r.get<double>(n, "staleness_tolerance", t.staleness_tolerance);
    t.merge_distance = r.get<double>(n, "merge_distance", t.merge_distance);
    t.noise.process_accel_sigma = r.get<double>(n, "process_accel_sigma", t.noise.process_accel_sigma);
    t.noise.meas_sigma = r.get<double>(n, "meas_sigma", t.noise.meas_sigma);
    t.noise.init_velocity_sigma = r.get<double>(n, "init_velocity_sigma", t.noise.init_velocity_sigma);
    t.noise.alpha = r.get<double>(n, "ukf_alpha", t.noise.alpha);
    t.noise.beta = r.get<double>(n, "ukf_beta", t.noise.beta);
    t.noise.kappa = r.get<double>(n, "ukf_kappa", t.noise.kappa);
    try {
        t.validate();
    } catch (const ConfigError& e) {
        r.fail(n, e.what());
    }
    return t;
}

inline sim::PersonSpec person_from_node(const Reader& r, const YAML::Node& n) {
    r.check_keys(n, {"id", "swing_amplitude", "swing_frequency", "swing_phase", "waypoints", "circle"});
    sim::PersonSpec p;
    p.id = r.get<std::string>(n, "id");
    p.swing_amplitude = r.get<double>(n, "swing_amplitude", p.swing_amplitude);
    p.swing_frequency = r.get<double>(n, "swing_frequency", p.swing_frequency);
    p.swing_phase = r.get<double>(n, "swing_phase", p.swing_phase);
    const bool has_wp = static_cast<bool>(n["waypoints"]);
    const bool has_circle = static_cast<bool>(n["circle"]);
    if (has_wp == has_circle) r.fail(n, "person '" + p.id + "' needs exactly one of 'waypoints' or 'circle'");
    if (has_wp) {
        const YAML::Node wps = n["waypoints"];
        if (!wps.IsSequence() || wps.size() == 0) r.fail(wps, "'waypoints' must be a non-empty list");
        sim::WaypointPath path;
        for (const auto& w : wps) {
            r.check_keys(w, {"t", "x", "y", "yaw"});
            path.points.push_back({r.get<double>(w, "t"), r.get<double>(w, "x"),
                                   r.get<double>(w, "y"), r.get<double>(w, "yaw", 0.0)});
            if (path.points.size() > 1 && !(path.points.back().t > path.points[path.points.size() - 2].t))
                r.fail(w, "waypoint times must increase");
        }
        p.path = std::move(path);
    } else {
        const YAML::Node c = n["circle"];
        r.check_keys(c, {"center", "radius", "period", "phase"});
        const YAML::Node center = r.require(c, "center");
        if (!center.IsSequence() || center.size() != 2) r.fail(center, "'center' must be [x, y]");
        sim::CirclePath circle;
        circle.center_x = r.as<double>(center[0], "center");
        circle.center_y = r.as<double>(center[1], "center");
        circle.radius = r.get<double>(c, "radius");
        circle.period = r.get<double>(c, "period");
        circle.phase = r.get<double>(c, "phase", 0.0);
        if (!(circle.radius >= 0.0)) r.fail(c, "circle radius must be >= 0");
        if (circle.period == 0.0) r.fail(c, "circle period must be non-zero");
        p.path = circle;
    }
    if (!(p.swing_amplitude >= 0.0) || !(p.swing_frequency >= 0.0))
        r.fail(n, "swing amplitude and frequency must be >= 0");
    return p;
}

inline sim::CameraSpec camera_from_node(const Reader& r, const YAML::Node& n) {
    r.check_keys(n, {"id", "fx", "fy", "cx", "cy", "width", "height", "position", "look_at",
                     "extrinsic", "frame_rate", "phase", "latency_jitter", "pixel_noise_sigma",
                     "depth_noise_sigma", "joint_dropout", "detection_dropout"});
    const auto id = r.get<std::string>(n, "id");
    Eigen::Matrix4d ext;
    if (n["extrinsic"]) {
        if (n["position"] || n["look_at"]) r.fail(n, "camera '" + id + "': give either extrinsic or position/look_at");
        const YAML::Node e = n["extrinsic"];
        if (!e.IsSequence() || e.size() != 16) r.fail(e, "'extrinsic' must hold 16 numbers");
        for (std::size_t k = 0; k < 16; ++k)
            ext(static_cast<Eigen::Index>(k / 4), static_cast<Eigen::Index>(k % 4)) =
                r.as<double>(e[k], "extrinsic");
    } else {
        const Vec3 pos = r.vec3(r.require(n, "position"), "position");
        const Vec3 target = r.vec3(r.require(n, "look_at"), "look_at");
        try {
            ext = look_at(pos, target);
        } catch (const ConfigError& e) {
            r.fail(n, "camera '" + id + "': " + e.what());
        }
    }

    sim::CameraSpec spec;
    try {
        spec.camera = CameraModel(id, r.get<double>(n, "fx"), r.get<double>(n, "fy"),
                                  r.get<double>(n, "cx"), r.get<double>(n, "cy"), ext,
                                  r.get<int>(n, "width"), r.get<int>(n, "height"));
    } catch (const ConfigError& e) {
        if (std::string(e.what()).rfind(r.source(), 0) == 0) throw;
        r.fail(n, e.what());
    }
    spec.frame_rate = r.get<double>(n, "frame_rate");
    spec.phase = r.get<double>(n, "phase", 0.0);
    if (const YAML::Node j = n["latency_jitter"]) {
        if (!j.IsSequence() || j.size() != 2) r.fail(j, "'latency_jitter' must be [min, max]");
        spec.jitter_min = r.as<double>(j[0], "latency_jitter");
        spec.jitter_max = r.as<double>(j[1], "latency_jitter");
    }
    spec.pixel_noise_sigma = r.get<double>(n, "pixel_noise_sigma", 0.0);
    spec.depth_noise_sigma = r.get<double>(n, "depth_noise_sigma", 0.0);
    spec.joint_dropout = r.get<double>(n, "joint_dropout", 0.0);
    spec.detection_dropout = r.get<double>(n, "detection_dropout", 0.0);

    if (!(spec.camera.width() > 0 && spec.camera.height() > 0)) r.fail(n, "width and height must be positive");
    if (!(spec.frame_rate > 0.0)) r.fail(n["frame_rate"], "frame_rate must be > 0");
    if (!(spec.phase >= 0.0)) r.fail(n["phase"], "phase must be >= 0");
    if (!(spec.jitter_min >= 0.0 && spec.jitter_max >= spec.jitter_min))
        r.fail(n["latency_jitter"], "latency_jitter must satisfy 0 <= min <= max");
    if (!(spec.pixel_noise_sigma >= 0.0 && spec.depth_noise_sigma >= 0.0))
        r.fail(n, "noise sigmas must be >= 0");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(spec.joint_dropout)) r.fail(n["joint_dropout"], "joint_dropout must lie in [0, 1]");
    if (!prob(spec.detection_dropout))
        r.fail(n["detection_dropout"], "detection_dropout must lie in [0, 1]");
    return spec;
}

}  // namespace detail

inline sim::ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "scenario") {
    const detail::Reader r(source);
    const YAML::Node root = detail::load(text, source);
    if (!root.IsMap()) r.fail(root, "scenario must be a mapping");
    r.check_keys(root, {"seed", "duration", "splat_radius_px", "lift_radius_px", "persons", "cameras"});

    sim::ScenarioConfig cfg;
    cfg.seed = r.get<std::uint64_t>(root, "seed", 0);
    cfg.duration = r.get<double>(root, "duration");
    if (!(cfg.duration > 0.0)) r.fail(root["duration"], "duration must be > 0");
    cfg.splat_radius_px = r.get<double>(root, "splat_radius_px", cfg.splat_radius_px);
    if (!(cfg.splat_radius_px > 0.0)) r.fail(root["splat_radius_px"], "splat_radius_px must be > 0");
    const double lift = r.get<double>(root, "lift_radius_px", cfg.lift_radius.pixels);
    if (!(lift > 0.0)) r.fail(root["lift_radius_px"], "lift_radius_px must be > 0");
    cfg.lift_radius = NeighborhoodRadius(lift);

    const YAML::Node persons = r.require(root, "persons");
    if (!persons.IsSequence()) r.fail(persons, "'persons' must be a list");
    for (const auto& p : persons) cfg.persons.push_back(detail::person_from_node(r, p));

    const YAML::Node cams = r.require(root, "cameras");
    if (!cams.IsSequence() || cams.size() == 0) r.fail(cams, "'cameras' must be a non-empty list");
    for (const auto& c : cams) {
        cfg.cameras.push_back(detail::camera_from_node(r, c));
        for (std::size_t k = 0; k + 1 < cfg.cameras.size(); ++k)
            if (cfg.cameras[k].camera.id() == cfg.cameras.back().camera.id())
                r.fail(c, "duplicate camera id '" + cfg.cameras.back().camera.id() + "'");
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        r.fail(root, e.what());
    }
    return cfg;
}

inline sim::ScenarioConfig load_scenario(const std::string& path) {
    return parse_scenario(detail::slurp(path), path);
}

inline TrackerConfig parse_tracker_config(const std::string& text, const std::string& source = "tracker") {
    const detail::Reader r(source);
    return detail::tracker_from_node(r, detail::load(text, source));
}

inline TrackerConfig load_tracker_config(const std::string& path) {
    return parse_tracker_config(detail::slurp(path), path);
}

inline eval::EvalConfig parse_eval_config(const std::string& text, const std::string& source = "eval") {
    const detail::Reader r(source);
    const YAML::Node root = detail::load(text, source);
    eval::EvalConfig cfg;
    if (!root || root.IsNull()) return cfg;
    r.check_keys(root, {"reference_camera", "camera_subsets", "maf_windows", "seeds", "seed_count",
                        "warmup", "tracker"});
    cfg.reference_camera = r.get<std::string>(root, "reference_camera", "");
    if (const YAML::Node subsets = root["camera_subsets"]) {
        if (!subsets.IsSequence()) r.fail(subsets, "'camera_subsets' must be a list of lists");
        for (const auto& s : subsets) {
            if (!s.IsSequence() || s.size() == 0) r.fail(s, "each camera subset must be a non-empty list");
            cfg.camera_subsets.push_back(r.as<std::vector<std::string>>(s, "camera_subsets"));
        }
    }
    if (const YAML::Node m = root["maf_windows"]) {
        cfg.maf_windows = r.as<std::vector<std::size_t>>(m, "maf_windows");
        for (std::size_t k : cfg.maf_windows)
            if (k == 0) r.fail(m, "MAF windows must be >= 1");
    }
    if (root["seeds"] && root["seed_count"]) r.fail(root, "give either 'seeds' or 'seed_count'");
    if (const YAML::Node s = root["seeds"]) cfg.seeds = r.as<std::vector<std::uint64_t>>(s, "seeds");
    if (const YAML::Node s = root["seed_count"]) {
        const auto n = r.as<std::uint64_t>(s, "seed_count");
        for (std::uint64_t i = 1; i <= n; ++i) cfg.seeds.push_back(i);
    }
    cfg.warmup = r.get<double>(root, "warmup", cfg.warmup);
    if (!(cfg.warmup >= 0.0)) r.fail(root["warmup"], "warmup must be >= 0");
    cfg.tracker = detail::tracker_from_node(r, root["tracker"]);
    return cfg;
}

inline eval::EvalConfig load_eval_config(const std::string& path) {
    return parse_eval_config(detail::slurp(path), path);
}

}  // namespace skelfuse::config
