#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/geometry.hpp"
#include "skelfuse/lifting.hpp"
#include "skelfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace skelfuse::sim {

// ---------------------------------------------------------------------------
// configuration

struct Waypoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // rad, facing direction about world z
};

/// Piecewise-linear path through timed waypoints, held constant outside
/// the first/last waypoint.
struct WaypointPath {
    std::vector<Waypoint> points;
};

/// Walking around a circle, facing along the direction of travel.
struct CirclePath {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 1.0;
    double period = 10.0;  // s per lap; negative walks clockwise
    double phase = 0.0;    // rad at t = 0
};

using Path = std::variant<WaypointPath, CirclePath>;

struct PersonSpec {
    std::string id;
    Path path;
    double swing_amplitude = 0.35;  // rad
    double swing_frequency = 0.9;   // Hz
    double swing_phase = 0.0;       // rad
};

struct CameraSpec {
    CameraModel camera;  // must carry its image size
    double frame_rate = 30.0;
    double phase = 0.0;  // s, first capture time
    double jitter_min = 0.0;
    double jitter_max = 0.0;
    double pixel_noise_sigma = 0.0;   // px
    double depth_noise_sigma = 0.0;   // m
    double joint_dropout = 0.0;       // per joint per frame
    double detection_dropout = 0.0;   // per person per frame
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    double duration = 1.0;
    std::vector<PersonSpec> persons;
    std::vector<CameraSpec> cameras;
    double splat_radius_px = 4.0;
    NeighborhoodRadius lift_radius{};

    void validate() const {
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw ConfigError("duration must be positive");
        if (!(splat_radius_px > 0.0)) throw ConfigError("splat_radius_px must be positive");
        for (std::size_t i = 0; i < persons.size(); ++i) {
            const auto& p = persons[i];
            const std::string where = "persons[" + std::to_string(i) + "]";
            if (const auto* wp = std::get_if<WaypointPath>(&p.path)) {
                if (wp->points.empty()) throw ConfigError(where + ": path needs at least one waypoint");
                for (std::size_t k = 1; k < wp->points.size(); ++k)
                    if (!(wp->points[k].t > wp->points[k - 1].t))
                        throw ConfigError(where + ": waypoint times must increase");
            } else {
                const auto& c = std::get<CirclePath>(p.path);
                if (!(c.radius >= 0.0) || c.period == 0.0 || !std::isfinite(c.period))
                    throw ConfigError(where + ": circle needs radius >= 0 and non-zero period");
            }
            if (!(p.swing_amplitude >= 0.0) || !(p.swing_frequency >= 0.0))
                throw ConfigError(where + ": swing amplitude and frequency must be >= 0");
        }
        for (std::size_t i = 0; i < cameras.size(); ++i) {
            const auto& c = cameras[i];
            const std::string where = "cameras[" + std::to_string(i) + "] ('" + c.camera.id() + "')";
            if (!c.camera.has_image_size()) throw ConfigError(where + ": width and height required");
            if (!(c.frame_rate > 0.0)) throw ConfigError(where + ": frame_rate must be > 0");
            if (!(c.phase >= 0.0)) throw ConfigError(where + ": phase must be >= 0");
            if (!(c.jitter_min >= 0.0) || !(c.jitter_max >= c.jitter_min))
                throw ConfigError(where + ": latency jitter bounds must satisfy 0 <= min <= max");
            if (!(c.pixel_noise_sigma >= 0.0) || !(c.depth_noise_sigma >= 0.0))
                throw ConfigError(where + ": noise sigmas must be >= 0");
            auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
            if (!prob(c.joint_dropout) || !prob(c.detection_dropout))
                throw ConfigError(where + ": dropout probabilities must lie in [0, 1]");
            for (std::size_t j = 0; j < i; ++j)
                if (cameras[j].camera.id() == c.camera.id())
                    throw ConfigError(where + ": duplicate camera id");
        }
    }

    const CameraSpec* find_camera(std::string_view id) const {
        for (const auto& c : cameras)
            if (c.camera.id() == id) return &c;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// body model and ground truth

/// Rest pose of the articulated body in the person frame (x forward,
/// y left, z up, origin on the ground under the pelvis). The chest sits at
/// the weighted mean of neck, shoulders and hips used by the centroid
/// fallback, so both centroid rules agree on an unperturbed body.
struct BodyModel {
    double hip_height = 0.95;
    double hip_half_width = 0.10;
    double shoulder_height = 1.45;
    double shoulder_half_width = 0.19;
    double neck_height = 1.50;
    double head_height = 1.68;
    double upper_arm = 0.30;
    double forearm = 0.27;
    double thigh = 0.44;
    double shin = 0.43;

    double chest_height() const {
        return 0.4 * neck_height + 0.2 * shoulder_height + 0.4 * hip_height;
    }
};

class GroundTruth {
public:
    GroundTruth() = default;
    GroundTruth(std::vector<PersonSpec> persons, double duration, BodyModel body = {})
        : persons_(std::move(persons)), duration_(duration), body_(body) {}

    std::size_t person_count() const { return persons_.size(); }
    const PersonSpec& person(std::size_t i) const { return persons_.at(i); }
    double duration() const { return duration_; }
    const BodyModel& body() const { return body_; }

    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < persons_.size(); ++i)
            if (persons_[i].id == id) return i;
        return std::nullopt;
    }

    Skeleton3D truth_at(std::string_view id, double t) const {
        const auto i = index_of(id);
        if (!i) throw ConfigError("truth_at: unknown person '" + std::string(id) + "'");
        return truth_at(*i, t);
    }

    Skeleton3D truth_at(std::size_t person, double t) const {
        if (person >= persons_.size())
            throw ConfigError("truth_at: person index " + std::to_string(person) + " out of range");
        if (!(t >= 0.0 && t <= duration_))
            throw ConfigError("truth_at: time " + std::to_string(t) + " outside [0, " +
                              std::to_string(duration_) + "]");
        const PersonSpec& p = persons_[person];
        const auto [x, y, yaw] = pose_on_path(p.path, t);

        const double swing =
            p.swing_amplitude *
            std::sin(2.0 * std::numbers::pi * p.swing_frequency * t + p.swing_phase);
        const auto local = articulate(swing, p.swing_amplitude);

        const Eigen::Matrix3d rot = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
        const Vec3 offset(x, y, 0.0);
        Skeleton3D s;
        s.frame = FrameTag::world();
        for (std::size_t j = 0; j < kJointCount; ++j) s.joints[j] = rot * local[j] + offset;
        return s;
    }

private:
    struct PlanarPose {
        double x, y, yaw;
    };

    static PlanarPose pose_on_path(const Path& path, double t) {
        if (const auto* c = std::get_if<CirclePath>(&path)) {
            const double w = 2.0 * std::numbers::pi / c->period;
            const double a = c->phase + w * t;
            const double heading = a + (w > 0 ? 1.0 : -1.0) * std::numbers::pi / 2.0;
            return {c->center_x + c->radius * std::cos(a), c->center_y + c->radius * std::sin(a),
                    heading};
        }
        const auto& pts = std::get<WaypointPath>(path).points;
        if (t <= pts.front().t) return {pts.front().x, pts.front().y, pts.front().yaw};
        if (t >= pts.back().t) return {pts.back().x, pts.back().y, pts.back().yaw};
        const auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                                         [](double v, const Waypoint& w) { return v < w.t; });
        const Waypoint& b = *hi;
        const Waypoint& a = *(hi - 1);
        const double u = (t - a.t) / (b.t - a.t);
        return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.yaw + u * (b.yaw - a.yaw)};
    }

    // Limbs are chains of fixed-length segments whose directions rotate in
    // the sagittal plane, so bone lengths never change.
    std::array<Vec3, kJointCount> articulate(double swing, double amplitude) const {
        const BodyModel& b = body_;
        auto dir = [](double pitch) { return Vec3(std::sin(pitch), 0.0, -std::cos(pitch)); };

        std::array<Vec3, kJointCount> j;
        auto at = [&](Joint id) -> Vec3& { return j[static_cast<std::size_t>(id)]; };

        at(Joint::head) = {0.0, 0.0, b.head_height};
        at(Joint::neck) = {0.0, 0.0, b.neck_height};
        at(Joint::chest) = {0.0, 0.0, b.chest_height()};
        at(Joint::r_shoulder) = {0.0, -b.shoulder_half_width, b.shoulder_height};
        at(Joint::l_shoulder) = {0.0, b.shoulder_half_width, b.shoulder_height};
        at(Joint::r_hip) = {0.0, -b.hip_half_width, b.hip_height};
        at(Joint::l_hip) = {0.0, b.hip_half_width, b.hip_height};

        // Arms swing opposite to the leg on the same side; elbows and knees
        // bend more towards the end of the forward swing.
        const double bend = amplitude > 0.0 ? 0.5 * (1.0 + swing / amplitude) : 0.5;
        const double r_arm = -swing, l_arm = swing;
        const double r_leg = swing, l_leg = -swing;

        at(Joint::r_elbow) = at(Joint::r_shoulder) + b.upper_arm * dir(r_arm);
        at(Joint::r_wrist) = at(Joint::r_elbow) + b.forearm * dir(r_arm + 0.2 + 0.4 * (1.0 - bend));
        at(Joint::l_elbow) = at(Joint::l_shoulder) + b.upper_arm * dir(l_arm);
        at(Joint::l_wrist) = at(Joint::l_elbow) + b.forearm * dir(l_arm + 0.2 + 0.4 * bend);
        at(Joint::r_knee) = at(Joint::r_hip) + b.thigh * dir(r_leg);
        at(Joint::r_ankle) = at(Joint::r_knee) + b.shin * dir(r_leg - 0.1 - 0.4 * bend);
        at(Joint::l_knee) = at(Joint::l_hip) + b.thigh * dir(l_leg);
        at(Joint::l_ankle) = at(Joint::l_knee) + b.shin * dir(l_leg - 0.1 - 0.4 * (1.0 - bend));
        return j;
    }

    std::vector<PersonSpec> persons_;
    double duration_ = 0.0;
    BodyModel body_;
};

// ---------------------------------------------------------------------------
// rendering

/// Sparse z-buffered depth canvas: only pixels touched since the last
/// clear() are reset, so one full-size map can be reused for every frame.
class DepthCanvas {
public:
    DepthCanvas(int width, int height) : map_(width, height) {}

    const DepthMap& map() const { return map_; }

    void clear() {
        for (auto [x, y] : touched_) map_.at(x, y) = 0.0f;
        touched_.clear();
    }

    /// Writes `depth` into the disk of radius r around p, keeping the
    /// nearest surface where disks overlap.
    void splat(const Pixel& p, double r, double depth) {
        const int x0 = std::max(0, static_cast<int>(std::floor(p.x - r)));
        const int x1 = std::min(map_.width() - 1, static_cast<int>(std::ceil(p.x + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(p.y - r)));
        const int y1 = std::min(map_.height() - 1, static_cast<int>(std::ceil(p.y + r)));
        const auto d = static_cast<float>(depth);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.x, dy = y - p.y;
                if (dx * dx + dy * dy >= r * r) continue;
                float& cell = map_.at(x, y);
                if (cell == 0.0f) {
                    touched_.emplace_back(x, y);
                    cell = d;
                } else {
                    cell = std::min(cell, d);
                }
            }
    }

private:
    DepthMap map_;
    std::vector<std::pair<int, int>> touched_;
};

namespace detail {

/// Draws a person's detection into `canvas`. Always consumes the same
/// number of random numbers, whatever is visible or dropped.
inline std::optional<Skeleton2D> render_person(const Skeleton3D& truth, const CameraSpec& spec,
                                               Rng& rng, double splat_radius, DepthCanvas& canvas) {
    const CameraModel& cam = spec.camera;
    const bool dropped = rng.bernoulli(spec.detection_dropout);
    Skeleton2D s2d;
    std::array<std::pair<Pixel, double>, kJointCount> splats{};
    std::array<bool, kJointCount> visible{};

    for (std::size_t j = 0; j < kJointCount; ++j) {
        const double nx = rng.normal(), ny = rng.normal(), nd = rng.normal();
        const bool joint_dropped = rng.bernoulli(spec.joint_dropout);
        if (!truth.joints[j]) continue;
        const Vec3 pc = cam.to_camera(*truth.joints[j]);
        if (!(pc.z() > 0.0)) continue;
        const Projection proj = project(pc, cam);
        const Pixel noisy{proj.pixel.x + spec.pixel_noise_sigma * nx,
                          proj.pixel.y + spec.pixel_noise_sigma * ny};
        const double depth = proj.depth + spec.depth_noise_sigma * nd;
        if (!cam.in_image(noisy) || !(depth > 0.0)) continue;
        // The body is in the depth image even where the 2D detector misses
        // a joint.
        splats[j] = {noisy, depth};
        visible[j] = true;
        if (!joint_dropped) s2d.joints[j] = Joint2D{noisy.x, noisy.y, 1.0};
    }
    for (std::size_t j = 0; j < kJointCount; ++j)
        if (visible[j]) canvas.splat(splats[j].first, splat_radius, splats[j].second);
    if (dropped) return std::nullopt;
    return s2d;
}

}  // namespace detail

/// Synthesizes what one camera's 2D detector and depth sensor report for a
/// single person at time t: noisy 2D joints plus a depth map carrying the
/// (noisy) joint depths in small disks. Returns nullopt if the detection is
/// dropped.
inline std::optional<std::pair<Skeleton2D, DepthMap>> render_detection(
    const GroundTruth& gt, std::size_t person, const CameraSpec& spec, double t, Rng& rng,
    double splat_radius = 4.0) {
    DepthCanvas canvas(spec.camera.width(), spec.camera.height());
    auto s2d = detail::render_person(gt.truth_at(person, t), spec, rng, splat_radius, canvas);
    if (!s2d) return std::nullopt;
    return std::pair{std::move(*s2d), canvas.map()};
}

// ---------------------------------------------------------------------------
// scenario execution

struct StreamEvent {
    double arrival = 0.0;
    DetectionSet detections;
};

struct ScenarioRun {
    std::vector<StreamEvent> events;  // ascending arrival time
    GroundTruth truth;
};

/// Capture times of a camera over [0, duration).
inline std::vector<double> frame_times(const CameraSpec& spec, double duration) {
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double t = spec.phase + static_cast<double>(i) / spec.frame_rate;
        if (t >= duration) break;
        out.push_back(t);
    }
    return out;
}

/// Runs every camera over the scenario and merges their detection sets by
/// arrival time. Each camera's link is FIFO, so per-camera order is kept
/// while frames from different cameras may arrive out of capture order.
inline ScenarioRun run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioRun run;
    run.truth = GroundTruth(cfg.persons, cfg.duration);

    struct Keyed {
        double arrival;
        std::size_t camera;
        std::size_t frame;
        DetectionSet dets;
    };
    std::vector<Keyed> all;

    for (std::size_t ci = 0; ci < cfg.cameras.size(); ++ci) {
        const CameraSpec& spec = cfg.cameras[ci];
        Rng noise(substream_seed(cfg.seed, spec.camera.id() + "/detections"));
        Rng latency(substream_seed(cfg.seed, spec.camera.id() + "/latency"));
        SingleViewDetector detector(spec.camera, cfg.lift_radius);
        DepthCanvas canvas(spec.camera.width(), spec.camera.height());

        double prev_arrival = 0.0;
        const auto times = frame_times(spec, cfg.duration);
        for (std::size_t fi = 0; fi < times.size(); ++fi) {
            const double t = times[fi];
            canvas.clear();
            std::vector<Skeleton2D> seen;
            for (std::size_t p = 0; p < run.truth.person_count(); ++p) {
                auto s2d = detail::render_person(run.truth.truth_at(p, t), spec, noise,
                                                 cfg.splat_radius_px, canvas);
                if (s2d && s2d->valid_count() > 0) seen.push_back(std::move(*s2d));
            }
            DetectionSet dets = detector.process(seen, canvas.map(), t);
            const double arrival =
                std::max(prev_arrival, t + latency.uniform(spec.jitter_min, spec.jitter_max));
            prev_arrival = arrival;
            all.push_back({arrival, ci, fi, std::move(dets)});
        }
    }

    std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
        if (a.arrival != b.arrival) return a.arrival < b.arrival;
        if (a.camera != b.camera) return a.camera < b.camera;
        return a.frame < b.frame;
    });
    run.events.reserve(all.size());
    for (auto& k : all) run.events.push_back({k.arrival, std::move(k.dets)});
    return run;
}

}  // namespace skelfuse::sim
