#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skelfuse {

/// Lifts a 2D skeleton into the camera frame using the median depth around
/// each joint. Joints that are invalid, fall outside the depth map, or have
/// no depth around them come out invalid.
inline Skeleton3D lift_skeleton(const Skeleton2D& s2d, const DepthMap& dm, const CameraModel& cam,
                                NeighborhoodRadius r = NeighborhoodRadius{}) {
    Skeleton3D out;
    out.frame = FrameTag::camera(cam.id());
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto& j = s2d.joints[i];
        if (!j || !std::isfinite(j->x) || !std::isfinite(j->y)) continue;
        const Pixel p{j->x, j->y};
        if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < dm.width() && p.y < dm.height())) continue;
        const auto depth = median_depth(dm, p, r);
        if (!depth) continue;
        out.joints[i] = back_project(p, *depth, cam);
    }
    return out;
}

/// Lifts every skeleton, registers it into the world frame, and drops
/// skeletons without a single valid joint.
inline DetectionSet make_detection_set(std::span<const Skeleton2D> skeletons, const DepthMap& dm,
                                       const CameraModel& cam, double stamp,
                                       NeighborhoodRadius r = NeighborhoodRadius{}) {
    if (!std::isfinite(stamp) || stamp < 0.0)
        throw TimeRegressionError("detection stamp must be finite and non-negative");
    DetectionSet set;
    set.camera_id = cam.id();
    set.stamp = stamp;
    for (const auto& s2d : skeletons) {
        Skeleton3D world = transform_skeleton(lift_skeleton(s2d, dm, cam, r), cam);
        if (!world.empty()) set.skeletons.push_back(std::move(world));
    }
    return set;
}

/// Per-camera single-view detector: lifting plus the per-camera timestamp
/// monotonicity check. Frames of one camera must go through one instance
/// serially.
class SingleViewDetector {
public:
    explicit SingleViewDetector(CameraModel cam, NeighborhoodRadius r = NeighborhoodRadius{})
        : cam_(std::move(cam)), radius_(r) {}

    const CameraModel& camera() const { return cam_; }

    DetectionSet process(std::span<const Skeleton2D> skeletons, const DepthMap& dm, double stamp) {
        if (last_stamp_ && stamp < *last_stamp_)
            throw TimeRegressionError("camera '" + cam_.id() + "': stamp " + std::to_string(stamp) +
                                      " precedes previous stamp " + std::to_string(*last_stamp_));
        DetectionSet set = make_detection_set(skeletons, dm, cam_, stamp, radius_);
        last_stamp_ = stamp;
        return set;
    }

private:
    CameraModel cam_;
    NeighborhoodRadius radius_;
    std::optional<double> last_stamp_;
};

}  // namespace skelfuse
