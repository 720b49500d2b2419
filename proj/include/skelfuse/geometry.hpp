#pragma once

#include "skelfuse/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace skelfuse {

/// Radius of the pixel disk sampled around a joint when looking up its depth.
struct NeighborhoodRadius {
    double pixels = 3.0;

    constexpr NeighborhoodRadius() = default;
    explicit NeighborhoodRadius(double px) : pixels(px) {
        if (!(px > 0.0) || !std::isfinite(px))
            throw ConfigError("neighborhood radius must be positive");
    }
};

struct Projection {
    Pixel pixel;
    double depth = 0.0;
};

/// Pinhole projection of a camera-frame point.
inline Projection project(const Vec3& point_cam, const CameraModel& cam) {
    const double z = point_cam.z();
    if (!point_cam.allFinite())
        throw BehindCameraError("project: non-finite point");
    if (!(z > 0.0))
        throw BehindCameraError("project: point is behind camera '" + cam.id() + "' (z = " +
                                std::to_string(z) + ")");
    return {{cam.fx() * point_cam.x() / z + cam.cx(), cam.fy() * point_cam.y() / z + cam.cy()}, z};
}

inline Vec3 back_project(const Pixel& p, double depth, const CameraModel& cam) {
    if (!(depth > 0.0) || !std::isfinite(depth))
        throw InvalidDepthError("back_project: depth must be positive and finite");
    return {(p.x - cam.cx()) * depth / cam.fx(), (p.y - cam.cy()) * depth / cam.fy(), depth};
}

/// Median of the valid depth samples on the integer pixel grid strictly
/// inside the disk of radius `r` around `p`. For an even number of samples
/// the lower of the two middle values is returned, so the result is always
/// an observed depth. Returns nullopt when the disk holds no valid sample.
inline std::optional<double> median_depth(const DepthMap& dm, const Pixel& p,
                                          NeighborhoodRadius r) {
    if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < dm.width() && p.y < dm.height()))
        throw OutOfBoundsError("median_depth: pixel (" + std::to_string(p.x) + ", " +
                               std::to_string(p.y) + ") outside " + std::to_string(dm.width()) +
                               "x" + std::to_string(dm.height()) + " depth map");

    const double rad = r.pixels;
    const double r2 = rad * rad;
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - rad)));
    const int x1 = std::min(dm.width() - 1, static_cast<int>(std::ceil(p.x + rad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - rad)));
    const int y1 = std::min(dm.height() - 1, static_cast<int>(std::ceil(p.y + rad)));

    std::vector<float> samples;
    samples.reserve(static_cast<std::size_t>((x1 - x0 + 1) * (y1 - y0 + 1)));
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - p.y;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - p.x;
            if (dx * dx + dy * dy >= r2) continue;
            const float d = dm.at(x, y);
            if (DepthMap::is_valid_sample(d)) samples.push_back(d);
        }
    }
    if (samples.empty()) return std::nullopt;

    const auto mid = samples.begin() + static_cast<std::ptrdiff_t>((samples.size() - 1) / 2);
    std::nth_element(samples.begin(), mid, samples.end());
    return static_cast<double>(*mid);
}

/// Maps a camera-frame skeleton into the world frame; invalid joints stay
/// invalid.
inline Skeleton3D transform_skeleton(const Skeleton3D& s, const CameraModel& cam) {
    if (!s.frame.is_camera(cam.id()))
        throw FrameMismatchError("transform_skeleton: skeleton is not in the frame of camera '" +
                                 cam.id() + "'");
    Skeleton3D out;
    out.frame = FrameTag::world();
    for (std::size_t i = 0; i < kJointCount; ++i)
        if (s.joints[i]) out.joints[i] = cam.to_world(*s.joints[i]);
    return out;
}

}  // namespace skelfuse
