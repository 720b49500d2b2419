#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace skelfuse {

// ---------------------------------------------------------------------------
// errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BehindCameraError : public Error {
public:
    using Error::Error;
};

class InvalidDepthError : public Error {
public:
    using Error::Error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class FrameMismatchError : public Error {
public:
    using Error::Error;
};

class TimeRegressionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// skeleton topology

/// Number of joints in the human model. Index 14 is the chest, which the
/// association step uses as the skeleton centroid.
inline constexpr std::size_t kJointCount = 15;

enum class Joint : std::uint8_t {
    head = 0,
    neck = 1,
    r_shoulder = 2,
    r_elbow = 3,
    r_wrist = 4,
    l_shoulder = 5,
    l_elbow = 6,
    l_wrist = 7,
    r_hip = 8,
    r_knee = 9,
    r_ankle = 10,
    l_hip = 11,
    l_knee = 12,
    l_ankle = 13,
    chest = 14,
};

struct JointId {
    std::size_t index = 0;

    constexpr JointId() = default;
    constexpr explicit JointId(std::size_t i) : index(i) {}
    constexpr JointId(Joint j) : index(static_cast<std::size_t>(j)) {}  // NOLINT

    constexpr bool valid() const { return index < kJointCount; }
    friend constexpr bool operator==(JointId, JointId) = default;
};

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "head",    "neck",    "r-shoulder", "r-elbow", "r-wrist",
    "l-shoulder", "l-elbow", "l-wrist", "r-hip",   "r-knee",
    "r-ankle", "l-hip",   "l-knee",     "l-ankle", "chest",
};

/// The twelve limb joints reported per column in the evaluation table, in
/// table order.
inline constexpr std::array<Joint, 12> kLimbJoints = {
    Joint::r_shoulder, Joint::r_elbow, Joint::r_wrist, Joint::l_shoulder,
    Joint::l_elbow,    Joint::l_wrist, Joint::r_hip,   Joint::r_knee,
    Joint::r_ankle,    Joint::l_hip,   Joint::l_knee,  Joint::l_ankle,
};

inline std::string_view joint_name(JointId id) {
    if (!id.valid())
        throw std::out_of_range("joint index " + std::to_string(id.index) +
                                " out of range [0, " + std::to_string(kJointCount) + ")");
    return kJointNames[id.index];
}

inline std::optional<JointId> joint_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kJointCount; ++i)
        if (kJointNames[i] == name) return JointId{i};
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// geometry primitives

using Vec3 = Eigen::Vector3d;

struct Pixel {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

// ---------------------------------------------------------------------------
// camera

/// Pinhole intrinsics plus the rigid transform taking camera-frame points
/// into the world frame. Image size is optional (0 = unknown) and only used
/// by the simulator and for bounds checks.
class CameraModel {
public:
    CameraModel() = default;

    CameraModel(std::string id, double fx, double fy, double cx, double cy,
                const Eigen::Matrix4d& world_from_camera, int width = 0, int height = 0)
        : id_(std::move(id)), fx_(fx), fy_(fy), cx_(cx), cy_(cy),
          extrinsic_(world_from_camera), width_(width), height_(height) {
        validate();
    }

    const std::string& id() const { return id_; }
    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    int width() const { return width_; }
    int height() const { return height_; }
    bool has_image_size() const { return width_ > 0 && height_ > 0; }

    /// 4x4 camera->world transform.
    const Eigen::Matrix4d& extrinsic() const { return extrinsic_; }
    Eigen::Matrix3d rotation() const { return extrinsic_.topLeftCorner<3, 3>(); }
    Vec3 translation() const { return extrinsic_.topRightCorner<3, 1>(); }

    Vec3 to_world(const Vec3& p_cam) const { return rotation() * p_cam + translation(); }
    Vec3 to_camera(const Vec3& p_world) const {
        return rotation().transpose() * (p_world - translation());
    }

    bool in_image(const Pixel& p) const {
        return p.x >= 0.0 && p.y >= 0.0 && p.x < width_ && p.y < height_;
    }

    friend bool operator==(const CameraModel& a, const CameraModel& b) {
        return a.id_ == b.id_ && a.fx_ == b.fx_ && a.fy_ == b.fy_ && a.cx_ == b.cx_ &&
               a.cy_ == b.cy_ && a.extrinsic_ == b.extrinsic_ && a.width_ == b.width_ &&
               a.height_ == b.height_;
    }

private:
    void validate() const {
        if (!(fx_ > 0.0) || !(fy_ > 0.0) || !std::isfinite(fx_) || !std::isfinite(fy_))
            throw ConfigError("camera '" + id_ + "': focal lengths must be positive");
        if (!std::isfinite(cx_) || !std::isfinite(cy_))
            throw ConfigError("camera '" + id_ + "': principal point must be finite");
        if (!extrinsic_.allFinite())
            throw ConfigError("camera '" + id_ + "': extrinsic must be finite");
        const Eigen::Matrix3d r = rotation();
        const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        if (ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
            throw ConfigError("camera '" + id_ + "': extrinsic rotation is not a proper rotation");
        const Eigen::RowVector4d last = extrinsic_.row(3);
        if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("camera '" + id_ + "': extrinsic bottom row must be [0 0 0 1]");
        if (width_ < 0 || height_ < 0)
            throw ConfigError("camera '" + id_ + "': negative image size");
    }

    std::string id_;
    double fx_ = 1.0, fy_ = 1.0, cx_ = 0.0, cy_ = 0.0;
    Eigen::Matrix4d extrinsic_ = Eigen::Matrix4d::Identity();
    int width_ = 0, height_ = 0;
};

/// Camera->world transform for a camera at `position` looking at `target`
/// with the usual optical convention (x right, y down, z forward) and world
/// z up.
inline Eigen::Matrix4d look_at(const Vec3& position, const Vec3& target,
                               const Vec3& world_up = Vec3::UnitZ()) {
    const Vec3 z = (target - position).normalized();
    Vec3 x = z.cross(world_up);
    if (x.norm() < 1e-9) throw ConfigError("look_at: viewing direction parallel to up vector");
    x.normalize();
    const Vec3 y = z.cross(x);
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.block<3, 1>(0, 0) = x;
    t.block<3, 1>(0, 1) = y;
    t.block<3, 1>(0, 2) = z;
    t.block<3, 1>(0, 3) = position;
    return t;
}

// ---------------------------------------------------------------------------
// skeletons

struct Joint2D {
    double x = 0.0;
    double y = 0.0;
    double confidence = 1.0;

    friend bool operator==(const Joint2D&, const Joint2D&) = default;
};

struct Skeleton2D {
    std::array<std::optional<Joint2D>, kJointCount> joints{};

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (const auto& j : joints) n += j.has_value();
        return n;
    }

    friend bool operator==(const Skeleton2D&, const Skeleton2D&) = default;
};

/// Frame a 3D skeleton is expressed in: the world, or one camera.
struct FrameTag {
    enum class Kind : std::uint8_t { world, camera };

    Kind kind = Kind::world;
    std::string camera_id;

    static FrameTag world() { return {}; }
    static FrameTag camera(std::string id) { return {Kind::camera, std::move(id)}; }

    bool is_world() const { return kind == Kind::world; }
    bool is_camera(std::string_view id) const { return kind == Kind::camera && camera_id == id; }

    friend bool operator==(const FrameTag&, const FrameTag&) = default;
};

struct Skeleton3D {
    std::array<std::optional<Vec3>, kJointCount> joints{};
    FrameTag frame;

    const std::optional<Vec3>& operator[](JointId j) const { return joints[j.index]; }
    std::optional<Vec3>& operator[](JointId j) { return joints[j.index]; }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (const auto& j : joints) n += j.has_value();
        return n;
    }
    bool empty() const { return valid_count() == 0; }

    friend bool operator==(const Skeleton3D& a, const Skeleton3D& b) {
        if (!(a.frame == b.frame)) return false;
        for (std::size_t i = 0; i < kJointCount; ++i) {
            if (a.joints[i].has_value() != b.joints[i].has_value()) return false;
            if (a.joints[i] && *a.joints[i] != *b.joints[i]) return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// depth

/// Row-major depth image in meters. 0 and NaN both mean "no sample".
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int width, int height)
        : DepthMap(width, height,
                   std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                          static_cast<std::size_t>(std::max(height, 0)),
                                      0.0f)) {}
    DepthMap(int width, int height, std::vector<float> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (width < 0 || height < 0)
            throw ConfigError("depth map: negative size");
        if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ConfigError("depth map: value count does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<float>& values() const { return values_; }

    float at(int x, int y) const { return values_[index(x, y)]; }
    float& at(int x, int y) { return values_[index(x, y)]; }

    static bool is_valid_sample(float d) { return std::isfinite(d) && d > 0.0f; }

    void fill(float v) { std::fill(values_.begin(), values_.end(), v); }

    friend bool operator==(const DepthMap& a, const DepthMap& b) {
        if (a.width_ != b.width_ || a.height_ != b.height_) return false;
        for (std::size_t i = 0; i < a.values_.size(); ++i) {
            const float x = a.values_[i], y = b.values_[i];
            if (std::isnan(x) && std::isnan(y)) continue;
            if (x != y) return false;
        }
        return true;
    }

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> values_;
};

// ---------------------------------------------------------------------------
// detections

/// One camera's batch of world-frame skeletons at one capture time.
struct DetectionSet {
    std::string camera_id;
    double stamp = 0.0;
    std::vector<Skeleton3D> skeletons;

    friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

}  // namespace skelfuse
