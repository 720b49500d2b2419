#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/sim_network.hpp"

#include <Eigen/Geometry>

#include <random>

namespace fixture {

using namespace skelfuse;

inline Eigen::Matrix4d pose(const Eigen::Matrix3d& R, const Vec3& t) {
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.topLeftCorner<3, 3>() = R;
    T.topRightCorner<3, 1>() = t;
    return T;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(gen), n(gen), n(gen), n(gen));
    q.normalize();
    return q.toRotationMatrix();
}

inline CameraModel simple_camera(const std::string& id = "cam", const Eigen::Matrix4d& ext = Eigen::Matrix4d::Identity(),
                                 int w = 640, int h = 480) {
    return CameraModel(id, 500.0, 500.0, 320.0, 240.0, ext, w, h);
}

inline sim::CameraSpec kinect(const std::string& id, const Vec3& position, double phase = 0.0) {
    sim::CameraSpec s;
    s.camera = CameraModel(id, 365.0, 365.0, 256.0, 212.0, look_at(position, Vec3(0, 0, 1.0)), 512, 424);
    s.phase = phase;
    return s;
}

inline sim::ScenarioConfig corner_rig(std::size_t n_cameras) {
    const Vec3 corners[] = {{3, 3, 2.2}, {-3, 3, 2.2}, {-3, -3, 2.2}, {3, -3, 2.2}};
    sim::ScenarioConfig cfg;
    cfg.seed = 1;
    cfg.duration = 5.0;
    for (std::size_t i = 0; i < n_cameras; ++i)
        cfg.cameras.push_back(kinect("kinect_" + std::to_string(i), corners[i % 4], 0.008 * static_cast<double>(i)));
    return cfg;
}

inline sim::PersonSpec circle_walker(const std::string& id, double phase, double radius = 1.2, double period = 12.0) {
    sim::PersonSpec p;
    p.id = id;
    p.path = sim::CirclePath{0.0, 0.0, radius, period, phase};
    return p;
}

inline sim::PersonSpec standing(const std::string& id, double x, double y, double yaw = 0.0) {
    sim::PersonSpec p;
    p.id = id;
    p.path = sim::WaypointPath{{{0.0, x, y, yaw}}};
    p.swing_amplitude = 0.0;
    return p;
}

inline Skeleton3D world_skeleton(std::initializer_list<std::pair<Joint, Vec3>> joints) {
    Skeleton3D s;
    s.frame = FrameTag::world();
    for (const auto& [j, p] : joints) s[j] = p;
    return s;
}

}  // namespace fixture
