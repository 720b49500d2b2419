#include "skelfuse/config_io.hpp"
#include "skelfuse/json_io.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace skelfuse;

namespace {

template <typename T>
T round_trip(const T& v) {
    return json::parse(json(v).dump()).get<T>();
}

Skeleton3D random_skeleton(std::mt19937_64& gen, FrameTag frame) {
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::bernoulli_distribution keep(0.6);
    Skeleton3D s;
    s.frame = std::move(frame);
    for (auto& j : s.joints)
        if (keep(gen)) j = Vec3(u(gen), u(gen), u(gen) * 1e-7);
    return s;
}

std::string expect_config_error(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError";
    return {};
}

const char* kScenario = R"(seed: 3
duration: 2.0
persons:
  - id: a
    circle: {center: [0, 0], radius: 1.0, period: 10}
  - id: b
    swing_amplitude: 0.0
    waypoints:
      - {t: 0, x: 1, y: 1}
      - {t: 2, x: 2, y: 1, yaw: 0.5}
cameras:
  - id: k0
    fx: 365
    fy: 365
    cx: 256
    cy: 212
    width: 512
    height: 424
    position: [3, 3, 2.2]
    look_at: [0, 0, 1]
    frame_rate: 30
    latency_jitter: [0.0, 0.05]
    pixel_noise_sigma: 3
  - id: k1
    fx: 365
    fy: 365
    cx: 256
    cy: 212
    width: 512
    height: 424
    extrinsic: [1, 0, 0, 0,  0, 1, 0, 0,  0, 0, 1, -3,  0, 0, 0, 1]
    frame_rate: 15
    phase: 0.01
)";

}  // namespace

// --- JSON ------------------------------------------------------------------------

TEST(Json, Skeleton3DRoundTrip) {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 200; ++i) {
        const auto s = random_skeleton(gen, i % 2 ? FrameTag::world() : FrameTag::camera("cam " + std::to_string(i)));
        EXPECT_EQ(round_trip(s), s);
    }
}

TEST(Json, Skeleton2DRoundTrip) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0, 640);
    for (int i = 0; i < 100; ++i) {
        Skeleton2D s;
        for (auto& j : s.joints)
            if (u(gen) > 200) j = Joint2D{u(gen), u(gen), u(gen) / 640};
        EXPECT_EQ(round_trip(s), s);
    }
}

TEST(Json, DetectionSetRoundTrip) {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 100; ++i) {
        DetectionSet d{"kinect_" + std::to_string(i % 4), 0.1 * i + 1e-9, {}};
        for (int k = 0; k < i % 4; ++k) d.skeletons.push_back(random_skeleton(gen, FrameTag::world()));
        EXPECT_EQ(round_trip(d), d);
    }
}

TEST(Json, DepthMapRoundTripKeepsMissingSamples) {
    std::vector<float> v{1.25f, 0.0f, std::nanf(""), 3.3f, 1e-3f, 7.0f};
    const DepthMap dm(3, 2, v);
    const auto back = round_trip(dm);
    ASSERT_EQ(back.width(), 3);
    ASSERT_EQ(back.height(), 2);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::isnan(v[i]))
            EXPECT_TRUE(std::isnan(back.values()[i]));
        else
            EXPECT_EQ(back.values()[i], v[i]);
    }
}

TEST(Json, CameraAndCalibrationRoundTrip) {
    std::mt19937_64 gen(4);
    std::vector<CameraModel> cams;
    for (int i = 0; i < 5; ++i)
        cams.push_back(CameraModel("c" + std::to_string(i), 300 + i, 301 + i, 256.5, 212.25,
                                   fixture::pose(fixture::random_rotation(gen), Vec3::Random()), i % 2 ? 512 : 0,
                                   i % 2 ? 424 : 0));
    std::stringstream ss(io::calibration_to_json(cams).dump());
    const auto back = io::read_calibration(ss);
    ASSERT_EQ(back.size(), cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        EXPECT_EQ(back[i].id(), cams[i].id());
        EXPECT_EQ(back[i].extrinsic(), cams[i].extrinsic());
        EXPECT_EQ(back[i].fx(), cams[i].fx());
        EXPECT_EQ(back[i].width(), cams[i].width());
    }
}

TEST(Json, CalibrationRejectsOtherConvention) {
    std::stringstream ss(R"({"extrinsic_convention": "world_to_camera", "cameras": []})");
    EXPECT_THROW(io::read_calibration(ss), ParseError);
}

TEST(Json, CalibrationRejectsNonRigidExtrinsic) {
    std::stringstream ss(
        R"({"cameras": [{"id": "a", "fx": 1, "fy": 1, "cx": 0, "cy": 0, "extrinsic": [2,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]}]})");
    EXPECT_THROW(io::read_calibration(ss), Error);
}

TEST(Json, StreamParsesAndReportsLineNumbers) {
    std::stringstream ok(
        "{\"camera_id\": \"a\", \"stamp\": 0.5, \"arrival\": 0.6, \"skeletons\": [{\"joints\": [{\"id\": 14, \"x\": 1, "
        "\"y\": 2, \"z\": 3, \"valid\": true}, {\"id\": 0, \"valid\": false}]}]}\n\n"
        "{\"camera_id\": \"b\", \"stamp\": 0.7, \"skeletons\": []}\n");
    const auto recs = io::read_detection_stream(ok);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(*recs[0].arrival, 0.6);
    EXPECT_EQ(*recs[0].detections.skeletons[0][Joint::chest], Vec3(1, 2, 3));
    EXPECT_FALSE(recs[0].detections.skeletons[0][Joint::head]);
    EXPECT_FALSE(recs[1].arrival);

    std::stringstream bad("{\"camera_id\": \"a\", \"stamp\": 0.5, \"skeletons\": []}\n{\"camera_id\": \"a\"}\n");
    try {
        io::read_detection_stream(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("line 2:", 0), 0u) << e.what();
    }
    std::stringstream dup("{\"camera_id\": \"a\", \"stamp\": 0, \"skeletons\": [{\"joints\": [{\"id\": 1, \"valid\": "
                          "false}, {\"id\": 1, \"valid\": false}]}]}\n");
    EXPECT_THROW(io::read_detection_stream(dup), ParseError);
}

TEST(Json, StreamRecordRoundTrip) {
    std::mt19937_64 gen(6);
    sim::StreamEvent e{0.123456789, {"k", 0.1, {random_skeleton(gen, FrameTag::world())}}};
    std::stringstream ss(io::stream_record_to_json(e).dump() + "\n");
    const auto back = io::read_detection_stream(ss);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(*back[0].arrival, e.arrival);
    EXPECT_EQ(back[0].detections, e.detections);
}

// --- YAML ------------------------------------------------------------------------

TEST(Yaml, ParsesScenario) {
    const auto cfg = config::parse_scenario(kScenario, "s.yaml");
    EXPECT_EQ(cfg.seed, 3u);
    ASSERT_EQ(cfg.persons.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<sim::CirclePath>(cfg.persons[0].path));
    const auto& wp = std::get<sim::WaypointPath>(cfg.persons[1].path);
    ASSERT_EQ(wp.points.size(), 2u);
    EXPECT_EQ(wp.points[1].yaw, 0.5);
    EXPECT_EQ(cfg.persons[1].swing_amplitude, 0.0);
    ASSERT_EQ(cfg.cameras.size(), 2u);
    EXPECT_EQ(cfg.cameras[0].jitter_max, 0.05);
    EXPECT_EQ(cfg.cameras[0].pixel_noise_sigma, 3.0);
    EXPECT_TRUE(cfg.cameras[0].camera.extrinsic().isApprox(look_at(Vec3(3, 3, 2.2), Vec3(0, 0, 1))));
    EXPECT_EQ(cfg.cameras[1].camera.extrinsic()(2, 3), -3.0);
    EXPECT_EQ(cfg.cameras[1].frame_rate, 15.0);
    EXPECT_EQ(cfg.cameras[1].phase, 0.01);
}

TEST(Yaml, ErrorsCarryLineNumbers) {
    std::string text = kScenario;
    text.replace(text.find("frame_rate: 15"), 14, "frame_rate: -1");
    const auto msg = expect_config_error([&] { config::parse_scenario(text, "s.yaml"); });
    EXPECT_NE(msg.find("s.yaml:32:"), std::string::npos) << msg;

    text = kScenario;
    text.replace(text.find("pixel_noise_sigma"), 17, "pixel_noise_sigmx");
    const auto msg2 = expect_config_error([&] { config::parse_scenario(text, "s.yaml"); });
    EXPECT_NE(msg2.find("s.yaml:23:"), std::string::npos) << msg2;
    EXPECT_NE(msg2.find("pixel_noise_sigmx"), std::string::npos);

    const auto msg3 = expect_config_error([] { config::parse_scenario("seed: 1\nduration: [1\n", "x.yaml"); });
    EXPECT_EQ(msg3.rfind("x.yaml:", 0), 0u) << msg3;
}

TEST(Yaml, RejectsBadScenarios) {
    EXPECT_THROW(config::parse_scenario("duration: 1\npersons: []\ncameras: []\n"), ConfigError);
    EXPECT_THROW(config::parse_scenario("persons: []\ncameras: []\n"), ConfigError);
    std::string text = kScenario;
    text.replace(text.find("id: k1"), 6, "id: k0");
    EXPECT_THROW(config::parse_scenario(text), ConfigError);
    text = kScenario;
    text.replace(text.find("circle:"), 7, "circlx:");
    EXPECT_THROW(config::parse_scenario(text), ConfigError);
    text = kScenario;
    text.replace(text.find("fx: 365"), 7, "fx: abc");
    EXPECT_THROW(config::parse_scenario(text), ConfigError);
}

TEST(Yaml, EvalAndTrackerConfig) {
    const auto e = config::parse_eval_config(R"(reference_camera: k1
camera_subsets: [[k0], [k0, k1]]
maf_windows: [5]
seed_count: 3
warmup: 0.5
tracker: {gating_eps: 4.0, min_hits_to_confirm: 2, meas_sigma: 0.1}
)");
    EXPECT_EQ(e.reference_camera, "k1");
    EXPECT_EQ(e.camera_subsets.size(), 2u);
    EXPECT_EQ(e.maf_windows, (std::vector<std::size_t>{5}));
    EXPECT_EQ(e.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(e.warmup, 0.5);
    EXPECT_EQ(e.tracker.gating.epsilon, 4.0);
    EXPECT_EQ(e.tracker.min_hits_to_confirm, 2u);
    EXPECT_EQ(e.tracker.noise.meas_sigma, 0.1);

    EXPECT_THROW(config::parse_tracker_config("gating_eps: -2\n"), ConfigError);
    EXPECT_THROW(config::parse_tracker_config("gatting_eps: 2\n"), ConfigError);
    EXPECT_THROW(config::parse_eval_config("maf_windows: [0]\n"), ConfigError);
    EXPECT_EQ(config::parse_tracker_config("").gating.epsilon, 9.49);
}
