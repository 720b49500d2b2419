#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/sim_network.hpp"
#include "skelfuse/tracker.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

// JSON schemas shared by the CLI and replay tools.
//
// Detection stream (JSONL, one DetectionSet per line, world frame):
//   {"camera_id": "kinect_0", "stamp": 0.033, "arrival": 0.041,
//    "skeletons": [{"joints": [{"id": 0, "x": .., "y": .., "z": .., "valid": true},
//                              {"id": 1, "valid": false}, ...]}]}
//   "arrival" is optional; records are consumed in file order.
//
// Calibration (one JSON document):
//   {"extrinsic_convention": "camera_to_world",
//    "cameras": [{"id": "kinect_0", "fx": .., "fy": .., "cx": .., "cy": ..,
//                 "extrinsic": [16 numbers, row-major 4x4, camera -> world],
//                 "width": 512, "height": 424}]}
//   width/height are optional.
//
// Tracker output (JSONL):
//   {"type": "event", "kind": "created|updated|retired", "track": 3, "stamp": ..}
//   {"type": "snapshot", "stamp": .., "tracks": [{"id": 3, "joints": [...], "cov_trace": [...]}]}
//   {"type": "rejected", "camera_id": .., "stamp": .., "reason": ..}

namespace skelfuse {

using nlohmann::json;

class ParseError : public Error {
public:
    using Error::Error;
};

namespace io {

inline constexpr const char* kExtrinsicConvention = "camera_to_world";

inline double number(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline std::string string_field(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const json& v = j.at(key);
    if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

// --- joints ----------------------------------------------------------------

inline json joints_to_json(const std::array<std::optional<Vec3>, kJointCount>& joints) {
    json arr = json::array();
    for (std::size_t i = 0; i < kJointCount; ++i) {
        if (joints[i])
            arr.push_back({{"id", i},
                           {"x", joints[i]->x()},
                           {"y", joints[i]->y()},
                           {"z", joints[i]->z()},
                           {"valid", true}});
        else
            arr.push_back({{"id", i}, {"valid", false}});
    }
    return arr;
}

inline std::array<std::optional<Vec3>, kJointCount> joints_from_json(const json& arr) {
    if (!arr.is_array()) throw ParseError("'joints' must be an array");
    std::array<std::optional<Vec3>, kJointCount> out{};
    std::array<bool, kJointCount> seen{};
    for (const json& j : arr) {
        if (!j.is_object()) throw ParseError("joint entries must be objects");
        const double id_num = number(j, "id");
        if (id_num < 0 || id_num >= static_cast<double>(kJointCount) || id_num != std::floor(id_num))
            throw ParseError("joint id out of range");
        const auto id = static_cast<std::size_t>(id_num);
        if (seen[id]) throw ParseError("duplicate joint id " + std::to_string(id));
        seen[id] = true;
        const bool valid = j.value("valid", true);
        if (!valid) continue;
        const Vec3 p(number(j, "x"), number(j, "y"), number(j, "z"));
        if (!p.allFinite()) throw ParseError("joint coordinates must be finite");
        out[id] = p;
    }
    return out;
}

}  // namespace io

// --- core types (nlohmann ADL hooks) -----------------------------------------

inline void to_json(json& j, const FrameTag& f) {
    j = f.is_world() ? std::string("world") : "camera:" + f.camera_id;
}

inline void from_json(const json& j, FrameTag& f) {
    const auto s = j.get<std::string>();
    if (s == "world")
        f = FrameTag::world();
    else if (s.rfind("camera:", 0) == 0)
        f = FrameTag::camera(s.substr(7));
    else
        throw ParseError("unknown frame tag '" + s + "'");
}

inline void to_json(json& j, const Skeleton3D& s) {
    j = {{"frame", s.frame}, {"joints", io::joints_to_json(s.joints)}};
}

inline void from_json(const json& j, Skeleton3D& s) {
    s.frame = j.contains("frame") ? j.at("frame").get<FrameTag>() : FrameTag::world();
    s.joints = io::joints_from_json(j.at("joints"));
}

inline void to_json(json& j, const Skeleton2D& s) {
    json arr = json::array();
    for (std::size_t i = 0; i < kJointCount; ++i) {
        if (const auto& p = s.joints[i])
            arr.push_back({{"id", i}, {"x", p->x}, {"y", p->y}, {"confidence", p->confidence},
                           {"valid", true}});
        else
            arr.push_back({{"id", i}, {"valid", false}});
    }
    j = {{"joints", arr}};
}

inline void from_json(const json& j, Skeleton2D& s) {
    s = {};
    for (const json& e : j.at("joints")) {
        const auto id = e.at("id").get<std::size_t>();
        if (id >= kJointCount) throw ParseError("joint id out of range");
        if (!e.value("valid", true)) continue;
        s.joints[id] = Joint2D{io::number(e, "x"), io::number(e, "y"), e.value("confidence", 1.0)};
    }
}

inline void to_json(json& j, const DepthMap& dm) {
    json values = json::array();
    for (float v : dm.values()) {
        if (std::isnan(v))
            values.push_back(nullptr);
        else
            values.push_back(v);
    }
    j = {{"width", dm.width()}, {"height", dm.height()}, {"values", std::move(values)}};
}

inline void from_json(const json& j, DepthMap& dm) {
    std::vector<float> values;
    for (const json& v : j.at("values"))
        values.push_back(v.is_null() ? std::nanf("") : v.get<float>());
    dm = DepthMap(j.at("width").get<int>(), j.at("height").get<int>(), std::move(values));
}

inline void to_json(json& j, const CameraModel& c) {
    json ext = json::array();
    for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 4; ++col) ext.push_back(c.extrinsic()(r, col));
    j = {{"id", c.id()}, {"fx", c.fx()}, {"fy", c.fy()}, {"cx", c.cx()}, {"cy", c.cy()},
         {"extrinsic", ext}};
    if (c.has_image_size()) {
        j["width"] = c.width();
        j["height"] = c.height();
    }
}

inline void from_json(const json& j, CameraModel& c) {
    const std::string id = io::string_field(j, "id");
    const json& ext = j.at("extrinsic");
    if (!ext.is_array() || ext.size() != 16)
        throw ParseError("camera '" + id + "': extrinsic must hold 16 numbers");
    Eigen::Matrix4d m;
    for (int k = 0; k < 16; ++k) {
        if (!ext[static_cast<std::size_t>(k)].is_number())
            throw ParseError("camera '" + id + "': extrinsic entries must be numbers");
        m(k / 4, k % 4) = ext[static_cast<std::size_t>(k)].get<double>();
    }
    c = CameraModel(id, io::number(j, "fx"), io::number(j, "fy"), io::number(j, "cx"),
                    io::number(j, "cy"), m, j.value("width", 0), j.value("height", 0));
}

inline void to_json(json& j, const DetectionSet& d) {
    json skels = json::array();
    for (const auto& s : d.skeletons) skels.push_back({{"joints", io::joints_to_json(s.joints)}});
    j = {{"camera_id", d.camera_id}, {"stamp", d.stamp}, {"skeletons", std::move(skels)}};
}

inline void from_json(const json& j, DetectionSet& d) {
    d.camera_id = io::string_field(j, "camera_id");
    d.stamp = io::number(j, "stamp");
    d.skeletons.clear();
    if (!j.contains("skeletons") || !j.at("skeletons").is_array())
        throw ParseError("'skeletons' must be an array");
    for (const json& s : j.at("skeletons")) {
        if (!s.is_object() || !s.contains("joints"))
            throw ParseError("skeleton entries need a 'joints' array");
        Skeleton3D sk;
        sk.frame = FrameTag::world();
        sk.joints = io::joints_from_json(s.at("joints"));
        d.skeletons.push_back(std::move(sk));
    }
}

namespace io {

// --- calibration ---------------------------------------------------------------

inline json calibration_to_json(const std::vector<CameraModel>& cams) {
    json arr = json::array();
    for (const auto& c : cams) arr.push_back(c);
    return {{"extrinsic_convention", kExtrinsicConvention}, {"cameras", std::move(arr)}};
}

inline std::vector<CameraModel> calibration_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("cameras") || !doc.at("cameras").is_array())
        throw ParseError("calibration: expected an object with a 'cameras' array");
    if (doc.contains("extrinsic_convention") &&
        doc.at("extrinsic_convention") != kExtrinsicConvention)
        throw ParseError(std::string("calibration: only extrinsic_convention '") +
                         kExtrinsicConvention + "' is supported");
    std::vector<CameraModel> out;
    for (std::size_t i = 0; i < doc.at("cameras").size(); ++i) {
        try {
            out.push_back(doc.at("cameras")[i].get<CameraModel>());
        } catch (const json::exception& e) {
            throw ParseError("calibration: cameras[" + std::to_string(i) + "]: " + e.what());
        }
        for (std::size_t k = 0; k + 1 < out.size(); ++k)
            if (out[k].id() == out.back().id())
                throw ParseError("calibration: duplicate camera id '" + out.back().id() + "'");
    }
    return out;
}

inline std::vector<CameraModel> read_calibration(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("calibration: ") + e.what());
    }
    return calibration_from_json(doc);
}

// --- detection stream ------------------------------------------------------------

struct StreamRecord {
    std::optional<double> arrival;
    DetectionSet detections;
};

inline json stream_record_to_json(const sim::StreamEvent& e) {
    json j = e.detections;
    j["arrival"] = e.arrival;
    return j;
}

/// Reads a JSONL detection stream; blank lines are skipped. Errors carry
/// the 1-based line number.
inline std::vector<StreamRecord> read_detection_stream(std::istream& in) {
    std::vector<StreamRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (!j.is_object()) throw ParseError("record must be a JSON object");
            StreamRecord r;
            r.detections = j.get<DetectionSet>();
            if (j.contains("arrival")) r.arrival = number(j, "arrival");
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_jsonl(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

// --- tracker output ----------------------------------------------------------------

inline json event_to_json(const TrackEvent& e) {
    return {{"type", "event"}, {"kind", to_string(e.kind)}, {"track", e.track}, {"stamp", e.stamp}};
}

inline json snapshot_to_json(const FusedSnapshot& s) {
    json tracks = json::array();
    for (const auto& t : s.tracks) {
        json cov = json::array();
        for (const auto& c : t.position_cov_trace) {
            if (c)
                cov.push_back(*c);
            else
                cov.push_back(nullptr);
        }
        tracks.push_back(
            {{"id", t.id}, {"joints", joints_to_json(t.skeleton.joints)}, {"cov_trace", std::move(cov)}});
    }
    return {{"type", "snapshot"}, {"stamp", s.stamp}, {"tracks", std::move(tracks)}};
}

inline json truth_to_json(const std::string& person, double t, const Skeleton3D& s) {
    return {{"person", person}, {"t", t}, {"joints", joints_to_json(s.joints)}};
}

}  // namespace io
}  // namespace skelfuse
