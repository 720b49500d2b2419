#pragma once

#include "skelfuse/association.hpp"
#include "skelfuse/core_model.hpp"
#include "skelfuse/log.hpp"
#include "skelfuse/track.hpp"
#include "skelfuse/ukf.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace skelfuse {

struct TrackerConfig {
    GatingThreshold gating;
    NoiseConfig noise;
    double max_track_age = 1.0;             // s without a match before retirement
    std::uint32_t min_hits_to_confirm = 3;  // matches before a track is reported
    double staleness_tolerance = 0.5;       // s a detection may lag the newest one seen
    double merge_distance = 0.3;            // m; closer centroids are one person, the younger track goes
    CentroidWeights centroid_weights;

    void validate() const {
        noise.validate();
        if (!(gating.epsilon > 0.0)) throw ConfigError("gating threshold must be positive");
        if (!(max_track_age > 0.0)) throw ConfigError("max_track_age must be positive");
        if (!(staleness_tolerance >= 0.0)) throw ConfigError("staleness_tolerance must be >= 0");
        if (!(merge_distance >= 0.0)) throw ConfigError("merge_distance must be >= 0");
    }
};

enum class TrackEventKind : std::uint8_t { created, updated, retired };

inline const char* to_string(TrackEventKind k) {
    switch (k) {
        case TrackEventKind::created: return "created";
        case TrackEventKind::updated: return "updated";
        case TrackEventKind::retired: return "retired";
    }
    return "?";
}

struct TrackEvent {
    TrackEventKind kind = TrackEventKind::created;
    TrackId track = 0;
    double stamp = 0.0;

    friend bool operator==(const TrackEvent&, const TrackEvent&) = default;
};

enum class IngestStatus : std::uint8_t {
    accepted,
    rejected_stale,
    rejected_time_regression,
    rejected_invalid,
};

struct IngestResult {
    IngestStatus status = IngestStatus::accepted;
    std::vector<TrackEvent> events;
    std::string message;

    bool accepted() const { return status == IngestStatus::accepted; }
};

struct FusedTrack {
    TrackId id = 0;
    Skeleton3D skeleton;  // world frame, filter means
    std::array<std::optional<double>, kJointCount> position_cov_trace{};
};

struct FusedSnapshot {
    double stamp = 0.0;
    std::vector<FusedTrack> tracks;  // ascending id
};

/// The fusion node: consumes world-frame detection sets from any camera in
/// arrival order and maintains one track per person.
///
/// Not thread-safe; all calls must come from a single writer (see
/// TrackerService for a queued front end).
class FusionTracker {
public:
    explicit FusionTracker(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const TrackerConfig& config() const { return cfg_; }
    const std::vector<Track>& tracks() const { return tracks_; }
    std::size_t rejected_count() const { return rejected_; }
    std::size_t accepted_count() const { return accepted_; }

    IngestResult ingest(const DetectionSet& dets) {
        IngestResult result;
        if (auto why = admission_error(dets)) {
            result.status = why->first;
            result.message = why->second;
            ++rejected_;
            logger()->warn("rejected detection from '{}' at {:.6f}: {}", dets.camera_id, dets.stamp,
                           result.message);
            return result;
        }

        const double stamp = dets.stamp;
        const AssociationResult assoc =
            data_association(dets, tracks_, cfg_.gating, cfg_.noise, cfg_.centroid_weights);

        for (const auto& m : assoc.matches) {
            Track& tr = find(m.track);
            apply_measurement(tr, dets.skeletons[m.detection], stamp);
            result.events.push_back({TrackEventKind::updated, tr.id, stamp});
        }

        for (std::size_t j : assoc.unmatched_detections) {
            const Skeleton3D& s = dets.skeletons[j];
            const auto c = centroid(s, cfg_.centroid_weights);
            if (!c) {
                logger()->debug("skeleton {} from '{}' has no torso joints; not starting a track", j,
                                dets.camera_id);
                continue;
            }
            tracks_.push_back(birth(s, *c, stamp));
            result.events.push_back({TrackEventKind::created, tracks_.back().id, stamp});
        }

        for (TrackId id : assoc.unmatched_tracks) ++find(id).missed_updates;

        const std::set<TrackId> merged = duplicates(stamp);
        std::erase_if(tracks_, [&](const Track& tr) {
            if (stamp - tr.last_seen > cfg_.max_track_age || merged.count(tr.id)) {
                result.events.push_back({TrackEventKind::retired, tr.id, stamp});
                return true;
            }
            return false;
        });

        latest_stamp_ = std::max(latest_stamp_.value_or(stamp), stamp);
        camera_stamps_[dets.camera_id] = stamp;
        ++accepted_;
        return result;
    }

    /// Confirmed tracks with every filter extrapolated to t (never before a
    /// filter's own last update). Does not modify the tracker.
    FusedSnapshot snapshot(double t) const {
        FusedSnapshot snap;
        snap.stamp = t;
        for (const auto& tr : tracks_) {
            if (tr.hits < cfg_.min_hits_to_confirm) continue;
            FusedTrack ft;
            ft.id = tr.id;
            ft.skeleton.frame = FrameTag::world();
            for (std::size_t i = 0; i < kJointCount; ++i) {
                const auto& f = tr.joint_filters[i];
                if (!f) continue;
                const FilterState p = predict(*f, std::max(t, f->last_update), cfg_.noise);
                ft.skeleton.joints[i] = p.position();
                ft.position_cov_trace[i] = p.position_cov().trace();
            }
            snap.tracks.push_back(std::move(ft));
        }
        return snap;
    }

private:
    std::optional<std::pair<IngestStatus, std::string>> admission_error(const DetectionSet& dets) const {
        if (!std::isfinite(dets.stamp) || dets.stamp < 0.0)
            return std::pair{IngestStatus::rejected_time_regression,
                             std::string("stamp must be finite and non-negative")};
        for (const auto& s : dets.skeletons)
            if (!s.frame.is_world())
                return std::pair{IngestStatus::rejected_invalid,
                                 std::string("skeletons must be in the world frame")};
        if (auto it = camera_stamps_.find(dets.camera_id);
            it != camera_stamps_.end() && dets.stamp < it->second)
            return std::pair{IngestStatus::rejected_time_regression,
                             "stamp " + std::to_string(dets.stamp) +
                                 " precedes this camera's previous stamp " +
                                 std::to_string(it->second)};
        if (latest_stamp_ && *latest_stamp_ - dets.stamp > cfg_.staleness_tolerance)
            return std::pair{IngestStatus::rejected_stale,
                             "stamp lags newest detection " + std::to_string(*latest_stamp_) +
                                 " by more than " + std::to_string(cfg_.staleness_tolerance) + " s"};
        return std::nullopt;
    }

    // Younger member of every pair of tracks whose centroids, predicted to
    // stamp, lie within merge_distance. Tracks are kept in creation order.
    std::set<TrackId> duplicates(double stamp) const {
        std::set<TrackId> out;
        if (cfg_.merge_distance <= 0.0) return out;
        std::vector<Vec3> c;
        c.reserve(tracks_.size());
        for (const auto& tr : tracks_) {
            const auto& f = tr.centroid_filter;
            c.push_back(f.position() + std::max(0.0, stamp - f.last_update) * f.velocity());
        }
        for (std::size_t j = 0; j < tracks_.size(); ++j)
            for (std::size_t i = 0; i < j; ++i)
                if (!out.count(tracks_[i].id) && (c[i] - c[j]).norm() < cfg_.merge_distance) {
                    out.insert(tracks_[j].id);
                    break;
                }
        return out;
    }

    Track& find(TrackId id) {
        auto it = std::find_if(tracks_.begin(), tracks_.end(),
                               [id](const Track& t) { return t.id == id; });
        return *it;
    }

    Track birth(const Skeleton3D& s, const Vec3& c, double stamp) {
        Track tr;
        tr.id = next_id_++;
        tr.centroid_filter = init_filter(c, stamp, cfg_.noise);
        for (std::size_t i = 0; i < kJointCount; ++i)
            if (s.joints[i]) tr.joint_filters[i] = init_filter(*s.joints[i], stamp, cfg_.noise);
        tr.created_at = stamp;
        tr.last_seen = stamp;
        tr.hits = 1;
        return tr;
    }

    // Detections older than a filter's last update are applied with dt = 0.
    void apply_measurement(Track& tr, const Skeleton3D& s, double stamp) {
        const auto c = centroid(s, cfg_.centroid_weights);
        auto step = [&](const FilterState& f, const std::optional<Vec3>& z) {
            FilterState p = predict(f, std::max(stamp, f.last_update), cfg_.noise);
            return z ? update(p, *z, cfg_.noise) : p;
        };
        tr.centroid_filter = step(tr.centroid_filter, c);
        for (std::size_t i = 0; i < kJointCount; ++i) {
            auto& f = tr.joint_filters[i];
            if (f)
                f = step(*f, s.joints[i]);
            else if (s.joints[i])
                f = init_filter(*s.joints[i], stamp, cfg_.noise);
        }
        tr.last_seen = std::max(tr.last_seen, stamp);
        ++tr.hits;
        tr.missed_updates = 0;
    }

    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    TrackId next_id_ = 1;
    std::optional<double> latest_stamp_;
    std::map<std::string, double> camera_stamps_;
    std::size_t rejected_ = 0;
    std::size_t accepted_ = 0;
};

}  // namespace skelfuse
