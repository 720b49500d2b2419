#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/munkres.hpp"
#include "skelfuse/track.hpp"
#include "skelfuse/ukf.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace skelfuse {

/// Upper bound on the squared Mahalanobis cost of an accepted match.
/// The default is the 95th percentile of a chi-square with 3 degrees of
/// freedom.
struct GatingThreshold {
    double epsilon = 9.49;

    constexpr GatingThreshold() = default;
    explicit GatingThreshold(double eps) : epsilon(eps) {
        if (!(eps > 0.0)) throw ConfigError("gating threshold must be positive");
    }
};

/// Weights of the torso joints standing in for a missing chest. They are
/// renormalized over whichever of those joints are valid.
struct CentroidWeights {
    double neck = 0.4;
    double shoulder = 0.1;  // each
    double hip = 0.2;       // each
};

inline std::optional<Vec3> centroid(const Skeleton3D& s, const CentroidWeights& w = {}) {
    if (const auto& chest = s[Joint::chest]) return *chest;

    const std::pair<Joint, double> terms[] = {
        {Joint::neck, w.neck},       {Joint::r_shoulder, w.shoulder}, {Joint::l_shoulder, w.shoulder},
        {Joint::r_hip, w.hip},       {Joint::l_hip, w.hip},
    };
    Vec3 sum = Vec3::Zero();
    double total = 0.0;
    for (const auto& [joint, weight] : terms) {
        if (const auto& p = s[joint]; p && weight > 0.0) {
            sum += weight * *p;
            total += weight;
        }
    }
    if (total <= 0.0) return std::nullopt;
    return Vec3(sum / total);
}

/// Cost of pairing track i (row) with detection j (column): the centroid
/// filter's innovation cost at time t. Detections without a centroid get
/// kForbiddenCost in every row. Each filter is queried at
/// max(t, its last update) so slightly stale detections are scored with
/// dt = 0 instead of failing.
inline Eigen::MatrixXd build_cost_matrix(std::span<const FilterState> centroid_filters,
                                         std::span<const Skeleton3D> detections, double t,
                                         const NoiseConfig& cfg, const CentroidWeights& w = {}) {
    const auto rows = static_cast<Eigen::Index>(centroid_filters.size());
    const auto cols = static_cast<Eigen::Index>(detections.size());
    Eigen::MatrixXd cost(rows, cols);

    std::vector<std::optional<Vec3>> centroids;
    centroids.reserve(detections.size());
    for (const auto& d : detections) centroids.push_back(centroid(d, w));

    for (Eigen::Index i = 0; i < rows; ++i) {
        const FilterState& f = centroid_filters[static_cast<std::size_t>(i)];
        const double query = std::max(t, f.last_update);
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto& c = centroids[static_cast<std::size_t>(j)];
            cost(i, j) = c ? innovation_cost(f, *c, query, cfg) : kForbiddenCost;
        }
    }
    return cost;
}

struct AssociationResult {
    struct Match {
        std::size_t detection;
        TrackId track;

        friend bool operator==(const Match&, const Match&) = default;
    };

    std::vector<Match> matches;
    std::vector<std::size_t> unmatched_detections;
    std::vector<TrackId> unmatched_tracks;
};

/// Splits an assignment over a cost matrix (tracks x detections) into gated
/// matches and leftovers. A pair is kept only if its original cost is below
/// the threshold. Every cell of the assignment matrix is scanned.
inline AssociationResult partition_assignment(const Eigen::MatrixXd& cost, const Assignment& a,
                                              std::span<const TrackId> track_ids,
                                              GatingThreshold eps) {
    AssociationResult out;
    std::vector<char> det_taken(static_cast<std::size_t>(cost.cols()), 0);
    std::vector<char> track_taken(track_ids.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int j = a[i];
        if (j < 0) continue;
        if (cost(static_cast<Eigen::Index>(i), j) < eps.epsilon) {
            out.matches.push_back({static_cast<std::size_t>(j), track_ids[i]});
            det_taken[static_cast<std::size_t>(j)] = 1;
            track_taken[i] = 1;
        }
    }
    for (std::size_t j = 0; j < det_taken.size(); ++j)
        if (!det_taken[j]) out.unmatched_detections.push_back(j);
    for (std::size_t i = 0; i < track_taken.size(); ++i)
        if (!track_taken[i]) out.unmatched_tracks.push_back(track_ids[i]);
    return out;
}

/// Associates one detection set with the current tracks: centroid cost
/// matrix, optimal assignment, then gating.
inline AssociationResult data_association(const DetectionSet& dets, std::span<const Track> tracks,
                                          GatingThreshold eps, const NoiseConfig& cfg,
                                          const CentroidWeights& w = {}) {
    for (const auto& s : dets.skeletons)
        if (!s.frame.is_world())
            throw FrameMismatchError("data_association: detections must be in the world frame");

    std::vector<FilterState> filters;
    std::vector<TrackId> ids;
    filters.reserve(tracks.size());
    ids.reserve(tracks.size());
    for (const auto& t : tracks) {
        filters.push_back(t.centroid_filter);
        ids.push_back(t.id);
    }
    const Eigen::MatrixXd cost = build_cost_matrix(filters, dets.skeletons, dets.stamp, cfg, w);
    return partition_assignment(cost, munkres(cost), ids, eps);
}

}  // namespace skelfuse
