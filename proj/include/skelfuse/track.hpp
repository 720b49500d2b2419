#pragma once

#include "skelfuse/core_model.hpp"
#include "skelfuse/ukf.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace skelfuse {

using TrackId = std::uint64_t;

/// One tracked person: a filter per joint plus the centroid filter used for
/// association. Joint filters start empty and are created on the first
/// valid observation of that joint.
struct Track {
    TrackId id = 0;
    std::array<std::optional<FilterState>, kJointCount> joint_filters{};
    FilterState centroid_filter;
    double created_at = 0.0;
    double last_seen = 0.0;
    std::uint32_t hits = 0;
    std::uint32_t missed_updates = 0;
};

}  // namespace skelfuse
