#pragma once

#include "skelfuse/association.hpp"
#include "skelfuse/core_model.hpp"
#include "skelfuse/geometry.hpp"
#include "skelfuse/sim_network.hpp"
#include "skelfuse/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace skelfuse::eval {

/// Pixel distance between an annotated 2D joint and the projection of a
/// fused world point into the reference camera. nullopt if the point lies
/// behind that camera.
inline std::optional<double> reprojection_error(const Vec3& fused_world, const Pixel& truth,
                                                const CameraModel& ref_cam) {
    const Vec3 pc = ref_cam.to_camera(fused_world);
    if (!(pc.z() > 0.0) || !pc.allFinite()) return std::nullopt;
    const Pixel p = project(pc, ref_cam).pixel;
    return std::hypot(p.x - truth.x, p.y - truth.y);
}

/// Moving-average baseline: every joint is the mean of its last k valid
/// observations. Missing observations are skipped rather than counted.
class MovingAverage {
public:
    explicit MovingAverage(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("moving average window must be >= 1");
    }

    void push(const Skeleton3D& s) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            if (!s.joints[j]) continue;
            auto& h = history_[j];
            h.push_back(*s.joints[j]);
            if (h.size() > capacity_) h.pop_front();
        }
    }

    /// Mean over the most recent min(k, available) observations per joint;
    /// k must not exceed the capacity.
    Skeleton3D average(std::size_t k) const {
        if (k == 0 || k > capacity_) throw ConfigError("moving average window out of range");
        Skeleton3D out;
        out.frame = FrameTag::world();
        for (std::size_t j = 0; j < kJointCount; ++j) {
            const auto& h = history_[j];
            if (h.empty()) continue;
            const std::size_t n = std::min(k, h.size());
            Vec3 sum = Vec3::Zero();
            for (std::size_t i = h.size() - n; i < h.size(); ++i) sum += h[i];
            out.joints[j] = Vec3(sum / static_cast<double>(n));
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::array<std::deque<Vec3>, kJointCount> history_;
};

/// The smoothed series a MAF_k filter produces over a recorded history.
inline std::vector<Skeleton3D> maf_baseline(std::span<const Skeleton3D> history, std::size_t k) {
    MovingAverage filter(k);
    std::vector<Skeleton3D> out;
    out.reserve(history.size());
    for (const auto& s : history) {
        filter.push(s);
        out.push_back(filter.average(k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// report

struct ErrorStats {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t n_samples = 0;
    std::size_t n_excluded = 0;
};

struct EvalRow {
    std::string config;
    std::string method;
    std::string joint;
    ErrorStats stats;
};

struct EvalReport {
    std::vector<std::string> configs;  // in evaluation order
    std::vector<std::string> methods;
    std::vector<EvalRow> rows;

    const EvalRow* find(std::string_view config, std::string_view method,
                        std::string_view joint) const {
        for (const auto& r : rows)
            if (r.config == config && r.method == method && r.joint == joint) return &r;
        return nullptr;
    }

    /// Mean of the per-joint mean errors over the table's limb joints.
    double aggregate_mean(std::string_view config, std::string_view method) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (Joint j : kLimbJoints) {
            const EvalRow* r = find(config, method, joint_name(j));
            if (r && r->stats.n_samples > 0) {
                sum += r->stats.mean;
                ++n;
            }
        }
        return n ? sum / static_cast<double>(n) : std::nan("");
    }
};

inline std::string format_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "config,method,joint,mean_px,std_px,n_samples,n_excluded\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : report.rows)
        os << r.config << ',' << r.method << ',' << r.joint << ',' << r.stats.mean << ','
           << r.stats.std << ',' << r.stats.n_samples << ',' << r.stats.n_excluded << '\n';
    return os.str();
}

/// Text table with one block of rows per camera configuration and one
/// column per limb joint. Cells above 100 px are flagged with '*'.
inline std::string format_table(const EvalReport& report) {
    constexpr int kCell = 15;
    std::ostringstream os;
    os << std::left << std::setw(10) << "config" << std::setw(8) << "method";
    for (Joint j : kLimbJoints) os << std::setw(kCell) << joint_name(j);
    os << '\n';
    bool flagged = false;
    for (const auto& config : report.configs) {
        for (const auto& method : report.methods) {
            os << std::left << std::setw(10) << config << std::setw(8) << method;
            for (Joint j : kLimbJoints) {
                const EvalRow* r = report.find(config, method, joint_name(j));
                std::ostringstream cell;
                if (!r || r->stats.n_samples == 0) {
                    cell << "n/a";
                } else {
                    cell << std::fixed << std::setprecision(1) << r->stats.mean << " +- "
                         << r->stats.std;
                    if (r->stats.mean > 100.0) {
                        cell << '*';
                        flagged = true;
                    }
                }
                os << std::setw(kCell) << cell.str();
            }
            os << '\n';
        }
    }
    if (flagged) os << "* mean error above 100 px\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// evaluation protocol

struct EvalConfig {
    std::string reference_camera;                          // empty: first camera
    std::vector<std::vector<std::string>> camera_subsets;  // empty: first 1, 2 and 4 cameras
    std::vector<std::size_t> maf_windows{30, 40};
    std::vector<std::uint64_t> seeds;  // empty: the scenario's own seed
    double warmup = 1.0;               // s skipped at the start of every run
    TrackerConfig tracker;
};

inline std::string ours_label() { return "ours"; }
inline std::string maf_label(std::size_t k) { return "MAF_" + std::to_string(k); }

namespace detail {

struct Accumulator {
    std::vector<double> errors;
    std::size_t excluded = 0;

    void add(std::optional<double> e) {
        if (e)
            errors.push_back(*e);
        else
            ++excluded;
    }

    ErrorStats stats() const {
        ErrorStats s;
        s.n_samples = errors.size();
        s.n_excluded = excluded;
        if (errors.empty()) return s;
        double sum = 0.0;
        for (double e : errors) sum += e;
        s.mean = sum / static_cast<double>(errors.size());
        double sq = 0.0;
        for (double e : errors) sq += (e - s.mean) * (e - s.mean);
        s.std = std::sqrt(sq / static_cast<double>(errors.size()));
        return s;
    }
};

inline std::vector<std::vector<std::string>> default_subsets(const sim::ScenarioConfig& cfg) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
        if (n > cfg.cameras.size()) break;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back(cfg.cameras[i].camera.id());
        out.push_back(std::move(ids));
    }
    return out;
}

inline std::vector<std::string> subset_labels(const std::vector<std::vector<std::string>>& subsets) {
    std::vector<std::string> labels;
    for (const auto& s : subsets) labels.push_back(std::to_string(s.size()) + "-cam");
    // Disambiguate repeated sizes with the camera ids.
    std::map<std::string, int> count;
    for (const auto& l : labels) ++count[l];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (count[labels[i]] < 2) continue;
        std::string ids;
        for (const auto& id : subsets[i]) ids += (ids.empty() ? "" : "+") + id;
        labels[i] += "(" + ids + ")";
    }
    return labels;
}

inline std::optional<std::size_t> nearest(const std::vector<std::optional<Vec3>>& candidates,
                                          const Vec3& target) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i]) continue;
        const double d = (*candidates[i] - target).squaredNorm();
        if (!best || d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

}  // namespace detail

/// Runs the tracker and the MAF baselines on each camera subset of the
/// scenario (once per seed), sampling every method at the reference
/// camera's frame times and scoring the limb joints by reprojection error
/// against the simulator truth seen by that camera. Samples from all seeds
/// are pooled.
///
/// Association to ground truth is oracle-based for both methods: the
/// confirmed track and the MAF history nearest to each person are used.
inline EvalReport evaluate(const sim::ScenarioConfig& scenario, const EvalConfig& ecfg) {
    scenario.validate();
    ecfg.tracker.validate();
    if (scenario.cameras.empty()) throw ConfigError("evaluate: scenario has no cameras");

    const std::string ref_id =
        ecfg.reference_camera.empty() ? scenario.cameras.front().camera.id() : ecfg.reference_camera;
    const sim::CameraSpec* ref = scenario.find_camera(ref_id);
    if (!ref) throw ConfigError("evaluate: unknown reference camera '" + ref_id + "'");

    const auto subsets = ecfg.camera_subsets.empty() ? detail::default_subsets(scenario)
                                                     : ecfg.camera_subsets;
    for (const auto& s : subsets) {
        if (s.empty()) throw ConfigError("evaluate: empty camera subset");
        for (const auto& id : s)
            if (!scenario.find_camera(id))
                throw ConfigError("evaluate: subset references unknown camera '" + id + "'");
    }
    for (std::size_t k : ecfg.maf_windows)
        if (k == 0) throw ConfigError("evaluate: MAF window must be >= 1");

    const std::size_t max_window =
        ecfg.maf_windows.empty() ? 1 : *std::max_element(ecfg.maf_windows.begin(), ecfg.maf_windows.end());
    const std::vector<std::uint64_t> seeds =
        ecfg.seeds.empty() ? std::vector<std::uint64_t>{scenario.seed} : ecfg.seeds;

    EvalReport report;
    report.configs = detail::subset_labels(subsets);
    for (std::size_t k : ecfg.maf_windows) report.methods.push_back(maf_label(k));
    report.methods.push_back(ours_label());

    // [subset][method][limb joint]
    std::vector<std::vector<std::array<detail::Accumulator, kLimbJoints.size()>>> acc(
        subsets.size(),
        std::vector<std::array<detail::Accumulator, kLimbJoints.size()>>(report.methods.size()));
    const std::size_t ours_index = report.methods.size() - 1;

    for (std::uint64_t seed : seeds) {
        sim::ScenarioConfig cfg = scenario;
        cfg.seed = seed;
        const sim::ScenarioRun run = sim::run_scenario(cfg);
        const auto& truth = run.truth;
        std::vector<double> times;
        for (double t : sim::frame_times(*ref, cfg.duration))
            if (t >= ecfg.warmup) times.push_back(t);

        for (std::size_t si = 0; si < subsets.size(); ++si) {
            const std::set<std::string> members(subsets[si].begin(), subsets[si].end());
            FusionTracker tracker(ecfg.tracker);
            std::vector<MovingAverage> maf(truth.person_count(), MovingAverage(max_window));

            std::size_t next = 0;
            for (double t : times) {
                for (; next < run.events.size() && run.events[next].arrival <= t; ++next) {
                    const DetectionSet& dets = run.events[next].detections;
                    if (!members.count(dets.camera_id)) continue;
                    tracker.ingest(dets);
                    // Baseline observations go to the person whose true
                    // centroid is nearest at capture time.
                    std::vector<std::optional<Vec3>> truth_centroids;
                    for (std::size_t p = 0; p < truth.person_count(); ++p)
                        truth_centroids.push_back(centroid(truth.truth_at(p, dets.stamp)));
                    for (const auto& s : dets.skeletons) {
                        const auto c = centroid(s);
                        if (!c) continue;
                        if (auto p = detail::nearest(truth_centroids, *c)) maf[*p].push(s);
                    }
                }

                const FusedSnapshot snap = tracker.snapshot(t);
                std::vector<std::optional<Vec3>> track_centroids;
                for (const auto& ft : snap.tracks) track_centroids.push_back(centroid(ft.skeleton));

                for (std::size_t p = 0; p < truth.person_count(); ++p) {
                    const Skeleton3D gt = truth.truth_at(p, t);
                    const Skeleton3D* fused = nullptr;
                    if (auto k = detail::nearest(track_centroids, *centroid(gt)))
                        fused = &snap.tracks[*k].skeleton;
                    std::vector<Skeleton3D> baselines;
                    for (std::size_t k : ecfg.maf_windows) baselines.push_back(maf[p].average(k));

                    for (std::size_t ji = 0; ji < kLimbJoints.size(); ++ji) {
                        const JointId joint = kLimbJoints[ji];
                        // Only joints the reference camera actually sees are
                        // annotated.
                        const Vec3 pc = ref->camera.to_camera(*gt[joint]);
                        if (!(pc.z() > 0.0)) continue;
                        const Pixel truth_px = project(pc, ref->camera).pixel;
                        if (!ref->camera.in_image(truth_px)) continue;

                        auto score = [&](const Skeleton3D* est) -> std::optional<double> {
                            if (!est || !(*est)[joint]) return std::nullopt;
                            return reprojection_error(*(*est)[joint], truth_px, ref->camera);
                        };
                        for (std::size_t m = 0; m < baselines.size(); ++m)
                            acc[si][m][ji].add(score(&baselines[m]));
                        acc[si][ours_index][ji].add(score(fused));
                    }
                }
            }
        }
    }

    for (std::size_t si = 0; si < subsets.size(); ++si)
        for (std::size_t m = 0; m < report.methods.size(); ++m)
            for (std::size_t ji = 0; ji < kLimbJoints.size(); ++ji)
                report.rows.push_back({report.configs[si], report.methods[m],
                                       std::string(joint_name(kLimbJoints[ji])),
                                       acc[si][m][ji].stats()});
    return report;
}

}  // namespace skelfuse::eval
