// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any failed.

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "skelfuse/association.hpp"
#include "skelfuse/cli.hpp"
#include "skelfuse/config_io.hpp"
#include "skelfuse/evaluation.hpp"
#include "skelfuse/geometry.hpp"
#include "skelfuse/lifting.hpp"
#include "skelfuse/munkres.hpp"
#include "skelfuse/sim_network.hpp"
#include "skelfuse/tracker.hpp"
#include "skelfuse/ukf.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace skelfuse;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

const fs::path kData = SKELFUSE_DATA_DIR;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1 -----------------------------------------------------------------------------

Verdict ukf_matches_linear_kf() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> dt(0.0, 0.1), pos(-4, 4);
    std::bernoulli_distribution skip(0.2);
    const NoiseConfig cfg;
    double dmean = 0.0, dcov = 0.0;
    for (int seq = 0; seq < 100; ++seq) {
        const Vec3 z0(pos(gen), pos(gen), pos(gen));
        FilterState u = init_filter(z0, 0.0, cfg);
        auto kf = oracle::LinearKf::init(z0, 0.0, cfg.process_accel_sigma, cfg.meas_sigma, cfg.init_velocity_sigma);
        double t = 0.0;
        for (int step = 0; step < 50; ++step) {
            t += dt(gen);
            u = predict(u, t, cfg);
            kf.predict(t);
            if (!skip(gen)) {
                const Vec3 z(pos(gen), pos(gen), pos(gen));
                u = update(u, z, cfg);
                kf.update(z);
            }
            dmean = std::max(dmean, (u.mean - kf.x).cwiseAbs().maxCoeff());
            dcov = std::max(dcov, (u.cov - kf.P).cwiseAbs().maxCoeff());
        }
    }
    const double secs = seconds_since(t0);
    return {dmean < 1e-9 && dcov < 1e-9 && secs < 5.0,
            fmt("max |dmean| %.3g m, max |dcov| %.3g, %.2f s", dmean, dcov, secs)};
}

// 2 -----------------------------------------------------------------------------

Verdict munkres_is_optimal() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> dim(1, 7), icost(0, 20);
    std::uniform_real_distribution<double> rcost(0.0, 100.0);
    int mismatches = 0, rectangular = 0;
    for (int trial = 0; trial < 500; ++trial) {
        Eigen::MatrixXd c(dim(gen), dim(gen));
        const bool integer = trial % 2 == 0;  // integer costs exercise ties
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = integer ? icost(gen) : rcost(gen);
        rectangular += c.rows() != c.cols();
        const Assignment a = munkres(c);
        const auto best = oracle::brute_force_assignment(c);
        std::set<int> cols;
        std::size_t pairs = 0;
        for (std::size_t r = 0; r < a.size(); ++r)
            if (a[r] >= 0) {
                ++pairs;
                cols.insert(a[r]);
            }
        const bool ok = pairs == best.pairs && cols.size() == pairs && assignment_cost(c, a) == best.cost;
        mismatches += !ok;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 10.0,
            fmt("%d/500 mismatches (%d rectangular), %.2f s", mismatches, rectangular, secs)};
}

// 3 -----------------------------------------------------------------------------

Verdict geometry_round_trips() {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0), depth(0.2, 20.0);
    double worst_rel = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const auto cam = fixture::simple_camera("c", fixture::pose(fixture::random_rotation(gen), Vec3::Random() * 5));
        const Vec3 p(u(gen) * 5, u(gen) * 5, depth(gen));
        const Projection pr = project(p, cam);
        const Vec3 back = back_project(pr.pixel, pr.depth, cam);
        worst_rel = std::max(worst_rel, (back - p).norm() / p.norm());
    }

    auto cfg = fixture::corner_rig(4);
    cfg.persons.push_back(fixture::circle_walker("p", 0.3));
    for (auto& c : cfg.cameras) {
        c.pixel_noise_sigma = 3.0;
        c.depth_noise_sigma = 0.03;
        c.joint_dropout = 0.15;
    }
    const sim::GroundTruth gt(cfg.persons, cfg.duration);
    Rng rng(11);
    double worst_px = 0.0;
    std::size_t joints = 0;
    for (const auto& spec : cfg.cameras)
        for (double t = 0.0; t < cfg.duration; t += 1.0 / 30.0) {
            const auto r = sim::render_detection(gt, 0, spec, t, rng);
            if (!r) continue;
            const auto& [s2d, dm] = *r;
            const Skeleton3D s3d = lift_skeleton(s2d, dm, spec.camera);
            for (std::size_t j = 0; j < kJointCount; ++j) {
                if (!s3d.joints[j]) continue;
                const Pixel q = project(*s3d.joints[j], spec.camera).pixel;
                worst_px = std::max(worst_px, std::hypot(q.x - s2d.joints[j]->x, q.y - s2d.joints[j]->y));
                ++joints;
            }
        }
    return {worst_rel < 1e-12 && worst_px < 0.5 && joints > 0,
            fmt("back_project max rel err %.3g over 1e5 points; lift/project max %.3g px over %zu joints",
                worst_rel, worst_px, joints)};
}

// 4 -----------------------------------------------------------------------------

Verdict median_depth_matches_sort() {
    std::mt19937_64 gen(4);
    std::uniform_int_distribution<int> side(1, 24);
    std::uniform_real_distribution<float> depth(0.3f, 8.0f);
    std::uniform_real_distribution<double> coin(0.0, 1.0), rad(0.3, 6.0);
    int mismatches = 0, empty = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = side(gen), h = side(gen);
        const double nan_rate = coin(gen) * 0.5, zero_rate = coin(gen) * 0.5;
        std::vector<float> v(static_cast<std::size_t>(w * h));
        for (auto& d : v) {
            const double c = coin(gen);
            d = c < nan_rate ? std::numeric_limits<float>::quiet_NaN() : c < nan_rate + zero_rate ? 0.0f : depth(gen);
        }
        const DepthMap dm(w, h, v);
        const double px = coin(gen) * w * 0.9999, py = coin(gen) * h * 0.9999, r = rad(gen);
        const auto got = median_depth(dm, {px, py}, NeighborhoodRadius(r));
        const auto want = oracle::sorted_median(dm, px, py, r);
        mismatches += got != want;
        empty += !want;
    }
    return {mismatches == 0, fmt("%d/1000 mismatches (%d neighborhoods with no valid depth)", mismatches, empty)};
}

// 5 -----------------------------------------------------------------------------

Verdict association_invariants() {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_real_distribution<double> u(-2.5, 2.5), coin(0.0, 1.0);
    std::normal_distribution<double> n;
    const NoiseConfig noise;
    int violations = 0, unique = 0, disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Track> tracks;
        for (int k = count(gen); k > 0; --k) {
            Track tr;
            tr.id = static_cast<TrackId>(10 + 7 * tracks.size() + trial % 3);
            tr.centroid_filter = init_filter(Vec3(u(gen), u(gen), 1.0), 0.0, noise);
            if (coin(gen) < 0.5)
                tr.centroid_filter = update(predict(tr.centroid_filter, 0.05, noise),
                                            tr.centroid_filter.position() + 0.05 * Vec3(n(gen), n(gen), 0), noise);
            tracks.push_back(tr);
        }
        DetectionSet d;
        d.camera_id = "c";
        d.stamp = 0.05 + 0.1 * coin(gen);
        for (int k = count(gen); k > 0; --k) {
            Vec3 c(u(gen), u(gen), 1.0);
            if (!tracks.empty() && coin(gen) < 0.7) {
                const auto& tr = tracks[static_cast<std::size_t>(k) % tracks.size()];
                c = tr.centroid_filter.position() + 0.4 * coin(gen) * Vec3(n(gen), n(gen), n(gen));
            }
            const double kind = coin(gen);
            if (kind < 0.1)
                d.skeletons.push_back(fixture::world_skeleton({{Joint::head, c}}));
            else if (kind < 0.3)
                d.skeletons.push_back(fixture::world_skeleton(
                    {{Joint::neck, c + Vec3(0, 0, 0.3)}, {Joint::r_hip, c - Vec3(0.1, 0, 0.2)}}));
            else
                d.skeletons.push_back(fixture::world_skeleton({{Joint::chest, c}}));
        }
        const GatingThreshold gate;
        const AssociationResult r = data_association(d, tracks, gate, noise);

        std::vector<TrackId> ids;
        std::vector<FilterState> filters;
        for (const auto& t : tracks) {
            ids.push_back(t.id);
            filters.push_back(t.centroid_filter);
        }
        const Eigen::MatrixXd cost = build_cost_matrix(filters, d.skeletons, d.stamp, noise);

        std::multiset<std::size_t> dets(r.unmatched_detections.begin(), r.unmatched_detections.end());
        std::multiset<TrackId> trs(r.unmatched_tracks.begin(), r.unmatched_tracks.end());
        bool ok = true;
        for (const auto& m : r.matches) {
            dets.insert(m.detection);
            trs.insert(m.track);
            const auto row = std::find(ids.begin(), ids.end(), m.track) - ids.begin();
            ok = ok && cost(row, static_cast<Eigen::Index>(m.detection)) < gate.epsilon;
        }
        std::multiset<std::size_t> all;
        for (std::size_t j = 0; j < d.skeletons.size(); ++j) all.insert(j);
        ok = ok && dets == all && trs == std::multiset<TrackId>(ids.begin(), ids.end());
        violations += !ok;

        std::vector<std::uint64_t> oracle_ids(ids.begin(), ids.end());
        if (const auto want = oracle::brute_gated_association(cost, oracle_ids, gate.epsilon)) {
            ++unique;
            std::vector<oracle::GatedMatch> got;
            for (const auto& m : r.matches) got.push_back({m.detection, m.track});
            std::sort(got.begin(), got.end());
            disagreements += got != *want;
        }
    }
    return {violations == 0 && disagreements == 0,
            fmt("%d partition/gate violations; %d disagreements with brute force over %d unique optima", violations,
                disagreements, unique)};
}

// 6 -----------------------------------------------------------------------------

Verdict table_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto scenario = config::load_scenario((kData / "scenarios/four_kinect_walk.yaml").string());
    const auto ecfg = config::load_eval_config((kData / "scenarios/camera_subsets_eval.yaml").string());
    const eval::EvalReport rep = eval::evaluate(scenario, ecfg);
    const double secs = seconds_since(t0);

    bool a_ok = true;
    std::string a_detail;
    for (const auto& conf : rep.configs) {
        const double ours = rep.aggregate_mean(conf, eval::ours_label());
        a_detail += fmt(" %s ours %.2f", conf.c_str(), ours);
        for (std::size_t k : ecfg.maf_windows) {
            const double maf = rep.aggregate_mean(conf, eval::maf_label(k));
            a_detail += fmt(" MAF_%zu %.2f", k, maf);
            a_ok = a_ok && ours < maf;
        }
        a_detail += ";";
    }
    int ordered = 0;
    if (rep.configs.size() == 3)
        for (Joint j : kLimbJoints) {
            auto mean = [&](const std::string& conf) {
                return rep.find(conf, eval::ours_label(), joint_name(j))->stats.mean;
            };
            ordered += mean(rep.configs[2]) < mean(rep.configs[1]) && mean(rep.configs[1]) < mean(rep.configs[0]);
        }
    const bool pass = a_ok && rep.configs.size() == 3 && ordered >= 9 && secs < 120.0;
    return {pass, fmt("(a)%s (b) %d/12 joints ordered; %zu seeds, %.1f s", a_detail.c_str(), ordered,
                      ecfg.seeds.size(), secs)};
}

// 7, 8 --------------------------------------------------------------------------

struct IntegrityStats {
    std::size_t snapshots = 0;
    std::size_t exact = 0;
    std::size_t reused_ids = 0;
    std::size_t stale = 0;
    std::size_t out_of_order = 0;
};

IntegrityStats run_integrity(const sim::ScenarioConfig& base, std::uint64_t seed) {
    constexpr double kWarmup = 1.0, kPeriod = 0.1;
    sim::ScenarioConfig cfg = base;
    cfg.seed = seed;
    const sim::ScenarioRun run = sim::run_scenario(cfg);
    FusionTracker tracker;
    IntegrityStats st;
    std::set<TrackId> seen, retired;
    double newest_stamp = -1.0;
    std::size_t next = 1;
    auto snapshots_until = [&](double until) {
        for (;; ++next) {
            const double t = static_cast<double>(next) * kPeriod;
            if (t > until || t > cfg.duration) break;
            if (t < kWarmup) continue;
            ++st.snapshots;
            st.exact += tracker.snapshot(t).tracks.size() == 3;
        }
    };
    for (const auto& e : run.events) {
        snapshots_until(e.arrival);
        if (e.detections.stamp < newest_stamp) ++st.out_of_order;
        newest_stamp = std::max(newest_stamp, e.detections.stamp);
        const IngestResult r = tracker.ingest(e.detections);
        if (r.status == IngestStatus::rejected_stale) ++st.stale;
        for (const auto& ev : r.events) {
            if (ev.kind == TrackEventKind::created && !seen.insert(ev.track).second) ++st.reused_ids;
            if (ev.kind == TrackEventKind::retired) retired.insert(ev.track);
        }
    }
    snapshots_until(std::numeric_limits<double>::infinity());
    return st;
}

IntegrityStats integrity_over_seeds(const std::string& scenario_file) {
    const auto cfg = config::load_scenario((kData / "scenarios" / scenario_file).string());
    IntegrityStats total;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = run_integrity(cfg, seed);
        total.snapshots += s.snapshots;
        total.exact += s.exact;
        total.reused_ids += s.reused_ids;
        total.stale += s.stale;
        total.out_of_order += s.out_of_order;
    }
    return total;
}

double exact_fraction(const IntegrityStats& s) {
    return s.snapshots ? static_cast<double>(s.exact) / static_cast<double>(s.snapshots) : 0.0;
}

Verdict multi_person_integrity() {
    const auto s = integrity_over_seeds("three_person.yaml");
    const double f = exact_fraction(s);
    return {f >= 0.95 && s.reused_ids == 0,
            fmt("exactly 3 tracks in %.2f%% of %zu snapshots; %zu reused ids", 100.0 * f, s.snapshots, s.reused_ids)};
}

Verdict asynchrony_robustness() {
    const auto s = integrity_over_seeds("three_person_jitter.yaml");
    const double f = exact_fraction(s);
    return {f >= 0.95 && s.reused_ids == 0 && s.stale == 0 && s.out_of_order > 0,
            fmt("exactly 3 tracks in %.2f%% of %zu snapshots; %zu reused ids; %zu stale rejects; %zu out-of-order "
                "capture stamps",
                100.0 * f, s.snapshots, s.reused_ids, s.stale, s.out_of_order)};
}

// 9 -----------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "skelfuse");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict pipeline_determinism() {
    const fs::path root = fs::temp_directory_path() / ("skelfuse_accept_" + std::to_string(std::random_device{}()));
    const std::string scenario = (kData / "scenarios/three_person_jitter.yaml").string();
    const std::string eval_cfg = (kData / "scenarios/camera_subsets_eval.yaml").string();
    const char* files[] = {"sim/stream.jsonl", "sim/truth.jsonl", "sim/calibration.json", "tracks.jsonl",
                           "report.csv"};
    int failures = 0;
    for (const char* run : {"a", "b"}) {
        const fs::path d = root / run;
        failures += cli({"simulate", "--scenario", scenario, "--out", (d / "sim").string()}) != 0;
        failures += cli({"track", "--stream", (d / "sim/stream.jsonl").string(), "--calib",
                         (d / "sim/calibration.json").string(), "--out", (d / "tracks.jsonl").string()}) != 0;
        failures += cli({"evaluate", "--scenario", scenario, "--eval-config", eval_cfg, "--seed-override", "1",
                         "--report-format", "csv", "--out", (d / "report.csv").string()}) != 0;
    }
    int differing = 0;
    std::size_t bytes = 0;
    for (const char* f : files) {
        const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
        differing += a != b || a.empty();
        bytes += a.size();
    }
    fs::remove_all(root);
    return {failures == 0 && differing == 0,
            fmt("%d failed commands; %d of 5 outputs differ or are empty (%zu bytes compared)", failures, differing,
                bytes)};
}

}  // namespace

int main() {
    logger()->set_level(spdlog::level::err);
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"1 UKF matches linear Kalman filter", ukf_matches_linear_kf},
        {"2 Munkres optimality", munkres_is_optimal},
        {"3 geometry round trips", geometry_round_trips},
        {"4 median_depth matches sort oracle", median_depth_matches_sort},
        {"5 association partition and gating", association_invariants},
        {"6 reprojection error ordering", table_ordering},
        {"7 multi-person track integrity", multi_person_integrity},
        {"8 asynchrony robustness", asynchrony_robustness},
        {"9 pipeline determinism", pipeline_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
