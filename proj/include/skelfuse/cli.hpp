#pragma once

#include "skelfuse/config_io.hpp"
#include "skelfuse/evaluation.hpp"
#include "skelfuse/json_io.hpp"
#include "skelfuse/log.hpp"
#include "skelfuse/sim_network.hpp"
#include "skelfuse/tracker.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// skelfuse simulate --scenario S.yaml --out DIR [--seed-override N]
//   DIR/stream.jsonl       detection stream in arrival order
//   DIR/truth.jsonl        {"person", "t", "joints"} at every capture stamp
//   DIR/calibration.json
// skelfuse track --stream F --calib C --out F [--tracker-config T.yaml] [--gating-eps E]
//                [--snapshot-period P]
// skelfuse evaluate --scenario S.yaml [--eval-config E.yaml] [--seed-override N]
//                   [--maf-k 30,40] [--cameras a,b]... [--gating-eps E]
//                   [--report-format csv|table] [--out F]
//
// Exit codes: 0 success, 2 bad input (config, schema, unknown camera),
// 1 anything else. Nothing is written unless the command succeeds.

namespace skelfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadInput = 2;

namespace detail {

/// Files are staged next to their target and renamed into place only after
/// every output of the command has been produced.
class StagedOutput {
public:
    std::ostringstream& open(const std::filesystem::path& target) {
        files_.push_back({target, std::make_unique<std::ostringstream>()});
        return *files_.back().body;
    }

    void commit() {
        for (auto& f : files_) {
            if (f.target.has_parent_path()) std::filesystem::create_directories(f.target.parent_path());
            const auto tmp = std::filesystem::path(f.target.string() + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                if (!out) throw std::runtime_error("cannot write " + tmp.string());
                out << f.body->str();
                if (!out) throw std::runtime_error("write failed for " + tmp.string());
            }
            std::filesystem::rename(tmp, f.target);
        }
    }

private:
    struct File {
        std::filesystem::path target;
        std::unique_ptr<std::ostringstream> body;
    };
    std::vector<File> files_;
};

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    return in;
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace detail

struct SimulateOptions {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed_override;
};

struct TrackOptions {
    std::string stream;
    std::string calib;
    std::string out;
    std::string tracker_config;
    std::optional<double> gating_eps;
    double snapshot_period = 0.1;
};

struct EvaluateOptions {
    std::string scenario;
    std::string eval_config;
    std::string out;
    std::optional<std::uint64_t> seed_override;
    std::string maf_k;
    std::vector<std::string> cameras;
    std::optional<double> gating_eps;
    std::string report_format = "table";
};

inline void cmd_simulate(const SimulateOptions& o, std::ostream& log) {
    sim::ScenarioConfig cfg = config::load_scenario(o.scenario);
    if (o.seed_override) cfg.seed = *o.seed_override;
    const sim::ScenarioRun run = sim::run_scenario(cfg);

    const std::filesystem::path dir(o.out);
    detail::StagedOutput staged;
    auto& stream = staged.open(dir / "stream.jsonl");
    for (const auto& e : run.events) io::write_jsonl(stream, io::stream_record_to_json(e));

    std::set<double> stamps;
    for (const auto& e : run.events) stamps.insert(e.detections.stamp);
    auto& truth = staged.open(dir / "truth.jsonl");
    for (double t : stamps)
        for (std::size_t p = 0; p < run.truth.person_count(); ++p)
            io::write_jsonl(truth, io::truth_to_json(cfg.persons[p].id, t, run.truth.truth_at(p, t)));

    std::vector<CameraModel> cams;
    for (const auto& c : cfg.cameras) cams.push_back(c.camera);
    staged.open(dir / "calibration.json") << io::calibration_to_json(cams).dump(2) << '\n';
    staged.commit();
    log << "wrote " << run.events.size() << " detection sets from " << cfg.cameras.size()
        << " cameras to " << dir.string() << '\n';
}

inline void cmd_track(const TrackOptions& o, std::ostream& log) {
    TrackerConfig tcfg = o.tracker_config.empty() ? TrackerConfig{} : config::load_tracker_config(o.tracker_config);
    if (o.gating_eps) {
        tcfg.gating.epsilon = *o.gating_eps;
        tcfg.validate();
    }
    if (!(o.snapshot_period > 0.0)) throw ConfigError("--snapshot-period must be > 0");

    std::vector<CameraModel> cams;
    {
        auto in = detail::open_input(o.calib);
        try {
            cams = io::read_calibration(in);
        } catch (const Error& e) {
            throw ParseError(o.calib + ": " + e.what());
        }
    }
    std::set<std::string> known;
    for (const auto& c : cams) known.insert(c.id());

    std::vector<io::StreamRecord> records;
    {
        auto in = detail::open_input(o.stream);
        try {
            records = io::read_detection_stream(in);
        } catch (const Error& e) {
            throw ParseError(o.stream + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!known.count(records[i].detections.camera_id))
            throw ConfigError(o.stream + ": record " + std::to_string(i + 1) + ": camera '" +
                              records[i].detections.camera_id + "' is not in the calibration");

    FusionTracker tracker(tcfg);
    detail::StagedOutput staged;
    auto& out = staged.open(o.out);

    // Snapshots on a fixed grid, each taken once every record that arrived
    // by then has been ingested.
    std::size_t next_snapshot = 1;
    auto flush_snapshots = [&](double until) {
        for (;; ++next_snapshot) {
            const double t = static_cast<double>(next_snapshot) * o.snapshot_period;
            if (t > until) break;
            io::write_jsonl(out, io::snapshot_to_json(tracker.snapshot(t)));
        }
    };

    double clock = 0.0;
    for (const auto& r : records) {
        clock = std::max(clock, r.arrival.value_or(r.detections.stamp));
        flush_snapshots(clock);
        const IngestResult res = tracker.ingest(r.detections);
        if (!res.accepted()) {
            io::write_jsonl(out, {{"type", "rejected"},
                                  {"camera_id", r.detections.camera_id},
                                  {"stamp", r.detections.stamp},
                                  {"reason", res.message}});
            continue;
        }
        for (const auto& e : res.events) io::write_jsonl(out, io::event_to_json(e));
    }
    if (!records.empty()) io::write_jsonl(out, io::snapshot_to_json(tracker.snapshot(clock)));
    staged.commit();
    log << "ingested " << tracker.accepted_count() << " detection sets, rejected "
        << tracker.rejected_count() << '\n';
}

inline std::string cmd_evaluate(const EvaluateOptions& o) {
    const sim::ScenarioConfig scenario = config::load_scenario(o.scenario);
    eval::EvalConfig ecfg = o.eval_config.empty() ? eval::EvalConfig{} : config::load_eval_config(o.eval_config);
    if (o.seed_override) ecfg.seeds = {*o.seed_override};
    if (!o.maf_k.empty()) {
        ecfg.maf_windows.clear();
        for (const auto& k : detail::split_csv(o.maf_k)) {
            std::size_t pos = 0;
            long long v = 0;
            try {
                v = std::stoll(k, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != k.size() || v < 1) throw ConfigError("--maf-k: '" + k + "' is not a positive integer");
            ecfg.maf_windows.push_back(static_cast<std::size_t>(v));
        }
    }
    if (!o.cameras.empty()) {
        ecfg.camera_subsets.clear();
        for (const auto& c : o.cameras) ecfg.camera_subsets.push_back(detail::split_csv(c));
    }
    if (o.gating_eps) ecfg.tracker.gating.epsilon = *o.gating_eps;
    if (o.report_format != "csv" && o.report_format != "table")
        throw ConfigError("--report-format must be csv or table");

    const eval::EvalReport report = eval::evaluate(scenario, ecfg);
    return o.report_format == "csv" ? eval::format_csv(report) : eval::format_table(report);
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-camera 3D skeleton fusion"};
    app.require_subcommand(1);

    SimulateOptions sim_o;
    auto* sim_cmd = app.add_subcommand("simulate", "Render a scenario into a detection stream");
    sim_cmd->add_option("--scenario", sim_o.scenario, "Scenario YAML")->required();
    sim_cmd->add_option("--out", sim_o.out, "Output directory")->required();
    sim_cmd->add_option("--seed-override", sim_o.seed_override, "Replace the scenario seed");

    TrackOptions trk_o;
    auto* trk_cmd = app.add_subcommand("track", "Run the fusion tracker over a recorded stream");
    trk_cmd->add_option("--stream", trk_o.stream, "Detection stream JSONL")->required();
    trk_cmd->add_option("--calib", trk_o.calib, "Calibration JSON")->required();
    trk_cmd->add_option("--out", trk_o.out, "Output JSONL")->required();
    trk_cmd->add_option("--tracker-config", trk_o.tracker_config, "Tracker YAML");
    trk_cmd->add_option("--gating-eps", trk_o.gating_eps, "Gating threshold");
    trk_cmd->add_option("--snapshot-period", trk_o.snapshot_period, "Seconds between snapshots");

    EvaluateOptions ev_o;
    auto* ev_cmd = app.add_subcommand("evaluate", "Reprojection-error report for a scenario");
    ev_cmd->add_option("--scenario", ev_o.scenario, "Scenario YAML")->required();
    ev_cmd->add_option("--eval-config", ev_o.eval_config, "Evaluation YAML");
    ev_cmd->add_option("--out", ev_o.out, "Write the report here instead of stdout");
    ev_cmd->add_option("--seed-override", ev_o.seed_override, "Evaluate this seed only");
    ev_cmd->add_option("--maf-k", ev_o.maf_k, "Comma-separated MAF windows");
    ev_cmd->add_option("--cameras", ev_o.cameras, "Comma-separated camera subset (repeatable)");
    ev_cmd->add_option("--gating-eps", ev_o.gating_eps, "Gating threshold");
    ev_cmd->add_option("--report-format", ev_o.report_format, "csv or table")
        ->check(CLI::IsMember({"csv", "table"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    try {
        if (*sim_cmd) {
            cmd_simulate(sim_o, err);
        } else if (*trk_cmd) {
            cmd_track(trk_o, err);
        } else if (*ev_cmd) {
            const std::string report = cmd_evaluate(ev_o);
            if (ev_o.out.empty()) {
                out << report;
            } else {
                detail::StagedOutput staged;
                staged.open(ev_o.out) << report;
                staged.commit();
            }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace skelfuse::cli
