#pragma once

#include "skelfuse/tracker.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>
#include <variant>

namespace skelfuse {

/// Single-writer front end for FusionTracker. Any number of producer
/// threads may submit detection sets; one worker thread applies them in
/// queue order. Snapshots are read messages on the same queue, so they
/// observe exactly the ingests submitted before them.
class TrackerService {
public:
    using ResultSink = std::function<void(const DetectionSet&, const IngestResult&)>;

    explicit TrackerService(TrackerConfig cfg = {}, ResultSink sink = {})
        : tracker_(cfg), sink_(std::move(sink)), worker_([this] { run(); }) {}

    TrackerService(const TrackerService&) = delete;
    TrackerService& operator=(const TrackerService&) = delete;

    ~TrackerService() {
        {
            std::lock_guard lock(mutex_);
            closing_ = true;
        }
        ready_.notify_one();
        worker_.join();
    }

    void submit(DetectionSet dets) { push(std::move(dets)); }

    std::future<FusedSnapshot> snapshot(double t) {
        SnapshotRequest req{t, {}};
        auto fut = req.reply.get_future();
        push(std::move(req));
        return fut;
    }

    /// Blocks until everything submitted so far has been processed.
    void drain() {
        Barrier b;
        auto fut = b.done.get_future();
        push(std::move(b));
        fut.wait();
    }

    std::size_t accepted_count() const {
        std::lock_guard lock(mutex_);
        return accepted_;
    }
    std::size_t rejected_count() const {
        std::lock_guard lock(mutex_);
        return rejected_;
    }

private:
    struct SnapshotRequest {
        double t;
        std::promise<FusedSnapshot> reply;
    };
    struct Barrier {
        std::promise<void> done;
    };
    using Message = std::variant<DetectionSet, SnapshotRequest, Barrier>;

    void push(Message m) {
        {
            std::lock_guard lock(mutex_);
            queue_.push_back(std::move(m));
        }
        ready_.notify_one();
    }

    void run() {
        for (;;) {
            Message m;
            {
                std::unique_lock lock(mutex_);
                ready_.wait(lock, [this] { return closing_ || !queue_.empty(); });
                if (queue_.empty()) return;
                m = std::move(queue_.front());
                queue_.pop_front();
            }
            if (auto* dets = std::get_if<DetectionSet>(&m)) {
                IngestResult r = tracker_.ingest(*dets);
                {
                    std::lock_guard lock(mutex_);
                    (r.accepted() ? accepted_ : rejected_) += 1;
                }
                if (sink_) sink_(*dets, r);
            } else if (auto* req = std::get_if<SnapshotRequest>(&m)) {
                req->reply.set_value(tracker_.snapshot(req->t));
            } else {
                std::get<Barrier>(m).done.set_value();
            }
        }
    }

    FusionTracker tracker_;
    ResultSink sink_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Message> queue_;
    bool closing_ = false;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
    std::thread worker_;  // last: starts after the other members exist
};

}  // namespace skelfuse
