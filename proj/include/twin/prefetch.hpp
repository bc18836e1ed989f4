#pragma once

#include "twin/bytes.hpp"
#include "twin/pointcloud.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace twin {

class FrameLoadError : public std::runtime_error {
public:
    FrameLoadError(std::size_t index, const std::string& what)
        : std::runtime_error("frame " + std::to_string(index) + ": " + what), index_(index)
    {
    }
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Source of encoded frame bytes. Implementations must return identical bytes
/// for repeated loads of one index and be callable from any thread.
class FrameStore {
public:
    virtual ~FrameStore() = default;
    virtual std::size_t frame_count() const = 0;
    /// Throws FrameLoadError.
    virtual Bytes load(std::size_t index) const = 0;
};

class MemoryFrameStore final : public FrameStore {
public:
    explicit MemoryFrameStore(std::vector<Bytes> frames) : frames_(std::move(frames)) {}
    std::size_t frame_count() const override { return frames_.size(); }
    Bytes load(std::size_t index) const override;

private:
    std::vector<Bytes> frames_;
};

/// Frames named by a "{index:06}" pattern relative to a scene directory.
class DirectoryFrameStore final : public FrameStore {
public:
    DirectoryFrameStore(std::filesystem::path root, std::string uri_pattern, std::size_t frame_count);
    std::size_t frame_count() const override { return count_; }
    Bytes load(std::size_t index) const override;
    std::filesystem::path path_of(std::size_t index) const;

private:
    std::filesystem::path root_;
    std::string pattern_;
    std::size_t count_;
};

/// Wraps another store and sleeps for a fixed duration before every load.
class LatencyFrameStore final : public FrameStore {
public:
    LatencyFrameStore(const FrameStore& inner, std::chrono::microseconds latency) : inner_(inner), latency_(latency) {}
    std::size_t frame_count() const override { return inner_.frame_count(); }
    Bytes load(std::size_t index) const override;

private:
    const FrameStore& inner_;
    std::chrono::microseconds latency_;
};

using FramePtr = std::shared_ptr<const PointCloudFrame>;

enum class LoaderExecutor {
    background_thread,  // one loader thread per buffer
    manual,             // pending loads run only in complete_pending()
};

struct PrefetchOptions {
    bool prefetch = true;  // false: synchronous baseline, every new index is loaded on demand
    bool loop = false;     // successor of the last frame is frame 0
    LoaderExecutor executor = LoaderExecutor::background_thread;
};

struct PrefetchStats {
    std::size_t requests = 0;
    std::size_t stall_count = 0;
    std::size_t loads_issued = 0;
    double blocked_seconds = 0.0;
};

enum class RequestOutcome { hit_current, hit_next, waited_in_flight, loaded_sync };

/// Monotonic seconds.
using SecondsClock = std::function<double()>;
SecondsClock steady_seconds();

/// Two decoded-frame slots (current and next). Serving index i schedules a
/// background load of i + 1; a request outside both slots invalidates them
/// and loads synchronously. The consumer only ever sees fully decoded frames.
class PrefetchBuffer {
public:
    PrefetchBuffer(const FrameStore& store, PrefetchOptions options, SecondsClock clock = steady_seconds());
    ~PrefetchBuffer();

    PrefetchBuffer(const PrefetchBuffer&) = delete;
    PrefetchBuffer& operator=(const PrefetchBuffer&) = delete;

    /// Throws FrameLoadError (from the store or decoding) and std::out_of_range.
    FramePtr request(std::size_t index);

    /// Manual executor: runs the queued background load, if any. Returns
    /// whether a load ran.
    bool complete_pending();

    /// Background executor: blocks until no load is queued or running.
    void wait_idle();

    std::optional<std::size_t> pending_index() const;
    std::optional<std::size_t> current_index() const;
    std::optional<std::size_t> next_index() const;
    RequestOutcome last_outcome() const;
    PrefetchStats stats() const;

private:
    struct Slot {
        std::size_t index;
        FramePtr frame;
    };

    FramePtr load_and_decode(std::size_t index) const;
    std::optional<std::size_t> successor(std::size_t index) const;
    void schedule_successor_locked(std::size_t index);
    void finish_load_locked(std::size_t index, FramePtr frame);
    void run_one_job(std::unique_lock<std::mutex>& lock);
    void loader_main();

    const FrameStore& store_;
    PrefetchOptions options_;
    SecondsClock clock_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<Slot> current_;
    std::optional<Slot> next_;
    std::optional<std::size_t> queued_;
    std::optional<std::size_t> running_;
    std::optional<std::size_t> awaited_;
    RequestOutcome last_outcome_ = RequestOutcome::loaded_sync;
    PrefetchStats stats_;
    bool stop_ = false;
    std::thread loader_;
};

struct LoaderRunConfig {
    std::size_t frames = 30;
    double latency_seconds = 0.020;
    double frame_period_seconds = 1.0 / 30.0;
    bool prefetch = true;
    bool loop = false;
};

struct LoaderReport {
    std::size_t frames = 0;
    std::size_t stall_count = 0;
    std::size_t loads_issued = 0;
    double blocked_seconds = 0.0;
    double elapsed_seconds = 0.0;
};

/// Discrete-event playback in virtual time. The consumer asks for frame k one
/// frame period after frame k - 1 was handed to it; each store load takes
/// latency_seconds; one loader context. Uses a manual-executor buffer, so the
/// slot policy under test is the real one. Loads from `store` are untimed.
LoaderReport simulate_loader(const FrameStore& store, const LoaderRunConfig& config);

/// Same schedule in real time against `store` (wrap it in LatencyFrameStore
/// to add latency; config.latency_seconds is ignored) with a loader thread.
LoaderReport run_realtime_loader(const FrameStore& store, const LoaderRunConfig& config);

}  // namespace twin
