#include "twin/prefetch.hpp"

#include "twin/scene.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace twin {

Bytes MemoryFrameStore::load(std::size_t index) const
{
    if (index >= frames_.size()) {
        throw FrameLoadError(index, "index out of range (frame count " + std::to_string(frames_.size()) + ")");
    }
    return frames_[index];
}

DirectoryFrameStore::DirectoryFrameStore(std::filesystem::path root, std::string uri_pattern, std::size_t frame_count)
    : root_(std::move(root)), pattern_(std::move(uri_pattern)), count_(frame_count)
{
}

std::filesystem::path DirectoryFrameStore::path_of(std::size_t index) const
{
    return root_ / expand_frame_uri(pattern_, index);
}

Bytes DirectoryFrameStore::load(std::size_t index) const
{
    if (index >= count_) {
        throw FrameLoadError(index, "index out of range (frame count " + std::to_string(count_) + ")");
    }
    const auto path = path_of(index);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FrameLoadError(index, "cannot open " + path.string());
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Bytes LatencyFrameStore::load(std::size_t index) const
{
    if (latency_.count() > 0) {
        std::this_thread::sleep_for(latency_);
    }
    return inner_.load(index);
}

SecondsClock steady_seconds()
{
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

PrefetchBuffer::PrefetchBuffer(const FrameStore& store, PrefetchOptions options, SecondsClock clock)
    : store_(store), options_(options), clock_(std::move(clock))
{
    if (options_.prefetch && options_.executor == LoaderExecutor::background_thread) {
        loader_ = std::thread([this] { loader_main(); });
    }
}

PrefetchBuffer::~PrefetchBuffer()
{
    {
        std::lock_guard lk(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    if (loader_.joinable()) {
        loader_.join();
    }
}

FramePtr PrefetchBuffer::load_and_decode(std::size_t index) const
{
    Bytes bytes = store_.load(index);
    try {
        return std::make_shared<const PointCloudFrame>(decode_spcf(bytes));
    } catch (const FormatError& e) {
        throw FrameLoadError(index, e.what());
    }
}

std::optional<std::size_t> PrefetchBuffer::successor(std::size_t index) const
{
    const std::size_t n = store_.frame_count();
    if (index + 1 < n) return index + 1;
    if (options_.loop && n > 1) return 0;
    return std::nullopt;
}

void PrefetchBuffer::schedule_successor_locked(std::size_t index)
{
    if (!options_.prefetch) return;
    const auto s = successor(index);
    if (!s) return;
    if ((next_ && next_->index == *s) || queued_ == s || running_ == s) return;
    queued_ = s;  // replaces a stale queued job, if any
    ++stats_.loads_issued;
    cv_.notify_all();
}

void PrefetchBuffer::finish_load_locked(std::size_t index, FramePtr frame)
{
    running_.reset();
    const bool wanted = (current_ && successor(current_->index) == index) || awaited_ == index;
    if (frame && wanted) {
        next_ = Slot{index, std::move(frame)};
    }
    cv_.notify_all();
}

void PrefetchBuffer::run_one_job(std::unique_lock<std::mutex>& lock)
{
    const std::size_t index = *queued_;
    queued_.reset();
    running_ = index;
    lock.unlock();
    FramePtr frame;
    try {
        frame = load_and_decode(index);
    } catch (const std::exception&) {
        // A failed prefetch leaves the slot empty; the consumer's synchronous
        // load reports the error with its index.
    }
    lock.lock();
    finish_load_locked(index, std::move(frame));
}

void PrefetchBuffer::loader_main()
{
    std::unique_lock lk(mutex_);
    while (true) {
        cv_.wait(lk, [this] { return stop_ || queued_.has_value(); });
        if (stop_) return;
        run_one_job(lk);
    }
}

FramePtr PrefetchBuffer::request(std::size_t index)
{
    if (index >= store_.frame_count()) {
        throw std::out_of_range("frame index " + std::to_string(index) + " out of range (frame count " +
                                std::to_string(store_.frame_count()) + ")");
    }
    std::unique_lock lk(mutex_);
    ++stats_.requests;
    bool stalled = false;

    if (current_ && current_->index == index) {
        last_outcome_ = RequestOutcome::hit_current;
    } else if (next_ && next_->index == index) {
        current_ = std::move(next_);
        next_.reset();
        last_outcome_ = RequestOutcome::hit_next;
    } else {
        if (queued_ == index || running_ == index) {
            // Asked for the successor before its prefetch finished.
            stalled = true;
            ++stats_.stall_count;
            const double t0 = clock_();
            awaited_ = index;
            if (options_.executor == LoaderExecutor::manual) {
                while (queued_ == index) run_one_job(lk);
            } else {
                cv_.wait(lk, [&] { return queued_ != index && running_ != index; });
            }
            awaited_.reset();
            stats_.blocked_seconds += clock_() - t0;
            if (next_ && next_->index == index) {
                current_ = std::move(next_);
                next_.reset();
                last_outcome_ = RequestOutcome::waited_in_flight;
            }
        }
        if (!current_ || current_->index != index) {
            if (!stalled) ++stats_.stall_count;
            current_.reset();
            next_.reset();
            queued_.reset();
            ++stats_.loads_issued;
            lk.unlock();
            const double t0 = clock_();
            FramePtr frame;
            try {
                frame = load_and_decode(index);
            } catch (...) {
                lk.lock();
                stats_.blocked_seconds += clock_() - t0;
                throw;
            }
            lk.lock();
            stats_.blocked_seconds += clock_() - t0;
            current_ = Slot{index, std::move(frame)};
            next_.reset();
            last_outcome_ = RequestOutcome::loaded_sync;
        }
    }

    FramePtr out = current_->frame;
    schedule_successor_locked(index);
    return out;
}

bool PrefetchBuffer::complete_pending()
{
    std::unique_lock lk(mutex_);
    if (!queued_ || options_.executor != LoaderExecutor::manual) return false;
    run_one_job(lk);
    return true;
}

void PrefetchBuffer::wait_idle()
{
    if (options_.executor == LoaderExecutor::manual) {
        while (complete_pending()) {
        }
        return;
    }
    std::unique_lock lk(mutex_);
    cv_.wait(lk, [this] { return !queued_ && !running_; });
}

std::optional<std::size_t> PrefetchBuffer::pending_index() const
{
    std::lock_guard lk(mutex_);
    return running_ ? running_ : queued_;
}

std::optional<std::size_t> PrefetchBuffer::current_index() const
{
    std::lock_guard lk(mutex_);
    return current_ ? std::optional(current_->index) : std::nullopt;
}

std::optional<std::size_t> PrefetchBuffer::next_index() const
{
    std::lock_guard lk(mutex_);
    return next_ ? std::optional(next_->index) : std::nullopt;
}

RequestOutcome PrefetchBuffer::last_outcome() const
{
    std::lock_guard lk(mutex_);
    return last_outcome_;
}

PrefetchStats PrefetchBuffer::stats() const
{
    std::lock_guard lk(mutex_);
    return stats_;
}

namespace {

std::size_t playback_index(std::size_t k, const FrameStore& store, const LoaderRunConfig& config)
{
    const std::size_t n = store.frame_count();
    if (config.loop) return k % n;
    if (k >= n) throw std::out_of_range("loader run needs " + std::to_string(config.frames) + " frames, store has " +
                                        std::to_string(n));
    return k;
}

}  // namespace

LoaderReport simulate_loader(const FrameStore& store, const LoaderRunConfig& config)
{
    PrefetchBuffer buffer(store, {config.prefetch, config.loop, LoaderExecutor::manual}, [] { return 0.0; });
    const double latency = config.latency_seconds;

    struct Job {
        std::size_t index;
        double done;
    };
    std::optional<Job> job;
    double loader_free = 0.0;
    double handed_over = 0.0;  // virtual time the previous frame reached the consumer
    LoaderReport report;
    report.frames = config.frames;

    for (std::size_t k = 0; k < config.frames; ++k) {
        const std::size_t index = playback_index(k, store, config);
        const double asked = k == 0 ? 0.0 : handed_over + config.frame_period_seconds;
        if (job && job->done <= asked) {
            buffer.complete_pending();
            loader_free = job->done;
            job.reset();
        }

        buffer.request(index);
        switch (buffer.last_outcome()) {
        case RequestOutcome::hit_current:
        case RequestOutcome::hit_next:
            handed_over = asked;
            break;
        case RequestOutcome::waited_in_flight:
            handed_over = std::max(asked, job ? job->done : asked);
            loader_free = handed_over;
            job.reset();
            break;
        case RequestOutcome::loaded_sync:
            handed_over = asked + latency;
            job.reset();
            break;
        }
        report.blocked_seconds += handed_over - asked;

        const auto pending = buffer.pending_index();
        if (!pending) {
            job.reset();
        } else if (!job || job->index != *pending) {
            job = Job{*pending, std::max(handed_over, loader_free) + latency};
        }
    }
    const PrefetchStats s = buffer.stats();
    report.stall_count = s.stall_count;
    report.loads_issued = s.loads_issued;
    report.elapsed_seconds = handed_over;
    return report;
}

LoaderReport run_realtime_loader(const FrameStore& store, const LoaderRunConfig& config)
{
    const SecondsClock clock = steady_seconds();
    PrefetchBuffer buffer(store, {config.prefetch, config.loop, LoaderExecutor::background_thread}, clock);
    const auto period = std::chrono::duration<double>(config.frame_period_seconds);
    const double start = clock();
    for (std::size_t k = 0; k < config.frames; ++k) {
        if (k > 0) std::this_thread::sleep_for(period);
        buffer.request(playback_index(k, store, config));
    }
    LoaderReport report;
    report.frames = config.frames;
    report.elapsed_seconds = clock() - start;
    const PrefetchStats s = buffer.stats();
    report.stall_count = s.stall_count;
    report.loads_issued = s.loads_issued;
    report.blocked_seconds = s.blocked_seconds;
    return report;
}

}  // namespace twin
