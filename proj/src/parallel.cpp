#include "tabfox/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace tabfox {

namespace {

std::atomic<std::size_t> g_thread_count{0};

std::size_t default_thread_count() {
    if (const char* env = std::getenv("TABFOX_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    std::size_t hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Persistent pool; items are handed out by stride so results never depend on
// scheduling. Lane w of L total lanes handles items w, w+L, w+2L, ...
// The calling thread works the last lane itself.
class Pool {
public:
    explicit Pool(std::size_t workers) : workers_(workers) {
        threads_.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads_.emplace_back([this, w] { loop(w); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        work_cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    std::size_t lanes() const { return workers_ + 1; }

    void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            job_ = &fn;
            n_ = n;
            done_ = 0;
            ++generation_;
        }
        work_cv_.notify_all();
        for (std::size_t i = workers_; i < n; i += lanes()) fn(i);
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [this] { return done_ == workers_; });
        job_ = nullptr;
    }

private:
    void loop(std::size_t lane) {
        std::uint64_t seen = 0;
        std::unique_lock<std::mutex> lock(mutex_);
        while (true) {
            work_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            const auto* job = job_;
            std::size_t n = n_;
            lock.unlock();
            for (std::size_t i = lane; i < n; i += lanes()) (*job)(i);
            lock.lock();
            if (++done_ == workers_) done_cv_.notify_all();
        }
    }

    std::mutex mutex_;
    std::condition_variable work_cv_, done_cv_;
    std::vector<std::thread> threads_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t n_ = 0;
    std::size_t done_ = 0;
    std::uint64_t generation_ = 0;
    const std::size_t workers_;
    bool stop_ = false;
};

std::mutex g_pool_mutex;
std::unique_ptr<Pool> g_pool;
thread_local bool t_inside_pool = false;

} // namespace

void set_thread_count(std::size_t n) { g_thread_count.store(n); }

std::size_t thread_count() {
    std::size_t n = g_thread_count.load();
    return n > 0 ? n : default_thread_count();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::size_t lanes = thread_count();
    if (lanes > n) lanes = n;
    // nested calls run inline: the outer dispatch already owns the pool
    if (lanes <= 1 || t_inside_pool) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::unique_lock<std::mutex> lock(g_pool_mutex);
    if (!g_pool || g_pool->lanes() != lanes) {
        g_pool = std::make_unique<Pool>(lanes - 1);
    }
    Pool& pool = *g_pool;
    t_inside_pool = true;
    pool.run(n, [&fn](std::size_t i) {
        t_inside_pool = true;
        fn(i);
    });
    t_inside_pool = false;
    lock.unlock();
}

} // namespace tabfox
