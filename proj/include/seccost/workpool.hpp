#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace seccost {

// Fixed set of long-lived workers. Connection handlers run here instead of on
// freshly spawned threads: thread creation inside a measured task span would
// show up as latency and resident-set churn that has nothing to do with the
// protocol under test.
class WorkerPool {
public:
    explicit WorkerPool(size_t workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> job);

    // Blocks until every submitted job has finished. New submissions are
    // still accepted afterwards.
    void drain();

private:
    void worker_loop();

    std::mutex mu_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    std::deque<std::function<void()>> queue_;
    size_t active_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

} // namespace seccost
