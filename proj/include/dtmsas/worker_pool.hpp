#pragma once

#include <barrier>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dtmsas {

/// Fixed-width pool that runs one "row" of independent tasks at a time.
/// for_each(n, f) calls f(t) for every t in [0, n), worker w taking the tasks
/// t = w, w + width, ...; it returns only after every worker finished, so
/// consecutive calls are separated by a barrier.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t width)
      : width_(width == 0 ? 1 : width), start_(static_cast<std::ptrdiff_t>(width_)),
        done_(static_cast<std::ptrdiff_t>(width_)) {
    threads_.reserve(width_ - 1);
    for (std::size_t w = 1; w < width_; ++w) threads_.emplace_back([this, w] { worker_loop(w); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    if (width_ > 1) {
      stop_ = true;
      start_.arrive_and_wait();
    }
    for (auto& t : threads_) t.join();
  }

  std::size_t width() const noexcept { return width_; }

  template <class F>
  void for_each(std::size_t n, F&& f) {
    if (width_ == 1) {
      for (std::size_t t = 0; t < n; ++t) f(t);
      return;
    }
    job_ = std::ref(f);
    n_ = n;
    start_.arrive_and_wait();
    run_share(0);
    done_.arrive_and_wait();
    job_ = nullptr;
  }

 private:
  void run_share(std::size_t w) {
    for (std::size_t t = w; t < n_; t += width_) job_(t);
  }

  void worker_loop(std::size_t w) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      run_share(w);
      done_.arrive_and_wait();
    }
  }

  std::size_t width_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::jthread> threads_;
  std::function<void(std::size_t)> job_;
  std::size_t n_ = 0;
  bool stop_ = false;
};

}  // namespace dtmsas
