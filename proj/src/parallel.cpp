#include "sdfdiff/parallel.hpp"

namespace sdfdiff {

namespace {
std::atomic<int>& threads_setting() {
  static std::atomic<int> threads{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  return threads;
}
}  // namespace

int thread_count() { return threads_setting().load(); }

void set_thread_count(int threads) { threads_setting().store(std::max(1, threads)); }

}  // namespace sdfdiff
