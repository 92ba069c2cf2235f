#include "layerseg/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace layerseg {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

int thread_count() { return g_threads.load(); }

void parallel_blocks(std::size_t num_blocks, const std::function<void(std::size_t)>& fn) {
    const int workers = thread_count();
    if (workers <= 1 || num_blocks <= 1) {
        for (std::size_t b = 0; b < num_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= num_blocks) break;
            fn(b);
        }
    };
    const int spawn = static_cast<int>(std::min<std::size_t>(num_blocks, workers)) - 1;
    std::vector<std::thread> pool;
    pool.reserve(spawn);
    for (int i = 0; i < spawn; ++i) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace layerseg
